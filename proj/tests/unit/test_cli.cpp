// Runs the domlab binary end to end. DOMLAB_CLI holds its path.
#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("domlab_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const json& doc) {
  const fs::path path = dir / "config.json";
  std::ofstream(path) << doc.dump(2);
  return path;
}

int run(const std::string& args) {
  const std::string cmd = std::string(DOMLAB_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> csv_files(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".csv") out[entry.path().filename().string()] = slurp(entry.path());
  }
  return out;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream s(line);
    std::string cell;
    while (std::getline(s, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

const json kQuick = {{"scenario", "B"},
                     {"eps", {0.1, 0.05, 0.0}},
                     {"mesh", {{"n", 32}, {"refine", 0}, {"coarse_n", 9}}},
                     {"time", {{"dt", 0.02}, {"T", 1.0}}},
                     {"cone", {{"samples", 3}}},
                     {"evolve", {{"initial", "cone-sample"}, {"stride", 10}}},
                     {"attractor", {{"grid", 2}, {"polyline_points", 8}}},
                     {"threads", 2}};

}  // namespace

TEST(Cli, RerunAndManifestReplayAreBitIdentical) {
  const fs::path dir = scratch("rerun");
  const fs::path config = write_config(dir, kQuick);
  ASSERT_EQ(run("all --config " + config.string() + " --out " + (dir / "a").string()), 0);
  ASSERT_EQ(run("all --config " + config.string() + " --out " + (dir / "b").string()), 0);
  ASSERT_EQ(run("all --config " + (dir / "a" / "manifest.json").string() + " --out " + (dir / "c").string()), 0);

  const auto a = csv_files(dir / "a");
  EXPECT_GE(a.size(), 14u);
  EXPECT_EQ(a, csv_files(dir / "b"));
  EXPECT_EQ(a, csv_files(dir / "c"));

  const json manifest = json::parse(slurp(dir / "a" / "manifest.json"));
  EXPECT_EQ(manifest.at("tool"), "domlab");
  EXPECT_EQ(manifest.at("status"), "ok");
  EXPECT_EQ(manifest.at("seed"), 1);
  EXPECT_EQ(manifest.at("config").at("scenario"), "B");
  EXPECT_TRUE(manifest.at("timings").contains("attractor"));
  EXPECT_FALSE(fs::exists(dir / "a" / "FAILED"));
}

TEST(Cli, MalformedConfigExitsTwoWithoutArtifacts) {
  const fs::path dir = scratch("malformed");
  std::ofstream(dir / "broken.json") << "{\"scenario\": \"A\", ";
  EXPECT_EQ(run("eigen --config " + (dir / "broken.json").string() + " --out " + (dir / "o1").string()), 2);
  EXPECT_FALSE(fs::exists(dir / "o1"));

  const fs::path unknown = write_config(dir, {{"scenario", "A"}, {"mesh", {{"m", 3}}}});
  EXPECT_EQ(run("eigen --config " + unknown.string() + " --out " + (dir / "o2").string()), 2);
  EXPECT_FALSE(fs::exists(dir / "o2"));

  EXPECT_EQ(run("eigen --config " + (dir / "missing.json").string() + " --out " + (dir / "o3").string()), 2);
  EXPECT_EQ(run("frobnicate --config " + unknown.string()), 2);
  EXPECT_EQ(run("eigen --config " + unknown.string() + " --threads 0 --out " + (dir / "o4").string()), 2);
  EXPECT_FALSE(fs::exists(dir / "o4"));
}

TEST(Cli, GateFailureExitsThreeAndKeepsPartialOutput) {
  const fs::path dir = scratch("gate");
  json doc = kQuick;
  doc["problem"] = {{"d0", 0.5}};
  const fs::path config = write_config(dir, doc);
  EXPECT_EQ(run("eigen --config " + config.string() + " --out " + (dir / "o").string()), 3);
  EXPECT_TRUE(fs::exists(dir / "o" / "FAILED"));
  EXPECT_EQ(read_csv(dir / "o" / "eigen.csv").size(), 1u + 3 * 6);
  EXPECT_EQ(json::parse(slurp(dir / "o" / "manifest.json")).at("status"), "failed");

  // A later successful run into the same directory clears the marker.
  EXPECT_EQ(run("eigen --config " + write_config(dir, kQuick).string() + " --out " + (dir / "o").string()), 0);
  EXPECT_FALSE(fs::exists(dir / "o" / "FAILED"));
}

TEST(Cli, EigenScenarioAFirstValueIsA) {
  const fs::path dir = scratch("eigen");
  const fs::path config = write_config(dir, {{"scenario", "A"}, {"eps", {0.1, 0.0}}, {"mesh", {{"n", 32}}}});
  ASSERT_EQ(run("eigen --config " + config.string() + " --out " + (dir / "o").string()), 0);
  const auto rows = read_csv(dir / "o" / "eigen.csv");
  ASSERT_EQ(rows.front(), (std::vector<std::string>{"eps", "index", "mu_real", "mu_imag", "residual"}));
  int checked = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i][1] != "0") continue;
    EXPECT_NEAR(std::stod(rows[i][2]), 1.0, 1e-8);
    ++checked;
  }
  EXPECT_EQ(checked, 2);
}

TEST(Cli, HypothesesRowsShrink) {
  const fs::path dir = scratch("hyp");
  const fs::path config = write_config(dir, {{"scenario", "A"}});
  ASSERT_EQ(run("hypotheses --config " + config.string() + " --out " + (dir / "o").string()), 0);
  const auto rows = read_csv(dir / "o" / "hypotheses.csv");
  ASSERT_EQ(rows.size(), 5u);
  for (std::size_t i = 2; i < rows.size(); ++i) {
    EXPECT_LT(std::stod(rows[i][4]), std::stod(rows[i - 1][4]));
    EXPECT_LT(std::stod(rows[i][3]), std::stod(rows[i - 1][3]));
  }
}

TEST(Cli, SeedOverrideChangesConeSamplesOnly) {
  const fs::path dir = scratch("seed");
  json doc = kQuick;
  doc["evolve"]["eps"] = 0.05;
  const fs::path config = write_config(dir, doc);
  ASSERT_EQ(run("evolve --config " + config.string() + " --out " + (dir / "s1").string()), 0);
  ASSERT_EQ(run("evolve --config " + config.string() + " --seed 7 --out " + (dir / "s7").string()), 0);
  EXPECT_NE(slurp(dir / "s1" / "final_state.csv"), slurp(dir / "s7" / "final_state.csv"));
  EXPECT_EQ(json::parse(slurp(dir / "s7" / "manifest.json")).at("config").at("seed"), 7);
}
