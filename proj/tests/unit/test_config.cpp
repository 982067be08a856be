#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "domlab/config.hpp"
#include "domlab/errors.hpp"

using domlab::ConfigError;
using domlab::RunConfig;
using nlohmann::json;

namespace {

// Expects a ConfigError whose message mentions `key`.
void expect_rejected(const json& doc, const std::string& key) {
  try {
    domlab::parse_config(doc);
    FAIL() << "accepted: " << doc.dump();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(key), std::string::npos) << e.what();
  }
}

}  // namespace

TEST(Config, DefaultsRoundTrip) {
  const json first = domlab::to_json(RunConfig{});
  EXPECT_EQ(domlab::to_json(domlab::parse_config(first)), first);
}

TEST(Config, EveryFieldRoundTrips) {
  const json doc = {
      {"scenario", "B"},
      {"problem", {{"d0", 0.05}, {"xi", 3.0}}},
      {"family", {{"alpha", 0.4}, {"jacobian_mode", "finite-difference"}}},
      {"eps", {0.08, 0.02, 0.0}},
      {"mesh", {{"n", 48}, {"refine", 0}, {"coarse_n", 9}, {"resolution_ratio", 2.0}}},
      {"time", {{"dt", 0.005}, {"T", 3.0}}},
      {"theta", 7.5},
      {"quadrature", {{"triangle_degree", 3}, {"edge_points", 5}}},
      {"drift", "pullback-consistent"},
      {"threads", 3},
      {"seed", 42},
      {"export", {{"mesh", true}, {"matrices", true}}},
      {"eigen", {{"count", 4}}},
      {"cone", {{"samples", 7}, {"mass", "consistent"}}},
      {"semigroup", {{"times", {0.5, 1.0}}}},
      {"evolve", {{"eps", 0.02}, {"initial", "cosine"}, {"value", 0.3}, {"amplitude", 0.2}, {"stride", 5}}},
      {"attractor", {{"delta", 0.05}, {"grid", 4}, {"polyline_points", 16}, {"t_max", 50.0}, {"cap_ratio", 0.4}}}};
  const RunConfig c = domlab::parse_config(doc);
  EXPECT_EQ(c.problem.name, "B");
  EXPECT_DOUBLE_EQ(c.problem.d0, 0.05);
  EXPECT_DOUBLE_EQ(c.family.alpha, 0.4);
  EXPECT_EQ(c.drift, domlab::DriftConvention::PullbackConsistent);
  EXPECT_EQ(c.cone_mode, domlab::MassMode::Consistent);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.positive_eps(), (std::vector<double>{0.08, 0.02}));
  EXPECT_EQ(c.assembly_options().edge_points, 5);

  const json resolved = domlab::to_json(c);
  EXPECT_EQ(domlab::to_json(domlab::parse_config(resolved)), resolved);
}

TEST(Config, RejectsUnknownKeys) {
  expect_rejected({{"sceanrio", "A"}}, "sceanrio");
  expect_rejected({{"mesh", {{"n", 64}, {"size", 3}}}}, "mesh.size");
  expect_rejected({{"attractor", {{"grids", 4}}}}, "attractor.grids");
}

TEST(Config, RejectsBadSweeps) {
  expect_rejected({{"eps", {0.1, 0.05}}}, "eps");
  expect_rejected({{"eps", {0.05, 0.1, 0.0}}}, "eps");
  expect_rejected({{"eps", {0.1, -0.05, 0.0}}}, "eps");
  expect_rejected({{"eps", {0.9, 0.0}}}, "eps");
  expect_rejected({{"eps", "0.1"}}, "eps");
}

TEST(Config, RejectsUnderResolvedMesh) {
  expect_rejected({{"mesh", {{"n", 16}}}}, "mesh.n");
  EXPECT_NO_THROW(domlab::parse_config({{"mesh", {{"n", 16}, {"resolution_ratio", 0.0}}}}));
}

TEST(Config, RejectsOutOfRangeValues) {
  expect_rejected({{"time", {{"dt", 0.0}}}}, "time.dt");
  expect_rejected({{"threads", 0}}, "threads");
  expect_rejected({{"scenario", "Z"}}, "scenario");
  expect_rejected({{"scenario", "custom"}}, "problem");
  expect_rejected({{"drift", "minus"}}, "drift");
  expect_rejected({{"evolve", {{"eps", 0.07}}}}, "evolve.eps");
  expect_rejected({{"family", {{"alpha", 1.0}}}}, "alpha");
}

TEST(Config, ManifestIsAcceptedBack) {
  RunConfig c;
  c.scenario = "B";
  c.problem = domlab::scenario_b();
  c.seed = 9;
  const json manifest = {{"tool", "domlab"}, {"command", "eigen"}, {"config", domlab::to_json(c)}};
  EXPECT_EQ(domlab::to_json(domlab::parse_config(manifest)), domlab::to_json(c));
}

TEST(Config, FileWithCommentsLoads) {
  const auto path = std::filesystem::temp_directory_path() / "domlab_config_comments.json";
  std::ofstream(path) << "{\n  // trailing comment\n  \"scenario\": \"stable\", /* inline */ \"seed\": 3\n}\n";
  const RunConfig c = domlab::load_config(path.string());
  EXPECT_EQ(c.problem.name, "stable");
  EXPECT_EQ(c.seed, 3u);
  std::filesystem::remove(path);
  EXPECT_THROW(domlab::load_config(path.string()), ConfigError);
}
