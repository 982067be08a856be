#include "domlab/expm.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace domlab {

namespace {

// Backward-error bounds on the 1-norm for the diagonal Pade approximants of
// degree 3, 5, 7, 9, 13 (Higham 2005).
constexpr std::array<double, 5> kTheta = {1.495585217958292e-2, 2.539398330063230e-1, 9.504178996162932e-1,
                                          2.097847961257068e0, 5.371920351148152e0};

double one_norm(const DenseMatrix& a) { return a.cwiseAbs().colwise().sum().maxCoeff(); }

DenseMatrix pade_ratio(const DenseMatrix& u, const DenseMatrix& v) {
  return (v - u).partialPivLu().solve(v + u);
}

template <std::size_t N>
DenseMatrix low_degree(const DenseMatrix& a, const std::array<double, N>& b) {
  const Eigen::Index n = a.rows();
  const DenseMatrix ident = DenseMatrix::Identity(n, n);
  const DenseMatrix a2 = a * a;
  DenseMatrix power = ident;
  DenseMatrix odd = DenseMatrix::Zero(n, n), even = DenseMatrix::Zero(n, n);
  for (std::size_t k = 0; k < N; k += 2) {
    even += b[k] * power;
    odd += b[k + 1] * power;
    if (k + 2 < N) power = power * a2;
  }
  return pade_ratio(a * odd, even);
}

DenseMatrix degree13(const DenseMatrix& a) {
  static constexpr std::array<double, 14> b = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                               1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                               670442572800.0,      33522128640.0,       1323241920.0,
                                               40840800.0,          960960.0,            16380.0,
                                               182.0,               1.0};
  const Eigen::Index n = a.rows();
  const DenseMatrix ident = DenseMatrix::Identity(n, n);
  const DenseMatrix a2 = a * a, a4 = a2 * a2, a6 = a4 * a2;
  const DenseMatrix u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2);
  const DenseMatrix u = a * (u_inner + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident);
  const DenseMatrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident;
  return pade_ratio(u, v);
}

}  // namespace

DenseMatrix expm(const DenseMatrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("expm: matrix must be square");
  if (!a.allFinite()) throw std::invalid_argument("expm: non-finite entries");
  if (a.rows() == 0) return a;
  const double norm = one_norm(a);
  if (norm <= kTheta[0]) return low_degree<4>(a, std::array<double, 4>{120.0, 60.0, 12.0, 1.0});
  if (norm <= kTheta[1]) return low_degree<6>(a, std::array<double, 6>{30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0});
  if (norm <= kTheta[2]) {
    return low_degree<8>(
        a, std::array<double, 8>{17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0});
  }
  if (norm <= kTheta[3]) {
    return low_degree<10>(a, std::array<double, 10>{17643225600.0, 8821612800.0, 2075673600.0, 302702400.0,
                                                     30270240.0, 2162160.0, 110880.0, 3960.0, 90.0, 1.0});
  }
  const int s = std::max(0, static_cast<int>(std::ceil(std::log2(norm / kTheta[4]))));
  DenseMatrix result = degree13(a / std::ldexp(1.0, s));
  for (int i = 0; i < s; ++i) result = result * result;
  return result;
}

}  // namespace domlab
