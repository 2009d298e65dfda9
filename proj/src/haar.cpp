#include "freeconv/haar.hpp"

#include "freeconv/errors.hpp"
#include "freeconv/rng.hpp"

namespace freeconv {

Eigen::MatrixXcd sample_haar(int n, std::uint64_t seed, MatrixField field) {
  if (n < 1) throw argument_error("sample_haar: need n >= 1");
  const char* tag = field == MatrixField::unitary ? "haar-unitary" : "haar-orthogonal";
  Philox rng(seed, Philox::stream_id(tag, static_cast<std::uint64_t>(n)));

  if (field == MatrixField::orthogonal) {
    Eigen::MatrixXd g(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) g(i, j) = rng.next_gaussian();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR();
    for (int j = 0; j < n; ++j)
      if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    return q.cast<std::complex<double>>();
  }

  Eigen::MatrixXcd g(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double re = rng.next_gaussian();
      const double im = rng.next_gaussian();
      g(i, j) = std::complex<double>(re, im);
    }
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
  Eigen::MatrixXcd q = qr.householderQ();
  const Eigen::MatrixXcd r = qr.matrixQR();
  for (int j = 0; j < n; ++j) {
    const std::complex<double> d = r(j, j);
    const double a = std::abs(d);
    if (a > 0.0) q.col(j) *= d / a;
  }
  return q;
}

}  // namespace freeconv
