#include "freeconv/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include "freeconv/errors.hpp"

namespace freeconv::quadrature {

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

namespace {

std::shared_ptr<const JacobiRule> build_rule(double alpha, double beta, int n) {
  if (n < 1) throw argument_error("jacobi_rule: need n >= 1");
  if (alpha <= -1.0 || beta <= -1.0)
    throw argument_error("jacobi_rule: exponents must exceed -1");

  Eigen::VectorXd diag(n), sub(std::max(n - 1, 0));
  const double ab = alpha + beta;
  diag(0) = (beta - alpha) / (ab + 2.0);
  for (int k = 1; k < n; ++k) {
    const double den = (2.0 * k + ab) * (2.0 * k + ab + 2.0);
    diag(k) = (beta * beta - alpha * alpha) / den;
  }
  for (int k = 1; k < n; ++k) {
    double b2;
    if (k == 1) {
      b2 = 4.0 * (1.0 + alpha) * (1.0 + beta) /
           ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
    } else {
      const double s = 2.0 * k + ab;
      b2 = 4.0 * k * (k + alpha) * (k + beta) * (k + ab) /
           (s * s * (s + 1.0) * (s - 1.0));
    }
    sub(k - 1) = std::sqrt(b2);
  }

  const double mu0 = std::exp((ab + 1.0) * std::log(2.0) + log_beta(alpha + 1.0, beta + 1.0));

  auto rule = std::make_shared<JacobiRule>();
  rule->alpha = alpha;
  rule->beta = beta;
  rule->nodes.resize(n);
  rule->weights.resize(n);
  if (n == 1) {
    rule->nodes[0] = diag(0);
    rule->weights[0] = mu0;
  } else {
    // Eigenvalues only (O(n^2)); weights from the Christoffel function
    // w_i = 1 / sum_k ptilde_k(x_i)^2 over the orthonormal recurrence.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    for (int k = 0; k < n; ++k) rule->nodes[k] = es.eigenvalues()(k);
    for (int k = 0; k < n; ++k) {
      const double x = rule->nodes[k];
      double p_prev = 0.0;
      double p_cur = 1.0 / std::sqrt(mu0);
      double sum = p_cur * p_cur;
      for (int j = 1; j < n; ++j) {
        const double p_next = ((x - diag(j - 1)) * p_cur - (j >= 2 ? sub(j - 2) : 0.0) * p_prev) / sub(j - 1);
        p_prev = p_cur;
        p_cur = p_next;
        sum += p_cur * p_cur;
      }
      rule->weights[k] = 1.0 / sum;
    }
  }
  double tw = 0.0;
  for (double w : rule->weights) tw += w;
  rule->total_weight = tw;
  return rule;
}

}  // namespace

std::shared_ptr<const JacobiRule> jacobi_rule(double alpha, double beta, int n) {
  using Key = std::tuple<double, double, int>;
  static std::mutex mu;
  static std::map<Key, std::shared_ptr<const JacobiRule>> cache;

  const Key key{alpha, beta, n};
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  auto rule = build_rule(alpha, beta, n);
  std::lock_guard<std::mutex> lock(mu);
  auto [it, inserted] = cache.emplace(key, std::move(rule));
  return it->second;
}

namespace {

// Continued fraction for the incomplete beta (modified Lentz).
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 1e-15;
  constexpr double kFpMin = 1e-300;

  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) throw argument_error("incomplete_beta: need a,b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front =
      std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace freeconv::quadrature
