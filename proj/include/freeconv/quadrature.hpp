#pragma once

#include <memory>
#include <vector>

namespace freeconv::quadrature {

// Nodes/weights for the Jacobi weight (1-x)^alpha (1+x)^beta on [-1,1].
struct JacobiRule {
  double alpha = 0.0;
  double beta = 0.0;
  std::vector<double> nodes;
  std::vector<double> weights;
  double total_weight = 0.0;  // sum of weights == integral of the weight
};

// Golub-Welsch rule, memoized per (alpha, beta, n).  Thread safe.
std::shared_ptr<const JacobiRule> jacobi_rule(double alpha, double beta, int n);

// Regularized incomplete beta I_x(a,b), continued-fraction evaluation.
double regularized_incomplete_beta(double a, double b, double x);

// ln B(a,b)
double log_beta(double a, double b);

}  // namespace freeconv::quadrature
