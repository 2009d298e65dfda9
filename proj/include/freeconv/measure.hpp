#pragma once

#include <complex>
#include <string>
#include <vector>

namespace freeconv {

using Complex = std::complex<double>;

enum class MeasureKind { atomic, continuous };

struct Atom {
  double location = 0.0;
  double weight = 0.0;
};

// Joint value of the Stieltjes transform m, its negative reciprocal
// F = -1/m and the first two F-derivatives at the evaluation point.
struct TransformValue {
  Complex omega;  // evaluation point
  Complex m;
  Complex m1;  // dm/dz
  Complex m2;  // d2m/dz2
  Complex F;
  Complex F1;
  Complex F2;
};

// A probability measure on the real line: either a finite list of atoms or a
// single-interval continuous measure with Jacobi-type density
//   rho(x) = (x-a)^{t_minus} (b-x)^{t_plus} / Z   on [a, b],
// with edge exponents in (-1,1).  The semicircle, uniform and arcsine
// fixtures are special cases of this profile.
class SpectralMeasure {
 public:
  static SpectralMeasure atomic(std::vector<Atom> atoms);
  static SpectralMeasure power_law(double lo, double hi, double t_minus, double t_plus);
  static SpectralMeasure semicircle(double variance);
  static SpectralMeasure uniform(double lo, double hi);
  static SpectralMeasure arcsine(double lo, double hi);
  static SpectralMeasure two_atoms(double x1, double x2, double w1 = 0.5);
  static SpectralMeasure point_mass(double location);

  MeasureKind kind() const { return kind_; }
  bool is_point_mass() const { return kind_ == MeasureKind::atomic && atoms_.size() == 1; }
  const std::vector<Atom>& atoms() const;

  double inf_support() const { return lo_; }
  double sup_support() const { return hi_; }
  double t_minus() const { return t_minus_; }
  double t_plus() const { return t_plus_; }

  double mean() const;
  double variance() const;

  // Continuous density at x (0 outside support); atomic kind throws.
  double density(double x) const;

  // CDF mu((-inf, x]).
  double cdf(double x) const;

  // Smallest x with cdf(x) >= p, p in (0,1].
  double quantile(double p) const;

  // Distance from a real point to the support, 0 if inside.
  double support_distance(double x) const;

  SpectralMeasure shifted(double a) const;
  SpectralMeasure scaled(double s) const;
  SpectralMeasure reflected() const { return scaled(-1.0); }

  // m, m', m'' together with F, F', F''.  z must have positive imaginary
  // part or be real with support_distance(z) > standoff.
  TransformValue transform(Complex z) const;

  // Minimum real-axis distance accepted by transform().
  static constexpr double kRealStandoff = 1e-9;

 private:
  SpectralMeasure() = default;
  void validate_atomic() const;

  MeasureKind kind_ = MeasureKind::atomic;
  std::vector<Atom> atoms_;
  double lo_ = 0.0, hi_ = 0.0;
  double t_minus_ = 0.0, t_plus_ = 0.0;
  double log_norm_ = 0.0;  // log Z
};

// Spec-level operations ---------------------------------------------------

TransformValue stieltjes_transform(const SpectralMeasure& mu, Complex z);

// F'(x) - 1 at a real x strictly below the support (>= 0, equality only for
// a point mass).
double f_prime_gap(const SpectralMeasure& mu, double x);

double levy_distance(const SpectralMeasure& mu1, const SpectralMeasure& mu2);

double quantile(const SpectralMeasure& mu, double p);

SpectralMeasure discretize(const SpectralMeasure& mu, int n);

// Factory keyed by family name ("power_law", "semicircle", "uniform",
// "arcsine", "two_atoms", "point_mass", "atomic"); params are family
// specific, see measure.cpp.
SpectralMeasure make_reference_measure(const std::string& family,
                                       const std::vector<double>& params);

}  // namespace freeconv
