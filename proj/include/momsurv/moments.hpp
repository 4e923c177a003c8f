#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace momsurv {

// Working precision for moment sequences and the Jacobi Gram-Schmidt. Raw moments feed
// linear maps with condition numbers near 1e10 at N = 10, so double inputs are not enough
// to reproduce a density that lies exactly in the weight family.
using HighReal = boost::multiprecision::cpp_bin_float_100;

// Raw moments gamma_1..gamma_d of a [0,1]-valued random variable. gamma_0 = 1 is implicit
// and never stored.
class MomentVector {
 public:
  MomentVector() = default;
  explicit MomentVector(std::vector<double> values);
  explicit MomentVector(std::vector<HighReal> values);
  explicit MomentVector(std::initializer_list<double> values) : MomentVector(std::vector<double>(values)) {}

  std::size_t size() const noexcept { return values_.size(); }

  // Moment of order r in [0, size()]; order 0 is 1.
  double operator[](std::size_t r) const;
  const HighReal& exact(std::size_t r) const;

  std::vector<double> to_doubles() const;

  // First n moments.
  MomentVector truncated(std::size_t n) const;

  // Second moment minus squared mean.
  double variance() const;

 private:
  std::vector<HighReal> values_;
};

struct MomentViolation {
  enum class Kind { range, monotonicity, log_convexity, hausdorff };
  Kind kind;
  std::size_t index;  // order r at which the condition fails
  double magnitude;   // size of the violation, always positive

  std::string describe() const;
};

struct ValidationReport {
  std::vector<MomentViolation> violations;
  bool ok() const noexcept { return violations.empty(); }
  std::string describe() const;
};

struct ValidationOptions {
  double tolerance = 1e-12;
  // Full Hausdorff check through iterated differences. Off by default: the alternating
  // sums lose all accuracy beyond d of about 15 for double-derived inputs.
  bool strict = false;
};

// Necessary conditions for a moment sequence on [0,1]: range, monotonicity and Lyapunov
// log-convexity. Requires d >= 2.
ValidationReport validate_moments(const MomentVector& moments, const ValidationOptions& options = {});

// x (x+1) ... (x+r-1); 1 when r = 0.
double rising_factorial(double x, unsigned r);
HighReal rising_factorial(const HighReal& x, unsigned r);

struct BetaShape {
  double a;
  double b;
};

// gamma_r = sum_k w_k (a_k)_(r) / (a_k + b_k)_(r), computed in HighReal.
MomentVector beta_mixture_moments(std::span<const BetaShape> components, std::span<const double> weights,
                                  std::size_t d);

// Convenience for a single Beta(a, b).
MomentVector beta_moments(double a, double b, std::size_t d);

}  // namespace momsurv
