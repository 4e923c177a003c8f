#pragma once

#include "momsurv/moments.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace momsurv {

struct WeightParams {
  double a = 1.0;
  double b = 1.0;
};

// Beta shapes matching mean gamma_1 and variance gamma_2 - gamma_1^2; (1, 1) when the variance
// reaches the Bernoulli bound gamma_1 (1 - gamma_1).
WeightParams select_weight_params(double gamma1, double gamma2);

inline constexpr int max_basis_degree = 30;

// Orthonormal Jacobi polynomials G_0..G_N on [0,1] for the weight w(s) = s^(a-1) (1-s)^(b-1).
//
// Built by Gram-Schmidt on the monomials with exact Beta-function inner products, carried
// out in HighReal. Internally the family is kept orthonormal against the Beta(a, b) density
// (Ghat_i = sqrt(B(a, b)) G_i) so that concentrated weights with tiny B(a, b) stay
// representable; the public coefficient accessors return the G_i scale.
class JacobiBasis {
 public:
  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  int degree() const noexcept { return degree_; }
  double log_beta() const noexcept { return log_beta_; }

  // G_{i,r}, the coefficient of s^r in G_i.
  double coefficient(int i, int r) const;

  // s^(a-1) (1-s)^(b-1) and the normalized Beta(a, b) density.
  double weight(double s) const;
  double beta_pdf(double s) const;

  // G_i(s) for a single i, via the three-term recurrence.
  double evaluate(int i, double s) const;

  // lambda_i = sum_{r<=i} G_{i,r} gamma_r, i = 0..N. Needs at least N moments.
  std::vector<double> lambdas(const MomentVector& moments) const;

  // Expansion coefficients against the normalized family Ghat_i; these are what the density
  // evaluation uses. lambda_i = normalized_lambda_i / sqrt(B(a, b)).
  std::vector<double> normalized_lambdas(const MomentVector& moments) const;

  // sum_i c_i Ghat_i(s) for coefficients c against the normalized family.
  double normalized_series(std::span<const double> c, double s) const;

 private:
  friend JacobiBasis build_basis(double a, double b, int degree);

  double a_ = 1.0;
  double b_ = 1.0;
  int degree_ = 0;
  double log_beta_ = 0.0;
  // Row i holds Ghat_{i,0..i}.
  std::vector<std::vector<HighReal>> normalized_coeffs_;
  // s Ghat_i = off_[i+1] Ghat_{i+1} + diag_[i] Ghat_i + off_[i] Ghat_{i-1}
  std::vector<double> diag_;
  std::vector<double> off_;
};

JacobiBasis build_basis(double a, double b, int degree);

// Truncated Jacobi expansion f_N(s) = w(s) sum_i lambda_i G_i(s).
class ApproxDensity {
 public:
  ApproxDensity(JacobiBasis basis, const MomentVector& moments, std::vector<double> xgrid);

  const std::vector<double>& xgrid() const noexcept { return xgrid_; }
  const std::vector<double>& values() const noexcept { return values_; }
  const JacobiBasis& basis() const noexcept { return basis_; }
  const MomentVector& moments_used() const noexcept { return moments_; }
  const std::vector<double>& lambdas() const noexcept { return lambdas_; }

  double operator()(double s) const;
  // f_N(s) / beta_pdf(s): a polynomial carrying the sign of f_N.
  double ratio_to_weight(double s) const;

 private:
  JacobiBasis basis_;
  MomentVector moments_;
  std::vector<double> lambdas_;
  std::vector<double> normalized_lambdas_;
  std::vector<double> xgrid_;
  std::vector<double> values_;
};

ApproxDensity approximate_density(const MomentVector& moments, const JacobiBasis& basis,
                                  std::vector<double> xgrid);

// max(f_N, 0) on the density's grid plus a callable over [0,1].
struct PositivePart {
  std::vector<double> xgrid;
  std::vector<double> values;
  // int min(f_N, 0) / int |f_N|, reported as a nonnegative fraction; estimated from the
  // polynomial factor at 2000 quantiles of the weight.
  double clipped_fraction = 0.0;
  ApproxDensity density;

  double operator()(double s) const;
  double ratio_to_weight(double s) const;
};

PositivePart positive_part(const ApproxDensity& density);

struct RejectionSample {
  std::vector<double> sample;
  double acceptance_rate = 0.0;
  double envelope = 0.0;
};

// Draws from the density proportional to `target` with a Beta(a, b) proposal. The envelope is
// 1.1 times the largest target/proposal ratio over 2000 points equispaced in Beta(a, b)
// probability.
RejectionSample rejection_sample(const std::function<double(double)>& target, double a, double b,
                                 std::size_t n_sim, std::uint64_t seed);

// Same sampler on a positive part; the target/proposal ratio is the polynomial factor,
// so no weight evaluation happens near the endpoints.
RejectionSample rejection_sample(const PositivePart& target, std::size_t n_sim, std::uint64_t seed);

std::vector<double> default_xgrid(std::size_t size = 200);

struct MomentifyOptions {
  std::optional<std::size_t> n_moments;  // all moments when unset
  std::size_t n_sim = 1000;
  std::vector<double> xgrid = default_xgrid();
  std::uint64_t seed = 1;
};

struct MomentifyResult {
  std::vector<double> xgrid;
  std::vector<double> approx_density;
  std::vector<double> psample;
  WeightParams weight;
  double acceptance_rate = 0.0;
  double clipped_fraction = 0.0;
  std::optional<ApproxDensity> density;
};

// select_weight_params -> build_basis -> approximate_density -> positive_part -> rejection_sample.
MomentifyResult momentify(const MomentVector& moments, const MomentifyOptions& options = {});

}  // namespace momsurv
