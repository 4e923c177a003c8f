#include "momsurv/jacobi.hpp"

#include "momsurv/errors.hpp"

#include <boost/math/distributions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace momsurv {

namespace {

constexpr std::size_t envelope_grid_size = 2000;
constexpr double envelope_safety = 1.1;
constexpr double min_acceptance_rate = 1e-3;

// Shapes a few ulps from an integer are that integer: the difference is below the
// resolution of double moment inputs, but decides whether the weight vanishes at 0 or 1.
double snap_shape(const HighReal& value) {
  const double x = value.convert_to<double>();
  const double nearest = std::round(x);
  return std::abs(x - nearest) <= 8 * std::numeric_limits<double>::epsilon() * x ? nearest : x;
}

WeightParams weight_from_mean_variance(const HighReal& mean, const HighReal& var) {
  require(mean > 0 && mean < 1, "weight selection needs 0 < gamma_1 < 1");
  if (!(var > 0)) throw ValidationError("degenerate variance: gamma_2 <= gamma_1^2");
  const HighReal bound = mean * (1 - mean);
  if (var >= bound) return {1.0, 1.0};
  const HighReal k = bound / var - 1;
  return {snap_shape(mean * k), snap_shape((1 - mean) * k)};
}

// Midpoints of `count` equal cells on [0,1].
std::vector<double> interior_grid(std::size_t count) {
  std::vector<double> grid(count);
  for (std::size_t k = 0; k < count; ++k) grid[k] = (static_cast<double>(k) + 0.5) / static_cast<double>(count);
  return grid;
}

// Nodes equispaced in Beta(a,b) probability. A uniform grid on [0,1] puts most nodes where a
// concentrated proposal has no mass and the polynomial factor is meaninglessly large.
std::vector<double> envelope_grid(double a, double b) {
  const boost::math::beta_distribution<double> proposal(a, b);
  std::vector<double> grid;
  grid.reserve(envelope_grid_size);
  for (double p : interior_grid(envelope_grid_size)) {
    const double s = boost::math::quantile(proposal, p);
    if (s > 0 && s < 1) grid.push_back(s);
  }
  return grid;
}

RejectionSample sample_by_ratio(const std::function<double(double)>& ratio, double a, double b, std::size_t n_sim,
                                std::uint64_t seed) {
  require(a > 0 && b > 0, "rejection sampler needs positive proposal shapes");
  double peak = 0.0;
  for (double s : envelope_grid(a, b)) {
    const double r = ratio(s);
    if (!std::isfinite(r)) throw NumericalError("rejection sampler: non-finite target/proposal ratio");
    peak = std::max(peak, r);
  }
  if (!(peak > 0)) throw NumericalError("rejection sampler: target has empty support");

  RejectionSample out;
  out.envelope = envelope_safety * peak;
  out.sample.reserve(n_sim);

  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> draw_a(a, 1.0);
  std::gamma_distribution<double> draw_b(b, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::size_t proposed = 0;
  while (out.sample.size() < n_sim) {
    const double x = draw_a(rng);
    const double y = draw_b(rng);
    const double u = unif(rng);
    ++proposed;
    const double s = x / (x + y);
    if (s > 0 && s < 1 && u * out.envelope <= ratio(s)) out.sample.push_back(s);
    if (proposed >= 10000 &&
        static_cast<double>(out.sample.size()) < min_acceptance_rate * static_cast<double>(proposed)) {
      throw NumericalError("rejection sampler: acceptance rate below 1e-3, proposal grossly mismatched");
    }
  }
  out.acceptance_rate = proposed == 0 ? 0.0 : static_cast<double>(n_sim) / static_cast<double>(proposed);
  return out;
}

}  // namespace

WeightParams select_weight_params(double gamma1, double gamma2) {
  require(std::isfinite(gamma1) && std::isfinite(gamma2), "weight selection needs finite moments");
  const HighReal mean{gamma1};
  return weight_from_mean_variance(mean, HighReal{gamma2} - mean * mean);
}

namespace {

WeightParams select_weight_params(const MomentVector& m) {
  return weight_from_mean_variance(m.exact(1), m.exact(2) - m.exact(1) * m.exact(1));
}

}  // namespace

JacobiBasis build_basis(double a, double b, int degree) {
  require(a > 0 && b > 0 && std::isfinite(a) && std::isfinite(b), "Jacobi basis needs positive finite a, b");
  require(degree >= 1, "Jacobi basis degree must be at least 1");
  if (degree > max_basis_degree) {
    throw ValidationError("Jacobi basis degree " + std::to_string(degree) + " exceeds the cap of " +
                          std::to_string(max_basis_degree));
  }

  JacobiBasis basis;
  basis.a_ = a;
  basis.b_ = b;
  basis.degree_ = degree;
  basis.log_beta_ = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);

  const auto n = static_cast<std::size_t>(degree) + 1;
  // Moments of the Beta(a, b) density: B(a + p, b) / B(a, b).
  std::vector<HighReal> mu(2 * n, HighReal{1});
  const HighReal ha{a};
  const HighReal hab = ha + HighReal{b};
  for (std::size_t p = 1; p < mu.size(); ++p) mu[p] = mu[p - 1] * (ha + (p - 1)) / (hab + (p - 1));

  // Gram-Schmidt on 1, s, ..., s^N is the Cholesky factorization H = L L^T of the Hankel
  // moment matrix; the orthonormal coefficients are the rows of L^{-1}.
  std::vector<std::vector<HighReal>> chol(n, std::vector<HighReal>(n, HighReal{0}));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      HighReal sum = mu[i + j];
      for (std::size_t k = 0; k < j; ++k) sum -= chol[i][k] * chol[j][k];
      if (i == j) {
        if (!(sum > 0)) {
          throw NumericalError("Jacobi Gram-Schmidt lost positive definiteness at degree " + std::to_string(i));
        }
        chol[i][i] = boost::multiprecision::sqrt(sum);
      } else {
        chol[i][j] = sum / chol[j][j];
      }
    }
  }
  auto& coeffs = basis.normalized_coeffs_;
  coeffs.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    coeffs[i].assign(i + 1, HighReal{0});
    coeffs[i][i] = 1 / chol[i][i];
    for (std::size_t r = i; r-- > 0;) {
      HighReal sum{0};
      for (std::size_t k = r + 1; k <= i; ++k) sum += coeffs[i][k] * chol[k][r];
      coeffs[i][r] = -sum / chol[r][r];
    }
  }

  basis.diag_.assign(n, 0.0);
  basis.off_.assign(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    HighReal alpha{0};
    for (std::size_t p = 0; p <= i; ++p) {
      for (std::size_t q = 0; q <= i; ++q) alpha += coeffs[i][p] * coeffs[i][q] * mu[p + q + 1];
    }
    basis.diag_[i] = alpha.convert_to<double>();
    if (i > 0) basis.off_[i] = HighReal(coeffs[i - 1][i - 1] / coeffs[i][i]).convert_to<double>();
  }
  return basis;
}

double JacobiBasis::coefficient(int i, int r) const {
  require(i >= 0 && i <= degree_ && r >= 0 && r <= i, "Jacobi coefficient index out of range");
  return normalized_coeffs_[i][r].convert_to<double>() * std::exp(-0.5 * log_beta_);
}

double JacobiBasis::weight(double s) const {
  if (s < 0 || s > 1) return 0.0;
  const double left = a_ == 1.0 ? 1.0 : std::pow(s, a_ - 1.0);
  const double right = b_ == 1.0 ? 1.0 : std::pow(1.0 - s, b_ - 1.0);
  return left * right;
}

double JacobiBasis::beta_pdf(double s) const {
  if (s < 0 || s > 1) return 0.0;
  double log_value = -log_beta_;
  if (a_ != 1.0) {
    if (s == 0.0) return a_ < 1.0 ? std::numeric_limits<double>::infinity() : 0.0;
    log_value += (a_ - 1.0) * std::log(s);
  }
  if (b_ != 1.0) {
    if (s == 1.0) return b_ < 1.0 ? std::numeric_limits<double>::infinity() : 0.0;
    log_value += (b_ - 1.0) * std::log1p(-s);
  }
  return std::exp(log_value);
}

double JacobiBasis::evaluate(int i, double s) const {
  require(i >= 0 && i <= degree_, "Jacobi polynomial index out of range");
  double prev = 0.0;
  double cur = 1.0;
  for (int k = 0; k < i; ++k) {
    const double next = ((s - diag_[k]) * cur - off_[k] * prev) / off_[k + 1];
    prev = cur;
    cur = next;
  }
  return cur * std::exp(-0.5 * log_beta_);
}

double JacobiBasis::normalized_series(std::span<const double> c, double s) const {
  require(c.size() <= static_cast<std::size_t>(degree_) + 1, "too many series coefficients for the basis");
  if (c.empty()) return 0.0;
  double prev = 0.0;
  double cur = 1.0;
  double sum = c[0];
  for (std::size_t k = 0; k + 1 < c.size(); ++k) {
    const double next = ((s - diag_[k]) * cur - off_[k] * prev) / off_[k + 1];
    prev = cur;
    cur = next;
    sum += c[k + 1] * cur;
  }
  return sum;
}

std::vector<double> JacobiBasis::normalized_lambdas(const MomentVector& moments) const {
  if (moments.size() < static_cast<std::size_t>(degree_)) {
    throw ValidationError("insufficient moments: basis of degree " + std::to_string(degree_) + " needs " +
                          std::to_string(degree_) + ", got " + std::to_string(moments.size()));
  }
  std::vector<double> out(static_cast<std::size_t>(degree_) + 1);
  for (std::size_t i = 0; i < out.size(); ++i) {
    HighReal sum{0};
    for (std::size_t r = 0; r <= i; ++r) sum += normalized_coeffs_[i][r] * moments.exact(r);
    out[i] = sum.convert_to<double>();
  }
  return out;
}

std::vector<double> JacobiBasis::lambdas(const MomentVector& moments) const {
  auto out = normalized_lambdas(moments);
  const double scale = std::exp(-0.5 * log_beta_);
  for (double& v : out) v *= scale;
  return out;
}

ApproxDensity::ApproxDensity(JacobiBasis basis, const MomentVector& moments, std::vector<double> xgrid)
    : basis_(std::move(basis)), moments_(moments), xgrid_(std::move(xgrid)) {
  for (double x : xgrid_) require(x >= 0.0 && x <= 1.0, "density grid must lie in [0,1]");
  normalized_lambdas_ = basis_.normalized_lambdas(moments_);
  lambdas_ = basis_.lambdas(moments_);
  values_.reserve(xgrid_.size());
  for (double x : xgrid_) values_.push_back((*this)(x));
}

double ApproxDensity::ratio_to_weight(double s) const {
  return basis_.normalized_series(normalized_lambdas_, s);
}

double ApproxDensity::operator()(double s) const {
  const double pdf = basis_.beta_pdf(s);
  if (pdf == 0.0) return 0.0;
  return pdf * ratio_to_weight(s);
}

ApproxDensity approximate_density(const MomentVector& moments, const JacobiBasis& basis, std::vector<double> xgrid) {
  return ApproxDensity(basis, moments, std::move(xgrid));
}

double PositivePart::operator()(double s) const {
  return std::max(density(s), 0.0);
}

double PositivePart::ratio_to_weight(double s) const {
  return std::max(density.ratio_to_weight(s), 0.0);
}

PositivePart positive_part(const ApproxDensity& density) {
  bool any_positive = false;
  for (double x : density.xgrid()) any_positive = any_positive || density.ratio_to_weight(x) > 0;

  double negative = 0.0;
  double total = 0.0;
  // Integrals against f = w * ratio as averages of the ratio over proposal quantiles.
  for (double s : envelope_grid(density.basis().a(), density.basis().b())) {
    const double r = density.ratio_to_weight(s);
    any_positive = any_positive || r > 0;
    if (r < 0) negative -= r;
    total += std::abs(r);
  }
  if (!any_positive) throw NumericalError("positive part of the approximate density is empty");

  PositivePart out{density.xgrid(), {}, total > 0 ? negative / total : 0.0, density};
  out.values.reserve(density.values().size());
  for (double v : density.values()) out.values.push_back(std::max(v, 0.0));
  return out;
}

RejectionSample rejection_sample(const std::function<double(double)>& target, double a, double b,
                                 std::size_t n_sim, std::uint64_t seed) {
  const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  auto ratio = [&](double s) {
    const double pdf = std::exp((a - 1.0) * std::log(s) + (b - 1.0) * std::log1p(-s) - log_beta);
    return target(s) / pdf;
  };
  return sample_by_ratio(ratio, a, b, n_sim, seed);
}

RejectionSample rejection_sample(const PositivePart& target, std::size_t n_sim, std::uint64_t seed) {
  const auto& basis = target.density.basis();
  return sample_by_ratio([&](double s) { return target.ratio_to_weight(s); }, basis.a(), basis.b(), n_sim, seed);
}

std::vector<double> default_xgrid(std::size_t size) {
  require(size >= 2, "grid needs at least two points");
  std::vector<double> grid(size);
  for (std::size_t j = 0; j < size; ++j) grid[j] = static_cast<double>(j) / static_cast<double>(size - 1);
  return grid;
}

MomentifyResult momentify(const MomentVector& moments, const MomentifyOptions& options) {
  if (moments.size() < 2) {
    throw ValidationError("insufficient moments: momentify needs at least 2, got " + std::to_string(moments.size()));
  }
  const std::size_t n_moments = options.n_moments.value_or(moments.size());
  if (n_moments < 2 || n_moments > moments.size()) {
    throw ValidationError("insufficient moments: requested " + std::to_string(n_moments) + " of " +
                          std::to_string(moments.size()));
  }
  require(!options.xgrid.empty(), "momentify needs a nonempty grid");
  const MomentVector used = moments.truncated(n_moments);

  MomentifyResult out;
  out.weight = select_weight_params(used);
  JacobiBasis basis = build_basis(out.weight.a, out.weight.b, static_cast<int>(n_moments));

  // The weight is infinite at an endpoint whose shape is below 1; evaluate half a cell inside.
  std::vector<double> grid = options.xgrid;
  std::sort(grid.begin(), grid.end());
  if (grid.size() >= 2) {
    if (out.weight.a < 1.0 && grid.front() <= 0.0) grid.front() = 0.5 * grid[1];
    if (out.weight.b < 1.0 && grid.back() >= 1.0) grid.back() = 0.5 * (1.0 + grid[grid.size() - 2]);
  }

  ApproxDensity density(std::move(basis), used, std::move(grid));
  PositivePart positive = positive_part(density);
  RejectionSample draws = rejection_sample(positive, options.n_sim, options.seed);

  out.xgrid = density.xgrid();
  out.approx_density = density.values();
  out.psample = std::move(draws.sample);
  out.acceptance_rate = draws.acceptance_rate;
  out.clipped_fraction = positive.clipped_fraction;
  out.density.emplace(std::move(density));
  return out;
}

}  // namespace momsurv
