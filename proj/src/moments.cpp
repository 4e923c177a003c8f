#include "momsurv/moments.hpp"

#include "momsurv/errors.hpp"

#include <cmath>
#include <sstream>

namespace momsurv {

MomentVector::MomentVector(std::vector<double> values) {
  values_.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    require(std::isfinite(values[i]), "non-finite moment at order " + std::to_string(i + 1));
    values_.emplace_back(values[i]);
  }
}

MomentVector::MomentVector(std::vector<HighReal> values) : values_(std::move(values)) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    require(boost::multiprecision::isfinite(values_[i]), "non-finite moment at order " + std::to_string(i + 1));
  }
}

double MomentVector::operator[](std::size_t r) const {
  return exact(r).convert_to<double>();
}

const HighReal& MomentVector::exact(std::size_t r) const {
  static const HighReal one{1};
  if (r == 0) return one;
  if (r > values_.size()) throw std::out_of_range("moment order " + std::to_string(r) + " not available");
  return values_[r - 1];
}

std::vector<double> MomentVector::to_doubles() const {
  std::vector<double> out;
  out.reserve(values_.size());
  for (const auto& v : values_) out.push_back(v.convert_to<double>());
  return out;
}

MomentVector MomentVector::truncated(std::size_t n) const {
  require(n <= values_.size(), "cannot truncate " + std::to_string(values_.size()) + " moments to " +
                                   std::to_string(n));
  return MomentVector(std::vector<HighReal>(values_.begin(), values_.begin() + static_cast<std::ptrdiff_t>(n)));
}

double MomentVector::variance() const {
  require(values_.size() >= 2, "variance needs two moments");
  HighReal v = values_[1] - values_[0] * values_[0];
  return v.convert_to<double>();
}

std::string MomentViolation::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::range: os << "range"; break;
    case Kind::monotonicity: os << "monotonicity"; break;
    case Kind::log_convexity: os << "log-convexity"; break;
    case Kind::hausdorff: os << "hausdorff"; break;
  }
  os << " at r=" << index << " (by " << magnitude << ")";
  return os.str();
}

std::string ValidationReport::describe() const {
  if (violations.empty()) return "valid";
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v.describe();
  }
  return out;
}

ValidationReport validate_moments(const MomentVector& m, const ValidationOptions& options) {
  const std::size_t d = m.size();
  require(d >= 2, "moment validation needs at least two moments");
  const HighReal tol{options.tolerance};
  ValidationReport report;
  auto add = [&](MomentViolation::Kind kind, std::size_t r, const HighReal& excess) {
    report.violations.push_back({kind, r, excess.convert_to<double>()});
  };

  for (std::size_t r = 1; r <= d; ++r) {
    const HighReal& g = m.exact(r);
    if (g < -tol) add(MomentViolation::Kind::range, r, -g);
    if (g > 1 + tol) add(MomentViolation::Kind::range, r, g - 1);
  }
  for (std::size_t r = 1; r < d; ++r) {
    HighReal excess = m.exact(r + 1) - m.exact(r);
    if (excess > tol) add(MomentViolation::Kind::monotonicity, r, excess);
  }
  for (std::size_t r = 1; r < d; ++r) {
    HighReal excess = m.exact(r) * m.exact(r) - m.exact(r - 1) * m.exact(r + 1);
    if (excess > tol) add(MomentViolation::Kind::log_convexity, r, excess);
  }

  if (options.strict) {
    // (-1)^k Delta^k gamma_r >= 0 for every r + k <= d.
    std::vector<HighReal> diff(d + 1);
    for (std::size_t r = 0; r <= d; ++r) diff[r] = m.exact(r);
    for (std::size_t k = 1; k <= d; ++k) {
      for (std::size_t r = 0; r + k <= d; ++r) {
        diff[r] = diff[r] - diff[r + 1];
        if (diff[r] < -tol) add(MomentViolation::Kind::hausdorff, r, -diff[r]);
      }
    }
  }
  return report;
}

double rising_factorial(double x, unsigned r) {
  if (!(x > 0)) throw ValidationError("rising factorial needs x > 0");
  double out = 1.0;
  for (unsigned k = 0; k < r; ++k) out *= x + k;
  return out;
}

HighReal rising_factorial(const HighReal& x, unsigned r) {
  if (!(x > 0)) throw ValidationError("rising factorial needs x > 0");
  HighReal out{1};
  for (unsigned k = 0; k < r; ++k) out *= x + k;
  return out;
}

MomentVector beta_mixture_moments(std::span<const BetaShape> components, std::span<const double> weights,
                                  std::size_t d) {
  require(!components.empty(), "beta mixture needs at least one component");
  require(components.size() == weights.size(), "beta mixture: one weight per component");
  require(d >= 2, "beta mixture moments: d must be at least 2");
  double total = 0.0;
  for (std::size_t k = 0; k < components.size(); ++k) {
    require(components[k].a > 0 && components[k].b > 0, "beta mixture: shapes must be positive");
    require(weights[k] >= 0, "beta mixture: weights must be nonnegative");
    total += weights[k];
  }
  require(std::abs(total - 1.0) <= 1e-10, "beta mixture: weights must sum to 1");

  std::vector<HighReal> out(d, HighReal{0});
  for (std::size_t k = 0; k < components.size(); ++k) {
    const HighReal a{components[k].a};
    const HighReal ab = a + HighReal{components[k].b};
    HighReal ratio{1};
    for (std::size_t r = 1; r <= d; ++r) {
      ratio *= (a + (r - 1)) / (ab + (r - 1));
      out[r - 1] += HighReal{weights[k]} * ratio;
    }
  }
  return MomentVector(std::move(out));
}

MomentVector beta_moments(double a, double b, std::size_t d) {
  const BetaShape shape{a, b};
  const double weight = 1.0;
  return beta_mixture_moments({&shape, 1}, {&weight, 1}, d);
}

}  // namespace momsurv
