#include "momsurv/hazard.hpp"

#include "momsurv/errors.hpp"
#include "momsurv/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace momsurv {

namespace {

constexpr std::size_t unassigned = std::numeric_limits<std::size_t>::max();

}  // namespace

SurvivalDataset::SurvivalDataset(std::vector<double> times, std::vector<bool> events)
    : times_(std::move(times)), events_(std::move(events)) {
  require(times_.size() == events_.size(), "survival data: times and events differ in length");
  for (std::size_t i = 0; i < times_.size(); ++i) {
    require(std::isfinite(times_[i]) && times_[i] > 0,
            "survival data: time at row " + std::to_string(i + 1) + " must be positive and finite");
  }
}

std::size_t SurvivalDataset::event_count() const noexcept {
  return static_cast<std::size_t>(std::count(events_.begin(), events_.end(), true));
}

std::vector<std::size_t> SurvivalDataset::event_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < events_.size(); ++i) {
    if (events_[i]) out.push_back(i);
  }
  return out;
}

double SurvivalDataset::max_time() const noexcept {
  return times_.empty() ? 0.0 : *std::max_element(times_.begin(), times_.end());
}

double cumulative_kernel(double x, double y, double beta) {
  return y <= x ? beta * (x - y) : 0.0;
}

double cumulative_kernel_total(double y, const SurvivalDataset& data, double beta) {
  double total = 0.0;
  for (double x : data.times()) total += cumulative_kernel(x, y, beta);
  return total;
}

Exposure::Exposure(const SurvivalDataset& data) {
  std::vector<double> sorted = data.times();
  std::sort(sorted.begin(), sorted.end());
  for (double x : sorted) {
    if (knots_.empty() || x != knots_.back()) {
      knots_.push_back(x);
      suffix_sum_.push_back(0.0);
      suffix_count_.push_back(0.0);
    }
    suffix_sum_.back() += x;
    suffix_count_.back() += 1.0;
  }
  for (std::size_t k = knots_.size(); k-- > 1;) {
    suffix_sum_[k - 1] += suffix_sum_[k];
    suffix_count_[k - 1] += suffix_count_[k];
  }
}

double Exposure::unit(double y) const {
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), y);
  const auto k = static_cast<std::size_t>(it - knots_.begin());
  if (k == knots_.size()) return 0.0;
  return suffix_sum_[k] - y * suffix_count_[k];
}

double GammaJumps::log_tau(int m, double u) const {
  require(m >= 1, "tau_m diverges for m < 1 under the gamma Levy density");
  require(u >= 0, "tau_m needs a nonnegative tilt");
  return std::lgamma(static_cast<double>(m)) - m * std::log1p(u);
}

double GammaJumps::laplace_increment(double u, double du) const {
  return std::log1p(du / (1.0 + u));
}

double tau(int m, double u) {
  return std::exp(GammaJumps{}.log_tau(m, u));
}

double base_measure_cutoff(double p0_rate) {
  return 40.0 / p0_rate;
}

LatentState::LatentState(std::vector<double> locations, double c_value, double beta_value)
    : c(c_value), beta(beta_value) {
  label_.resize(locations.size());
  for (std::size_t i = 0; i < locations.size(); ++i) {
    const auto it = std::find(cluster_value_.begin(), cluster_value_.end(), locations[i]);
    if (it == cluster_value_.end()) {
      label_[i] = cluster_value_.size();
      cluster_value_.push_back(locations[i]);
      cluster_size_.push_back(1);
    } else {
      label_[i] = static_cast<std::size_t>(it - cluster_value_.begin());
      ++cluster_size_[label_[i]];
    }
  }
}

std::vector<double> LatentState::locations() const {
  std::vector<double> out(label_.size());
  for (std::size_t i = 0; i < label_.size(); ++i) out[i] = cluster_value_[label_[i]];
  return out;
}

void LatentState::detach(std::size_t i) {
  const std::size_t l = label_.at(i);
  if (l == unassigned) return;
  label_[i] = unassigned;
  if (--cluster_size_[l] > 0) return;
  const std::size_t last = cluster_value_.size() - 1;
  if (l != last) {
    cluster_value_[l] = cluster_value_[last];
    cluster_size_[l] = cluster_size_[last];
    for (auto& lab : label_) {
      if (lab == last) lab = l;
    }
  }
  cluster_value_.pop_back();
  cluster_size_.pop_back();
}

void LatentState::join(std::size_t i, std::size_t cluster) {
  label_.at(i) = cluster;
  ++cluster_size_.at(cluster);
}

void LatentState::open(std::size_t i, double value) {
  label_.at(i) = cluster_value_.size();
  cluster_value_.push_back(value);
  cluster_size_.push_back(1);
}

bool LatentState::consistent() const {
  std::vector<std::size_t> counts(cluster_value_.size(), 0);
  for (std::size_t lab : label_) {
    if (lab >= cluster_value_.size()) return false;
    ++counts[lab];
  }
  if (counts != cluster_size_) return false;
  for (std::size_t j = 0; j < cluster_value_.size(); ++j) {
    if (cluster_size_[j] == 0) return false;
    for (std::size_t k = j + 1; k < cluster_value_.size(); ++k) {
      if (cluster_value_[j] == cluster_value_[k]) return false;
    }
  }
  return true;
}

double prior_log_factor(double t, double r, const SurvivalDataset& data, const GammaCrmConfig& cfg, double beta,
                        const JumpIntensity& jumps) {
  require(t >= 0 && r >= 0, "prior factor needs t >= 0 and r >= 0");
  require(cfg.c > 0 && cfg.p0_rate > 0 && beta > 0, "prior factor needs positive c, p0_rate and beta");
  if (t == 0.0 || r == 0.0) return 0.0;
  const Exposure exposure(data);
  const double rate = cfg.p0_rate;
  auto integrand = [&](double y) {
    const double kx = exposure.total(y, beta);
    const double kt = cumulative_kernel(t, y, beta);
    return jumps.laplace_increment(kx, r * kt) * rate * std::exp(-rate * y);
  };
  const double upper = std::min(t, base_measure_cutoff(rate));
  return cfg.c * quad::integrate(integrand, 0.0, upper, exposure.breakpoints());
}

double conditional_moment(double t, double r, const SurvivalDataset& data, const LatentState& state,
                          const GammaCrmConfig& cfg, const JumpIntensity& jumps) {
  require(t >= 0 && r >= 0, "conditional moment needs t >= 0 and r >= 0");
  if (t == 0.0 || r == 0.0) return 1.0;
  const GammaCrmConfig current{state.c, cfg.p0_rate};
  double log_value = -prior_log_factor(t, r, data, current, state.beta, jumps);
  const auto& values = state.distinct();
  const auto& sizes = state.multiplicity();
  for (std::size_t j = 0; j < values.size(); ++j) {
    const double kx = cumulative_kernel_total(values[j], data, state.beta);
    const double kt = cumulative_kernel(t, values[j], state.beta);
    const int n = static_cast<int>(sizes[j]);
    log_value += jumps.log_tau(n, kx + r * kt) - jumps.log_tau(n, kx);
  }
  return std::exp(log_value);
}

ConditionalMoments::ConditionalMoments(const SurvivalDataset& data, double p0_rate)
    : exposure_(data), p0_rate_(p0_rate) {
  require(p0_rate > 0, "base measure rate must be positive");
}

std::vector<double> ConditionalMoments::at(double t, std::size_t n_moments, const LatentState& state) const {
  std::vector<double> log_moment(n_moments, 0.0);
  if (t > 0.0) {
    const double beta = state.beta;
    const double rate = p0_rate_;
    auto integrand = [&](double y, std::span<double> out) {
      const double kx = exposure_.total(y, beta);
      const double z = beta * (t - y) / (1.0 + kx);
      const double w = rate * std::exp(-rate * y);
      for (std::size_t r = 0; r < out.size(); ++r) out[r] = std::log1p(static_cast<double>(r + 1) * z) * w;
    };
    const double upper = std::min(t, base_measure_cutoff(rate));
    const auto integral = quad::integrate_vector(integrand, n_moments, 0.0, upper, exposure_.breakpoints());
    for (std::size_t r = 0; r < n_moments; ++r) log_moment[r] = -state.c * integral.value[r];

    const auto& values = state.distinct();
    const auto& sizes = state.multiplicity();
    for (std::size_t j = 0; j < values.size(); ++j) {
      if (values[j] >= t) continue;
      const double kx = exposure_.total(values[j], beta);
      const double z = beta * (t - values[j]) / (1.0 + kx);
      const double n = static_cast<double>(sizes[j]);
      for (std::size_t r = 0; r < n_moments; ++r) log_moment[r] -= n * std::log1p(static_cast<double>(r + 1) * z);
    }
  }
  std::vector<double> out(n_moments);
  for (std::size_t r = 0; r < n_moments; ++r) out[r] = std::exp(log_moment[r]);
  return out;
}

double ConditionalMoments::log_laplace_integral(double beta) const {
  const double rate = p0_rate_;
  auto integrand = [&](double y) { return std::log1p(exposure_.total(y, beta)) * rate * std::exp(-rate * y); };
  const double upper = std::min(exposure_.max_time(), base_measure_cutoff(rate));
  return quad::integrate(integrand, 0.0, upper, exposure_.breakpoints());
}

}  // namespace momsurv
