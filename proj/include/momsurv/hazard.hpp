#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace momsurv {

// Right-censored survival data. events[i] is true for an exact (death) time and false
// for a censoring time.
class SurvivalDataset {
 public:
  SurvivalDataset() = default;
  SurvivalDataset(std::vector<double> times, std::vector<bool> events);

  std::size_t size() const noexcept { return times_.size(); }
  bool empty() const noexcept { return times_.empty(); }
  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<bool>& events() const noexcept { return events_; }
  std::size_t event_count() const noexcept;
  // Positions of the exact observations, in dataset order.
  std::vector<std::size_t> event_indices() const;
  double max_time() const noexcept;

  bool operator==(const SurvivalDataset&) const = default;

 private:
  std::vector<double> times_;
  std::vector<bool> events_;
};

// Dykstra-Laud kernel k(t; y) = 1(0 < y <= t) beta.
struct KernelDL {
  double beta = 1.0;
};

struct GammaCrmConfig {
  double c = 1.0;        // total mass of the Levy intensity
  double p0_rate = 3.0;  // exponential base measure P0
};

// K_x(y) = int_0^x k(s; y) ds = beta (x - y) for y <= x.
double cumulative_kernel(double x, double y, double beta);

// K_X(y) summed over every observation; censored times contribute exposure too.
double cumulative_kernel_total(double y, const SurvivalDataset& data, double beta);

// Sorted observation times with suffix sums, so that K_X(y) / beta = sum_{X_i > y} (X_i - y)
// is evaluated in O(log n).
class Exposure {
 public:
  explicit Exposure(const SurvivalDataset& data);

  // sum_i (X_i - y)_+ ; multiply by beta for K_X(y).
  double unit(double y) const;
  double total(double y, double beta) const { return beta * unit(y); }
  // Distinct observation times in increasing order: kinks of K_X.
  const std::vector<double>& breakpoints() const noexcept { return knots_; }
  double max_time() const noexcept { return knots_.empty() ? 0.0 : knots_.back(); }

 private:
  std::vector<double> knots_;
  std::vector<double> suffix_sum_;    // sum of times at or after knot k (with multiplicity)
  std::vector<double> suffix_count_;  // number of times at or after knot k
};

// Jump-size part rho(s) of the Levy intensity nu(ds, dy) = rho(s) ds c P0(dy). Only the
// two integrals the posterior moments need are exposed.
class JumpIntensity {
 public:
  virtual ~JumpIntensity() = default;
  // log of int_0^inf s^m e^{-u s} rho(s) ds
  virtual double log_tau(int m, double u) const = 0;
  // psi(u + du) - psi(u) with psi(u) = int_0^inf (1 - e^{-u s}) rho(s) ds
  virtual double laplace_increment(double u, double du) const = 0;
};

// rho(s) = s^-1 e^-s: tau_m(u) = Gamma(m) / (1 + u)^m and psi(u) = log(1 + u).
class GammaJumps final : public JumpIntensity {
 public:
  double log_tau(int m, double u) const override;
  double laplace_increment(double u, double du) const override;
};

// tau_m(u) for the gamma CRM; m >= 1.
double tau(int m, double u);

// Latent locations Y_i (one per exact observation, dataset order) grouped into clusters of
// tied values, plus the hyperparameters c and beta.
class LatentState {
 public:
  LatentState() = default;
  LatentState(std::vector<double> locations, double c, double beta);

  double c = 1.0;
  double beta = 1.0;

  std::size_t size() const noexcept { return label_.size(); }
  std::size_t cluster_count() const noexcept { return cluster_value_.size(); }
  double location(std::size_t i) const { return cluster_value_[label_[i]]; }
  std::size_t label(std::size_t i) const { return label_[i]; }
  std::vector<double> locations() const;
  const std::vector<double>& distinct() const noexcept { return cluster_value_; }
  const std::vector<std::size_t>& multiplicity() const noexcept { return cluster_size_; }

  // Detach latent i; its cluster disappears when it empties. Latent i stays unassigned until
  // join() or open() is called for it.
  void detach(std::size_t i);
  void join(std::size_t i, std::size_t cluster);
  void open(std::size_t i, double value);

  // Bookkeeping consistency: sizes add up, labels valid, no empty or duplicated cluster.
  bool consistent() const;

 private:
  std::vector<std::size_t> label_;
  std::vector<double> cluster_value_;
  std::vector<std::size_t> cluster_size_;
};

// c int_0^t [psi(K_X(y) + r K_t(y)) - psi(K_X(y))] P0(dy), by adaptive quadrature split at the
// data times. Returns the negated log of the first factor of the conditional moment.
double prior_log_factor(double t, double r, const SurvivalDataset& data, const GammaCrmConfig& cfg, double beta,
                        const JumpIntensity& jumps = GammaJumps{});

// E[S(t)^r | X, Y] for the state's c and beta; cfg supplies the base measure rate.
double conditional_moment(double t, double r, const SurvivalDataset& data, const LatentState& state,
                          const GammaCrmConfig& cfg, const JumpIntensity& jumps = GammaJumps{});

// Fast path used by the sampler: E[S(t)^r | X, Y] for r = 1..N at once, sharing quadrature
// nodes across r. Gamma CRM only.
class ConditionalMoments {
 public:
  ConditionalMoments(const SurvivalDataset& data, double p0_rate);

  std::vector<double> at(double t, std::size_t n_moments, const LatentState& state) const;

  // int log(1 + K_X(y)) P0(dy); the c-free exponent of the marginal likelihood.
  double log_laplace_integral(double beta) const;

  const Exposure& exposure() const noexcept { return exposure_; }
  double p0_rate() const noexcept { return p0_rate_; }

 private:
  Exposure exposure_;
  double p0_rate_;
};

// Upper limit beyond which the exponential base measure carries negligible mass.
double base_measure_cutoff(double p0_rate);

}  // namespace momsurv
