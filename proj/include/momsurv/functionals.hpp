#pragma once

#include "momsurv/gibbs.hpp"
#include "momsurv/hazard.hpp"
#include "momsurv/jacobi.hpp"
#include "momsurv/moments.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace momsurv {

// Rows whose variance falls below this bypass the Jacobi reconstruction.
inline constexpr double degenerate_variance = 1e-8;

struct PosteriorDraws {
  std::vector<double> sample;
  double mode = 0.0;  // argmax of the approximate density on its grid
  bool point_mass = false;
};

// Approximate posterior draws of S(t_i) from its moment row.
PosteriorDraws posterior_at_t(const MomentVector& row, std::size_t n_sim, std::uint64_t seed);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
};

// Empirical quantile with the midpoint (Hazen) rule: the k-th order statistic sits at
// probability (k - 0.5) / n, linear in between, clamped at the extremes.
double empirical_quantile(std::span<const double> sample, double p);

// Equal-tailed interval at the alpha/2 and 1 - alpha/2 empirical quantiles.
Interval credible_interval(std::span<const double> sample, double level = 0.95);

// Running maximum clipped to [0,1].
std::vector<double> isotonic_cdf(std::vector<double> raw);

// c_i = fraction of draws at t_i that are <= 1/2, then made monotone.
std::vector<double> median_survival_cdf(const std::vector<std::vector<double>>& samples);

// (M / (q - 1)) sum_i (1 - c_i).
double median_survival_estimate(std::span<const double> c, double horizon, std::size_t q);

struct MedianInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool lo_open = false;  // CDF never reached alpha/2 on the grid; lo pinned at the horizon
  bool hi_open = false;  // CDF never reached 1 - alpha/2; hi pinned at the horizon
};

// Inverts a monotone discrete CDF by linear interpolation between grid points.
MedianInterval median_interval(std::span<const double> c, std::span<const double> t_grid, double level = 0.95);

// Quantile interval of the trace of conditional means.
Interval marginal_interval(std::span<const double> trace, double level = 0.95);

struct MarginalMedian {
  std::vector<double> cdf;
  double m_hat = 0.0;
  MedianInterval interval;
};

// CDF of the median from the conditional-mean trace (rows are grid points).
MarginalMedian marginal_median_cdf(const std::vector<std::vector<double>>& trace, std::span<const double> t_grid,
                                   double horizon, double level = 0.95);

// Product-limit estimate, stored at the distinct event times.
struct KaplanMeier {
  std::vector<double> times;
  std::vector<double> survival;

  double operator()(double t) const;
};

KaplanMeier kaplan_meier(const SurvivalDataset& data);

struct EmpiricalMedian {
  double value = 0.0;
  bool open = false;  // the curve never drops to 1/2
};

EmpiricalMedian empirical_median(const SurvivalDataset& data);

struct SummaryOptions {
  std::size_t n_sim = 2000;
  double level = 0.95;
  std::uint64_t seed = 1;
};

struct PosteriorSummary {
  std::vector<double> t_grid;
  double horizon = 0.0;
  std::vector<double> mean;
  std::vector<double> median;
  std::vector<double> mode;
  std::vector<Interval> credible;
  std::vector<Interval> marginal;
  std::vector<double> km;
  std::vector<double> c;  // corrected CDF of the median survival time
  double m_hat = 0.0;
  MedianInterval m_interval;
  MarginalMedian marginal_median;
  EmpiricalMedian m_hat_e;
};

PosteriorSummary summarize(const MomentGrid& grid, const SurvivalDataset& data, double horizon,
                           const SummaryOptions& options = {});

// Per-grid-point seed derived from a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace momsurv
