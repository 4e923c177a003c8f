#include "momsurv/functionals.hpp"

#include "momsurv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace momsurv {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

PosteriorDraws posterior_at_t(const MomentVector& row, std::size_t n_sim, std::uint64_t seed) {
  const auto report = validate_moments(row);
  if (!report.ok()) throw ValidationError("posterior moment row is not a moment sequence: " + report.describe());

  PosteriorDraws out;
  if (row.variance() < degenerate_variance) {
    out.point_mass = true;
    out.mode = row[1];
    out.sample.assign(n_sim, row[1]);
    return out;
  }
  MomentifyOptions options;
  options.n_sim = n_sim;
  options.seed = seed;
  auto result = momentify(row, options);
  const auto peak = std::max_element(result.approx_density.begin(), result.approx_density.end());
  out.mode = result.xgrid[static_cast<std::size_t>(peak - result.approx_density.begin())];
  out.sample = std::move(result.psample);
  return out;
}

double empirical_quantile(std::span<const double> sample, double p) {
  require(!sample.empty(), "quantile of an empty sample");
  require(p >= 0 && p <= 1, "quantile level must lie in [0,1]");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  const double position = n * p + 0.5;  // 1-based
  if (position <= 1.0) return sorted.front();
  if (position >= n) return sorted.back();
  const auto k = static_cast<std::size_t>(std::floor(position));
  const double frac = position - static_cast<double>(k);
  return sorted[k - 1] + frac * (sorted[k] - sorted[k - 1]);
}

Interval credible_interval(std::span<const double> sample, double level) {
  require(level > 0 && level < 1, "interval level must lie in (0,1)");
  const double alpha = 1.0 - level;
  return {empirical_quantile(sample, alpha / 2), empirical_quantile(sample, 1.0 - alpha / 2)};
}

std::vector<double> isotonic_cdf(std::vector<double> raw) {
  double running = 0.0;
  for (double& v : raw) {
    running = std::max(running, std::clamp(v, 0.0, 1.0));
    v = running;
  }
  return raw;
}

std::vector<double> median_survival_cdf(const std::vector<std::vector<double>>& samples) {
  std::vector<double> raw;
  raw.reserve(samples.size());
  for (const auto& draws : samples) {
    require(!draws.empty(), "median CDF needs a nonempty sample at every grid point");
    const auto below = std::count_if(draws.begin(), draws.end(), [](double s) { return s <= 0.5; });
    raw.push_back(static_cast<double>(below) / static_cast<double>(draws.size()));
  }
  return isotonic_cdf(std::move(raw));
}

double median_survival_estimate(std::span<const double> c, double horizon, std::size_t q) {
  require(q >= 2, "median estimate needs q >= 2");
  double sum = 0.0;
  for (double ci : c) sum += 1.0 - ci;
  return horizon / static_cast<double>(q - 1) * sum;
}

MedianInterval median_interval(std::span<const double> c, std::span<const double> t_grid, double level) {
  require(!c.empty() && c.size() == t_grid.size(), "median interval: CDF and grid differ in length");
  require(level > 0 && level < 1, "interval level must lie in (0,1)");
  const double alpha = 1.0 - level;
  auto invert = [&](double target, bool& open) {
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c[i] < target) continue;
      if (i == 0 || c[i] == c[i - 1]) return t_grid[i];
      const double frac = (target - c[i - 1]) / (c[i] - c[i - 1]);
      return t_grid[i - 1] + frac * (t_grid[i] - t_grid[i - 1]);
    }
    open = true;
    return t_grid.back();
  };
  MedianInterval out;
  out.lo = invert(alpha / 2, out.lo_open);
  out.hi = invert(1.0 - alpha / 2, out.hi_open);
  return out;
}

Interval marginal_interval(std::span<const double> trace, double level) {
  return credible_interval(trace, level);
}

MarginalMedian marginal_median_cdf(const std::vector<std::vector<double>>& trace, std::span<const double> t_grid,
                                   double horizon, double level) {
  require(trace.size() == t_grid.size(), "marginal median: trace needs one row per grid point");
  MarginalMedian out;
  out.cdf = median_survival_cdf(trace);
  out.m_hat = median_survival_estimate(out.cdf, horizon, t_grid.size());
  out.interval = median_interval(out.cdf, t_grid, level);
  return out;
}

double KaplanMeier::operator()(double t) const {
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 1.0;
  return survival[static_cast<std::size_t>(it - times.begin()) - 1];
}

KaplanMeier kaplan_meier(const SurvivalDataset& data) {
  require(!data.empty(), "Kaplan-Meier needs a nonempty dataset");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  const auto& times = data.times();
  const auto& events = data.events();
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });

  KaplanMeier km;
  double s = 1.0;
  std::size_t at_risk = data.size();
  for (std::size_t k = 0; k < order.size();) {
    const double t = times[order[k]];
    std::size_t deaths = 0;
    std::size_t leaving = 0;
    while (k < order.size() && times[order[k]] == t) {
      deaths += events[order[k]] ? 1 : 0;
      ++leaving;
      ++k;
    }
    if (deaths > 0) {
      s *= static_cast<double>(at_risk - deaths) / static_cast<double>(at_risk);
      km.times.push_back(t);
      km.survival.push_back(s);
    }
    at_risk -= leaving;
  }
  return km;
}

EmpiricalMedian empirical_median(const SurvivalDataset& data) {
  const auto km = kaplan_meier(data);
  for (std::size_t k = 0; k < km.times.size(); ++k) {
    if (km.survival[k] <= 0.5) return {km.times[k], false};
  }
  return {data.max_time(), true};
}

PosteriorSummary summarize(const MomentGrid& grid, const SurvivalDataset& data, double horizon,
                           const SummaryOptions& options) {
  const std::size_t q = grid.t_grid.size();
  require(q >= 2 && grid.moments.size() == q && grid.mean_trace.size() == q, "summary: malformed moment grid");

  PosteriorSummary out;
  out.t_grid = grid.t_grid;
  out.horizon = horizon;
  const auto km = kaplan_meier(data);
  std::vector<std::vector<double>> samples(q);
  for (std::size_t i = 0; i < q; ++i) {
    const MomentVector row = grid.row(i);
    auto draws = posterior_at_t(row, options.n_sim, derive_seed(options.seed, i));
    out.mean.push_back(row[1]);
    out.median.push_back(empirical_quantile(draws.sample, 0.5));
    out.mode.push_back(draws.mode);
    out.credible.push_back(credible_interval(draws.sample, options.level));
    out.marginal.push_back(marginal_interval(grid.mean_trace[i], options.level));
    out.km.push_back(km(grid.t_grid[i]));
    samples[i] = std::move(draws.sample);
  }
  out.c = median_survival_cdf(samples);
  out.m_hat = median_survival_estimate(out.c, horizon, q);
  out.m_interval = median_interval(out.c, out.t_grid, options.level);
  out.marginal_median = marginal_median_cdf(grid.mean_trace, out.t_grid, horizon, options.level);
  out.m_hat_e = empirical_median(data);
  return out;
}

}  // namespace momsurv
