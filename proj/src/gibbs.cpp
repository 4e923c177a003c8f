#include "momsurv/gibbs.hpp"

#include "momsurv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace momsurv {

namespace {

constexpr std::size_t tuning_batch = 50;

double draw_gamma(double shape, double rate, Rng& rng) {
  return std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
}

}  // namespace

std::vector<double> ChainConfig::t_grid() const {
  std::vector<double> grid(grid_size);
  for (std::size_t i = 0; i < grid_size; ++i) {
    grid[i] = horizon * static_cast<double>(i) / static_cast<double>(grid_size - 1);
  }
  return grid;
}

void ChainConfig::validate(const SurvivalDataset& data) const {
  require(iterations > 0, "chain: L must be positive");
  require(burn_in < iterations, "chain: burn-in must be smaller than L");
  require(thin >= 1, "chain: thinning must be at least 1");
  require(iterations - burn_in >= thin, "chain: no iteration is kept after burn-in and thinning");
  require(grid_size >= 2, "chain: grid size q must be at least 2");
  require(n_moments >= 2 && n_moments <= 30, "chain: number of moments N must lie in [2, 30]");
  require(horizon > 0 && std::isfinite(horizon), "chain: horizon M must be positive");
  require(horizon > data.max_time(), "chain: horizon M must exceed the largest observed time");
  require(prior_c.shape > 0 && prior_c.rate > 0, "chain: invalid prior for c");
  require(prior_beta.shape > 0 && prior_beta.rate > 0, "chain: invalid prior for beta");
  require(p0_rate > 0, "chain: base measure rate must be positive");
  require(mh_step >= 0 && std::isfinite(mh_step), "chain: MH step must be nonnegative");
  require(!data.empty(), "chain: empty dataset");
}

FreshLocationTable::FreshLocationTable(const Exposure& exposure, double beta, double p0_rate,
                                       std::size_t base_nodes)
    : rate_(p0_rate) {
  const double top = std::min(exposure.max_time(), base_measure_cutoff(p0_rate));
  const double u_top = to_u(top);
  u_.reserve(2 * base_nodes + exposure.breakpoints().size() + 1);
  // Equispaced in u for the bulk of P0, and in y so the far tail is not covered by one cell.
  for (std::size_t k = 0; k < base_nodes; ++k) {
    const double frac = static_cast<double>(k) / static_cast<double>(base_nodes - 1);
    u_.push_back(u_top * frac);
    u_.push_back(to_u(top * frac));
  }
  for (double x : exposure.breakpoints()) {
    if (x < top) u_.push_back(to_u(x));
  }
  std::sort(u_.begin(), u_.end());
  u_.erase(std::unique(u_.begin(), u_.end()), u_.end());

  g_.resize(u_.size());
  for (std::size_t k = 0; k < u_.size(); ++k) g_[k] = 1.0 / (1.0 + exposure.total(to_y(u_[k]), beta));
  cumulative_.assign(u_.size(), 0.0);
  for (std::size_t k = 1; k < u_.size(); ++k) {
    cumulative_[k] = cumulative_[k - 1] + 0.5 * (g_[k] + g_[k - 1]) * (u_[k] - u_[k - 1]);
  }
}

double FreshLocationTable::to_u(double y) const {
  return -std::expm1(-rate_ * y);
}

double FreshLocationTable::to_y(double u) const {
  return -std::log1p(-u) / rate_;
}

double FreshLocationTable::mass(double x) const {
  const double u = std::min(to_u(x), u_.back());
  const auto it = std::upper_bound(u_.begin(), u_.end(), u);
  const auto k = static_cast<std::size_t>(it - u_.begin()) - 1;
  if (k + 1 >= u_.size()) return cumulative_.back();
  const double h = u - u_[k];
  const double slope = (g_[k + 1] - g_[k]) / (u_[k + 1] - u_[k]);
  return cumulative_[k] + g_[k] * h + 0.5 * slope * h * h;
}

double FreshLocationTable::sample(double x, Rng& rng) const {
  const double total = mass(x);
  if (!(total > 0)) throw ValidationError("fresh latent location: no admissible value below " + std::to_string(x));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (;;) {
    const double target = unif(rng) * total;
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    auto k = static_cast<std::size_t>(it - cumulative_.begin());
    k = std::clamp<std::size_t>(k, 1, u_.size() - 1) - 1;
    const double rem = target - cumulative_[k];
    const double width = u_[k + 1] - u_[k];
    const double slope = (g_[k + 1] - g_[k]) / width;
    // Solve g_k h + slope h^2 / 2 = rem within the cell.
    const double h = 2.0 * rem / (g_[k] + std::sqrt(std::max(g_[k] * g_[k] + 2.0 * slope * rem, 0.0)));
    const double y = to_y(u_[k] + std::clamp(h, 0.0, width));
    if (y > 0.0 && y <= x) return y;
  }
}

GibbsKernel::GibbsKernel(const SurvivalDataset& data, const ChainConfig& cfg)
    : data_(data), cfg_(cfg), moments_(data, cfg.p0_rate) {
  for (std::size_t i : data.event_indices()) event_times_.push_back(data.times()[i]);
}

void GibbsKernel::update_latent(std::size_t i, LatentState& state, const FreshLocationTable& table,
                                Rng& rng) const {
  const double x = event_times_.at(i);
  if (!(x > 0)) throw ValidationError("latent update: no admissible location for a nonpositive time");
  state.detach(i);

  // Common factor beta dropped from every weight.
  const auto& values = state.distinct();
  const auto& sizes = state.multiplicity();
  std::vector<double> cumulative(values.size() + 1, 0.0);
  double running = 0.0;
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (values[j] <= x) {
      running += static_cast<double>(sizes[j]) / (1.0 + moments_.exposure().total(values[j], state.beta));
    }
    cumulative[j] = running;
  }
  running += state.c * table.mass(x);
  cumulative[values.size()] = running;

  const double u = std::uniform_real_distribution<double>(0.0, running)(rng);
  const auto pick = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                             cumulative.begin());
  if (pick < values.size()) {
    state.join(i, pick);
  } else {
    state.open(i, table.sample(x, rng));
  }
}

void GibbsKernel::update_latent(std::size_t i, LatentState& state, Rng& rng) const {
  const FreshLocationTable table(moments_.exposure(), state.beta, cfg_.p0_rate);
  update_latent(i, state, table, rng);
}

void GibbsKernel::sweep_latents(LatentState& state, Rng& rng) const {
  if (event_times_.empty()) return;
  const FreshLocationTable table(moments_.exposure(), state.beta, cfg_.p0_rate);
  for (std::size_t i = 0; i < event_times_.size(); ++i) update_latent(i, state, table, rng);
}

void GibbsKernel::update_total_mass(LatentState& state, Rng& rng) const {
  const double d = data_.empty() ? 0.0 : moments_.log_laplace_integral(state.beta);
  state.c = draw_gamma(cfg_.prior_c.shape + static_cast<double>(state.cluster_count()), cfg_.prior_c.rate + d, rng);
}

double GibbsKernel::log_beta_target(double beta, const LatentState& state) const {
  double value = (cfg_.prior_beta.shape - 1.0) * std::log(beta) - cfg_.prior_beta.rate * beta;
  if (!data_.empty()) value -= state.c * moments_.log_laplace_integral(beta);
  const auto& values = state.distinct();
  const auto& sizes = state.multiplicity();
  for (std::size_t j = 0; j < values.size(); ++j) {
    value -= static_cast<double>(sizes[j]) * std::log1p(moments_.exposure().total(values[j], beta));
  }
  value += static_cast<double>(state.size()) * std::log(beta);
  return value;
}

bool GibbsKernel::update_kernel_beta(LatentState& state, double step, Rng& rng) const {
  if (step <= 0.0) return false;
  const double current = state.beta;
  const double proposal = current * std::exp(step * std::normal_distribution<double>(0.0, 1.0)(rng));
  if (!(proposal > 0) || !std::isfinite(proposal)) return false;
  // Random walk on log beta: the Jacobian contributes log(proposal / current).
  const double log_ratio = log_beta_target(proposal, state) - log_beta_target(current, state) +
                           std::log(proposal) - std::log(current);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (std::log(u) < log_ratio) {
    state.beta = proposal;
    return true;
  }
  return false;
}

LatentState initial_state(const SurvivalDataset& data, const ChainConfig& cfg, Rng& rng) {
  std::vector<double> locations;
  for (std::size_t i : data.event_indices()) locations.push_back(0.5 * data.times()[i]);
  const double c = draw_gamma(cfg.prior_c.shape, cfg.prior_c.rate, rng);
  const double beta = draw_gamma(cfg.prior_beta.shape, cfg.prior_beta.rate, rng);
  return LatentState(std::move(locations), c, beta);
}

MomentGrid run_chain(const SurvivalDataset& data, const ChainConfig& cfg) {
  cfg.validate(data);
  Rng rng(cfg.seed);
  const GibbsKernel kernel(data, cfg);
  LatentState state = initial_state(data, cfg, rng);

  MomentGrid out;
  out.t_grid = cfg.t_grid();
  const std::size_t q = out.t_grid.size();
  const std::size_t n = cfg.n_moments;
  out.moments.assign(q, std::vector<double>(n, 0.0));
  out.mean_trace.assign(q, {});

  double step = cfg.mh_step;
  std::size_t batch_accepted = 0;
  std::size_t accepted_after_burn = 0;
  std::size_t kept = 0;
  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    kernel.sweep_latents(state, rng);
    kernel.update_total_mass(state, rng);
    const bool moved = kernel.update_kernel_beta(state, step, rng);

    if (it <= cfg.burn_in) {
      batch_accepted += moved ? 1 : 0;
      if (cfg.tune_step && it % tuning_batch == 0 && step > 0) {
        const double rate = static_cast<double>(batch_accepted) / tuning_batch;
        step *= std::exp(rate - cfg.target_acceptance);
        batch_accepted = 0;
      }
      continue;
    }
    accepted_after_burn += moved ? 1 : 0;
    if ((it - cfg.burn_in) % cfg.thin != 0) continue;

    ++kept;
    out.cluster_trace.push_back(state.cluster_count());
    for (std::size_t i = 0; i < q; ++i) {
      const auto row = kernel.moments().at(out.t_grid[i], n, state);
      for (std::size_t r = 0; r < n; ++r) {
        if (!std::isfinite(row[r])) {
          throw NumericalError("chain aborted: non-finite conditional moment at iteration " + std::to_string(it));
        }
        out.moments[i][r] += row[r];
      }
      out.mean_trace[i].push_back(row[0]);
    }
  }

  for (auto& row : out.moments) {
    for (double& v : row) v /= static_cast<double>(kept);
  }

  auto& diag = out.diagnostics;
  diag.kept = kept;
  diag.beta_acceptance =
      static_cast<double>(accepted_after_burn) / static_cast<double>(cfg.iterations - cfg.burn_in);
  diag.final_mh_step = step;
  if (!out.cluster_trace.empty()) {
    const auto [lo, hi] = std::minmax_element(out.cluster_trace.begin(), out.cluster_trace.end());
    diag.clusters_min = *lo;
    diag.clusters_max = *hi;
    diag.clusters_mean = std::accumulate(out.cluster_trace.begin(), out.cluster_trace.end(), 0.0) /
                         static_cast<double>(out.cluster_trace.size());
  }
  for (const auto& trace : out.mean_trace) diag.mean_trace_ess.push_back(effective_sample_size(trace));
  return out;
}

double effective_sample_size(std::span<const double> trace) {
  const std::size_t n = trace.size();
  if (n < 4) return static_cast<double>(n);
  if (std::all_of(trace.begin(), trace.end(), [&](double v) { return v == trace[0]; })) return static_cast<double>(n);
  const double mean = std::accumulate(trace.begin(), trace.end(), 0.0) / static_cast<double>(n);
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (trace[i] - mean) * (trace[i + lag] - mean);
    return s / static_cast<double>(n);
  };
  const double var = autocov(0);
  if (!(var > 0)) return static_cast<double>(n);

  // Sum of consecutive autocorrelation pairs while positive, kept monotone.
  double total = 0.0;
  double previous_pair = std::numeric_limits<double>::infinity();
  for (std::size_t lag = 0; lag + 1 < n; lag += 2) {
    double pair = (autocov(lag) + autocov(lag + 1)) / var;
    if (pair <= 0) break;
    pair = std::min(pair, previous_pair);
    total += pair;
    previous_pair = pair;
  }
  const double tau = std::max(2.0 * total - 1.0, 1e-12);
  return static_cast<double>(n) / tau;
}

}  // namespace momsurv
