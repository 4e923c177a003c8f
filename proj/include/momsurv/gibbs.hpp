#pragma once

#include "momsurv/hazard.hpp"
#include "momsurv/moments.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace momsurv {

using Rng = std::mt19937_64;

// Gamma(shape, rate) hyperprior.
struct GammaPrior {
  double shape = 1.0;
  double rate = 1.0 / 3.0;
};

struct ChainConfig {
  std::size_t iterations = 10000;  // L
  std::size_t burn_in = 5000;
  std::size_t thin = 5;
  double horizon = 6.0;         // M
  std::size_t grid_size = 50;   // q
  std::size_t n_moments = 10;   // N
  std::uint64_t seed = 1;
  GammaPrior prior_c;
  GammaPrior prior_beta;
  double p0_rate = 3.0;
  double mh_step = 0.5;  // random-walk scale on log beta
  bool tune_step = true;  // adapt mh_step during burn-in, frozen afterwards
  double target_acceptance = 0.35;

  // q equispaced points from 0 to M.
  std::vector<double> t_grid() const;
  void validate(const SurvivalDataset& data) const;
};

// Inverse-CDF table for a fresh latent location: density proportional to
// (1 + K_X(y))^-1 P0(dy), tabulated on nodes equispaced in P0-probability and in y, with the
// data times inserted as extra nodes so that truncation at any X_i is exact.
class FreshLocationTable {
 public:
  FreshLocationTable(const Exposure& exposure, double beta, double p0_rate, std::size_t base_nodes = 1024);

  // int_0^x (1 + K_X(y))^-1 P0(dy)
  double mass(double x) const;
  // Draw from the density restricted to (0, x].
  double sample(double x, Rng& rng) const;

 private:
  double to_u(double y) const;
  double to_y(double u) const;

  double rate_;
  std::vector<double> u_;
  std::vector<double> g_;
  std::vector<double> cumulative_;
};

// Full conditionals of the marginal sampler for the gamma CRM with Dykstra-Laud kernel.
class GibbsKernel {
 public:
  GibbsKernel(const SurvivalDataset& data, const ChainConfig& cfg);

  // Resample latent i (i indexes the exact observations in dataset order).
  void update_latent(std::size_t i, LatentState& state, const FreshLocationTable& table, Rng& rng) const;
  void update_latent(std::size_t i, LatentState& state, Rng& rng) const;
  void sweep_latents(LatentState& state, Rng& rng) const;

  // c | rest ~ Gamma(shape + k, rate + int log(1 + K_X) dP0).
  void update_total_mass(LatentState& state, Rng& rng) const;

  // One random-walk Metropolis-Hastings step on log beta; returns whether it moved.
  bool update_kernel_beta(LatentState& state, double step, Rng& rng) const;

  // Log of the beta full conditional up to a constant.
  double log_beta_target(double beta, const LatentState& state) const;

  const SurvivalDataset& data() const noexcept { return data_; }
  const ConditionalMoments& moments() const noexcept { return moments_; }
  const std::vector<double>& event_times() const noexcept { return event_times_; }

 private:
  const SurvivalDataset& data_;
  ChainConfig cfg_;
  ConditionalMoments moments_;
  std::vector<double> event_times_;
};

// Initial state: Y_i = X_i / 2, c and beta drawn from their priors.
LatentState initial_state(const SurvivalDataset& data, const ChainConfig& cfg, Rng& rng);

struct ChainDiagnostics {
  std::size_t kept = 0;
  double beta_acceptance = 0.0;  // after burn-in
  double final_mh_step = 0.0;
  double clusters_mean = 0.0;
  std::size_t clusters_min = 0;
  std::size_t clusters_max = 0;
  std::vector<double> mean_trace_ess;  // one per grid point
};

struct MomentGrid {
  std::vector<double> t_grid;
  // moments[i][r - 1]: average over kept iterations of E[S(t_i)^r | X, Y].
  std::vector<std::vector<double>> moments;
  // mean_trace[i][l]: E[S(t_i) | X, Y] at kept iteration l.
  std::vector<std::vector<double>> mean_trace;
  std::vector<std::size_t> cluster_trace;
  ChainDiagnostics diagnostics;

  MomentVector row(std::size_t i) const { return MomentVector(moments.at(i)); }
};

MomentGrid run_chain(const SurvivalDataset& data, const ChainConfig& cfg);

// Geyer initial-monotone-sequence effective sample size.
double effective_sample_size(std::span<const double> trace);

}  // namespace momsurv
