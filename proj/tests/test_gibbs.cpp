#include "momsurv/errors.hpp"
#include "momsurv/gibbs.hpp"
#include "momsurv/moments.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

using namespace momsurv;

namespace {

SurvivalDataset weibull_data(std::size_t n, std::uint64_t seed, double censor_fraction = 0.0) {
  std::mt19937_64 rng(seed);
  std::weibull_distribution<double> draw(2.0, 2.0);
  std::bernoulli_distribution censored(censor_fraction);
  std::vector<double> times(n);
  std::vector<bool> events(n);
  for (std::size_t i = 0; i < n; ++i) {
    times[i] = draw(rng);
    events[i] = !censored(rng);
  }
  return SurvivalDataset(times, events);
}

ChainConfig short_chain() {
  ChainConfig cfg;
  cfg.iterations = 300;
  cfg.burn_in = 100;
  cfg.thin = 4;
  cfg.grid_size = 12;
  cfg.seed = 5;
  return cfg;
}

struct Stats {
  double mean = 0.0;
  double se = 0.0;
};

Stats summarize(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1) / n)};
}

}  // namespace

TEST_CASE("t grid spans the horizon") {
  ChainConfig cfg;
  cfg.horizon = 6.0;
  cfg.grid_size = 50;
  const auto grid = cfg.t_grid();
  REQUIRE(grid.size() == 50);
  CHECK(grid.front() == 0.0);
  CHECK(grid.back() == 6.0);
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] - grid[i - 1] == doctest::Approx(6.0 / 49));
}

TEST_CASE("chain config validation") {
  const auto data = weibull_data(10, 1);
  auto cfg = short_chain();
  CHECK_NOTHROW(cfg.validate(data));

  auto bad = cfg;
  bad.burn_in = bad.iterations;
  CHECK_THROWS_AS(bad.validate(data), ValidationError);
  bad = cfg;
  bad.grid_size = 1;
  CHECK_THROWS_AS(bad.validate(data), ValidationError);
  bad = cfg;
  bad.horizon = data.max_time();
  CHECK_THROWS_AS(bad.validate(data), ValidationError);
  bad = cfg;
  bad.n_moments = 1;
  CHECK_THROWS_AS(bad.validate(data), ValidationError);
  bad = cfg;
  bad.thin = 0;
  CHECK_THROWS_AS(bad.validate(data), ValidationError);
  bad = cfg;
  bad.prior_c.rate = 0;
  CHECK_THROWS_AS(bad.validate(data), ValidationError);
  bad = cfg;
  bad.mh_step = -1;
  CHECK_THROWS_AS(bad.validate(data), ValidationError);
  CHECK_THROWS_AS(run_chain(data, bad), ValidationError);
}

TEST_CASE("fresh location table integrates the tilted base measure") {
  const auto data = weibull_data(25, 3, 0.3);
  const Exposure exposure(data);
  const double beta = 1.4, rate = 3.0;
  const FreshLocationTable table(exposure, beta, rate);
  auto density = [&](double y) { return rate * std::exp(-rate * y) / (1.0 + exposure.total(y, beta)); };
  std::vector<double> breaks = data.times();
  std::sort(breaks.begin(), breaks.end());
  for (double x : {0.05, 0.4, 1.0, 1.9, data.max_time()}) {
    std::vector<double> inside;
    for (double b : breaks) {
      if (b < x) inside.push_back(b);
    }
    CHECK(table.mass(x) == doctest::Approx(oracle::integrate(density, 0.0, x, inside)).epsilon(1e-6));
  }
}

TEST_CASE("fresh location draws follow the truncated density") {
  const auto data = weibull_data(25, 3, 0.3);
  const Exposure exposure(data);
  const double beta = 0.6, rate = 3.0, x = 1.5;
  const FreshLocationTable table(exposure, beta, rate);
  auto density = [&](double y) { return rate * std::exp(-rate * y) / (1.0 + exposure.total(y, beta)); };
  std::vector<double> breaks;
  for (double b : data.times()) {
    if (b < x) breaks.push_back(b);
  }
  const double total = oracle::integrate(density, 0.0, x, breaks);

  Rng rng(42);
  std::vector<double> sample(4000);
  for (double& y : sample) {
    y = table.sample(x, rng);
    REQUIRE(y > 0.0);
    REQUIRE(y <= x);
  }
  auto cdf = [&](double y) {
    std::vector<double> inside;
    for (double b : breaks) {
      if (b < y) inside.push_back(b);
    }
    return oracle::integrate(density, 0.0, y, inside) / total;
  };
  const double d = oracle::ks_statistic(sample, cdf);
  CHECK(d < 1.63 / std::sqrt(static_cast<double>(sample.size())));
}

TEST_CASE("single exact observation always takes a fresh value") {
  const SurvivalDataset data({1.3}, {true});
  ChainConfig cfg = short_chain();
  const GibbsKernel kernel(data, cfg);
  LatentState state({0.65}, 1.0, 1.0);
  Rng rng(9);
  std::size_t changed = 0;
  for (int k = 0; k < 2000; ++k) {
    const double before = state.location(0);
    kernel.update_latent(0, state, rng);
    CHECK(state.cluster_count() == 1);
    CHECK(state.location(0) > 0.0);
    CHECK(state.location(0) <= 1.3);
    changed += state.location(0) != before ? 1 : 0;
  }
  CHECK(changed == 2000);
}

TEST_CASE("tied observations are exchangeable under the sweep order") {
  const SurvivalDataset data({1.0, 1.0}, {true, true});
  const ChainConfig cfg = short_chain();
  const GibbsKernel kernel(data, cfg);
  const FreshLocationTable table(kernel.moments().exposure(), 0.8, cfg.p0_rate);
  const std::size_t reps = 10000;
  Rng rng(77);
  std::size_t one_cluster_forward = 0, one_cluster_backward = 0;
  std::vector<double> first_forward, first_backward;
  for (std::size_t k = 0; k < reps; ++k) {
    LatentState a({0.5, 0.5}, 1.2, 0.8);
    kernel.update_latent(0, a, table, rng);
    kernel.update_latent(1, a, table, rng);
    one_cluster_forward += a.cluster_count() == 1 ? 1 : 0;
    first_forward.push_back(a.location(0));

    LatentState b({0.5, 0.5}, 1.2, 0.8);
    kernel.update_latent(1, b, table, rng);
    kernel.update_latent(0, b, table, rng);
    one_cluster_backward += b.cluster_count() == 1 ? 1 : 0;
    first_backward.push_back(b.location(1));
  }
  const double d = oracle::ks_statistic(first_forward, first_backward);
  CHECK(oracle::ks_pvalue(d, reps, reps) > 0.01);
  const double p1 = static_cast<double>(one_cluster_forward) / reps;
  const double p2 = static_cast<double>(one_cluster_backward) / reps;
  const double pooled = 0.5 * (p1 + p2);
  const double se = std::sqrt(2.0 * pooled * (1.0 - pooled) / reps);
  CHECK(p1 > 0.05);
  CHECK(p1 < 0.95);
  CHECK(std::abs(p1 - p2) < 3.0 * se);
}

TEST_CASE("total mass without data follows its prior") {
  const SurvivalDataset none;
  ChainConfig cfg;
  const GibbsKernel kernel(none, cfg);
  LatentState state({}, 1.0, 1.0);
  Rng rng(4);
  std::vector<double> draws(10000);
  for (double& c : draws) {
    kernel.update_total_mass(state, rng);
    c = state.c;
  }
  const auto s = summarize(draws);
  CHECK(std::abs(s.mean - 3.0) < 3.0 * s.se);
}

TEST_CASE("total mass conditional mean") {
  const SurvivalDataset data({0.5, 1.2, 2.0, 0.9}, {true, true, false, true});
  const ChainConfig cfg;
  const GibbsKernel kernel(data, cfg);
  LatentState state({0.2, 0.2, 0.6}, 1.0, 1.7);
  const double d = oracle::integrate(
      [&](double y) { return std::log1p(kernel.moments().exposure().total(y, 1.7)) * 3.0 * std::exp(-3.0 * y); }, 0.0,
      40.0, {0.5, 0.9, 1.2, 2.0});
  const double expected = (1.0 + 2.0) / (1.0 / 3.0 + d);
  Rng rng(12);
  std::vector<double> draws(10000);
  for (double& c : draws) {
    kernel.update_total_mass(state, rng);
    c = state.c;
  }
  const auto s = summarize(draws);
  CHECK(std::abs(s.mean - expected) < 3.0 * s.se);
}

TEST_CASE("zero proposal scale never moves beta") {
  const auto data = weibull_data(15, 2);
  auto cfg = short_chain();
  const GibbsKernel kernel(data, cfg);
  Rng init(1);
  LatentState state = initial_state(data, cfg, init);
  Rng rng(3);
  const double beta = state.beta;
  for (int k = 0; k < 200; ++k) CHECK_FALSE(kernel.update_kernel_beta(state, 0.0, rng));
  CHECK(state.beta == beta);

  cfg.mh_step = 0.0;
  const auto grid = run_chain(data, cfg);
  CHECK(grid.diagnostics.beta_acceptance == 0.0);
  CHECK(grid.diagnostics.final_mh_step == 0.0);
}

TEST_CASE("beta steps leave the full conditional invariant") {
  const SurvivalDataset data({0.5, 1.2, 2.0, 0.9}, {true, true, false, true});
  const ChainConfig cfg;
  const GibbsKernel kernel(data, cfg);
  LatentState state({0.2, 0.2, 0.6}, 1.5, 1.0);
  const double peak = kernel.log_beta_target(1.0, state);
  auto unnormalized = [&](double b) { return b > 0 ? std::exp(kernel.log_beta_target(b, state) - peak) : 0.0; };
  const double z = oracle::integrate(unnormalized, 0.0, 60.0);
  const double mean = oracle::integrate([&](double b) { return b * unnormalized(b); }, 0.0, 60.0) / z;

  Rng rng(21);
  std::vector<double> trace;
  for (int k = 0; k < 60000; ++k) {
    kernel.update_kernel_beta(state, 0.8, rng);
    if (k % 10 == 0) trace.push_back(state.beta);
  }
  const auto s = summarize(trace);
  const double ess = effective_sample_size(trace);
  const double se = s.se * std::sqrt(static_cast<double>(trace.size()) / ess);
  CHECK(std::abs(s.mean - mean) < 4.0 * se);
}

TEST_CASE("chain output shape and coherence") {
  const auto data = weibull_data(30, 8, 0.2);
  const auto cfg = short_chain();
  const auto grid = run_chain(data, cfg);
  const std::size_t kept = (cfg.iterations - cfg.burn_in) / cfg.thin;
  CHECK(grid.diagnostics.kept == kept);
  REQUIRE(grid.moments.size() == cfg.grid_size);
  REQUIRE(grid.mean_trace.size() == cfg.grid_size);
  CHECK(grid.cluster_trace.size() == kept);
  CHECK(grid.diagnostics.mean_trace_ess.size() == cfg.grid_size);
  for (std::size_t i = 0; i < cfg.grid_size; ++i) {
    CHECK(grid.moments[i].size() == cfg.n_moments);
    CHECK(grid.mean_trace[i].size() == kept);
    for (double v : grid.mean_trace[i]) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    const auto report = validate_moments(grid.row(i));
    CHECK_MESSAGE(report.ok(), "t=" << grid.t_grid[i] << ": " << report.describe());
  }
  // S(0) = 1 surely.
  for (double v : grid.moments.front()) CHECK(v == 1.0);
  CHECK(grid.diagnostics.clusters_min >= 1);
  CHECK(grid.diagnostics.clusters_max <= data.event_count());
}

TEST_CASE("chains are deterministic given the seed") {
  const auto data = weibull_data(20, 4);
  auto cfg = short_chain();
  const auto a = run_chain(data, cfg);
  const auto b = run_chain(data, cfg);
  CHECK(a.moments == b.moments);
  CHECK(a.mean_trace == b.mean_trace);
  CHECK(a.cluster_trace == b.cluster_trace);
  cfg.seed = 6;
  const auto c = run_chain(data, cfg);
  CHECK(a.mean_trace != c.mean_trace);
}

TEST_CASE("row order does not matter") {
  const auto data = weibull_data(20, 14, 0.25);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), std::mt19937_64(2));
  std::vector<double> times;
  std::vector<bool> events;
  for (std::size_t i : order) {
    times.push_back(data.times()[i]);
    events.push_back(data.events()[i]);
  }
  const SurvivalDataset shuffled(times, events);

  auto sorted = [](const SurvivalDataset& d) {
    std::vector<std::pair<double, bool>> rows;
    for (std::size_t i = 0; i < d.size(); ++i) rows.emplace_back(d.times()[i], d.events()[i]);
    std::sort(rows.begin(), rows.end());
    std::vector<double> t;
    std::vector<bool> e;
    for (const auto& [x, ev] : rows) {
      t.push_back(x);
      e.push_back(ev);
    }
    return SurvivalDataset(t, e);
  };
  auto cfg = short_chain();
  CHECK(run_chain(sorted(data), cfg).moments == run_chain(sorted(shuffled), cfg).moments);

  // Same posterior either way, up to Monte Carlo error.
  cfg.iterations = 1500;
  cfg.burn_in = 300;
  const auto a = run_chain(data, cfg);
  const auto b = run_chain(shuffled, cfg);
  for (std::size_t i = 0; i < cfg.grid_size; ++i) CHECK(std::abs(a.moments[i][0] - b.moments[i][0]) < 0.03);
}

TEST_CASE("beta acceptance after tuning") {
  const auto data = weibull_data(100, 31);
  ChainConfig cfg;
  cfg.iterations = 1500;
  cfg.burn_in = 750;
  cfg.grid_size = 5;
  cfg.mh_step = 3.0;
  const auto grid = run_chain(data, cfg);
  CHECK(grid.diagnostics.beta_acceptance >= 0.1);
  CHECK(grid.diagnostics.beta_acceptance <= 0.7);
}

TEST_CASE("effective sample size") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> iid(20000);
  for (double& v : iid) v = z(rng);
  CHECK(effective_sample_size(iid) == doctest::Approx(20000).epsilon(0.15));

  const double phi = 0.9;
  std::vector<double> ar(20000);
  double v = 0.0;
  for (double& a : ar) a = v = phi * v + z(rng);
  const double expected = 20000 * (1 - phi) / (1 + phi);
  CHECK(effective_sample_size(ar) == doctest::Approx(expected).epsilon(0.25));

  CHECK(effective_sample_size(std::vector<double>(50, 0.3)) == 50.0);
}
