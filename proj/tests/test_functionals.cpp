#include "momsurv/errors.hpp"
#include "momsurv/functionals.hpp"
#include "momsurv/moments.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace momsurv;

namespace {

std::vector<double> beta_draws(double a, double b, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
  std::vector<double> out(n);
  for (double& v : out) {
    const double x = ga(rng);
    v = x / (x + gb(rng));
  }
  return out;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

}  // namespace

TEST_CASE("posterior draws for a beta moment row") {
  const auto row = beta_moments(5, 2, 10);
  const auto draws = posterior_at_t(row, 10000, 3);
  CHECK_FALSE(draws.point_mass);
  REQUIRE(draws.sample.size() == 10000);
  const double d = oracle::ks_statistic(draws.sample, beta_draws(5, 2, 10000, 99));
  CHECK(oracle::ks_pvalue(d, 10000, 10000) > 0.01);
  // Beta(5, 2) has its mode at 0.8.
  CHECK(draws.mode == doctest::Approx(0.8).epsilon(0.02));
}

TEST_CASE("posterior draws preserve the mean") {
  for (auto [a, b] : {std::pair{2.0, 7.0}, {30.0, 4.0}, {0.8, 0.9}}) {
    const auto row = beta_moments(a, b, 10);
    const auto draws = posterior_at_t(row, 5000, 17);
    const double n = static_cast<double>(draws.sample.size());
    const double mean = std::accumulate(draws.sample.begin(), draws.sample.end(), 0.0) / n;
    const double sd = std::sqrt(row.variance());
    CHECK(std::abs(mean - row[1]) < 3 * sd / std::sqrt(n));
  }
}

TEST_CASE("nearly degenerate rows near 0 and 1") {
  const auto high = beta_moments(0.999e9, 0.001e9, 10);
  const auto high_draws = posterior_at_t(high, 2000, 1);
  CHECK(high_draws.point_mass);
  CHECK(std::all_of(high_draws.sample.begin(), high_draws.sample.end(), [](double s) { return s >= 0.99; }));

  const auto low = beta_moments(0.002e9, 0.998e9, 10);
  const auto low_draws = posterior_at_t(low, 2000, 1);
  CHECK(low_draws.point_mass);
  CHECK(std::all_of(low_draws.sample.begin(), low_draws.sample.end(), [](double s) { return s <= 0.01; }));

  // Concentrated but above the point-mass threshold: still goes through the reconstruction.
  const auto tight = beta_moments(1996, 4, 10);
  REQUIRE(tight.variance() > degenerate_variance);
  const auto tight_draws = posterior_at_t(tight, 2000, 1);
  CHECK_FALSE(tight_draws.point_mass);
  CHECK(std::all_of(tight_draws.sample.begin(), tight_draws.sample.end(), [](double s) { return s >= 0.99; }));
}

TEST_CASE("posterior draws reject invalid rows") {
  CHECK_THROWS_AS(posterior_at_t(MomentVector({0.5, 0.6}), 100, 1), ValidationError);
}

TEST_CASE("empirical quantiles") {
  std::vector<double> grid(100);
  for (int k = 0; k < 100; ++k) grid[k] = (k + 1) / 100.0;
  const auto iv = credible_interval(grid, 0.90);
  CHECK(iv.lo == doctest::Approx(0.055));
  CHECK(iv.hi == doctest::Approx(0.955));

  const std::vector<double> constant(40, 0.37);
  const auto flat = credible_interval(constant);
  CHECK(flat.lo == 0.37);
  CHECK(flat.hi == 0.37);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> uniform(10000);
  for (double& v : uniform) v = u(rng);
  const auto ui = credible_interval(uniform);
  CHECK(std::abs(ui.lo - 0.025) < 0.01);
  CHECK(std::abs(ui.hi - 0.975) < 0.01);

  CHECK(empirical_quantile(grid, 0.0) == 0.01);
  CHECK(empirical_quantile(grid, 1.0) == 1.0);
  CHECK(empirical_quantile(std::vector<double>{4.0}, 0.3) == 4.0);
  CHECK_THROWS_AS(empirical_quantile(std::vector<double>{}, 0.5), ValidationError);
  CHECK_THROWS_AS(credible_interval(grid, 1.0), ValidationError);
}

TEST_CASE("marginal intervals stay inside the trace range") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> z(0.4, 0.1);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> trace(37 + rep);
    for (double& v : trace) v = z(rng);
    const auto iv = marginal_interval(trace);
    const auto [lo, hi] = std::minmax_element(trace.begin(), trace.end());
    CHECK(iv.lo >= *lo);
    CHECK(iv.hi <= *hi);
    CHECK(iv.lo <= iv.hi);
  }
  const auto flat = marginal_interval(std::vector<double>(10, 0.2));
  CHECK(flat.width() == 0.0);
}

TEST_CASE("median CDF from per-t draws") {
  const std::vector<std::vector<double>> above(5, std::vector<double>(30, 0.7));
  for (double v : median_survival_cdf(above)) CHECK(v == 0.0);
  const std::vector<std::vector<double>> below(5, std::vector<double>(30, 0.2));
  for (double v : median_survival_cdf(below)) CHECK(v == 1.0);

  CHECK(isotonic_cdf({0.1, 0.3, 0.25, 0.8}) == std::vector<double>{0.1, 0.3, 0.3, 0.8});

  // Exactly 1/2 counts as below.
  const std::vector<std::vector<double>> half{{0.5, 0.6}, {0.4, 0.6}, {0.7, 0.9}};
  CHECK(median_survival_cdf(half) == std::vector<double>{0.5, 0.5, 0.5});
}

TEST_CASE("median survival estimate") {
  CHECK(median_survival_estimate(std::vector<double>(50, 1.0), 6, 50) == 0.0);
  CHECK(median_survival_estimate(std::vector<double>(50, 0.0), 6, 50) == doctest::Approx(6.0 * 50 / 49));
  for (std::size_t i0 : {1, 2, 14, 30, 50}) {
    std::vector<double> c(50, 0.0);
    for (std::size_t i = i0 - 1; i < 50; ++i) c[i] = 1.0;
    CHECK(median_survival_estimate(c, 6, 50) == doctest::Approx(6.0 / 49 * static_cast<double>(i0 - 1)));
  }
}

TEST_CASE("median estimate is stable under grid refinement") {
  auto cdf = [](double t) { return 1.0 / (1.0 + std::exp(-3.0 * (t - 2.2))); };
  const double horizon = 6.0;
  for (std::size_t q : {10, 25, 50}) {
    const auto coarse = linspace(0, horizon, q);
    const auto fine = linspace(0, horizon, 2 * (q - 1) + 1);
    std::vector<double> cc, cf;
    for (double t : coarse) cc.push_back(cdf(t));
    for (double t : fine) cf.push_back(cdf(t));
    const double a = median_survival_estimate(cc, horizon, coarse.size());
    const double b = median_survival_estimate(cf, horizon, fine.size());
    CHECK(std::abs(a - b) <= horizon / static_cast<double>(q - 1));
  }
}

TEST_CASE("median interval by interpolation") {
  const auto grid = linspace(0, 6, 50);
  const double step = 6.0 / 49;

  std::vector<double> linear;
  for (double t : grid) linear.push_back(t / 6.0);
  const auto lin = median_interval(linear, grid);
  CHECK(std::abs(lin.lo - 0.15) <= step);
  CHECK(std::abs(lin.hi - 5.85) <= step);
  CHECK_FALSE(lin.lo_open);
  CHECK_FALSE(lin.hi_open);

  std::vector<double> jump(50, 0.0);
  for (std::size_t i = 20; i < 50; ++i) jump[i] = 1.0;
  const auto j = median_interval(jump, grid);
  CHECK(j.hi - j.lo <= step);
  CHECK(j.lo >= grid[19]);
  CHECK(j.hi <= grid[20]);

  const auto none = median_interval(std::vector<double>(50, 0.0), grid);
  CHECK(none.hi_open);
  CHECK(none.hi == 6.0);

  CHECK_THROWS_AS(median_interval(linear, std::vector<double>{0, 1}), ValidationError);
}

TEST_CASE("marginal median from a trace") {
  const auto grid = linspace(0, 6, 50);
  const std::vector<std::vector<double>> above(50, std::vector<double>(20, 0.9));
  CHECK(marginal_median_cdf(above, grid, 6).m_hat == doctest::Approx(6.0 * 50 / 49));

  std::vector<std::vector<double>> truth;
  for (double t : grid) truth.push_back(std::vector<double>(15, std::exp(-t * t / 4)));
  const auto mm = marginal_median_cdf(truth, grid, 6);
  const double m0 = 2 * std::sqrt(std::log(2.0));
  CHECK(std::abs(mm.m_hat - m0) < 6.0 / 49);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(mm.cdf[i] == (grid[i] >= m0 ? 1.0 : 0.0));
}

TEST_CASE("Kaplan-Meier fixtures") {
  for (const auto& fx : fixture::kaplan_meier_cases()) {
    CAPTURE(fx.name);
    const auto km = kaplan_meier(fx.data);
    for (std::size_t k = 0; k < fx.at.size(); ++k) {
      CAPTURE(fx.at[k]);
      CHECK(km(fx.at[k]) == fx.survival[k]);
    }
  }
  CHECK_THROWS_AS(kaplan_meier(SurvivalDataset{}), ValidationError);
}

TEST_CASE("uncensored Kaplan-Meier is one minus the empirical CDF") {
  std::mt19937_64 rng(123);
  std::exponential_distribution<double> draw(1.0);
  std::uniform_int_distribution<int> size(1, 60);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = size(rng);
    std::vector<double> times(n);
    for (double& t : times) t = std::round(draw(rng) * 10) / 10 + 0.1;  // coarse values force ties
    const SurvivalDataset data(times, std::vector<bool>(n, true));
    const auto km = kaplan_meier(data);
    for (double t : times) {
      for (double probe : {t, t - 0.05}) {
        const auto at_or_below = std::count_if(times.begin(), times.end(), [&](double x) { return x <= probe; });
        CHECK(km(probe) == doctest::Approx(1.0 - static_cast<double>(at_or_below) / n).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("empirical median") {
  CHECK(empirical_median(SurvivalDataset({1, 2, 3}, {true, true, true})).value == 2.0);
  CHECK_FALSE(empirical_median(SurvivalDataset({1, 2, 3}, {true, true, true})).open);
  CHECK(empirical_median(SurvivalDataset({1, 2, 3}, {false, false, false})).open);
  CHECK(empirical_median(SurvivalDataset({1, 2, 3, 4}, {true, false, false, false})).open);
}

TEST_CASE("summary invariants") {
  // Survival moments from a family of beta rows shrinking toward 0 with t.
  const auto grid_t = linspace(0, 6, 20);
  MomentGrid grid;
  grid.t_grid = grid_t;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z(0.0, 0.02);
  for (double t : grid_t) {
    const double m = std::exp(-t * t / 4);
    std::vector<double> row;
    if (t == 0.0) {
      row.assign(10, 1.0);
    } else {
      const double conc = 80.0;
      const auto beta = beta_moments(std::max(m * conc, 1e-3), std::max((1 - m) * conc, 1e-3), 10);
      for (std::size_t r = 1; r <= 10; ++r) row.push_back(beta[r]);
    }
    grid.moments.push_back(row);
    std::vector<double> trace(50);
    for (double& v : trace) v = std::clamp(m + z(rng), 0.0, 1.0);
    grid.mean_trace.push_back(trace);
  }
  const SurvivalDataset data({0.5, 1.2, 1.9, 2.4, 3.1}, {true, true, false, true, true});
  SummaryOptions opt;
  opt.n_sim = 1000;
  const auto s = summarize(grid, data, 6.0, opt);

  REQUIRE(s.credible.size() == grid_t.size());
  for (std::size_t i = 0; i < grid_t.size(); ++i) {
    CHECK(s.credible[i].lo <= s.credible[i].hi);
    CHECK(s.credible[i].lo >= 0.0);
    CHECK(s.credible[i].hi <= 1.0);
    CHECK(s.marginal[i].lo <= s.marginal[i].hi);
    CHECK(s.c[i] >= 0.0);
    CHECK(s.c[i] <= 1.0);
    if (i > 0) CHECK(s.c[i] >= s.c[i - 1]);
  }
  CHECK(s.m_hat >= 0.0);
  CHECK(s.m_hat <= 6.0 * 20 / 19);
  CHECK(std::abs(s.m_hat - 2 * std::sqrt(std::log(2.0))) < 0.2);
  CHECK(s.mean.front() == 1.0);
  CHECK(s.km.front() == 1.0);
  CHECK(s.m_hat_e.value == 2.4);

  // Same seed, same summary.
  const auto again = summarize(grid, data, 6.0, opt);
  CHECK(again.c == s.c);
  CHECK(again.median == s.median);
}

TEST_CASE("derived seeds differ across streams") {
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t k = 0; k < 1000; ++k) seeds.push_back(derive_seed(42, k));
  std::sort(seeds.begin(), seeds.end());
  CHECK(std::adjacent_find(seeds.begin(), seeds.end()) == seeds.end());
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(7, 3) == derive_seed(7, 3));
}
