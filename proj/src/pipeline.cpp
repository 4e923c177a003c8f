#include "momsurv/pipeline.hpp"

#include "momsurv/errors.hpp"
#include "momsurv/io.hpp"
#include "momsurv/svg.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace momsurv {

namespace {

using nlohmann::json;

void check_keys(const json& object, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!object.is_object()) throw ValidationError("config: `" + where + "` must be an object");
  const std::set<std::string> names(allowed.begin(), allowed.end());
  for (const auto& item : object.items()) {
    if (!names.count(item.key())) throw ValidationError("config: unknown key `" + where + "." + item.key() + "`");
  }
}

template <class T>
void read(const json& object, const char* key, T& target) {
  if (!object.contains(key)) return;
  try {
    target = object.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("config: wrong type for `") + key + "`");
  }
}

void read_prior(const json& model, const char* key, GammaPrior& prior) {
  if (!model.contains(key)) return;
  const auto& node = model.at(key);
  check_keys(node, std::string("model.") + key, {"shape", "rate"});
  read(node, "shape", prior.shape);
  read(node, "rate", prior.rate);
}

// Removes files registered so far unless released.
class OutputGuard {
 public:
  ~OutputGuard() {
    if (released_) return;
    for (const auto& path : files_) {
      std::error_code ec;
      if (std::filesystem::is_regular_file(path, ec)) std::filesystem::remove(path, ec);
    }
  }
  void write(const std::filesystem::path& path, const std::string& content) {
    files_.push_back(path);
    io::write_text(path, content);
  }
  std::vector<std::filesystem::path> release() {
    released_ = true;
    return files_;
  }

 private:
  std::vector<std::filesystem::path> files_;
  bool released_ = false;
};

template <class F>
auto stage(const char* name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const Error& e) {
    const std::string what = std::string("stage `") + name + "`: " + e.what();
    switch (e.kind()) {
      case ErrorKind::validation: throw ValidationError(what);
      case ErrorKind::numerical: throw NumericalError(what);
      case ErrorKind::io: throw IoError(what);
    }
    throw;
  }
}

std::string fit_km_plot(const PosteriorSummary& s, const KaplanMeier& km, const std::optional<WeibullTruth>& truth) {
  svg::LinePlot plot("Kaplan-Meier estimate", "t", "S(t)");
  plot.set_x_range(0.0, s.horizon);
  plot.set_y_range(0.0, 1.0);
  svg::Series curve{{0.0}, {1.0}, "Kaplan-Meier", "green"};
  curve.step = true;
  for (std::size_t k = 0; k < km.times.size(); ++k) {
    curve.x.push_back(km.times[k]);
    curve.y.push_back(km.survival[k]);
  }
  curve.x.push_back(s.horizon);
  curve.y.push_back(curve.y.back());
  plot.add(std::move(curve));
  if (truth) {
    svg::Series t{{}, {}, "true S0", "red"};
    for (std::size_t k = 0; k <= 200; ++k) {
      const double x = s.horizon * static_cast<double>(k) / 200.0;
      t.x.push_back(x);
      t.y.push_back(truth->survival(x));
    }
    plot.add(std::move(t));
  }
  return plot.render();
}

void add_truth(svg::LinePlot& plot, const PosteriorSummary& s, const std::optional<WeibullTruth>& truth) {
  if (!truth) return;
  svg::Series t{{}, {}, "true S0", "red"};
  for (double x : s.t_grid) {
    t.x.push_back(x);
    t.y.push_back(truth->survival(x));
  }
  plot.add(std::move(t));
}

std::string fit_interval_plot(const PosteriorSummary& s, const std::optional<WeibullTruth>& truth) {
  svg::LinePlot plot("95% credible vs marginal intervals", "t", "S(t)");
  plot.set_x_range(0.0, s.horizon);
  plot.set_y_range(0.0, 1.0);
  svg::Series lo{s.t_grid, {}, "credible", "black"}, hi{s.t_grid, {}, "", "black"};
  svg::Series mlo{s.t_grid, {}, "marginal", "blue", 1.5, true}, mhi{s.t_grid, {}, "", "blue", 1.5, true};
  for (std::size_t i = 0; i < s.t_grid.size(); ++i) {
    lo.y.push_back(s.credible[i].lo);
    hi.y.push_back(s.credible[i].hi);
    mlo.y.push_back(s.marginal[i].lo);
    mhi.y.push_back(s.marginal[i].hi);
  }
  plot.add(std::move(lo));
  plot.add(std::move(hi));
  plot.add(std::move(mlo));
  plot.add(std::move(mhi));
  add_truth(plot, s, truth);
  return plot.render();
}

std::string fit_posterior_plot(const PosteriorSummary& s, const std::optional<WeibullTruth>& truth) {
  svg::LinePlot plot("Posterior mean, credible band, median survival time", "t", "S(t)");
  plot.set_x_range(0.0, s.horizon);
  plot.set_y_range(0.0, 1.0);
  svg::Series mean{s.t_grid, s.mean, "posterior mean", "black", 2.0};
  svg::Series lo{s.t_grid, {}, "95% credible", "black", 0.8}, hi{s.t_grid, {}, "", "black", 0.8};
  for (const auto& ci : s.credible) {
    lo.y.push_back(ci.lo);
    hi.y.push_back(ci.hi);
  }
  // Median survival time density from differences of its CDF, scaled to peak at 1.
  svg::Series density{{}, {}, "median density (scaled)", "blue"};
  double peak = 0.0;
  for (std::size_t i = 1; i < s.t_grid.size(); ++i) {
    const double d = (s.c[i] - s.c[i - 1]) / (s.t_grid[i] - s.t_grid[i - 1]);
    density.x.push_back(0.5 * (s.t_grid[i] + s.t_grid[i - 1]));
    density.y.push_back(d);
    peak = std::max(peak, d);
  }
  if (peak > 0) {
    for (double& d : density.y) d /= peak;
  }
  plot.add(std::move(mean));
  plot.add(std::move(lo));
  plot.add(std::move(hi));
  plot.add(std::move(density));
  add_truth(plot, s, truth);
  if (truth) plot.add_vline(truth->median(), "true median", "red");
  return plot.render();
}

std::string approx_plot(const MomentifyResult& fit, std::size_t n_moments, const ApproxOptions& options) {
  svg::LinePlot plot("N = " + std::to_string(n_moments), "s", "density");
  plot.set_x_range(0.0, 1.0);
  plot.add(svg::Series{fit.xgrid, fit.approx_density, "approximation", "black"});
  if (!options.overlay_components.empty()) {
    svg::Series truth{fit.xgrid, {}, "true density", "red"};
    for (double x : fit.xgrid) {
      truth.y.push_back(beta_mixture_density(options.overlay_components, options.overlay_weights, x));
    }
    plot.add(std::move(truth));
  }
  return plot.render();
}

}  // namespace

SurvivalDataset simulate_weibull(std::size_t n, double shape, double scale, std::uint64_t seed) {
  require(n >= 1, "simulate: n must be at least 1");
  require(shape > 0 && scale > 0, "simulate: Weibull shape and scale must be positive");
  Rng rng(seed);
  std::weibull_distribution<double> draw(shape, scale);
  std::vector<double> times(n);
  for (double& t : times) {
    // Rounded to the printed precision so a written dataset reloads unchanged.
    do {
      t = io::round_trip(draw(rng));
    } while (!(t > 0));
  }
  return SurvivalDataset(std::move(times), std::vector<bool>(n, true));
}

double WeibullTruth::survival(double t) const {
  return t <= 0 ? 1.0 : std::exp(-std::pow(t / scale, shape));
}

double WeibullTruth::median() const {
  return scale * std::pow(std::log(2.0), 1.0 / shape);
}

void RunConfig::validate() const {
  require(kernel == "dykstra-laud", "config: only the dykstra-laud kernel is available");
  require(chain.horizon > 0, "config: horizon M must be positive");
  require(chain.grid_size >= 2, "config: grid size q must be at least 2");
  require(chain.n_moments >= 2 && chain.n_moments <= 30, "config: N must lie in [2, 30]");
  require(posterior.n_sim >= 1, "config: n_sim must be positive");
  require(posterior.level > 0 && posterior.level < 1, "config: level must lie in (0,1)");
  if (data_path) require(std::filesystem::exists(*data_path), "config: data file " + data_path->string() + " not found");
  if (truth) require(truth->shape > 0 && truth->scale > 0, "config: truth shape and scale must be positive");
}

RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: invalid JSON: ") + e.what());
  }
  check_keys(doc, "", {"model", "chain", "grid", "posterior", "io"});
  RunConfig cfg;
  if (doc.contains("model")) {
    const auto& m = doc.at("model");
    check_keys(m, "model", {"prior_c", "prior_beta", "p0_rate", "kernel"});
    read_prior(m, "prior_c", cfg.chain.prior_c);
    read_prior(m, "prior_beta", cfg.chain.prior_beta);
    read(m, "p0_rate", cfg.chain.p0_rate);
    read(m, "kernel", cfg.kernel);
  }
  if (doc.contains("chain")) {
    const auto& c = doc.at("chain");
    check_keys(c, "chain", {"iterations", "burn_in", "thin", "seed", "mh_step", "tune_step"});
    read(c, "iterations", cfg.chain.iterations);
    read(c, "burn_in", cfg.chain.burn_in);
    read(c, "thin", cfg.chain.thin);
    read(c, "seed", cfg.chain.seed);
    read(c, "mh_step", cfg.chain.mh_step);
    read(c, "tune_step", cfg.chain.tune_step);
  }
  if (doc.contains("grid")) {
    const auto& g = doc.at("grid");
    check_keys(g, "grid", {"horizon", "size", "moments"});
    read(g, "horizon", cfg.chain.horizon);
    read(g, "size", cfg.chain.grid_size);
    read(g, "moments", cfg.chain.n_moments);
  }
  if (doc.contains("posterior")) {
    const auto& p = doc.at("posterior");
    check_keys(p, "posterior", {"n_sim", "level"});
    read(p, "n_sim", cfg.posterior.n_sim);
    read(p, "level", cfg.posterior.level);
  }
  if (doc.contains("io")) {
    const auto& o = doc.at("io");
    check_keys(o, "io", {"data", "out_dir", "plots", "truth"});
    if (o.contains("data")) {
      std::string path;
      read(o, "data", path);
      cfg.data_path = base_dir / path;
    }
    if (o.contains("out_dir")) {
      std::string path;
      read(o, "out_dir", path);
      cfg.out_dir = base_dir / path;
    }
    read(o, "plots", cfg.plots);
    if (o.contains("truth")) {
      const auto& t = o.at("truth");
      check_keys(t, "io.truth", {"shape", "scale"});
      WeibullTruth truth;
      read(t, "shape", truth.shape);
      read(t, "scale", truth.scale);
      cfg.truth = truth;
    }
  }
  cfg.posterior.seed = cfg.chain.seed;
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(io::read_text(path), path.parent_path().empty() ? "." : path.parent_path());
}

FitResult run_fit(const SurvivalDataset& data, const RunConfig& cfg) {
  stage("config", [&] { cfg.validate(); });
  FitResult out;
  out.grid = stage("chain", [&] { return run_chain(data, cfg.chain); });
  out.summary = stage("posterior", [&] { return summarize(out.grid, data, cfg.chain.horizon, cfg.posterior); });

  OutputGuard guard;
  stage("write", [&] {
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + cfg.out_dir.string());
    guard.write(cfg.out_dir / "summary.csv", io::summary_csv(out.summary));
    guard.write(cfg.out_dir / "median.json", io::median_json(out.summary));
    guard.write(cfg.out_dir / "diagnostics.json", io::diagnostics_json(out.grid));
    if (cfg.plots) {
      guard.write(cfg.out_dir / "km.svg", fit_km_plot(out.summary, kaplan_meier(data), cfg.truth));
      guard.write(cfg.out_dir / "intervals.svg", fit_interval_plot(out.summary, cfg.truth));
      guard.write(cfg.out_dir / "posterior.svg", fit_posterior_plot(out.summary, cfg.truth));
    }
  });
  out.files = guard.release();
  return out;
}

ApproxResult run_approx(const MomentVector& moments, const ApproxOptions& options) {
  if (moments.size() < 2) {
    throw ValidationError("insufficient moments: approx needs at least 2, got " + std::to_string(moments.size()));
  }
  require(options.grid_size >= 2, "approx: grid size must be at least 2");
  std::vector<std::size_t> levels;
  if (options.sweep) {
    for (std::size_t n = 2; n <= moments.size(); ++n) levels.push_back(n);
  } else {
    levels.push_back(options.n_moments.value_or(moments.size()));
  }

  ApproxResult out;
  OutputGuard guard;
  const auto parent = options.out_prefix.parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
    if (ec) throw IoError("cannot create output directory " + parent.string());
  }
  for (std::size_t n : levels) {
    MomentifyOptions mo;
    mo.n_moments = n;
    mo.n_sim = options.n_sim;
    mo.xgrid = default_xgrid(options.grid_size);
    mo.seed = options.seed;
    auto fit = momentify(moments, mo);
    std::string prefix = options.out_prefix.string();
    if (options.sweep) prefix += "_N" + std::to_string(n);
    guard.write(prefix + "_density.csv", io::density_csv(fit.xgrid, fit.approx_density));
    guard.write(prefix + "_sample.csv", io::sample_csv(fit.psample));
    guard.write(prefix + "_density.svg", approx_plot(fit, n, options));
    out.fits.push_back(std::move(fit));
  }
  out.files = guard.release();
  return out;
}

double beta_mixture_density(std::span<const BetaShape> components, std::span<const double> weights, double s) {
  require(components.size() == weights.size(), "beta mixture: one weight per component");
  if (s < 0 || s > 1) return 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < components.size(); ++k) {
    const double a = components[k].a;
    const double b = components[k].b;
    const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    if ((s == 0.0 && a != 1.0) || (s == 1.0 && b != 1.0)) {
      const bool infinite = (s == 0.0 && a < 1.0) || (s == 1.0 && b < 1.0);
      total += infinite ? weights[k] * HUGE_VAL : 0.0;
      continue;
    }
    const double log_value = (a == 1.0 ? 0.0 : (a - 1.0) * std::log(s)) +
                             (b == 1.0 ? 0.0 : (b - 1.0) * std::log1p(-s)) - log_beta;
    total += weights[k] * std::exp(log_value);
  }
  return total;
}

}  // namespace momsurv
