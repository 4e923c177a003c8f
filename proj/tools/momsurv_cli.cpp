#include "momsurv/errors.hpp"
#include "momsurv/io.hpp"
#include "momsurv/pipeline.hpp"
#include "momsurv/svg.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace momsurv;

namespace {

// "a:b:w" triples separated by commas, e.g. "3:5:0.5,10:3:0.5".
void parse_overlay(const std::string& text, ApproxOptions& options) {
  std::stringstream list(text);
  std::string item;
  while (std::getline(list, item, ',')) {
    double a = 0, b = 0, w = 0;
    char c1 = 0, c2 = 0;
    std::stringstream fields(item);
    if (!(fields >> a >> c1 >> b >> c2 >> w) || c1 != ':' || c2 != ':') {
      throw ValidationError("--overlay: expected a:b:weight, got `" + item + "`");
    }
    options.overlay_components.push_back({a, b});
    options.overlay_weights.push_back(w);
  }
}

std::string km_plot(const KaplanMeier& km, double horizon) {
  svg::LinePlot plot("Kaplan-Meier estimate", "t", "S(t)");
  plot.set_x_range(0.0, horizon);
  plot.set_y_range(0.0, 1.0);
  svg::Series curve{{0.0}, {1.0}, "Kaplan-Meier", "green"};
  curve.step = true;
  for (std::size_t k = 0; k < km.times.size(); ++k) {
    curve.x.push_back(km.times[k]);
    curve.y.push_back(km.survival[k]);
  }
  curve.x.push_back(horizon);
  curve.y.push_back(curve.y.back());
  plot.add(std::move(curve));
  return plot.render();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moment-based posterior inference for hazard mixture survival models"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::string out_dir = ".";
  std::string config_path;

  auto shared = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--out-dir", out_dir, "output directory");
    cmd->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  };

  auto* simulate = app.add_subcommand("simulate", "draw an uncensored Weibull dataset");
  std::size_t sim_n = 20;
  double sim_shape = 2.0, sim_scale = 2.0;
  std::string sim_output = "data.csv";
  simulate->add_option("-n,--n", sim_n, "sample size");
  simulate->add_option("--shape", sim_shape, "Weibull shape");
  simulate->add_option("--scale", sim_scale, "Weibull scale");
  simulate->add_option("-o,--output", sim_output, "file name inside --out-dir");
  shared(simulate);

  auto* fit = app.add_subcommand("fit", "run the sampler and summarize the posterior of S(t)");
  std::string fit_data;
  std::size_t iterations = 0, burn_in = 0, thin = 0, grid_size = 0, n_moments = 0, fit_n_sim = 0;
  double horizon = 0;
  bool no_plots = false;
  double truth_shape = 0, truth_scale = 0;
  fit->add_option("data", fit_data, "dataset CSV (time,event)");
  fit->add_option("--iterations", iterations, "chain length L");
  fit->add_option("--burn-in", burn_in, "discarded iterations");
  fit->add_option("--thin", thin, "keep every k-th iteration");
  fit->add_option("--horizon", horizon, "time horizon M");
  fit->add_option("--grid-size", grid_size, "number of time points q");
  fit->add_option("--n-moments", n_moments, "moments per time point N");
  fit->add_option("--n-sim", fit_n_sim, "posterior draws per time point");
  fit->add_flag("--no-plots", no_plots, "skip SVG output");
  fit->add_option("--truth-shape", truth_shape, "Weibull shape of the true curve to overlay");
  fit->add_option("--truth-scale", truth_scale, "Weibull scale of the true curve to overlay");
  shared(fit);

  auto* approx = app.add_subcommand("approx", "reconstruct a density on [0,1] from its moments");
  std::string moments_path;
  ApproxOptions approx_options;
  std::size_t approx_n_moments = 0;
  std::string out_prefix = "approx";
  std::string overlay;
  approx->add_option("moments", moments_path, "moment CSV")->required();
  approx->add_option("--n-moments", approx_n_moments, "number of moments to use (default: all)");
  approx->add_option("--n-sim", approx_options.n_sim, "sample size");
  approx->add_option("--grid-size", approx_options.grid_size, "evaluation grid size");
  approx->add_option("--out-prefix", out_prefix, "output file prefix inside --out-dir");
  approx->add_flag("--sweep", approx_options.sweep, "one reconstruction per N = 2..d");
  approx->add_option("--overlay", overlay, "reference beta mixture a:b:w[,a:b:w...]");
  shared(approx);

  auto* km = app.add_subcommand("km", "Kaplan-Meier estimate");
  std::string km_data;
  double km_horizon = 0;
  km->add_option("data", km_data, "dataset CSV (time,event)")->required();
  km->add_option("--horizon", km_horizon, "plot horizon (default: largest time)");
  shared(km);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version exit 0; malformed command lines count as validation errors.
    return app.exit(e) == 0 ? 0 : static_cast<int>(ErrorKind::validation);
  }

  try {
    if (simulate->parsed()) {
      const auto data = simulate_weibull(sim_n, sim_shape, sim_scale, seed);
      fs::create_directories(out_dir);
      io::write_text(fs::path(out_dir) / sim_output, io::dataset_csv(data));
    } else if (fit->parsed()) {
      RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
      if (fit->count("--seed")) cfg.chain.seed = cfg.posterior.seed = seed;
      if (fit->count("--out-dir") || config_path.empty()) cfg.out_dir = out_dir;
      if (fit->count("--iterations")) cfg.chain.iterations = iterations;
      if (fit->count("--burn-in")) cfg.chain.burn_in = burn_in;
      if (fit->count("--thin")) cfg.chain.thin = thin;
      if (fit->count("--horizon")) cfg.chain.horizon = horizon;
      if (fit->count("--grid-size")) cfg.chain.grid_size = grid_size;
      if (fit->count("--n-moments")) cfg.chain.n_moments = n_moments;
      if (fit->count("--n-sim")) cfg.posterior.n_sim = fit_n_sim;
      if (no_plots) cfg.plots = false;
      if (fit->count("--truth-shape") || fit->count("--truth-scale")) {
        WeibullTruth truth = cfg.truth.value_or(WeibullTruth{});
        if (fit->count("--truth-shape")) truth.shape = truth_shape;
        if (fit->count("--truth-scale")) truth.scale = truth_scale;
        cfg.truth = truth;
      }
      if (!fit_data.empty()) cfg.data_path = fit_data;
      if (!cfg.data_path) throw ValidationError("fit: no dataset given");
      cfg.validate();
      const auto data = io::load_dataset(*cfg.data_path);
      run_fit(data, cfg);
    } else if (approx->parsed()) {
      if (!config_path.empty()) throw ValidationError("approx: --config is not used by this subcommand");
      if (approx->count("--n-moments")) approx_options.n_moments = approx_n_moments;
      approx_options.seed = seed;
      approx_options.out_prefix = fs::path(out_dir) / out_prefix;
      if (!overlay.empty()) parse_overlay(overlay, approx_options);
      run_approx(io::load_moments(moments_path), approx_options);
    } else if (km->parsed()) {
      const auto data = io::load_dataset(km_data);
      const auto estimate = kaplan_meier(data);
      fs::create_directories(out_dir);
      io::write_text(fs::path(out_dir) / "km.csv", io::km_csv(estimate));
      io::write_text(fs::path(out_dir) / "km.svg", km_plot(estimate, km_horizon > 0 ? km_horizon : data.max_time()));
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::io);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
