#pragma once

#include "momsurv/functionals.hpp"
#include "momsurv/gibbs.hpp"
#include "momsurv/hazard.hpp"
#include "momsurv/jacobi.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace momsurv {

// All events exact; survival exp(-(t / scale)^shape).
SurvivalDataset simulate_weibull(std::size_t n, double shape, double scale, std::uint64_t seed);

struct WeibullTruth {
  double shape = 2.0;
  double scale = 2.0;
  double survival(double t) const;
  double median() const;
};

// Configuration of a `fit` run. JSON layout:
//
//   {
//     "model":     {"prior_c": {"shape": 1, "rate": 0.3333}, "prior_beta": {...},
//                   "p0_rate": 3, "kernel": "dykstra-laud"},
//     "chain":     {"iterations": 10000, "burn_in": 5000, "thin": 5, "seed": 1,
//                   "mh_step": 0.5, "tune_step": true},
//     "grid":      {"horizon": 6, "size": 50, "moments": 10},
//     "posterior": {"n_sim": 2000, "level": 0.95},
//     "io":        {"data": "data.csv", "out_dir": "out", "plots": true,
//                   "truth": {"shape": 2, "scale": 2}}
//   }
//
// Every section and key is optional; unknown keys are rejected. Relative paths resolve
// against the configuration file's directory.
struct RunConfig {
  ChainConfig chain;
  std::string kernel = "dykstra-laud";
  SummaryOptions posterior;
  std::optional<std::filesystem::path> data_path;
  std::filesystem::path out_dir = ".";
  bool plots = true;
  std::optional<WeibullTruth> truth;

  void validate() const;
};

RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir = ".");
RunConfig load_run_config(const std::filesystem::path& path);

struct FitResult {
  MomentGrid grid;
  PosteriorSummary summary;
  std::vector<std::filesystem::path> files;
};

// run_chain -> per-t posteriors -> functionals; writes summary.csv, median.json,
// diagnostics.json and, when enabled, km.svg, intervals.svg and posterior.svg into out_dir.
// A failing stage removes whatever it had written and rethrows with the stage name.
FitResult run_fit(const SurvivalDataset& data, const RunConfig& cfg);

struct ApproxOptions {
  std::optional<std::size_t> n_moments;
  std::size_t n_sim = 1000;
  std::size_t grid_size = 200;
  std::uint64_t seed = 1;
  std::filesystem::path out_prefix = "approx";
  // Emit one reconstruction per N = 2..d, with files suffixed _N<k>.
  bool sweep = false;
  // Optional reference density drawn over the reconstruction.
  std::vector<BetaShape> overlay_components;
  std::vector<double> overlay_weights;
};

struct ApproxResult {
  std::vector<MomentifyResult> fits;
  std::vector<std::filesystem::path> files;
};

ApproxResult run_approx(const MomentVector& moments, const ApproxOptions& options);

// Density of a beta mixture; reference curve for reconstructions.
double beta_mixture_density(std::span<const BetaShape> components, std::span<const double> weights, double s);

}  // namespace momsurv
