#pragma once

#include "momsurv/functionals.hpp"
#include "momsurv/gibbs.hpp"
#include "momsurv/hazard.hpp"
#include "momsurv/moments.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace momsurv::io {

// "%.12g": every float this library writes goes through here.
std::string format_double(double value);
// value rounded to what format_double prints
double round_trip(double value);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& content);

// Single column, header `moment`, rows gamma_1..gamma_d.
MomentVector parse_moments_csv(const std::string& content);
MomentVector load_moments(const std::filesystem::path& path);
std::string moments_csv(const MomentVector& moments);

// Header `time,event`; time positive, event 0 (censored) or 1 (exact).
SurvivalDataset parse_dataset_csv(const std::string& content);
SurvivalDataset load_dataset(const std::filesystem::path& path);
std::string dataset_csv(const SurvivalDataset& data);

// Strict numeric CSV reader: header names plus rows of finite numbers.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<double> column(const std::string& name) const;
};
CsvTable parse_numeric_csv(const std::string& content);

std::string density_csv(const std::vector<double>& x, const std::vector<double>& f);
std::string sample_csv(const std::vector<double>& sample);
std::string km_csv(const KaplanMeier& km);

// Columns t, mean, median, mode, lo, hi, marginal_lo, marginal_hi, km.
std::string summary_csv(const PosteriorSummary& summary);
std::string median_json(const PosteriorSummary& summary);
std::string diagnostics_json(const MomentGrid& grid);

}  // namespace momsurv::io
