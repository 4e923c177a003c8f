#include "momsurv/io.hpp"

#include "momsurv/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace momsurv::io {

namespace {

using nlohmann::json;

std::vector<std::string> split_lines(const std::string& content) {
  std::vector<std::string> lines;
  std::string line;
  std::istringstream in(content);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

// Input files may pad fields with spaces; the strict reader may not.
bool parse_number(const std::string& text, double& value, bool allow_padding = true) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (allow_padding) {
    while (begin < end && *begin == ' ') ++begin;
    while (end > begin && *(end - 1) == ' ') --end;
  }
  if (begin == end) return false;
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  return ec == std::errc() && ptr == end && std::isfinite(value);
}

std::string line_error(std::size_t line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

json interval_json(const MedianInterval& interval) {
  return {{"lo", round_trip(interval.lo)},
          {"hi", round_trip(interval.hi)},
          {"lo_open", interval.lo_open},
          {"hi_open", interval.hi_open}};
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

double round_trip(double value) {
  return std::strtod(format_double(value).c_str(), nullptr);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

MomentVector parse_moments_csv(const std::string& content) {
  const auto lines = split_lines(content);
  if (lines.empty()) throw ValidationError("moment file is empty");
  if (lines[0] != "moment") throw ValidationError(line_error(1, "expected header `moment`"));
  std::vector<double> values;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    double v = 0.0;
    if (!parse_number(lines[k], v)) throw ValidationError(line_error(k + 1, "malformed moment `" + lines[k] + "`"));
    values.push_back(v);
  }
  return MomentVector(std::move(values));
}

MomentVector load_moments(const std::filesystem::path& path) {
  return parse_moments_csv(read_text(path));
}

std::string moments_csv(const MomentVector& moments) {
  std::string out = "moment\n";
  for (double v : moments.to_doubles()) out += format_double(v) + "\n";
  return out;
}

SurvivalDataset parse_dataset_csv(const std::string& content) {
  const auto lines = split_lines(content);
  if (lines.empty()) throw ValidationError("dataset file is empty");
  if (lines[0] != "time,event") throw ValidationError(line_error(1, "expected header `time,event`"));
  std::vector<double> times;
  std::vector<bool> events;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto fields = split_fields(lines[k]);
    double t = 0.0;
    double e = 0.0;
    if (fields.size() != 2 || !parse_number(fields[0], t) || !parse_number(fields[1], e)) {
      throw ValidationError(line_error(k + 1, "malformed row `" + lines[k] + "`"));
    }
    if (!(t > 0)) throw ValidationError(line_error(k + 1, "time must be positive"));
    if (e != 0.0 && e != 1.0) throw ValidationError(line_error(k + 1, "event must be 0 or 1"));
    times.push_back(t);
    events.push_back(e == 1.0);
  }
  if (times.empty()) throw ValidationError("dataset has no rows");
  return SurvivalDataset(std::move(times), std::move(events));
}

SurvivalDataset load_dataset(const std::filesystem::path& path) {
  return parse_dataset_csv(read_text(path));
}

std::string dataset_csv(const SurvivalDataset& data) {
  std::string out = "time,event\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    out += format_double(data.times()[i]) + (data.events()[i] ? ",1\n" : ",0\n");
  }
  return out;
}

std::vector<double> CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ValidationError("no column `" + name + "`");
  const auto k = static_cast<std::size_t>(it - header.begin());
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row[k]);
  return out;
}

CsvTable parse_numeric_csv(const std::string& content) {
  const auto lines = split_lines(content);
  if (lines.empty()) throw ValidationError("CSV is empty");
  CsvTable table;
  table.header = split_fields(lines[0]);
  for (const auto& name : table.header) {
    if (name.empty()) throw ValidationError(line_error(1, "empty column name"));
  }
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto fields = split_fields(lines[k]);
    if (fields.size() != table.header.size()) throw ValidationError(line_error(k + 1, "wrong number of fields"));
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (!parse_number(fields[j], row[j], false)) throw ValidationError(line_error(k + 1, "malformed number"));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string density_csv(const std::vector<double>& x, const std::vector<double>& f) {
  require(x.size() == f.size(), "density CSV: x and f differ in length");
  std::string out = "x,f\n";
  for (std::size_t j = 0; j < x.size(); ++j) out += format_double(x[j]) + "," + format_double(f[j]) + "\n";
  return out;
}

std::string sample_csv(const std::vector<double>& sample) {
  std::string out = "s\n";
  for (double s : sample) out += format_double(s) + "\n";
  return out;
}

std::string km_csv(const KaplanMeier& km) {
  std::string out = "time,survival\n";
  for (std::size_t k = 0; k < km.times.size(); ++k) {
    out += format_double(km.times[k]) + "," + format_double(km.survival[k]) + "\n";
  }
  return out;
}

std::string summary_csv(const PosteriorSummary& s) {
  std::string out = "t,mean,median,mode,lo,hi,marginal_lo,marginal_hi,km\n";
  for (std::size_t i = 0; i < s.t_grid.size(); ++i) {
    const double fields[] = {s.t_grid[i],     s.mean[i],        s.median[i],      s.mode[i], s.credible[i].lo,
                             s.credible[i].hi, s.marginal[i].lo, s.marginal[i].hi, s.km[i]};
    for (std::size_t k = 0; k < std::size(fields); ++k) {
      if (k > 0) out += ",";
      out += format_double(fields[k]);
    }
    out += "\n";
  }
  return out;
}

std::string median_json(const PosteriorSummary& s) {
  json c = json::array();
  for (double v : s.c) c.push_back(round_trip(v));
  json marginal_cdf = json::array();
  for (double v : s.marginal_median.cdf) marginal_cdf.push_back(round_trip(v));
  const json doc = {
      {"m_hat", round_trip(s.m_hat)},
      {"m_interval", interval_json(s.m_interval)},
      {"m_hat_m", round_trip(s.marginal_median.m_hat)},
      {"m_marginal_interval", interval_json(s.marginal_median.interval)},
      {"m_hat_e", {{"value", round_trip(s.m_hat_e.value)}, {"open", s.m_hat_e.open}}},
      {"c", c},
      {"marginal_c", marginal_cdf},
  };
  return doc.dump(2) + "\n";
}

std::string diagnostics_json(const MomentGrid& grid) {
  const auto& d = grid.diagnostics;
  json ess = json::array();
  for (std::size_t i = 0; i < d.mean_trace_ess.size(); ++i) {
    ess.push_back({{"t", round_trip(grid.t_grid[i])}, {"ess", round_trip(d.mean_trace_ess[i])}});
  }
  const json doc = {
      {"kept_iterations", d.kept},
      {"beta_acceptance_rate", round_trip(d.beta_acceptance)},
      {"final_mh_step", round_trip(d.final_mh_step)},
      {"cluster_count", {{"mean", round_trip(d.clusters_mean)}, {"min", d.clusters_min}, {"max", d.clusters_max}}},
      {"mean_trace_ess", ess},
  };
  return doc.dump(2) + "\n";
}

}  // namespace momsurv::io
