#pragma once

// CSV/JSON serialization of experiment results and configs.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "solit/error.hpp"
#include "solit/harness.hpp"

namespace solit {

inline constexpr const char* kResultsHeader = "sigma,selector,mse,stderr,m_star,R_mstar,C1,C2,poa";

namespace detail {

inline std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

inline std::ofstream open_for_writing(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  return out;
}

inline void check_written(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError(path.string(), "write failed");
}

}  // namespace detail

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json selectors = nlohmann::json::array();
  for (auto s : c.selectors) selectors.push_back(std::string(selector_name(s)));
  return {
      {"problem", c.problem},
      {"n", c.problem_parameters.n},
      {"radius", c.problem_parameters.radius},
      {"time", c.problem_parameters.time},
      {"filter", c.filter},
      {"theta", c.theta},
      {"beta", c.beta},
      {"gamma", c.gamma},
      {"lepskii_kappa", c.lepskii_kappa},
      {"selectors", selectors},
      {"sigma_start", c.sigma_start},
      {"sigma_stop", c.sigma_stop},
      {"sigma_count", c.sigma_count},
      {"runs", c.runs},
      {"seed", c.seed},
      {"out", c.output},
      {"noise_free", c.noise_free},
  };
}

/// Overwrites the fields present in `j`; unknown keys are rejected so typos
/// do not pass silently. Keys may use '-' or '_'.
inline void apply_config_json(ExperimentConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigurationError("config must be a JSON object");
  try {
    for (const auto& [raw_key, value] : j.items()) {
      std::string key = raw_key;
      for (auto& ch : key) {
        if (ch == '-') ch = '_';
      }
      if (key == "problem") c.problem = value.get<std::string>();
      else if (key == "n") c.problem_parameters.n = value.get<std::size_t>();
      else if (key == "radius") c.problem_parameters.radius = value.get<double>();
      else if (key == "time") c.problem_parameters.time = value.get<double>();
      else if (key == "filter") c.filter = value.get<std::string>();
      else if (key == "theta") c.theta = value.get<double>();
      else if (key == "beta") c.beta = value.get<double>();
      else if (key == "gamma") c.gamma = value.get<double>();
      else if (key == "lepskii_kappa") c.lepskii_kappa = value.get<double>();
      else if (key == "selectors") {
        c.selectors.clear();
        if (value.is_string()) {
          std::stringstream list(value.get<std::string>());
          std::string item;
          while (std::getline(list, item, ',')) {
            if (!item.empty()) c.selectors.push_back(selector_from_name(item));
          }
        } else {
          for (const auto& s : value) c.selectors.push_back(selector_from_name(s.get<std::string>()));
        }
      }
      else if (key == "sigma_start") c.sigma_start = value.get<double>();
      else if (key == "sigma_stop") c.sigma_stop = value.get<double>();
      else if (key == "sigma_count") c.sigma_count = value.get<std::size_t>();
      else if (key == "runs") c.runs = value.get<std::size_t>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "out") c.output = value.get<std::string>();
      else if (key == "noise_free") c.noise_free = value.get<bool>();
      else throw ConfigurationError("unknown config key '" + raw_key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(std::string("bad config value: ") + e.what());
  }
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path.string(), e.what());
  }
}

/// results.csv, grid_<i>.csv per noise level, selections.csv and meta.json.
inline void write_results(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(dir.string(), ec.message());
  using detail::format_double;

  const auto csv_path = dir / "results.csv";
  auto csv = detail::open_for_writing(csv_path);
  csv << kResultsHeader << '\n';
  for (const auto& cell : result.cells) {
    for (const auto& r : cell.selectors) {
      csv << format_double(cell.sigma) << ',' << selector_name(r.selector) << ','
          << format_double(r.mse) << ',' << format_double(r.stderr_) << ',' << cell.m_star << ','
          << format_double(cell.risk_m_star) << ',' << format_double(cell.c1) << ','
          << format_double(cell.c2) << ',' << format_double(cell.price_of_adaptation) << '\n';
    }
  }
  detail::check_written(csv, csv_path);

  const auto sel_path = dir / "selections.csv";
  auto sel = detail::open_for_writing(sel_path);
  sel << "sigma,selector,m,count\n";
  for (const auto& cell : result.cells) {
    for (const auto& r : cell.selectors) {
      for (std::size_t m = 0; m < r.histogram.size(); ++m) {
        if (r.histogram[m] == 0) continue;
        sel << format_double(cell.sigma) << ',' << selector_name(r.selector) << ',' << m << ','
            << r.histogram[m] << '\n';
      }
    }
  }
  detail::check_written(sel, sel_path);

  nlohmann::json cells = nlohmann::json::array();
  for (std::size_t i = 0; i < result.cells.size(); ++i) {
    const auto& cell = result.cells[i];
    char name[32];
    std::snprintf(name, sizeof name, "grid_%03zu.csv", i);
    const auto grid_path = dir / name;
    auto grid = detail::open_for_writing(grid_path);
    write_grid_csv(grid, cell.grid);
    detail::check_written(grid, grid_path);
    cells.push_back({{"sigma", cell.sigma},
                     {"grid_file", name},
                     {"m_max", cell.grid.m_max()},
                     {"theta1", cell.grid.theta1},
                     {"theta2", cell.grid.theta2},
                     {"theta2_enlarged", cell.grid.theta2_enlarged},
                     {"truncation_ok", cell.grid.truncation_ok},
                     {"m_star", cell.m_star},
                     {"m_double_star", cell.m_double_star},
                     {"R_mstar_stderr", cell.risk_m_star_stderr},
                     {"exact_risk_mstar", cell.exact_risk_m_star}});
  }

  const auto meta_path = dir / "meta.json";
  auto meta = detail::open_for_writing(meta_path);
  nlohmann::json m = {{"config", config_to_json(result.config)},
                      {"problem_label", result.problem_label},
                      {"cells", cells}};
  meta << m.dump(2) << '\n';
  detail::check_written(meta, meta_path);
}

/// One parsed row of results.csv.
struct ResultRow {
  double sigma = 0.0;
  std::string selector;
  double mse = 0.0;
  double stderr_ = 0.0;
  std::size_t m_star = 0;
  double risk_m_star = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double poa = 0.0;
};

inline std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader) {
    throw IoError(path.string(), "unexpected header");
  }
  std::vector<ResultRow> rows;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 9) {
      throw IoError(path.string(), "line " + std::to_string(line_number) + ": expected 9 fields");
    }
    try {
      ResultRow r;
      r.sigma = std::stod(fields[0]);
      r.selector = fields[1];
      r.mse = std::stod(fields[2]);
      r.stderr_ = std::stod(fields[3]);
      r.m_star = std::stoul(fields[4]);
      r.risk_m_star = std::stod(fields[5]);
      r.c1 = std::stod(fields[6]);
      r.c2 = std::stod(fields[7]);
      r.poa = std::stod(fields[8]);
      rows.push_back(r);
    } catch (const std::exception&) {
      throw IoError(path.string(), "line " + std::to_string(line_number) + ": malformed number");
    }
  }
  return rows;
}

/// Noise levels and MSE of one selector, in file order.
inline std::pair<std::vector<double>, std::vector<double>> rows_for_selector(
    const std::vector<ResultRow>& rows, std::string_view selector) {
  std::pair<std::vector<double>, std::vector<double>> out;
  for (const auto& r : rows) {
    if (r.selector != selector) continue;
    out.first.push_back(r.sigma);
    out.second.push_back(r.mse);
  }
  return out;
}

}  // namespace solit
