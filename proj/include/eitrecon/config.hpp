#pragma once

// Flat `key = value` run configuration. '#' starts a comment, lists are
// comma-separated, numbers may be written as fractions ("1/64").

#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "eitrecon/errors.hpp"
#include "eitrecon/geometry.hpp"
#include "eitrecon/reconstruction.hpp"

namespace eitrecon {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_number(const std::string& key, const std::string& text) {
  auto to_double = [&](const std::string& t) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(t, &used);
    } catch (const std::exception&) {
      throw ConfigError(key + ": '" + text + "' is not a number");
    }
    if (used != t.size()) throw ConfigError(key + ": '" + text + "' is not a number");
    return v;
  };
  const auto slash = text.find('/');
  if (slash == std::string::npos) return to_double(trim(text));
  const double den = to_double(trim(text.substr(slash + 1)));
  if (den == 0.0) throw ConfigError(key + ": division by zero");
  return to_double(trim(text.substr(0, slash))) / den;
}

inline long parse_integer(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(text, &used);
  } catch (const std::exception&) {
    throw ConfigError(key + ": '" + text + "' is not an integer");
  }
  if (used != text.size()) throw ConfigError(key + ": '" + text + "' is not an integer");
  return v;
}

}  // namespace detail

struct RunConfig {
  // Domain: structured grid, or a mesh file when mesh_file is set.
  GridLayout grid{1, 1};
  double h = 1.0 / 16.0;
  std::vector<std::string> gamma{"bottom"};
  std::string mesh_file;
  std::vector<int> order;  // explicit sweep order, empty = partition default

  std::vector<double> phantom;  // one value (broadcast) or one per pixel
  std::string data = "data.ndm";
  int M = 8;
  TestVariant variant = TestVariant::Upper;
  std::optional<double> tol_loewner;
  double tol_bisect = 1e-4;
  double bracket_min = 1e-6;
  double bracket_max = 1e6;
  double noise = 0.0;
  std::uint64_t seed = 0;
  int data_refinement = 1;
  std::vector<int> roi;

  std::string output = "recon.txt";
  std::string raster;  // PGM, optional
  std::string csv;     // optional

  // msweep
  int step = 1;
  std::vector<double> t_list;
  std::vector<int> M_list;  // empty = 1..M
  std::vector<double> known;
  std::string msweep_output;

  /// Applies one `key = value` assignment.
  void set(const std::string& raw_key, const std::string& raw_value) {
    const std::string key = detail::trim(raw_key);
    const std::string value = detail::trim(raw_value);
    auto number = [&] { return detail::parse_number(key, value); };
    auto integer = [&] { return detail::parse_integer(key, value); };
    auto numbers = [&] {
      std::vector<double> out;
      for (const auto& item : detail::split(value, ',')) out.push_back(detail::parse_number(key, item));
      return out;
    };
    auto integers = [&] {
      std::vector<int> out;
      for (const auto& item : detail::split(value, ',')) out.push_back(static_cast<int>(detail::parse_integer(key, item)));
      return out;
    };

    if (key == "grid") {
      const auto x = value.find('x');
      if (x == std::string::npos) throw ConfigError("grid: expected <rows>x<cols>");
      grid.rows = static_cast<int>(detail::parse_integer(key, detail::trim(value.substr(0, x))));
      grid.cols = static_cast<int>(detail::parse_integer(key, detail::trim(value.substr(x + 1))));
      if (grid.rows < 1 || grid.cols < 1) throw ConfigError("grid: rows and cols must be positive");
    } else if (key == "h") {
      h = number();
    } else if (key == "gamma") {
      gamma = detail::split(value, ',');
      if (gamma.empty()) throw ConfigError("gamma: at least one side is required");
      for (const auto& side : gamma) parse_side(side);
    } else if (key == "mesh_file") {
      mesh_file = value;
    } else if (key == "order") {
      order = integers();
    } else if (key == "phantom") {
      phantom = numbers();
      for (double v : phantom)
        if (!(v > 0.0)) throw ConfigError("phantom values must be strictly positive");
    } else if (key == "data") {
      data = value;
    } else if (key == "M") {
      M = static_cast<int>(integer());
      if (M < 1) throw ConfigError("M must be at least 1");
    } else if (key == "variant") {
      variant = parse_variant(value);
    } else if (key == "tol_loewner") {
      tol_loewner = number();
      if (!(*tol_loewner > 0.0)) throw ConfigError("tol_loewner must be positive");
    } else if (key == "tol_bisect") {
      tol_bisect = number();
      if (!(tol_bisect > 0.0)) throw ConfigError("tol_bisect must be positive");
    } else if (key == "bracket_min") {
      bracket_min = number();
    } else if (key == "bracket_max") {
      bracket_max = number();
    } else if (key == "noise") {
      noise = number();
      if (!(noise >= 0.0)) throw ConfigError("noise must be nonnegative");
    } else if (key == "seed") {
      const long s = integer();
      if (s < 0) throw ConfigError("seed must be nonnegative");
      seed = static_cast<std::uint64_t>(s);
    } else if (key == "data_refinement") {
      data_refinement = static_cast<int>(integer());
      if (data_refinement < 0) throw ConfigError("data_refinement must be nonnegative");
    } else if (key == "roi") {
      roi = integers();
    } else if (key == "output") {
      output = value;
    } else if (key == "raster") {
      raster = value;
    } else if (key == "csv") {
      csv = value;
    } else if (key == "step") {
      step = static_cast<int>(integer());
      if (step < 1) throw ConfigError("step must be at least 1");
    } else if (key == "t_list") {
      t_list = numbers();
    } else if (key == "M_list") {
      M_list = integers();
    } else if (key == "known") {
      known = numbers();
    } else if (key == "msweep_output") {
      msweep_output = value;
    } else {
      throw ConfigError("unknown configuration key '" + key + "'");
    }
    entries_[key] = value;
  }

  /// Applies "key=value".
  void apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
    set(assignment.substr(0, eq), assignment.substr(eq + 1));
  }

  SideSet gamma_sides() const {
    SideSet sides;
    for (const auto& s : gamma) sides.insert(parse_side(s));
    return sides;
  }

  ReconSettings recon_settings() const {
    ReconSettings s;
    s.variant = variant;
    s.tol_loewner = tol_loewner;
    s.tol_bisect = tol_bisect;
    s.t_min = bracket_min;
    s.t_max = bracket_max;
    return s;
  }

  /// Explicitly set keys in sorted order, for echoing into output headers.
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

inline RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (detail::trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    cfg.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

}  // namespace eitrecon
