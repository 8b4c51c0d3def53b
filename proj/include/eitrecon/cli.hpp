#pragma once

// Command-line workflow: validate, simulate, reconstruct, msweep.
// Each command returns the process exit code; errors propagate as exceptions
// and are mapped to exit codes by exit_code_for().

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "eitrecon/config.hpp"
#include "eitrecon/errors.hpp"
#include "eitrecon/geometry.hpp"
#include "eitrecon/nd_map.hpp"
#include "eitrecon/reconstruction.hpp"

namespace eitrecon {

enum ExitCode : int { kSuccess = 0, kInvalidInput = 1, kInconsistentData = 2, kNumericFailure = 3 };

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NumericError*>(&e)) return kNumericFailure;
  if (dynamic_cast<const Error*>(&e)) return kInvalidInput;
  return kNumericFailure;
}

/// Mesh and partition described by the config (order applied when given).
inline std::pair<Mesh, Partition> build_domain(const RunConfig& cfg) {
  std::pair<Mesh, Partition> domain = [&] {
    if (!cfg.mesh_file.empty()) {
      std::ifstream in(cfg.mesh_file);
      if (!in) throw ConfigError("cannot open mesh file '" + cfg.mesh_file + "'");
      return read_mesh(in);
    }
    return build_structured_mesh(cfg.grid, cfg.h, cfg.gamma_sides());
  }();
  if (!cfg.order.empty()) {
    if (static_cast<int>(cfg.order.size()) != domain.second.pixel_count())
      throw ConfigError("order must list every pixel exactly once (use roi for partial sweeps)");
    domain.second = domain.second.with_order(cfg.order);
  }
  return domain;
}

/// Sweep ordering: ROI path when an ROI is configured, the partition order otherwise.
inline std::vector<int> sweep_ordering(const RunConfig& cfg, const Mesh& mesh, const Partition& partition) {
  if (!cfg.roi.empty()) return roi_order(partition, mesh, cfg.roi);
  return {partition.order().begin(), partition.order().end()};
}

inline std::vector<double> phantom_values(const RunConfig& cfg, int pixels) {
  if (cfg.phantom.empty()) throw ConfigError("phantom values are required");
  if (cfg.phantom.size() == 1) return std::vector<double>(pixels, cfg.phantom.front());
  if (static_cast<int>(cfg.phantom.size()) != pixels)
    throw ConfigError("phantom has " + std::to_string(cfg.phantom.size()) + " values for " + std::to_string(pixels) +
                      " pixels");
  return cfg.phantom;
}

inline NDMatrix load_ndmatrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file '" + path + "'");
  return read_ndmatrix(in);
}

// ReconResult text format:
//   # key = value          header / config echo
//   p <index> <value> <t_lo> <t_hi> <lambda_min> <status>

inline void write_recon_result(std::ostream& out, const ReconResult& r, const RunConfig* cfg = nullptr) {
  out << "# eitrecon reconstruction\n";
  out << "# variant = " << to_string(r.variant) << '\n';
  out << "# order = " << r.order << '\n';
  out << "# pixels = " << r.pixel_count << '\n';
  out << "# status = " << to_string(r.status) << '\n';
  if (cfg)
    for (const auto& [k, v] : cfg->entries()) out << "# config " << k << " = " << v << '\n';
  for (const PixelResult& p : r.steps)
    out << "p " << p.pixel << ' ' << format_double(p.value) << ' ' << format_double(p.t_lo) << ' '
        << format_double(p.t_hi) << ' ' << format_double(p.lambda_min) << ' ' << to_string(p.status) << '\n';
}

inline ReconResult read_recon_result(std::istream& in) {
  ReconResult r;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line[0] == '#') {
      std::string hash, key, eq, value;
      ls >> hash >> key >> eq >> value;
      if (eq != "=") continue;
      if (key == "variant") r.variant = parse_variant(value);
      if (key == "order") r.order = std::stoi(value);
      if (key == "pixels") r.pixel_count = std::stoi(value);
      if (key == "status") r.status = parse_status(value);
      continue;
    }
    std::string tag, status;
    PixelResult p;
    if (!(ls >> tag >> p.pixel >> p.value >> p.t_lo >> p.t_hi >> p.lambda_min >> status) || tag != "p")
      throw DataError("recon result: bad line '" + line + "'");
    p.status = parse_status(status);
    r.steps.push_back(p);
  }
  return r;
}

/// Grayscale raster, one cell per pixel, values mapped linearly over [min, max].
inline void write_pgm(std::ostream& out, const ReconResult& r, const Partition& partition) {
  const GridLayout grid = partition.grid().value_or(GridLayout{1, partition.pixel_count()});
  std::vector<double> values;
  for (const PixelResult& p : r.steps)
    if (p.status == PixelStatus::Converged) values.push_back(p.value);
  const double lo = values.empty() ? 0.0 : *std::min_element(values.begin(), values.end());
  const double hi = values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
  out << "P2\n" << grid.cols << ' ' << grid.rows << "\n255\n";
  for (int row = grid.rows - 1; row >= 0; --row) {
    for (int col = 0; col < grid.cols; ++col) {
      int level = 0;
      if (const auto v = r.value(grid.pixel(row, col)))
        level = hi > lo ? static_cast<int>(std::lround(255.0 * (*v - lo) / (hi - lo))) : 128;
      out << (col ? " " : "") << level;
    }
    out << '\n';
  }
}

inline void write_csv(std::ostream& out, const ReconResult& r, const Partition& partition) {
  const GridLayout grid = partition.grid().value_or(GridLayout{1, partition.pixel_count()});
  out << "pixel,row,col,value\n";
  for (const PixelResult& p : r.steps)
    if (p.status == PixelStatus::Converged)
      out << p.pixel << ',' << grid.row_of(p.pixel) << ',' << grid.col_of(p.pixel) << ',' << format_double(p.value)
          << '\n';
}

template <typename Writer>
void write_file(const std::string& path, Writer&& writer) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  writer(out);
  if (!out) throw ConfigError("write to '" + path + "' failed");
}

inline int cmd_validate(const RunConfig& cfg, std::ostream& out) {
  const auto [mesh, partition] = build_domain(cfg);
  const std::vector<int> ordering = sweep_ordering(cfg, mesh, partition);
  const ValidityReport report = validate_ordering(partition, mesh, ordering);
  out << "ordering:";
  for (int p : ordering) out << ' ' << p;
  out << '\n' << report.to_string();
  return report.valid ? kSuccess : kInvalidInput;
}

/// Forward-simulates the phantom on a refined mesh and writes the ND matrix file.
inline NDMatrix simulate(const RunConfig& cfg) {
  auto [mesh, partition] = build_domain(cfg);
  const std::vector<double> values = phantom_values(cfg, partition.pixel_count());
  for (int r = 0; r < cfg.data_refinement; ++r) {
    auto refined = refine_mesh(mesh, partition);
    mesh = std::move(refined.first);
    partition = std::move(refined.second);
  }
  const BoundaryBasis basis = build_basis(mesh, cfg.M);
  const LinearSystem system = assemble_system(mesh, partition, finite_field(values));
  return add_noise(assemble_nd(system, basis, cfg.M), cfg.noise, cfg.seed);
}

inline int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  const NDMatrix nd = simulate(cfg);
  write_file(cfg.data, [&](std::ostream& os) { write_ndmatrix(os, nd); });
  out << "wrote " << cfg.data << " (M=" << nd.order() << ", noise=" << cfg.noise << ")\n";
  return kSuccess;
}

inline int cmd_reconstruct(const RunConfig& cfg, std::ostream& out) {
  const auto [mesh, partition] = build_domain(cfg);
  const NDMatrix measured = load_ndmatrix(cfg.data);
  if (measured.order() != cfg.M)
    throw DataError("data file has M=" + std::to_string(measured.order()) + " but config has M=" + std::to_string(cfg.M));
  const ReconProblem problem(mesh, partition, measured, cfg.recon_settings(), sweep_ordering(cfg, mesh, partition));
  const ReconResult result = reconstruct(problem);

  write_file(cfg.output, [&](std::ostream& os) { write_recon_result(os, result, &cfg); });
  if (!cfg.raster.empty()) write_file(cfg.raster, [&](std::ostream& os) { write_pgm(os, result, partition); });
  if (!cfg.csv.empty()) write_file(cfg.csv, [&](std::ostream& os) { write_csv(os, result, partition); });

  for (const PixelResult& p : result.steps)
    out << "pixel " << p.pixel << ": " << format_double(p.value) << " [" << to_string(p.status)
        << ", lambda_min " << p.lambda_min << "]\n";
  if (result.status != PixelStatus::Converged) {
    out << "sweep stopped at pixel " << result.steps.back().pixel << ": " << to_string(result.status) << '\n';
    return kInconsistentData;
  }
  return kSuccess;
}

inline int cmd_msweep(const RunConfig& cfg, std::ostream& out) {
  const auto [mesh, partition] = build_domain(cfg);
  const NDMatrix measured = load_ndmatrix(cfg.data);
  if (measured.order() != cfg.M)
    throw DataError("data file has M=" + std::to_string(measured.order()) + " but config has M=" + std::to_string(cfg.M));
  if (cfg.t_list.empty()) throw ConfigError("msweep needs t_list");
  const ReconProblem problem(mesh, partition, measured, cfg.recon_settings(), sweep_ordering(cfg, mesh, partition));
  if (cfg.step > problem.steps()) throw ConfigError("step exceeds the sweep length");

  // Values on Q_{m-1}: explicit, from the phantom, or reconstructed.
  std::vector<double> known;
  if (!cfg.known.empty()) {
    known = cfg.known;
  } else if (!cfg.phantom.empty()) {
    const std::vector<double> values = phantom_values(cfg, partition.pixel_count());
    for (int k = 0; k + 1 < cfg.step; ++k) known.push_back(values[problem.ordering()[k]]);
  } else {
    for (int m = 1; m < cfg.step; ++m) {
      const PixelResult r = pixel_bisect(problem, m, known, known.empty() ? std::nullopt : std::optional(known.back()));
      if (r.status != PixelStatus::Converged) return kInconsistentData;
      known.push_back(r.value);
    }
  }

  std::vector<int> orders = cfg.M_list;
  if (orders.empty()) {
    orders.resize(cfg.M);
    std::iota(orders.begin(), orders.end(), 1);
  }
  std::ostringstream csv;
  csv << "t,M,lambda_min,holds\n";
  for (double t : cfg.t_list)
    for (const SweepRow& row : m_sweep(problem, cfg.step, t, known, orders))
      csv << format_double(t) << ',' << row.order << ',' << format_double(row.lambda_min) << ',' << (row.holds ? 1 : 0)
          << '\n';
  if (cfg.msweep_output.empty())
    out << csv.str();
  else
    write_file(cfg.msweep_output, [&](std::ostream& os) { os << csv.str(); });
  return kSuccess;
}

}  // namespace eitrecon
