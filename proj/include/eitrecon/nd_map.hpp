#pragma once

// Galerkin matrices of the Neumann-to-Dirichlet map in the cosine basis,
// synthetic noise, and the plain-text matrix interchange format.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "eitrecon/boundary_basis.hpp"
#include "eitrecon/errors.hpp"
#include "eitrecon/forward_solver.hpp"

namespace eitrecon {

/// Symmetric M x M matrix A_ij = <Lambda g_j, g_i>.
struct NDMatrix {
  Eigen::MatrixXd entries;
  double noise_level = 0.0;
  std::uint64_t seed = 0;
  std::string description;

  int order() const { return static_cast<int>(entries.rows()); }

  /// Leading M x M block: the compression onto span{g_1..g_M}.
  NDMatrix truncated(int m) const {
    if (m < 1 || m > order()) throw DataError("cannot truncate order " + std::to_string(order()) + " to " + std::to_string(m));
    NDMatrix out = *this;
    out.entries = entries.topLeftCorner(m, m);
    return out;
  }
};

/// Worker count for column solves: EITRECON_THREADS, 0 or unset meaning hardware concurrency.
inline unsigned solver_threads() {
  unsigned n = 0;
  if (const char* env = std::getenv("EITRECON_THREADS")) n = static_cast<unsigned>(std::strtoul(env, nullptr, 10));
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

/// Runs body(i) for i in [0, count) on up to solver_threads() threads.
template <typename Body>
void parallel_for(int count, Body&& body) {
  const int workers = static_cast<int>(std::min<unsigned>(solver_threads(), static_cast<unsigned>(std::max(count, 1))));
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::jthread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < count; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  pool.clear();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline NDMatrix assemble_nd(const LinearSystem& system, const BoundaryBasis& basis, int order) {
  if (order < 1 || order > basis.max_order())
    throw BasisError("requested order " + std::to_string(order) + " exceeds basis size " + std::to_string(basis.max_order()));
  const Eigen::MatrixXd load = boundary_load(system, basis).leftCols(order);
  Eigen::MatrixXd potentials(system.dof_count(), order);
  parallel_for(order, [&](int j) { potentials.col(j) = system.solve(load.col(j)); });
  NDMatrix nd;
  const Eigen::MatrixXd raw = load.transpose() * potentials;
  nd.entries = 0.5 * (raw + raw.transpose());
  return nd;
}

/// A + level * ||A||_F * S / ||S||_F with S = E + E^T, E standard normal from `seed`.
inline NDMatrix add_noise(const NDMatrix& a, double level, std::uint64_t seed) {
  if (!(level >= 0.0)) throw ConfigError("noise level must be nonnegative");
  NDMatrix out = a;
  out.noise_level = level;
  out.seed = seed;
  if (level == 0.0) return out;
  const int m = a.order();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd e(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) e(i, j) = normal(rng);
  const Eigen::MatrixXd s = e + e.transpose();
  out.entries = a.entries + (level * a.entries.norm() / s.norm()) * s;
  return out;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_ndmatrix(std::ostream& out, const NDMatrix& a) {
  out << "ndmatrix " << a.order() << ' ' << format_double(a.noise_level) << ' ' << a.seed << '\n';
  for (int i = 0; i < a.order(); ++i) {
    for (int j = 0; j < a.order(); ++j) out << (j ? " " : "") << format_double(a.entries(i, j));
    out << '\n';
  }
}

inline NDMatrix read_ndmatrix(std::istream& in) {
  std::string word;
  int m = 0;
  NDMatrix a;
  std::string header;
  if (!std::getline(in, header)) throw DataError("ndmatrix file: missing header");
  std::istringstream hs(header);
  if (!(hs >> word >> m >> a.noise_level >> a.seed) || word != "ndmatrix" || m < 1 || a.noise_level < 0.0)
    throw DataError("ndmatrix file: bad header '" + header + "'");
  a.entries.resize(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (!(in >> a.entries(i, j))) throw DataError("ndmatrix file: expected " + std::to_string(m * m) + " entries");
  if (in >> word) throw DataError("ndmatrix file: trailing data");
  return a;
}

}  // namespace eitrecon
