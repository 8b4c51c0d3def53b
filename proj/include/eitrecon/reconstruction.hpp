#pragma once

// Pixel-by-pixel reconstruction on a known partition.
//
// For the m-th pixel of the sweep, with the values on the earlier pixels
// already known, the test conductivity is
//   known values on pixels 1..m-1,  t on pixel m,  an extreme value elsewhere.
// With the extreme value "perfectly conducting" (upper test), the measured ND
// matrix dominates the test matrix exactly when t >= gamma_m; with "perfectly
// insulating" (lower test) the test matrix dominates exactly when t <= gamma_m.
// Either predicate flips once, so gamma_m is found by bracketing and
// bisecting in log t.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eitrecon/boundary_basis.hpp"
#include "eitrecon/errors.hpp"
#include "eitrecon/forward_solver.hpp"
#include "eitrecon/geometry.hpp"
#include "eitrecon/monotonicity.hpp"
#include "eitrecon/nd_map.hpp"

namespace eitrecon {

enum class TestVariant { Upper, Lower };

inline std::string to_string(TestVariant v) { return v == TestVariant::Upper ? "upper" : "lower"; }

inline TestVariant parse_variant(const std::string& s) {
  if (s == "upper") return TestVariant::Upper;
  if (s == "lower") return TestVariant::Lower;
  throw ConfigError("unknown test variant '" + s + "' (expected upper|lower)");
}

enum class PixelStatus { Converged, BracketCapHit, Inconsistent };

inline std::string to_string(PixelStatus s) {
  switch (s) {
    case PixelStatus::Converged: return "Converged";
    case PixelStatus::BracketCapHit: return "BracketCapHit";
    case PixelStatus::Inconsistent: return "Inconsistent";
  }
  return "?";
}

inline PixelStatus parse_status(const std::string& s) {
  if (s == "Converged") return PixelStatus::Converged;
  if (s == "BracketCapHit") return PixelStatus::BracketCapHit;
  if (s == "Inconsistent") return PixelStatus::Inconsistent;
  throw DataError("unknown pixel status '" + s + "'");
}

struct ReconSettings {
  TestVariant variant = TestVariant::Upper;
  std::optional<double> tol_loewner;  // default: policy from the data's noise level
  double tol_bisect = 1e-4;
  double t_min = 1e-6;
  double t_max = 1e6;
  double expansion = 4.0;
  double start = 1.0;
  bool warm_start = true;
};

/// Reconstruction-side discretization plus measured data.
/// The mesh and partition are referenced, not copied.
class ReconProblem {
 public:
  ReconProblem(const Mesh& mesh, const Partition& partition, NDMatrix measured, ReconSettings settings = {},
               std::optional<std::vector<int>> ordering = std::nullopt)
      : mesh_(&mesh),
        partition_(&partition),
        measured_(std::move(measured)),
        settings_(settings),
        ordering_(ordering ? std::move(*ordering)
                           : std::vector<int>(partition.order().begin(), partition.order().end())),
        basis_(build_basis(mesh, measured_.order())) {
    const ValidityReport report = validate_ordering(partition, mesh, ordering_);
    if (!report.valid) throw GeometryError("invalid pixel ordering: " + report.reason);
    if (!(settings_.tol_bisect > 0.0)) throw ConfigError("bisection tolerance must be positive");
    if (!(settings_.t_min > 0.0) || !(settings_.t_max > settings_.t_min)) throw ConfigError("bad bracket cap");
    if (!(settings_.expansion > 1.0)) throw ConfigError("bracket expansion factor must exceed 1");
    if (!(settings_.start >= settings_.t_min && settings_.start <= settings_.t_max))
      throw ConfigError("bracket start outside the cap");
    if (settings_.tol_loewner && !(*settings_.tol_loewner > 0.0)) throw ConfigError("Loewner tolerance must be positive");
  }

  const Mesh& mesh() const { return *mesh_; }
  const Partition& partition() const { return *partition_; }
  const NDMatrix& measured() const { return measured_; }
  const ReconSettings& settings() const { return settings_; }
  const std::vector<int>& ordering() const { return ordering_; }
  const BoundaryBasis& basis() const { return basis_; }
  int order() const { return measured_.order(); }
  int steps() const { return static_cast<int>(ordering_.size()); }

  double tol_loewner() const {
    return settings_.tol_loewner.value_or(default_loewner_tolerance(measured_.noise_level));
  }

 private:
  const Mesh* mesh_;
  const Partition* partition_;
  NDMatrix measured_;
  ReconSettings settings_;
  std::vector<int> ordering_;
  BoundaryBasis basis_;
};

/// Test conductivity for sweep step m (1-based).
inline ConductivityField test_field(const ReconProblem& problem, int m, double t, std::span<const double> known) {
  if (m < 1 || m > problem.steps()) throw ConfigError("sweep step " + std::to_string(m) + " out of range");
  if (static_cast<int>(known.size()) != m - 1)
    throw ConfigError("step " + std::to_string(m) + " needs " + std::to_string(m - 1) + " known values");
  const auto extreme = problem.settings().variant == TestVariant::Upper ? PixelConductivity::conducting()
                                                                        : PixelConductivity::insulating();
  ConductivityField field(problem.partition().pixel_count(), extreme);
  for (int k = 0; k < m - 1; ++k) field[problem.ordering()[k]] = PixelConductivity::finite(known[k]);
  field[problem.ordering()[m - 1]] = PixelConductivity::finite(t);
  return field;
}

/// ND matrix of the test conductivity at order M of the measured data.
inline NDMatrix test_matrix(const ReconProblem& problem, int m, double t, std::span<const double> known) {
  const LinearSystem system = assemble_system(problem.mesh(), problem.partition(), test_field(problem, m, t, known));
  return assemble_nd(system, problem.basis(), problem.order());
}

/// Loewner verdict in the orientation of the chosen variant:
/// upper: measured >= test(t);  lower: test(t) >= measured.
inline LoewnerVerdict variant_verdict(TestVariant variant, const Eigen::MatrixXd& measured, const Eigen::MatrixXd& test,
                                      double tol) {
  return variant == TestVariant::Upper ? loewner_geq(measured, test, tol) : loewner_geq(test, measured, tol);
}

struct PixelResult {
  int pixel = -1;
  double value = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  double lambda_min = 0.0;  // of the variant's difference at `value`
  int expansions = 0;
  int evaluations = 0;
  PixelStatus status = PixelStatus::Converged;
};

/// Locates the flip of the variant's predicate for sweep step m.
inline PixelResult pixel_bisect(const ReconProblem& problem, int m, std::span<const double> known,
                                std::optional<double> start = std::nullopt) {
  const ReconSettings& s = problem.settings();
  const double tol = problem.tol_loewner();
  const Eigen::MatrixXd& measured = problem.measured().entries;
  PixelResult r;
  r.pixel = problem.ordering()[m - 1];

  // True when t lies at or above the flip point.
  auto above = [&](double t) {
    ++r.evaluations;
    const NDMatrix test = test_matrix(problem, m, t, known);
    const bool holds = variant_verdict(s.variant, measured, test.entries, tol).holds;
    return s.variant == TestVariant::Upper ? holds : !holds;
  };

  double t0 = std::clamp(start.value_or(s.start), s.t_min, s.t_max);
  double lo = 0.0;
  double hi = 0.0;
  if (above(t0)) {
    hi = t0;
    for (;;) {
      if (hi <= s.t_min) {
        r.status = PixelStatus::BracketCapHit;
        r.value = r.t_lo = r.t_hi = s.t_min;
        break;
      }
      const double t = std::max(hi / s.expansion, s.t_min);
      ++r.expansions;
      if (!above(t)) {
        lo = t;
        break;
      }
      hi = t;
    }
  } else {
    lo = t0;
    for (;;) {
      if (lo >= s.t_max) {
        r.status = PixelStatus::BracketCapHit;
        r.value = r.t_lo = r.t_hi = s.t_max;
        break;
      }
      const double t = std::min(lo * s.expansion, s.t_max);
      ++r.expansions;
      if (above(t)) {
        hi = t;
        break;
      }
      lo = t;
    }
  }

  if (r.status == PixelStatus::Converged) {
    while ((hi - lo) / lo > s.tol_bisect) {
      const double mid = std::sqrt(lo * hi);
      if (above(mid))
        hi = mid;
      else
        lo = mid;
    }
    r.t_lo = lo;
    r.t_hi = hi;
    r.value = s.variant == TestVariant::Upper ? hi : lo;
  }
  const NDMatrix at_value = test_matrix(problem, m, r.value, known);
  r.lambda_min = variant_verdict(s.variant, measured, at_value.entries, tol).lambda_min;
  return r;
}

struct ReconResult {
  TestVariant variant = TestVariant::Upper;
  int order = 0;
  int pixel_count = 0;
  std::vector<PixelResult> steps;  // in sweep order; shorter than the ordering if the sweep aborted
  PixelStatus status = PixelStatus::Converged;

  /// Reconstructed value of `pixel`, if it was reached.
  std::optional<double> value(int pixel) const {
    for (const PixelResult& p : steps)
      if (p.pixel == pixel && p.status == PixelStatus::Converged) return p.value;
    return std::nullopt;
  }
};

inline ReconResult reconstruct(const ReconProblem& problem) {
  ReconResult result;
  result.variant = problem.settings().variant;
  result.order = problem.order();
  result.pixel_count = problem.partition().pixel_count();
  std::vector<double> known;
  for (int m = 1; m <= problem.steps(); ++m) {
    std::optional<double> start;
    if (problem.settings().warm_start && !known.empty()) start = known.back();
    PixelResult step = pixel_bisect(problem, m, known, start);
    result.steps.push_back(step);
    if (step.status != PixelStatus::Converged) {
      // Later pixels depend on this one.
      result.status = step.status;
      break;
    }
    known.push_back(step.value);
  }
  return result;
}

struct SweepRow {
  int order = 0;
  double lambda_min = 0.0;
  bool holds = false;
};

/// Smallest eigenvalue of the variant's difference at fixed t as the number of
/// basis functions grows (leading blocks of one full-order computation).
inline std::vector<SweepRow> m_sweep(const ReconProblem& problem, int m, double t, std::span<const double> known,
                                     std::span<const int> orders) {
  for (int order : orders)
    if (order < 1 || order > problem.order())
      throw BasisError("sweep order " + std::to_string(order) + " outside 1.." + std::to_string(problem.order()));
  const NDMatrix test = test_matrix(problem, m, t, known);
  std::vector<SweepRow> rows;
  for (int order : orders) {
    const Eigen::MatrixXd a = problem.measured().entries.topLeftCorner(order, order);
    const Eigen::MatrixXd b = test.entries.topLeftCorner(order, order);
    const LoewnerVerdict v = variant_verdict(problem.settings().variant, a, b, problem.tol_loewner());
    rows.push_back({order, v.lambda_min, v.holds});
  }
  return rows;
}

}  // namespace eitrecon
