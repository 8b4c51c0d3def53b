#pragma once

// Loewner-order tests A >= B between ND matrices via the smallest eigenvalue
// of the symmetrized difference, with a tolerance relative to the operands.

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "eitrecon/errors.hpp"
#include "eitrecon/nd_map.hpp"

namespace eitrecon {

struct LoewnerVerdict {
  bool holds = false;
  double lambda_min = 0.0;      // smallest eigenvalue of (A - B)
  double margin = 0.0;          // lambda_min / ||A - B||_2, 0 for a zero difference
  double tolerance_used = 0.0;  // relative to scale
  double scale = 0.0;           // max(||A||_2, ||B||_2)
};

/// Relative tolerance for data carrying the given noise level.
inline double default_loewner_tolerance(double noise_level = 0.0) { return std::max(1e-8, 2.0 * noise_level); }

inline double spectral_norm_symmetric(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError("symmetric eigensolve failed");
  return std::max(std::abs(es.eigenvalues().minCoeff()), std::abs(es.eigenvalues().maxCoeff()));
}

inline double smallest_eigenvalue(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError("symmetric eigensolve failed");
  return es.eigenvalues().minCoeff();
}

inline LoewnerVerdict loewner_geq(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double tol) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
    throw DataError("Loewner comparison of " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " and " +
                    std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + " matrices");
  if (!(tol > 0.0)) throw ConfigError("Loewner tolerance must be positive");
  const Eigen::MatrixXd diff = 0.5 * ((a - b) + (a - b).transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(diff, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError("symmetric eigensolve failed");
  LoewnerVerdict v;
  v.lambda_min = es.eigenvalues().minCoeff();
  const double diff_norm = std::max(std::abs(v.lambda_min), std::abs(es.eigenvalues().maxCoeff()));
  v.margin = diff_norm > 0.0 ? v.lambda_min / diff_norm : 0.0;
  v.scale = std::max(spectral_norm_symmetric(a), spectral_norm_symmetric(b));
  v.tolerance_used = tol;
  v.holds = v.lambda_min >= -tol * v.scale;
  return v;
}

inline LoewnerVerdict loewner_geq(const NDMatrix& a, const NDMatrix& b, double tol) {
  return loewner_geq(a.entries, b.entries, tol);
}

/// Uses the default policy for the larger declared noise level of the two operands.
inline LoewnerVerdict loewner_geq(const NDMatrix& a, const NDMatrix& b) {
  return loewner_geq(a, b, default_loewner_tolerance(std::max(a.noise_level, b.noise_level)));
}

}  // namespace eitrecon
