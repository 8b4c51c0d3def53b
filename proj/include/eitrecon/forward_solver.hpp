#pragma once

// P1 finite elements for the Neumann conductivity problem
//   -div(sigma grad u) = 0 in the domain,
//   sigma du/dn = f on Gamma, 0 on the rest of the boundary,
// with piecewise constant sigma that may be perfectly insulating (triangles
// removed) or perfectly conducting (all nodes of an edge-connected conducting
// region share one degree of freedom). The potential is normalized to have
// zero mean over the active part of Gamma.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "eitrecon/boundary_basis.hpp"
#include "eitrecon/errors.hpp"
#include "eitrecon/geometry.hpp"

namespace eitrecon {

/// Conductivity of one pixel: a positive finite value or one of the two extremes.
class PixelConductivity {
 public:
  enum class Kind { Finite, Insulating, Conducting };

  static PixelConductivity finite(double value) {
    if (!(value > 0.0) || !std::isfinite(value))
      throw ModelError("finite conductivity must be positive and finite, got " + std::to_string(value));
    return PixelConductivity(Kind::Finite, value);
  }
  static PixelConductivity insulating() { return PixelConductivity(Kind::Insulating, 0.0); }
  static PixelConductivity conducting() {
    return PixelConductivity(Kind::Conducting, std::numeric_limits<double>::infinity());
  }

  Kind kind() const { return kind_; }
  bool is_finite() const { return kind_ == Kind::Finite; }
  double value() const { return value_; }

 private:
  PixelConductivity(Kind kind, double value) : kind_(kind), value_(value) {}
  Kind kind_;
  double value_;
};

using ConductivityField = std::vector<PixelConductivity>;

inline ConductivityField uniform_field(int pixels, double value) {
  return ConductivityField(pixels, PixelConductivity::finite(value));
}

inline ConductivityField finite_field(std::span<const double> values) {
  ConductivityField field;
  field.reserve(values.size());
  for (double v : values) field.push_back(PixelConductivity::finite(v));
  return field;
}

/// Assembled and factorized discrete Neumann problem.
///
/// Holds non-owning pointers to the mesh and partition, which must outlive it.
/// Solves are const and may run concurrently against the same factorization.
class LinearSystem {
 public:
  using SparseMatrix = Eigen::SparseMatrix<double>;

  const Mesh& mesh() const { return *mesh_; }
  const Partition& partition() const { return *partition_; }
  const ConductivityField& conductivity() const { return sigma_; }

  int dof_count() const { return dof_count_; }
  /// Degree of freedom of each mesh vertex, -1 for vertices only touched by insulating triangles.
  std::span<const int> node_dof() const { return node_dof_; }
  bool triangle_active(int t) const { return sigma_[partition_->pixel_of(t)].kind() != PixelConductivity::Kind::Insulating; }
  /// Whether boundary edge i carries Neumann data (Gamma edge of an active triangle).
  bool gamma_edge_active(int i) const {
    return mesh_->boundary_edges()[i].tag == BoundaryTag::Gamma && triangle_active(mesh_->boundary_owner(i));
  }

  const SparseMatrix& stiffness() const { return stiffness_; }
  /// Integral of each nodal basis function over the active part of Gamma.
  const Eigen::VectorXd& gamma_weights() const { return gamma_weights_; }

  /// Solves K u = load after projecting the load onto the compatible
  /// (zero-sum) subspace; returns u with zero Gamma-mean.
  Eigen::VectorXd solve(const Eigen::VectorXd& load) const {
    if (load.size() != dof_count_) throw NumericError("load vector has wrong size");
    const double total_weight = gamma_weights_.sum();
    const Eigen::VectorXd compatible = load - (load.sum() / total_weight) * gamma_weights_;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(dof_count_);
    if (dof_count_ > 1) {
      const Eigen::VectorXd reduced = factor_->solve(compatible.tail(dof_count_ - 1));
      if (factor_->info() != Eigen::Success) throw NumericError("sparse solve failed");
      u.tail(dof_count_ - 1) = reduced;
    }
    u.array() -= gamma_weights_.dot(u) / total_weight;
    return u;
  }

  /// Expands dof values to one value per mesh vertex (NaN on inactive vertices).
  Eigen::VectorXd nodal_values(const Eigen::VectorXd& dof_values) const {
    Eigen::VectorXd nodal(mesh_->vertex_count());
    for (int v = 0; v < mesh_->vertex_count(); ++v)
      nodal[v] = node_dof_[v] >= 0 ? dof_values[node_dof_[v]] : std::numeric_limits<double>::quiet_NaN();
    return nodal;
  }

 private:
  friend LinearSystem assemble_system(const Mesh&, const Partition&, ConductivityField);

  const Mesh* mesh_ = nullptr;
  const Partition* partition_ = nullptr;
  ConductivityField sigma_;
  std::vector<int> node_dof_;
  int dof_count_ = 0;
  SparseMatrix stiffness_;
  Eigen::VectorXd gamma_weights_;
  std::shared_ptr<const Eigen::SimplicialLDLT<SparseMatrix>> factor_;
};

/// Local P1 stiffness of a triangle with unit coefficient.
inline std::array<std::array<double, 3>, 3> p1_stiffness(const Point& p0, const Point& p1, const Point& p2) {
  const double area = signed_area(p0, p1, p2);
  // Gradients of barycentric coordinates times 2*area.
  const std::array<double, 3> bx{p1.y - p2.y, p2.y - p0.y, p0.y - p1.y};
  const std::array<double, 3> by{p2.x - p1.x, p0.x - p2.x, p1.x - p0.x};
  std::array<std::array<double, 3>, 3> k{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) k[i][j] = (bx[i] * bx[j] + by[i] * by[j]) / (4.0 * area);
  return k;
}

/// Checks that the finite part of sigma is one edge-connected set touching Gamma.
inline void check_conductivity(const Mesh& mesh, const Partition& partition, const ConductivityField& sigma) {
  if (static_cast<int>(sigma.size()) != partition.pixel_count())
    throw ModelError("conductivity has " + std::to_string(sigma.size()) + " entries for " +
                     std::to_string(partition.pixel_count()) + " pixels");
  const PixelGraph graph = PixelGraph::build(mesh, partition);
  std::vector<bool> finite(sigma.size());
  bool sees_gamma = false;
  bool any = false;
  for (std::size_t p = 0; p < sigma.size(); ++p) {
    finite[p] = sigma[p].is_finite();
    any = any || finite[p];
    sees_gamma = sees_gamma || (finite[p] && graph.touches_gamma[p]);
  }
  if (!any) throw ModelError("conductivity has no finite pixel");
  if (!sees_gamma) throw ModelError("finite part of the conductivity does not touch Gamma");
  if (!graph.connected(finite)) throw ModelError("finite part of the conductivity is not edge-connected");
}

inline LinearSystem assemble_system(const Mesh& mesh, const Partition& partition, ConductivityField sigma) {
  check_conductivity(mesh, partition, sigma);
  LinearSystem sys;
  sys.mesh_ = &mesh;
  sys.partition_ = &partition;
  sys.sigma_ = std::move(sigma);
  const auto& field = sys.sigma_;
  const int nv = mesh.vertex_count();
  const int nt = mesh.triangle_count();
  auto kind_of = [&](int t) { return field[partition.pixel_of(t)].kind(); };

  // Glue nodes of each edge-connected conducting region (union-find over shared edges).
  std::vector<int> root(nv);
  std::iota(root.begin(), root.end(), 0);
  auto find = [&](int v) {
    while (root[v] != v) v = root[v] = root[root[v]];
    return v;
  };
  auto unite = [&](int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) root[std::max(a, b)] = std::min(a, b);
  };
  std::vector<bool> active(nv, false);
  for (int t = 0; t < nt; ++t) {
    const auto kind = kind_of(t);
    if (kind == PixelConductivity::Kind::Insulating) continue;
    const auto& tri = mesh.triangles()[t];
    for (int v : tri) active[v] = true;
    if (kind == PixelConductivity::Kind::Conducting) {
      unite(tri[0], tri[1]);
      unite(tri[0], tri[2]);
    }
  }

  // Dofs numbered by smallest vertex index of each class.
  sys.node_dof_.assign(nv, -1);
  int dofs = 0;
  for (int v = 0; v < nv; ++v) {
    if (!active[v]) continue;
    const int r = find(v);
    if (r == v) sys.node_dof_[v] = dofs++;
  }
  for (int v = 0; v < nv; ++v)
    if (active[v]) sys.node_dof_[v] = sys.node_dof_[find(v)];
  sys.dof_count_ = dofs;

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(9 * static_cast<std::size_t>(nt));
  for (int t = 0; t < nt; ++t) {
    if (kind_of(t) != PixelConductivity::Kind::Finite) continue;
    const auto& tri = mesh.triangles()[t];
    const double coeff = field[partition.pixel_of(t)].value();
    const auto local = p1_stiffness(mesh.vertices()[tri[0]], mesh.vertices()[tri[1]], mesh.vertices()[tri[2]]);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        triplets.emplace_back(sys.node_dof_[tri[i]], sys.node_dof_[tri[j]], coeff * local[i][j]);
  }
  sys.stiffness_.resize(dofs, dofs);
  sys.stiffness_.setFromTriplets(triplets.begin(), triplets.end());

  sys.gamma_weights_ = Eigen::VectorXd::Zero(dofs);
  const auto edges = mesh.boundary_edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!sys.gamma_edge_active(static_cast<int>(i))) continue;
    const double half = 0.5 * mesh.edge_length(edges[i].a, edges[i].b);
    sys.gamma_weights_[sys.node_dof_[edges[i].a]] += half;
    sys.gamma_weights_[sys.node_dof_[edges[i].b]] += half;
  }
  if (!(sys.gamma_weights_.sum() > 0.0)) throw ModelError("active domain does not touch Gamma");

  // The kernel must be the constants only: the dof graph has to be connected.
  {
    std::vector<int> comp(dofs);
    std::iota(comp.begin(), comp.end(), 0);
    auto cfind = [&](int v) {
      while (comp[v] != v) v = comp[v] = comp[comp[v]];
      return v;
    };
    int components = dofs;
    for (int k = 0; k < sys.stiffness_.outerSize(); ++k)
      for (LinearSystem::SparseMatrix::InnerIterator it(sys.stiffness_, k); it; ++it) {
        const int a = cfind(static_cast<int>(it.row()));
        const int b = cfind(static_cast<int>(it.col()));
        if (a != b) {
          comp[std::max(a, b)] = std::min(a, b);
          --components;
        }
      }
    if (components != 1) throw ModelError("active domain is disconnected (" + std::to_string(components) + " parts)");
  }

  auto factor = std::make_shared<Eigen::SimplicialLDLT<LinearSystem::SparseMatrix>>();
  if (dofs > 1) {
    // Pin dof 0; the remaining block is positive definite for a connected domain.
    const LinearSystem::SparseMatrix reduced = sys.stiffness_.bottomRightCorner(dofs - 1, dofs - 1);
    factor->compute(reduced);
    if (factor->info() != Eigen::Success) throw NumericError("stiffness factorization failed");
    if ((factor->vectorD().array() <= 0.0).any()) throw NumericError("reduced stiffness is not positive definite");
  }
  sys.factor_ = std::move(factor);
  return sys;
}

/// Load matrix: column k holds the integrals of g_{k+1} against each nodal basis function on active Gamma.
inline Eigen::MatrixXd boundary_load(const LinearSystem& system, const BoundaryBasis& basis) {
  const Mesh& mesh = system.mesh();
  const auto dof = system.node_dof();
  const EdgeRule& rule = basis.rule();
  Eigen::MatrixXd load = Eigen::MatrixXd::Zero(system.dof_count(), basis.max_order());
  for (const GammaSegment& seg : basis.segments()) {
    if (!system.gamma_edge_active(seg.edge)) continue;
    const double len = seg.s1 - seg.s0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double xi = rule.nodes[q];
      const double w = rule.weights[q] * len;
      const double s = seg.s0 + xi * len;
      for (int k = 0; k < basis.max_order(); ++k) {
        const double g = basis.value(k + 1, s);
        load(dof[seg.a], k) += w * g * (1.0 - xi);
        load(dof[seg.b], k) += w * g * xi;
      }
    }
  }
  return load;
}

struct NeumannSolution {
  Eigen::VectorXd potential;        // per dof
  Eigen::VectorXd nodal;            // per mesh vertex, NaN where inactive
  Eigen::VectorXd gamma_trace;      // <u, g_k> over active Gamma, k = 1..max_order
  std::vector<double> energy_by_pixel;  // integral of |grad u|^2 per pixel (sigma excluded)
};

/// Integral of |grad u|^2 over each pixel's triangles.
inline std::vector<double> pixel_energies(const LinearSystem& system, const Eigen::VectorXd& potential) {
  const Mesh& mesh = system.mesh();
  const Partition& partition = system.partition();
  std::vector<double> energy(partition.pixel_count(), 0.0);
  const auto dof = system.node_dof();
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    if (!system.conductivity()[partition.pixel_of(t)].is_finite()) continue;
    const auto& tri = mesh.triangles()[t];
    const auto k = p1_stiffness(mesh.vertices()[tri[0]], mesh.vertices()[tri[1]], mesh.vertices()[tri[2]]);
    double e = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) e += potential[dof[tri[i]]] * k[i][j] * potential[dof[tri[j]]];
    energy[partition.pixel_of(t)] += e;
  }
  return energy;
}

/// Solves with Neumann datum f = sum_k f_coeffs[k] g_{k+1}.
inline NeumannSolution solve_neumann(const LinearSystem& system, const BoundaryBasis& basis,
                                     std::span<const double> f_coeffs) {
  if (static_cast<int>(f_coeffs.size()) > basis.max_order())
    throw BasisError("more Neumann coefficients than basis functions");
  const Eigen::MatrixXd load = boundary_load(system, basis);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(basis.max_order());
  for (std::size_t k = 0; k < f_coeffs.size(); ++k) f[static_cast<Eigen::Index>(k)] = f_coeffs[k];
  NeumannSolution sol;
  sol.potential = system.solve(load * f);
  sol.nodal = system.nodal_values(sol.potential);
  sol.gamma_trace = load.transpose() * sol.potential;
  sol.energy_by_pixel = pixel_energies(system, sol.potential);
  return sol;
}

inline double pixel_energy(const NeumannSolution& solution, int pixel) { return solution.energy_by_pixel.at(pixel); }

}  // namespace eitrecon
