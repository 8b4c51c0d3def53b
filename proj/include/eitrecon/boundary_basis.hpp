#pragma once

// Orthonormal, mean-free cosine system along the measurement boundary.
//
// Gamma is walked counterclockwise edge by edge; disjoint arcs are
// concatenated (ordered by the lexicographically smallest start point) into a
// single arc-length parameter s in [0, L]. The k-th function is
//   g_k(s) = sqrt(2/L) * cos(k*pi*s/L),  k = 1, 2, ...
// which is orthonormal and mean-free on [0, L].

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "eitrecon/errors.hpp"
#include "eitrecon/geometry.hpp"

namespace eitrecon {

/// One Gamma edge in arc-length order.
struct GammaSegment {
  int edge = 0;  // index into Mesh::boundary_edges()
  int a = 0;     // start vertex (s = s0)
  int b = 0;     // end vertex (s = s1)
  double s0 = 0.0;
  double s1 = 0.0;
};

/// Gauss-Legendre rule on [0, 1].
struct EdgeRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  static EdgeRule gauss_legendre_8() {
    using Rule = boost::math::quadrature::gauss<double, 8>;
    EdgeRule rule;
    const auto& abscissa = Rule::abscissa();
    const auto& weight = Rule::weights();
    // Boost stores the nonnegative half of a symmetric rule (even order: no zero node).
    for (std::size_t i = 0; i < abscissa.size(); ++i) {
      for (double sign : {-1.0, 1.0}) {
        rule.nodes.push_back(0.5 * (1.0 + sign * abscissa[i]));
        rule.weights.push_back(0.5 * weight[i]);
      }
    }
    return rule;
  }
};

class BoundaryBasis {
 public:
  BoundaryBasis(std::vector<GammaSegment> segments, double length, int max_order)
      : segments_(std::move(segments)), length_(length), max_order_(max_order), rule_(EdgeRule::gauss_legendre_8()) {}

  double gamma_length() const { return length_; }
  int max_order() const { return max_order_; }
  const std::vector<GammaSegment>& segments() const { return segments_; }
  const EdgeRule& rule() const { return rule_; }

  /// g_k(s), k is 1-based.
  double value(int k, double s) const {
    return std::sqrt(2.0 / length_) * std::cos(k * std::numbers::pi * s / length_);
  }

  /// Quadrature of fn(s) over Gamma.
  template <typename Fn>
  double integrate(Fn&& fn) const {
    double sum = 0.0;
    for (const GammaSegment& seg : segments_) {
      const double len = seg.s1 - seg.s0;
      for (std::size_t q = 0; q < rule_.nodes.size(); ++q)
        sum += rule_.weights[q] * len * fn(seg.s0 + rule_.nodes[q] * len);
    }
    return sum;
  }

  double inner(int i, int j) const {
    return integrate([&](double s) { return value(i, s) * value(j, s); });
  }

 private:
  std::vector<GammaSegment> segments_;
  double length_ = 0.0;
  int max_order_ = 0;
  EdgeRule rule_;
};

/// Walks Gamma and builds g_1..g_{max_order}.
inline BoundaryBasis build_basis(const Mesh& mesh, int max_order) {
  if (max_order < 1) throw BasisError("basis order must be at least 1");
  const auto edges = mesh.boundary_edges();
  const auto vertices = mesh.vertices();

  std::map<int, int> outgoing;  // start vertex -> Gamma edge index
  std::map<int, int> incoming;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (edges[i].tag != BoundaryTag::Gamma) continue;
    if (!outgoing.emplace(edges[i].a, static_cast<int>(i)).second ||
        !incoming.emplace(edges[i].b, static_cast<int>(i)).second)
      throw BasisError("Gamma is not a union of simple arcs");
  }
  if (outgoing.empty()) throw BasisError("mesh has no Gamma edges");

  auto before = [&](int u, int v) {
    const Point& p = vertices[u];
    const Point& q = vertices[v];
    return p.x < q.x || (p.x == q.x && p.y < q.y);
  };

  // Arc starts: Gamma edges whose start vertex is not the end of another Gamma edge.
  std::vector<int> starts;
  for (const auto& [v, e] : outgoing)
    if (!incoming.contains(v)) starts.push_back(v);
  std::sort(starts.begin(), starts.end(), before);

  std::vector<GammaSegment> segments;
  std::vector<bool> used(edges.size(), false);
  double s = 0.0;
  double longest = 0.0;
  auto walk = [&](int start) {
    int v = start;
    for (auto it = outgoing.find(v); it != outgoing.end() && !used[it->second]; it = outgoing.find(v)) {
      const int e = it->second;
      used[e] = true;
      const double len = mesh.edge_length(edges[e].a, edges[e].b);
      segments.push_back({e, edges[e].a, edges[e].b, s, s + len});
      s += len;
      longest = std::max(longest, len);
      v = edges[e].b;
    }
  };
  for (int v : starts) walk(v);
  // Whatever is left forms closed loops; start each at its smallest vertex.
  while (segments.size() < outgoing.size()) {
    int start = -1;
    for (const auto& [v, e] : outgoing)
      if (!used[e] && (start < 0 || before(v, start))) start = v;
    walk(start);
  }

  const double length = s;
  // At least four boundary edges per period 2L/k of the highest mode.
  if (2.0 * length / max_order < 4.0 * longest * (1.0 - 1e-9))
    throw BasisError("basis order " + std::to_string(max_order) + " is not resolved by the Gamma mesh (max " +
                     std::to_string(static_cast<int>(length / (2.0 * longest) + 1e-9)) + ")");
  return BoundaryBasis(std::move(segments), length, max_order);
}

}  // namespace eitrecon
