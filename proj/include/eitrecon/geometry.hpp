#pragma once

// Triangle meshes of 2D polygonal domains, pixel partitions on top of them,
// and the ordering rules the pixel-by-pixel sweep depends on.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "eitrecon/errors.hpp"

namespace eitrecon {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

enum class BoundaryTag { Gamma, Insulated };

/// A boundary edge, oriented as in its owning (counterclockwise) triangle.
struct BoundaryEdge {
  int a = 0;
  int b = 0;
  BoundaryTag tag = BoundaryTag::Insulated;
};

/// Edge shared by two triangles.
struct InteriorEdge {
  int a = 0;
  int b = 0;
  int left = 0;
  int right = 0;
};

/// Sides of the unit square, usable as a bit set.
enum class Side : unsigned { Bottom = 1u, Right = 2u, Top = 4u, Left = 8u };

class SideSet {
 public:
  constexpr SideSet() = default;
  constexpr SideSet(std::initializer_list<Side> sides) {
    for (Side s : sides) bits_ |= static_cast<unsigned>(s);
  }
  constexpr bool contains(Side s) const { return (bits_ & static_cast<unsigned>(s)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr void insert(Side s) { bits_ |= static_cast<unsigned>(s); }
  constexpr bool operator==(const SideSet&) const = default;

 private:
  unsigned bits_ = 0;
};

inline Side parse_side(const std::string& name) {
  if (name == "bottom") return Side::Bottom;
  if (name == "right") return Side::Right;
  if (name == "top") return Side::Top;
  if (name == "left") return Side::Left;
  throw ConfigError("unknown side '" + name + "' (expected bottom|right|top|left)");
}

inline double signed_area(const Point& p, const Point& q, const Point& r) {
  return 0.5 * ((q.x - p.x) * (r.y - p.y) - (r.x - p.x) * (q.y - p.y));
}

/// Conforming triangulation with tagged boundary. Immutable once built.
class Mesh {
 public:
  Mesh(std::vector<Point> vertices, std::vector<std::array<int, 3>> triangles,
       std::vector<BoundaryEdge> boundary_edges, int refinement_level = 0)
      : vertices_(std::move(vertices)),
        triangles_(std::move(triangles)),
        refinement_level_(refinement_level) {
    if (refinement_level_ < 0) throw MeshError("negative refinement level");
    if (triangles_.empty()) throw MeshError("mesh has no triangles");
    const int nv = static_cast<int>(vertices_.size());
    std::vector<bool> used(vertices_.size(), false);
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
      for (int v : triangles_[t]) {
        if (v < 0 || v >= nv) throw MeshError("triangle " + std::to_string(t) + " has vertex index out of range");
        used[v] = true;
      }
      if (!(area(static_cast<int>(t)) > 0.0))
        throw MeshError("triangle " + std::to_string(t) + " has nonpositive signed area");
    }
    if (std::find(used.begin(), used.end(), false) != used.end()) throw MeshError("mesh has unused vertices");

    // Every edge belongs to one triangle (boundary) or two (interior).
    std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> edge_owner;  // key -> (triangle, local edge)
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
      for (int e = 0; e < 3; ++e) {
        const int a = triangles_[t][e];
        const int b = triangles_[t][(e + 1) % 3];
        edge_owner[std::minmax(a, b)].emplace_back(static_cast<int>(t), e);
      }
    }
    std::map<std::pair<int, int>, int> open_edges;  // key -> owning triangle
    for (const auto& [key, owners] : edge_owner) {
      if (owners.size() > 2) throw MeshError("non-manifold edge shared by more than two triangles");
      if (owners.size() == 2) {
        interior_edges_.push_back({key.first, key.second, owners[0].first, owners[1].first});
      } else {
        open_edges.emplace(key, owners[0].first);
      }
    }

    std::set<std::pair<int, int>> seen;
    bool any_gamma = false;
    for (const BoundaryEdge& e : boundary_edges) {
      const auto key = std::minmax(e.a, e.b);
      const auto it = open_edges.find(key);
      if (it == open_edges.end())
        throw MeshError("boundary edge (" + std::to_string(e.a) + "," + std::to_string(e.b) +
                        ") is not on the topological boundary");
      if (!seen.insert(key).second) throw MeshError("duplicate boundary edge");
      const auto& tri = triangles_[it->second];
      BoundaryEdge oriented = e;
      for (int k = 0; k < 3; ++k) {
        const int a = tri[k];
        const int b = tri[(k + 1) % 3];
        if (std::minmax(a, b) == key) {
          oriented.a = a;
          oriented.b = b;
        }
      }
      boundary_edges_.push_back(oriented);
      boundary_owner_.push_back(it->second);
      any_gamma = any_gamma || e.tag == BoundaryTag::Gamma;
    }
    if (seen.size() != open_edges.size()) throw MeshError("boundary edges do not cover the topological boundary");
    if (!any_gamma) throw MeshError("no boundary edge is tagged Gamma");
  }

  std::span<const Point> vertices() const { return vertices_; }
  std::span<const std::array<int, 3>> triangles() const { return triangles_; }
  std::span<const BoundaryEdge> boundary_edges() const { return boundary_edges_; }
  std::span<const InteriorEdge> interior_edges() const { return interior_edges_; }
  int refinement_level() const { return refinement_level_; }

  int vertex_count() const { return static_cast<int>(vertices_.size()); }
  int triangle_count() const { return static_cast<int>(triangles_.size()); }

  /// Triangle owning boundary edge `i`.
  int boundary_owner(int i) const { return boundary_owner_[i]; }

  double area(int t) const {
    const auto& tri = triangles_[t];
    return signed_area(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
  }

  Point centroid(int t) const {
    const auto& tri = triangles_[t];
    return {(vertices_[tri[0]].x + vertices_[tri[1]].x + vertices_[tri[2]].x) / 3.0,
            (vertices_[tri[0]].y + vertices_[tri[1]].y + vertices_[tri[2]].y) / 3.0};
  }

  double edge_length(int a, int b) const {
    return std::hypot(vertices_[b].x - vertices_[a].x, vertices_[b].y - vertices_[a].y);
  }

 private:
  std::vector<Point> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<BoundaryEdge> boundary_edges_;
  std::vector<int> boundary_owner_;
  std::vector<InteriorEdge> interior_edges_;
  int refinement_level_ = 0;
};

/// Pixel grid shape for structured partitions; row 0 is the bottom row.
struct GridLayout {
  int rows = 1;
  int cols = 1;
  int pixel(int row, int col) const { return row * cols + col; }
  int row_of(int pixel) const { return pixel / cols; }
  int col_of(int pixel) const { return pixel % cols; }
};

/// Assignment of triangles to pixels 0..n-1 plus the sweep order.
class Partition {
 public:
  Partition(int pixel_count, std::vector<int> element_pixel, std::vector<int> order = {},
            std::optional<GridLayout> grid = std::nullopt)
      : pixel_count_(pixel_count), element_pixel_(std::move(element_pixel)), order_(std::move(order)), grid_(grid) {
    if (pixel_count_ < 1) throw MeshError("partition needs at least one pixel");
    std::vector<int> owned(pixel_count_, 0);
    for (int p : element_pixel_) {
      if (p < 0 || p >= pixel_count_) throw MeshError("triangle assigned to pixel " + std::to_string(p) + " out of range");
      ++owned[p];
    }
    for (int p = 0; p < pixel_count_; ++p)
      if (owned[p] == 0) throw MeshError("pixel " + std::to_string(p) + " owns no triangle");
    if (order_.empty()) {
      order_.resize(pixel_count_);
      for (int p = 0; p < pixel_count_; ++p) order_[p] = p;
    }
    std::vector<int> sorted = order_;
    std::sort(sorted.begin(), sorted.end());
    for (int p = 0; p < pixel_count_; ++p)
      if (static_cast<int>(sorted.size()) != pixel_count_ || sorted[p] != p)
        throw MeshError("partition order is not a permutation of the pixels");
    if (grid_ && grid_->rows * grid_->cols != pixel_count_) throw MeshError("grid layout does not match pixel count");
  }

  int pixel_count() const { return pixel_count_; }
  std::span<const int> element_pixel() const { return element_pixel_; }
  int pixel_of(int triangle) const { return element_pixel_[triangle]; }
  std::span<const int> order() const { return order_; }
  const std::optional<GridLayout>& grid() const { return grid_; }

  Partition with_order(std::vector<int> order) const {
    return Partition(pixel_count_, element_pixel_, std::move(order), grid_);
  }

 private:
  int pixel_count_;
  std::vector<int> element_pixel_;
  std::vector<int> order_;
  std::optional<GridLayout> grid_;
};

/// Pixel-level connectivity derived from shared mesh edges.
struct PixelGraph {
  std::vector<std::vector<int>> neighbors;  // sorted, edge-adjacent pixels
  std::vector<bool> touches_gamma;

  static PixelGraph build(const Mesh& mesh, const Partition& partition) {
    const int n = partition.pixel_count();
    std::vector<std::set<int>> adj(n);
    for (const InteriorEdge& e : mesh.interior_edges()) {
      const int p = partition.pixel_of(e.left);
      const int q = partition.pixel_of(e.right);
      if (p != q) {
        adj[p].insert(q);
        adj[q].insert(p);
      }
    }
    PixelGraph g;
    g.neighbors.resize(n);
    for (int p = 0; p < n; ++p) g.neighbors[p].assign(adj[p].begin(), adj[p].end());
    g.touches_gamma.assign(n, false);
    const auto edges = mesh.boundary_edges();
    for (std::size_t i = 0; i < edges.size(); ++i)
      if (edges[i].tag == BoundaryTag::Gamma) g.touches_gamma[partition.pixel_of(mesh.boundary_owner(static_cast<int>(i)))] = true;
    return g;
  }

  /// Whether `pixels` (membership mask) form one edge-connected set.
  bool connected(const std::vector<bool>& member) const {
    const int n = static_cast<int>(neighbors.size());
    int start = -1;
    int count = 0;
    for (int p = 0; p < n; ++p)
      if (member[p]) {
        ++count;
        if (start < 0) start = p;
      }
    if (count == 0) return true;
    std::vector<bool> seen(n, false);
    std::vector<int> stack{start};
    seen[start] = true;
    int reached = 0;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      ++reached;
      for (int q : neighbors[p])
        if (member[q] && !seen[q]) {
          seen[q] = true;
          stack.push_back(q);
        }
    }
    return reached == count;
  }
};

/// Pixels whose own triangle set is not edge-connected.
inline std::vector<int> fragmented_pixels(const Mesh& mesh, const Partition& partition) {
  const int nt = mesh.triangle_count();
  std::vector<std::vector<int>> tri_adj(nt);
  for (const InteriorEdge& e : mesh.interior_edges()) {
    if (partition.pixel_of(e.left) == partition.pixel_of(e.right)) {
      tri_adj[e.left].push_back(e.right);
      tri_adj[e.right].push_back(e.left);
    }
  }
  std::vector<int> component(nt, -1);
  std::vector<int> components_per_pixel(partition.pixel_count(), 0);
  for (int t = 0; t < nt; ++t) {
    if (component[t] >= 0) continue;
    ++components_per_pixel[partition.pixel_of(t)];
    std::vector<int> stack{t};
    component[t] = t;
    while (!stack.empty()) {
      const int s = stack.back();
      stack.pop_back();
      for (int r : tri_adj[s])
        if (component[r] < 0) {
          component[r] = t;
          stack.push_back(r);
        }
    }
  }
  std::vector<int> out;
  for (int p = 0; p < partition.pixel_count(); ++p)
    if (components_per_pixel[p] > 1) out.push_back(p);
  return out;
}

struct ValidityReport {
  bool valid = true;
  bool first_touches_gamma = false;
  std::vector<bool> prefix_connected;  // entry m-1 describes Q_m
  std::vector<int> fragmented;         // pixels with disconnected interior
  int first_failure = 0;               // 1-based step of the first violation, 0 when valid
  std::string reason;

  std::string to_string() const {
    std::ostringstream os;
    os << "ordering " << (valid ? "valid" : "INVALID") << '\n';
    os << "first pixel touches Gamma: " << (first_touches_gamma ? "yes" : "no") << '\n';
    for (std::size_t m = 0; m < prefix_connected.size(); ++m)
      os << "Q_" << (m + 1) << " connected: " << (prefix_connected[m] ? "yes" : "no") << '\n';
    if (!fragmented.empty()) {
      os << "pixels with disconnected interior:";
      for (int p : fragmented) os << ' ' << p;
      os << '\n';
    }
    if (!valid) os << "first failure at m=" << first_failure << ": " << reason << '\n';
    return os.str();
  }
};

/// Checks the sweep constraints for `ordering` (a full or partial list of pixels).
inline ValidityReport validate_ordering(const Partition& partition, const Mesh& mesh, std::span<const int> ordering) {
  ValidityReport report;
  const PixelGraph graph = PixelGraph::build(mesh, partition);
  const int n = partition.pixel_count();
  report.fragmented = fragmented_pixels(mesh, partition);

  auto fail = [&](int m, std::string why) {
    if (report.valid) {
      report.valid = false;
      report.first_failure = m;
      report.reason = std::move(why);
    }
  };

  if (ordering.empty()) fail(1, "empty ordering");
  std::vector<bool> member(n, false);
  for (std::size_t i = 0; i < ordering.size(); ++i) {
    const int m = static_cast<int>(i) + 1;
    const int p = ordering[i];
    if (p < 0 || p >= n) {
      fail(m, "pixel index " + std::to_string(p) + " out of range");
      report.prefix_connected.push_back(false);
      continue;
    }
    if (member[p]) fail(m, "pixel " + std::to_string(p) + " repeated");
    member[p] = true;
    if (i == 0) {
      report.first_touches_gamma = graph.touches_gamma[p];
      if (!report.first_touches_gamma) fail(1, "first pixel " + std::to_string(p) + " does not touch Gamma");
    }
    const bool ok = graph.connected(member);
    report.prefix_connected.push_back(ok);
    if (!ok) fail(m, "Q_" + std::to_string(m) + " is not edge-connected");
    if (std::find(report.fragmented.begin(), report.fragmented.end(), p) != report.fragmented.end())
      fail(m, "pixel " + std::to_string(p) + " has disconnected interior");
  }
  return report;
}

inline ValidityReport validate_ordering(const Partition& partition, const Mesh& mesh) {
  return validate_ordering(partition, mesh, partition.order());
}

/// Number of pixel steps from each pixel to the nearest Gamma-touching pixel (-1 if unreachable).
inline std::vector<int> gamma_distance(const PixelGraph& graph) {
  const int n = static_cast<int>(graph.neighbors.size());
  std::vector<int> dist(n, -1);
  std::queue<int> queue;
  for (int p = 0; p < n; ++p)
    if (graph.touches_gamma[p]) {
      dist[p] = 0;
      queue.push(p);
    }
  while (!queue.empty()) {
    const int p = queue.front();
    queue.pop();
    for (int q : graph.neighbors[p])
      if (dist[q] < 0) {
        dist[q] = dist[p] + 1;
        queue.push(q);
      }
  }
  return dist;
}

/// Layer ordering: repeatedly add the frontier pixel closest to Gamma
/// (smallest index on ties). Every prefix is connected by construction.
inline std::vector<int> canonical_order(const Mesh& mesh, const Partition& partition) {
  const PixelGraph graph = PixelGraph::build(mesh, partition);
  const std::vector<int> dist = gamma_distance(graph);
  const int n = partition.pixel_count();
  std::vector<bool> taken(n, false);
  std::vector<bool> frontier(n, false);
  for (int p = 0; p < n; ++p) frontier[p] = graph.touches_gamma[p];
  std::vector<int> order;
  while (static_cast<int>(order.size()) < n) {
    int best = -1;
    for (int p = 0; p < n; ++p) {
      if (taken[p] || !frontier[p] || dist[p] < 0) continue;
      if (best < 0 || dist[p] < dist[best]) best = p;
      if (order.empty()) break;  // smallest-index Gamma pixel starts the sweep
    }
    if (best < 0) throw GeometryError("partition has pixels unreachable from Gamma");
    taken[best] = true;
    order.push_back(best);
    if (order.size() == 1) std::fill(frontier.begin(), frontier.end(), false);
    for (int q : graph.neighbors[best]) frontier[q] = true;
  }
  return order;
}

/// Shortest pixel path from Gamma to the region of interest, then the ROI itself.
/// Pixels off that path are left out of the returned ordering.
inline std::vector<int> roi_order(const Partition& partition, const Mesh& mesh, std::span<const int> roi) {
  if (roi.empty()) throw ConfigError("empty region of interest");
  const PixelGraph graph = PixelGraph::build(mesh, partition);
  const int n = partition.pixel_count();
  std::vector<bool> in_roi(n, false);
  for (int p : roi) {
    if (p < 0 || p >= n) throw ConfigError("ROI pixel " + std::to_string(p) + " out of range");
    in_roi[p] = true;
  }

  std::vector<int> order;
  std::vector<bool> taken(n, false);

  // BFS from `sources` (in index order) to the nearest untaken ROI pixel; returns path excluding taken pixels.
  auto shortest_path = [&](const std::vector<int>& sources) -> std::vector<int> {
    std::vector<int> parent(n, -2);
    std::queue<int> queue;
    for (int s : sources) {
      parent[s] = -1;
      queue.push(s);
    }
    while (!queue.empty()) {
      // Process one BFS level at a time so ties resolve to the smallest pixel index.
      std::vector<int> level;
      for (std::size_t k = queue.size(); k > 0; --k) {
        level.push_back(queue.front());
        queue.pop();
      }
      int hit = -1;
      for (int p : level)
        if (in_roi[p] && !taken[p] && (hit < 0 || p < hit)) hit = p;
      if (hit >= 0) {
        std::vector<int> path;
        for (int p = hit; p >= 0; p = parent[p])
          if (!taken[p]) path.push_back(p);
        std::reverse(path.begin(), path.end());
        return path;
      }
      std::sort(level.begin(), level.end());
      for (int p : level)
        for (int q : graph.neighbors[p])
          if (parent[q] == -2) {
            parent[q] = p;
            queue.push(q);
          }
    }
    return {};
  };

  std::vector<int> sources;
  for (int p = 0; p < n; ++p)
    if (graph.touches_gamma[p]) sources.push_back(p);
  auto path = shortest_path(sources);
  if (path.empty()) throw GeometryError("region of interest is unreachable from Gamma");
  for (int p : path) {
    taken[p] = true;
    order.push_back(p);
  }

  auto roi_remaining = [&] {
    for (int p = 0; p < n; ++p)
      if (in_roi[p] && !taken[p]) return true;
    return false;
  };
  while (roi_remaining()) {
    int next = -1;
    for (int p = 0; p < n && next < 0; ++p) {
      if (!in_roi[p] || taken[p]) continue;
      for (int q : graph.neighbors[p])
        if (taken[q]) {
          next = p;
          break;
        }
    }
    if (next >= 0) {
      taken[next] = true;
      order.push_back(next);
      continue;
    }
    std::vector<int> current(order.begin(), order.end());
    std::sort(current.begin(), current.end());
    auto bridge = shortest_path(current);
    if (bridge.empty()) throw GeometryError("region of interest is unreachable from Gamma");
    for (int p : bridge) {
      taken[p] = true;
      order.push_back(p);
    }
  }
  return order;
}

/// Unit-square mesh of right triangles whose edges follow the pixel grid.
inline std::pair<Mesh, Partition> build_structured_mesh(GridLayout grid, double h, SideSet gamma) {
  if (gamma.empty()) throw ConfigError("no Gamma side selected");
  if (grid.rows < 1 || grid.cols < 1) throw ConfigError("grid needs at least one row and one column");
  const double side_x = 1.0 / grid.cols;
  const double side_y = 1.0 / grid.rows;
  if (!(h > 0.0) || h > std::min(side_x, side_y) * (1.0 + 1e-12))
    throw MeshError("edge length h must lie in (0, pixel side]");
  auto cells_per_pixel = [h](double side) {
    const double ratio = side / h;
    return std::max(1, static_cast<int>(std::ceil(ratio - 1e-9 * ratio)));
  };
  const int kx = cells_per_pixel(side_x);
  const int ky = cells_per_pixel(side_y);
  const int nx = grid.cols * kx;
  const int ny = grid.rows * ky;

  std::vector<Point> vertices;
  vertices.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) vertices.push_back({static_cast<double>(i) / nx, static_cast<double>(j) / ny});
  auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };

  std::vector<std::array<int, 3>> triangles;
  std::vector<int> element_pixel;
  triangles.reserve(2 * static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int pixel = grid.pixel(j / ky, i / kx);
      triangles.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
      triangles.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
      element_pixel.push_back(pixel);
      element_pixel.push_back(pixel);
    }

  auto tag = [&](Side s) { return gamma.contains(s) ? BoundaryTag::Gamma : BoundaryTag::Insulated; };
  std::vector<BoundaryEdge> boundary;
  for (int i = 0; i < nx; ++i) boundary.push_back({vid(i, 0), vid(i + 1, 0), tag(Side::Bottom)});
  for (int j = 0; j < ny; ++j) boundary.push_back({vid(nx, j), vid(nx, j + 1), tag(Side::Right)});
  for (int i = nx; i > 0; --i) boundary.push_back({vid(i, ny), vid(i - 1, ny), tag(Side::Top)});
  for (int j = ny; j > 0; --j) boundary.push_back({vid(0, j), vid(0, j - 1), tag(Side::Left)});

  Mesh mesh(std::move(vertices), std::move(triangles), std::move(boundary));
  Partition raw(grid.rows * grid.cols, element_pixel, {}, grid);
  auto order = canonical_order(mesh, raw);
  return {std::move(mesh), raw.with_order(std::move(order))};
}

/// Uniform red refinement: every triangle splits into four, children keep the parent's pixel.
inline std::pair<Mesh, Partition> refine_mesh(const Mesh& mesh, const Partition& partition) {
  std::vector<Point> vertices(mesh.vertices().begin(), mesh.vertices().end());
  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    const auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const int id = static_cast<int>(vertices.size());
    vertices.push_back({0.5 * (vertices[a].x + vertices[b].x), 0.5 * (vertices[a].y + vertices[b].y)});
    midpoint.emplace(key, id);
    return id;
  };

  std::vector<std::array<int, 3>> triangles;
  std::vector<int> element_pixel;
  triangles.reserve(4 * static_cast<std::size_t>(mesh.triangle_count()));
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto [a, b, c] = mesh.triangles()[t];
    const int ab = mid(a, b);
    const int bc = mid(b, c);
    const int ca = mid(c, a);
    triangles.push_back({a, ab, ca});
    triangles.push_back({ab, b, bc});
    triangles.push_back({ca, bc, c});
    triangles.push_back({ab, bc, ca});
    for (int k = 0; k < 4; ++k) element_pixel.push_back(partition.pixel_of(t));
  }

  std::vector<BoundaryEdge> boundary;
  for (const BoundaryEdge& e : mesh.boundary_edges()) {
    const int m = mid(e.a, e.b);
    boundary.push_back({e.a, m, e.tag});
    boundary.push_back({m, e.b, e.tag});
  }

  Mesh fine(std::move(vertices), std::move(triangles), std::move(boundary), mesh.refinement_level() + 1);
  Partition part(partition.pixel_count(), std::move(element_pixel),
                 std::vector<int>(partition.order().begin(), partition.order().end()), partition.grid());
  return {std::move(fine), std::move(part)};
}

// Plain-text mesh interchange:
//   mesh <n_vertices> <n_triangles> <n_boundary_edges>
//   v x y            (per vertex)
//   t i j k p        (per triangle, p = pixel)
//   b i j G|I        (per boundary edge)
// Indices are 0-based; blank lines and '#' comments are ignored.

inline std::pair<Mesh, Partition> read_mesh(std::istream& in) {
  std::string line;
  auto next_line = [&]() -> std::optional<std::istringstream> {
    while (std::getline(in, line)) {
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      return std::istringstream(line);
    }
    return std::nullopt;
  };
  auto header = next_line();
  std::string word;
  long nv = 0, nt = 0, nb = 0;
  if (!header || !(*header >> word >> nv >> nt >> nb) || word != "mesh" || nv < 3 || nt < 1 || nb < 3)
    throw MeshError("mesh file: bad header line");

  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> element_pixel;
  std::vector<BoundaryEdge> boundary;
  int max_pixel = -1;
  while (auto ls = next_line()) {
    std::string kind;
    *ls >> kind;
    if (kind == "v") {
      Point p;
      if (!(*ls >> p.x >> p.y)) throw MeshError("mesh file: bad vertex line: " + line);
      vertices.push_back(p);
    } else if (kind == "t") {
      std::array<int, 3> tri{};
      int pixel = 0;
      if (!(*ls >> tri[0] >> tri[1] >> tri[2] >> pixel)) throw MeshError("mesh file: bad triangle line: " + line);
      triangles.push_back(tri);
      element_pixel.push_back(pixel);
      max_pixel = std::max(max_pixel, pixel);
    } else if (kind == "b") {
      BoundaryEdge e;
      std::string tag;
      if (!(*ls >> e.a >> e.b >> tag) || (tag != "G" && tag != "I"))
        throw MeshError("mesh file: bad boundary line: " + line);
      e.tag = tag == "G" ? BoundaryTag::Gamma : BoundaryTag::Insulated;
      boundary.push_back(e);
    } else {
      throw MeshError("mesh file: unknown record '" + kind + "'");
    }
  }
  if (static_cast<long>(vertices.size()) != nv || static_cast<long>(triangles.size()) != nt ||
      static_cast<long>(boundary.size()) != nb)
    throw MeshError("mesh file: record counts do not match header");
  Mesh mesh(std::move(vertices), std::move(triangles), std::move(boundary));
  Partition partition(max_pixel + 1, std::move(element_pixel));
  return {std::move(mesh), std::move(partition)};
}

inline void write_mesh(std::ostream& out, const Mesh& mesh, const Partition& partition) {
  const auto old_precision = out.precision(17);
  out << "mesh " << mesh.vertex_count() << ' ' << mesh.triangle_count() << ' ' << mesh.boundary_edges().size() << '\n';
  for (const Point& p : mesh.vertices()) out << "v " << p.x << ' ' << p.y << '\n';
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles()[t];
    out << "t " << tri[0] << ' ' << tri[1] << ' ' << tri[2] << ' ' << partition.pixel_of(t) << '\n';
  }
  for (const BoundaryEdge& e : mesh.boundary_edges())
    out << "b " << e.a << ' ' << e.b << ' ' << (e.tag == BoundaryTag::Gamma ? 'G' : 'I') << '\n';
  out.precision(old_precision);
}

}  // namespace eitrecon
