#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "eitrecon/reconstruction.hpp"

using namespace eitrecon;

namespace {

struct Scenario {
  std::pair<Mesh, Partition> domain;
  NDMatrix measured;

  Scenario(GridLayout grid, double h, SideSet gamma, const std::vector<double>& sigma, int m)
      : domain(build_structured_mesh(grid, h, gamma)) {
    const BoundaryBasis basis = build_basis(domain.first, m);
    measured = assemble_nd(assemble_system(domain.first, domain.second, finite_field(sigma)), basis, m);
  }

  ReconProblem problem(ReconSettings s = {}, std::optional<std::vector<int>> ordering = std::nullopt) const {
    return ReconProblem(domain.first, domain.second, measured, s, std::move(ordering));
  }
};

ReconSettings with(TestVariant v) {
  ReconSettings s;
  s.variant = v;
  return s;
}

void expect_all(const ReconResult& r, double c, double tol) {
  ASSERT_EQ(r.status, PixelStatus::Converged);
  for (const PixelResult& p : r.steps) EXPECT_NEAR(p.value / c, 1.0, tol) << "pixel " << p.pixel;
}

}  // namespace

TEST(TestField, LastStepHasNoExtremePixels) {
  const Scenario s({2, 2}, 0.125, SideSet{Side::Bottom}, {1, 1, 1, 1}, 4);
  const ReconProblem p = s.problem();
  const std::vector<double> known{1, 2, 0.5};
  const ConductivityField f = test_field(p, 4, 3.0, known);
  for (const auto& c : f) EXPECT_TRUE(c.is_finite());
  EXPECT_EQ(f[p.ordering()[3]].value(), 3.0);
  EXPECT_THROW(test_field(p, 2, 1.0, known), ConfigError);
  EXPECT_THROW(test_field(p, 5, 1.0, std::vector<double>{1, 1, 1, 1}), ConfigError);
}

TEST(TestField, LowerFirstStepScalesWithT) {
  const Scenario s({2, 2}, 0.125, SideSet{Side::Bottom}, {1, 1, 1, 1}, 4);
  const ReconProblem p = s.problem(with(TestVariant::Lower));
  const NDMatrix a1 = test_matrix(p, 1, 1.0, {});
  const NDMatrix a3 = test_matrix(p, 1, 3.0, {});
  EXPECT_LT((a1.entries - 3.0 * a3.entries).norm(), 1e-10 * a1.entries.norm());
}

TEST(TestField, UpperComplementIsGluedPerComponent) {
  const Scenario s({2, 2}, 0.125, SideSet{Side::Bottom}, {1, 1, 1, 1}, 4);
  const ReconProblem p = s.problem();
  ASSERT_EQ(p.ordering(), (std::vector<int>{0, 1, 2, 3}));
  const Mesh& mesh = s.domain.first;
  const LinearSystem system = assemble_system(mesh, s.domain.second, test_field(p, 2, 1.0, std::vector<double>{1.0}));
  std::set<int> top;
  for (int t = 0; t < mesh.triangle_count(); ++t)
    if (s.domain.second.pixel_of(t) >= 2)
      for (int v : mesh.triangles()[t]) top.insert(v);
  EXPECT_EQ(system.dof_count(), mesh.vertex_count() - static_cast<int>(top.size()) + 1);
}

TEST(PixelBisect, SinglePixelConstant) {
  for (double c : {0.3, 1.0, 7.0, 250.0})
    for (auto v : {TestVariant::Upper, TestVariant::Lower}) {
      const Scenario s({1, 1}, 1.0 / 16.0, SideSet{Side::Bottom}, {c}, 6);
      const ReconProblem p = s.problem(with(v));
      const PixelResult r = pixel_bisect(p, 1, {});
      EXPECT_EQ(r.status, PixelStatus::Converged);
      EXPECT_NEAR(r.value / c, 1.0, 1e-4) << "c=" << c << ' ' << to_string(v);
      EXPECT_LE((r.t_hi - r.t_lo) / r.t_lo, 1e-4);
    }
}

TEST(PixelBisect, BracketDiagnostics) {
  const Scenario s({2, 2}, 1.0 / 32.0, SideSet{Side::Bottom}, {1, 2, 0.5, 3}, 16);
  const ReconProblem p = s.problem();
  const PixelResult r = pixel_bisect(p, 1, {});
  ASSERT_EQ(r.status, PixelStatus::Converged);
  EXPECT_LE((r.t_hi - r.t_lo) / r.t_lo, p.settings().tol_bisect);
  const double tol = p.tol_loewner();
  const bool at_lo = variant_verdict(TestVariant::Upper, p.measured().entries, test_matrix(p, 1, r.t_lo, {}).entries, tol).holds;
  const bool at_hi = variant_verdict(TestVariant::Upper, p.measured().entries, test_matrix(p, 1, r.t_hi, {}).entries, tol).holds;
  EXPECT_FALSE(at_lo);
  EXPECT_TRUE(at_hi);
  EXPECT_EQ(r.value, r.t_hi);
  EXPECT_GE(r.lambda_min, -tol * p.measured().entries.norm());
  EXPECT_GT(r.evaluations, r.expansions);
}

TEST(PixelBisect, WarmStartIndependent) {
  const Scenario s({2, 2}, 1.0 / 32.0, SideSet{Side::Bottom}, {1, 2, 0.5, 3}, 16);
  const ReconProblem p = s.problem();
  const std::vector<double> known{1.0};
  const double ref = pixel_bisect(p, 2, known, 1.0).value;
  for (double start : {1e-5, 0.01, 3.0, 400.0, 1e5}) EXPECT_NEAR(pixel_bisect(p, 2, known, start).value / ref, 1.0, 1e-4);
  EXPECT_NEAR(ref / 2.0, 1.0, 1e-4);
}

TEST(PixelBisect, PredicateFlipsOnce) {
  const Scenario s({2, 2}, 1.0 / 32.0, SideSet{Side::Bottom}, {1, 2, 0.5, 3}, 16);
  for (int m : {1, 2}) {
    const ReconProblem p = s.problem();
    const std::vector<double> known(m - 1, 1.0);
    const double gamma = m == 1 ? 1.0 : 2.0;
    int flips = 0;
    bool prev = false;
    for (int i = 0; i < 50; ++i) {
      const double t = gamma * std::pow(10.0, -1.0 + 2.0 * i / 49.0);
      const bool h = loewner_geq(p.measured().entries, test_matrix(p, m, t, known).entries, p.tol_loewner()).holds;
      if (i > 0 && h != prev) ++flips;
      if (i > 0) EXPECT_TRUE(h || !prev) << "predicate went true -> false at t=" << t;
      prev = h;
    }
    EXPECT_EQ(flips, 1);
    EXPECT_TRUE(prev);
  }
}

TEST(PixelBisect, BracketCapHit) {
  const Scenario s({1, 1}, 1.0 / 16.0, SideSet{Side::Bottom}, {1e7}, 4);
  const ReconProblem p = s.problem();
  const PixelResult r = pixel_bisect(p, 1, {});
  EXPECT_EQ(r.status, PixelStatus::BracketCapHit);
  EXPECT_EQ(r.value, 1e6);
}

TEST(Reconstruct, GammaTouchingPixelsAreExact) {
  for (double c : {0.3, 1.0, 7.0}) {
    const Scenario row({1, 3}, 1.0 / 48.0, SideSet{Side::Bottom}, {c, c, c}, 16);
    expect_all(reconstruct(row.problem()), c, 1e-4);
    // Gamma of length 4 needs more basis functions for the same resolution per pixel.
    const Scenario ring({2, 2}, 1.0 / 48.0, SideSet{Side::Bottom, Side::Right, Side::Top, Side::Left},
                        {c, c, c, c}, 32);
    expect_all(reconstruct(ring.problem()), c, 1e-4);
  }
}

TEST(Reconstruct, ColumnBothVariantsAgree) {
  // Two stacked pixels with Gamma at the bottom: the lower test never deletes Gamma.
  const Scenario s({2, 1}, 1.0 / 32.0, SideSet{Side::Bottom}, {0.7, 2.5}, 16);
  const ReconResult up = reconstruct(s.problem(with(TestVariant::Upper)));
  const ReconResult lo = reconstruct(s.problem(with(TestVariant::Lower)));
  ASSERT_EQ(up.status, PixelStatus::Converged);
  ASSERT_EQ(lo.status, PixelStatus::Converged);
  for (int p = 0; p < 2; ++p) EXPECT_NEAR(*up.value(p) / *lo.value(p), 1.0, 1e-2) << "pixel " << p;
  EXPECT_NEAR(*up.value(0) / 0.7, 1.0, 1e-4);
  EXPECT_NEAR(*lo.value(0) / 0.7, 1.0, 1e-4);
}

TEST(Reconstruct, InteriorPixelFlipsBelowTruth) {
  // Pixels away from Gamma are weakly visible: the tolerance lets the
  // predicate hold somewhat below the true value.
  const Scenario s({2, 2}, 1.0 / 32.0, SideSet{Side::Bottom}, {1, 1, 1, 1}, 16);
  const ReconProblem p = s.problem();
  const PixelResult r = pixel_bisect(p, 3, std::vector<double>{1.0, 1.0});
  EXPECT_EQ(r.status, PixelStatus::Converged);
  EXPECT_LE(r.value, 1.0 + 1e-4);
  EXPECT_GT(r.value, 0.9);
}

TEST(Reconstruct, LowerTestDegenerateWhenGammaIsDeleted) {
  const Scenario s({2, 2}, 1.0 / 16.0, SideSet{Side::Bottom}, {1, 1, 1, 1}, 8);
  const ReconResult r = reconstruct(s.problem(with(TestVariant::Lower)));
  EXPECT_EQ(r.status, PixelStatus::BracketCapHit);
  EXPECT_EQ(r.steps.size(), 1u);
  EXPECT_FALSE(r.value(0).has_value());
}

TEST(Reconstruct, RoiOrderingIsPartial) {
  const Scenario s({3, 3}, 1.0 / 64.0, SideSet{Side::Bottom}, std::vector<double>(9, 1.0), 32);
  const std::vector<int> order = roi_order(s.domain.second, s.domain.first, std::vector<int>{4});
  const ReconResult r = reconstruct(s.problem({}, order));
  ASSERT_EQ(r.steps.size(), 2u);
  EXPECT_EQ(r.steps[0].pixel, 1);
  EXPECT_EQ(r.steps[1].pixel, 4);
  EXPECT_NEAR(*r.value(1), 1.0, 1e-4);
  EXPECT_FALSE(r.value(0).has_value());
}

TEST(Reconstruct, RejectsInvalidOrderingAndSettings) {
  const Scenario s({2, 2}, 0.125, SideSet{Side::Bottom}, {1, 1, 1, 1}, 4);
  EXPECT_THROW(s.problem({}, std::vector<int>{2, 0, 1, 3}), GeometryError);
  ReconSettings bad;
  bad.tol_bisect = 0.0;
  EXPECT_THROW(s.problem(bad), ConfigError);
  bad = {};
  bad.t_min = 10.0;
  bad.t_max = 1.0;
  EXPECT_THROW(s.problem(bad), ConfigError);
}

TEST(MSweep, SinglePixelScaling) {
  const Scenario s({1, 1}, 1.0 / 32.0, SideSet{Side::Bottom}, {1.0}, 12);
  const ReconProblem p = s.problem();
  const std::vector<int> orders{1, 2, 4, 8, 12};
  for (const SweepRow& row : m_sweep(p, 1, 0.5, {}, orders)) {
    const double lmax = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                            p.measured().entries.topLeftCorner(row.order, row.order)).eigenvalues().maxCoeff();
    EXPECT_NEAR(row.lambda_min, -lmax, 1e-10 * lmax);
    EXPECT_FALSE(row.holds);
  }
  for (const SweepRow& row : m_sweep(p, 1, 1.0, {}, orders)) EXPECT_TRUE(row.holds);
}

TEST(MSweep, PassingSideHoldsForEveryOrder) {
  const Scenario s({2, 2}, 1.0 / 32.0, SideSet{Side::Bottom}, {1, 2, 0.5, 3}, 16);
  const ReconProblem p = s.problem();
  std::vector<int> orders(16);
  for (int k = 0; k < 16; ++k) orders[k] = k + 1;
  for (double delta : {0.0, 0.1, 1.0}) {
    double prev = std::numeric_limits<double>::infinity();
    for (const SweepRow& row : m_sweep(p, 2, 2.0 * (1.0 + delta), std::vector<double>{1.0}, orders)) {
      EXPECT_TRUE(row.holds) << "M=" << row.order << " delta=" << delta;
      EXPECT_LE(row.lambda_min, prev + 1e-15);
      prev = row.lambda_min;
    }
  }
  EXPECT_THROW(m_sweep(p, 1, 1.0, {}, std::vector<int>{17}), BasisError);
}
