#include "adisc/bishop.hpp"
#include "adisc/errors.hpp"
#include "adisc/rng.hpp"

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace adisc {
namespace {

const Arc kGamma0{oracle::kPi / 4, 3 * oracle::kPi / 4};

Polynomial mono(int n_vars, MultiIndex e, double c) {
  Polynomial p(n_vars);
  p.add_term(e, c);
  return p;
}

PolyMap quad_h() {
  Polynomial h1 = mono(2, {2, 0}, 1.0);
  h1.add_term({0, 2}, 0.5);
  Polynomial h2 = mono(2, {1, 1}, 1.0);
  h2.add_term({2, 0}, -0.3);
  return PolyMap(2, {h1, h2});
}

DiscParams params(double c1, double c2, double t1, double t2) {
  DiscParams p = DiscParams::zero(2);
  p.c << c1, c2;
  p.t << t1, t2;
  return p;
}

struct Fixture {
  CircleGrid grid{1024};
  CutoffV v = default_cutoff(grid, kGamma0);
  TotallyRealGraph flat{PolyMap::zero(2, 2), 0.5};
  TotallyRealGraph quad{quad_h(), 0.5};
};

TEST(Bishop, FlatClosedForm) {
  Fixture f;
  const DiscParams p = params(0.02, -0.01, 0.03, 0.04);
  const BishopSolution s = solve_bishop(f.flat, f.v, p);
  EXPECT_EQ(s.iterations, 1);
  const GridFn cv = conjugate(f.v.samples());
  for (int j = 0; j < f.grid.size(); ++j) {
    for (int k = 0; k < 2; ++k) {
      EXPECT_NEAR(s.X.values()(j, k), p.c[k] - p.t[k] * cv.values()(j, 0), 1e-16);
    }
  }
}

TEST(Bishop, FlatClosedFormAgainstDirectConjugate) {
  const CircleGrid grid(256);
  const CutoffV v = default_cutoff(grid, kGamma0);
  const TotallyRealGraph flat(PolyMap::zero(1, 1), 0.5);
  DiscParams p = DiscParams::zero(1);
  p.c << 0.1;
  p.t << -0.2;
  const BishopSolution s = solve_bishop(flat, v, p);
  std::vector<double> vals(v.samples().values().data(), v.samples().values().data() + 256);
  const std::vector<double> cv = oracle::conjugate_direct(vals);
  for (int j = 0; j < 256; ++j) EXPECT_NEAR(s.X.values()(j, 0), 0.1 + 0.2 * cv[static_cast<std::size_t>(j)], 1e-14);
}

TEST(Bishop, ZeroTCollapsesToConstant) {
  Fixture f;
  const DiscParams p = params(0.03, -0.02, 0.0, 0.0);
  const BishopSolution s = solve_bishop(f.quad, f.v, p);
  EXPECT_LE(s.iterations, 2);
  EXPECT_LE(s.residual, 1e-15);
  for (int j = 0; j < f.grid.size(); ++j) {
    EXPECT_EQ(s.X.values()(j, 0), 0.03);
    EXPECT_EQ(s.X.values()(j, 1), -0.02);
  }
  const AnalyticDisc d(s, f.v);
  EXPECT_EQ(attachment_error(d, f.quad), 0.0);
  EXPECT_LE(max_norm(center(d) - p.c), 1e-16);
  const CVec phi = d.evaluate_schwarz(DiscPoint{0.4, 1.0});
  const Vec h = f.quad.h(p.c);
  for (int k = 0; k < 2; ++k) EXPECT_LE(std::abs(phi[k] - Complex(p.c[k], h[k])), 1e-15);
}

TEST(Bishop, QuadraticConvergesAndDoubles) {
  Fixture f;
  const DiscParams p = params(0.01, 0.0, 0.0, 0.02);
  const BishopSolution s = solve_bishop(f.quad, f.v, p, BishopOptions{1e-12, 500, 5});
  EXPECT_LE(s.residual, 1e-12);
  EXPECT_LE(s.iterations, 50);

  const CircleGrid g2(2048);
  const CutoffV v2 = default_cutoff(g2, kGamma0);
  const BishopSolution s2 = solve_bishop(f.quad, v2, p);
  double diff = 0.0;
  for (int j = 0; j < 1024; ++j) diff = std::max(diff, (s.X.values().row(j) - s2.X.values().row(2 * j)).cwiseAbs().maxCoeff());
  EXPECT_LE(diff, 1e-8);
}

TEST(Bishop, FixedPointAgainstDirectConjugate) {
  // Independent residual X - c + conj(h(X) + t v) with the direct kernel sum.
  const CircleGrid grid(256);
  const CutoffV v = default_cutoff(grid, kGamma0);
  const TotallyRealGraph quad(quad_h(), 0.5);
  const DiscParams p = params(0.02, -0.01, 0.03, 0.02);
  const BishopSolution s = solve_bishop(quad, v, p);
  for (int k = 0; k < 2; ++k) {
    std::vector<double> g(256);
    for (int j = 0; j < 256; ++j) {
      g[static_cast<std::size_t>(j)] = quad.h(s.X.at(j))[k] + p.t[k] * v.samples().values()(j, 0);
    }
    const std::vector<double> cg = oracle::conjugate_direct(g);
    for (int j = 0; j < 256; ++j) {
      EXPECT_NEAR(s.X.values()(j, k), p.c[k] - cg[static_cast<std::size_t>(j)], 1e-12);
    }
  }
}

TEST(Bishop, AssembledFlatDiscMatchesSchwarz) {
  Fixture f;
  const DiscParams p = params(0.02, -0.01, 0.03, 0.04);
  const AnalyticDisc d(solve_bishop(f.flat, f.v, p), f.v);
  const DiscPoint z{0.7, 4.0};
  const CVec phi = d.evaluate_schwarz(z);
  const Complex sv = schwarz(f.v.samples(), z)[0];
  for (int k = 0; k < 2; ++k) {
    EXPECT_LE(std::abs(phi[k] - (p.c[k] + Complex(0, 1) * p.t[k] * sv)), 1e-12);
  }
  // First form at the same point from brute-force Poisson quadrature of the trace.
  const double ref = oracle::poisson_quadrature(oracle::cutoff, z.r, z.theta, 1 << 14);
  EXPECT_NEAR(d.evaluate(z)[1].imag(), p.t[1] * ref, 1e-12);
  EXPECT_EQ(attachment_error(d, f.flat), 0.0);
  EXPECT_LE(max_norm(center(d) - p.c), 1e-15);
}

TEST(Bishop, QuadraticDiscIsHolomorphicAndAttached) {
  Fixture f;
  const DiscParams p = params(0.03, 0.02, -0.02, 0.04);
  const AnalyticDisc d(solve_bishop(f.quad, f.v, p), f.v);
  EXPECT_LE(d.cauchy_riemann_residual(0.9), 1e-8);
  EXPECT_LE(attachment_error(d, f.quad), 1e-10);
  EXPECT_LE(max_norm(center(d) - p.c), 1e-12);
}

TEST(Bishop, ContractionCertificate) {
  Fixture f;
  const ParamBox box{Vec::Constant(2, 0.05), Vec::Constant(2, 0.05)};
  const ContractionCertificate flat = contraction_certify(f.flat, f.v, box);
  EXPECT_EQ(flat.factor, 0.0);
  EXPECT_EQ(flat.halvings, 0);
  EXPECT_EQ(flat.box.c_half, box.c_half);

  const ContractionCertificate quad = contraction_certify(f.quad, f.v, box);
  EXPECT_LT(quad.factor, 0.5);

  const PolyMap steep(2, {mono(2, {2, 0}, 1e3), mono(2, {0, 2}, 1e3)});
  const ContractionCertificate s = contraction_certify(TotallyRealGraph(steep, 0.5), f.v, box);
  EXPECT_GE(s.halvings, 2);
  EXPECT_LT(s.factor, 0.5);

  CertifyOptions strict;
  strict.max_halvings = 1;
  try {
    contraction_certify(f.quad, f.v, ParamBox{Vec::Constant(2, 2.0), Vec::Constant(2, 2.0)}, strict);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BoxCollapsed);
  }
}

TEST(Bishop, SweepFlatOneDimensional) {
  const CircleGrid grid(256);
  const CutoffV v = default_cutoff(grid, kGamma0);
  const TotallyRealGraph flat(PolyMap::zero(1, 1), 0.5);
  const SweepResult r = sweep(flat, v, ParamBox{Vec::Constant(1, 0.1), Vec::Constant(1, 0.1)}, 3);
  ASSERT_EQ(r.entries.size(), 9u);
  EXPECT_EQ(r.converged(), 9u);
  for (const auto& e : r.entries) EXPECT_EQ(e.solution->residual, 0.0);
}

TEST(Bishop, SweepCertifiedQuadraticBox) {
  Fixture f;
  const ContractionCertificate cert =
      contraction_certify(f.quad, f.v, ParamBox{Vec::Constant(2, 0.05), Vec::Constant(2, 0.05)});
  const SweepResult r = sweep(f.quad, f.v, cert.box, 3);
  EXPECT_EQ(r.entries.size(), 81u);
  EXPECT_EQ(r.converged(), 81u);
}

TEST(Bishop, SweepStraddlingLargeBoxReportsOuterFailures) {
  Fixture f;
  const SweepResult r = sweep(f.quad, f.v, ParamBox{Vec::Constant(2, 0.6), Vec::Constant(2, 0.02)}, 3);
  int escapes = 0;
  for (const auto& e : r.entries) {
    if (max_norm(e.params.c) == 0.0) EXPECT_TRUE(e.solution.has_value());
    if (e.error_kind && *e.error_kind == ErrorKind::DomainEscape) ++escapes;
  }
  EXPECT_GT(escapes, 0);
}

TEST(Bishop, InvalidBox) {
  EXPECT_THROW((ParamBox{Vec::Constant(2, -1.0), Vec::Constant(2, 0.1)}.validate()), Error);
}

// Properties over random parameters in the certified box.

TEST(BishopProperty, ResidualAttachmentCentering) {
  Fixture f;
  const ContractionCertificate cert =
      contraction_certify(f.quad, f.v, ParamBox{Vec::Constant(2, 0.05), Vec::Constant(2, 0.05)});
  CounterRng rng(2024, 1);
  const double tol = 1e-12;
  for (int trial = 0; trial < 20; ++trial) {
    DiscParams p = DiscParams::zero(2);
    for (int i = 0; i < 2; ++i) p.c[i] = rng.uniform(-cert.box.c_half[i], cert.box.c_half[i]);
    for (int i = 0; i < 2; ++i) p.t[i] = rng.uniform(-cert.box.t_half[i], cert.box.t_half[i]);
    const BishopSolution s = solve_bishop(f.quad, f.v, p, BishopOptions{tol, 500, 5});
    EXPECT_LE(s.residual, tol);
    const AnalyticDisc d(s, f.v);
    EXPECT_LE(attachment_error(d, f.quad), 100 * tol);
    EXPECT_LE(max_norm(center(d) - p.c), 10 * tol);
  }
}

TEST(BishopProperty, ZeroTDependsOnlyOnC) {
  Fixture f;
  const DiscParams p0 = params(0.01, -0.02, 0.0, 0.0);
  const double h = 1e-6;
  for (int j = 0; j < 2; ++j) {
    DiscParams pp = p0, pm = p0;
    pp.c[j] += h;
    pm.c[j] -= h;
    const Mat dX = (solve_bishop(f.quad, f.v, pp).X.values() - solve_bishop(f.quad, f.v, pm).X.values()) / (2 * h);
    for (int k = 0; k < 2; ++k) {
      EXPECT_LE((dX.col(k).array() - (k == j ? 1.0 : 0.0)).abs().maxCoeff(), 1e-6);
    }
  }
}

TEST(BishopProperty, ResolutionDoubling) {
  Fixture f;
  const CircleGrid g2(2048);
  const CutoffV v2 = default_cutoff(g2, kGamma0);
  CounterRng rng(77, 2);
  for (int trial = 0; trial < 4; ++trial) {
    const DiscParams p = params(rng.uniform(-0.03, 0.03), rng.uniform(-0.03, 0.03), rng.uniform(-0.03, 0.03),
                                rng.uniform(-0.03, 0.03));
    const Mat a = solve_bishop(f.quad, f.v, p).X.values();
    const Mat b = solve_bishop(f.quad, v2, p).X.values();
    double diff = 0.0;
    for (int j = 0; j < 1024; ++j) diff = std::max(diff, (a.row(j) - b.row(2 * j)).cwiseAbs().maxCoeff());
    EXPECT_LE(diff, 1e-8);
  }
}

}  // namespace
}  // namespace adisc
