#include "adisc/errors.hpp"
#include "adisc/geometry.hpp"
#include "adisc/polynomial.hpp"
#include "adisc/rng.hpp"

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace adisc {
namespace {

Polynomial mono(int n_vars, MultiIndex e, double c) {
  Polynomial p(n_vars);
  p.add_term(e, c);
  return p;
}

Polynomial sum(std::initializer_list<Polynomial> ps) {
  Polynomial out(ps.begin()->n_vars());
  for (const auto& p : ps)
    for (const auto& [e, c] : p.terms()) out.add_term(e, c);
  return out;
}

PolyMap quad_h() {
  return PolyMap(2, {sum({mono(2, {2, 0}, 1.0), mono(2, {0, 2}, 0.5)}),
                     sum({mono(2, {1, 1}, 1.0), mono(2, {2, 0}, -0.3)})});
}

GenericGraph generic_quad() {
  return GenericGraph{2, 3,
                      PolyMap(3, {sum({mono(3, {2, 0, 0}, 1.0), mono(3, {1, 0, 1}, 1.0),
                                       mono(3, {0, 2, 0}, 0.5)})}),
                      0.5};
}

TEST(Polynomial, EvaluateGradientSubstitute) {
  const Polynomial p = sum({mono(2, {2, 1}, 3.0), mono(2, {0, 0}, -1.0)});
  Vec x(2);
  x << 0.5, -2.0;
  EXPECT_DOUBLE_EQ(p.evaluate(x), 3.0 * 0.25 * -2.0 - 1.0);
  const Vec gr = p.gradient(x);
  EXPECT_DOUBLE_EQ(gr[0], 6.0 * 0.5 * -2.0);
  EXPECT_DOUBLE_EQ(gr[1], 3.0 * 0.25);
  EXPECT_EQ(p.degree(), 3);
  // x0 -> x0 + x1, x1 -> 2: 3 (x0 + x1)^2 * 2 - 1
  const Polynomial q = p.substitute({sum({Polynomial::variable(2, 0), Polynomial::variable(2, 1)}),
                                     Polynomial::constant(2, 2.0)});
  EXPECT_DOUBLE_EQ(q.evaluate(x), 6.0 * (0.5 - 2.0) * (0.5 - 2.0) - 1.0);
}

TEST(Polynomial, RowEvaluationMatchesPointwise) {
  const PolyMap h = quad_h();
  Mat X(5, 2);
  X << 0.1, 0.2, -0.3, 0.05, 0.0, 0.0, 0.4, -0.4, 0.01, 0.3;
  const Mat H = h.evaluate_rows(X);
  for (int i = 0; i < 5; ++i) {
    EXPECT_LE((H.row(i).transpose() - h.evaluate(X.row(i).transpose())).norm(), 1e-15);
  }
}

TEST(Geometry, ValidateGraph) {
  EXPECT_NO_THROW(validate_graph(TotallyRealGraph(
      PolyMap(2, {mono(2, {2, 0}, 1.0), mono(2, {1, 1}, 1.0)}), 0.5)));
  EXPECT_NO_THROW(validate_graph(TotallyRealGraph(PolyMap::zero(2, 2), 0.5)));
  try {
    validate_graph(TotallyRealGraph(PolyMap(2, {mono(2, {1, 0}, 1.0), mono(2, {2, 0}, 1.0)}), 0.5));
    FAIL() << "linear term accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MalformedGraph);
  }
}

TEST(Geometry, CutoffValues) {
  EXPECT_EQ(CutoffV::evaluate(oracle::kPi / 2), 0.0);
  EXPECT_NEAR(CutoffV::evaluate(1.5 * oracle::kPi), std::exp(-4.0 / (oracle::kPi * oracle::kPi)), 1e-16);
  const CutoffV v = default_cutoff(CircleGrid(1024), Arc{oracle::kPi / 4, 3 * oracle::kPi / 4});
  for (int j = 0; j < v.grid().size(); ++j) {
    const double th = v.grid().node(j);
    if (th <= oracle::kPi) {
      EXPECT_EQ(v.samples().values()(j, 0), 0.0);
    } else {
      EXPECT_GT(v.samples().values()(j, 0), 0.0) << th;
    }
  }
}

TEST(Geometry, CutoffBoundAgainstRadialDifferences) {
  const CutoffV v = default_cutoff(CircleGrid(1024), Arc{oracle::kPi / 4, 3 * oracle::kPi / 4});
  ASSERT_GT(v.b(), 0.0);
  const double h = 2e-3;
  double fd_min = std::numeric_limits<double>::infinity();
  for (int j : v.gamma0_nodes()) {
    if (j % 16 != 0 && j != v.gamma0_nodes().front() && j != v.gamma0_nodes().back()) continue;
    const double th = v.grid().node(j);
    const double u1 = oracle::poisson_quadrature(oracle::cutoff, 1 - h, th, 1 << 16);
    const double u2 = oracle::poisson_quadrature(oracle::cutoff, 1 - 2 * h, th, 1 << 16);
    fd_min = std::min(fd_min, std::abs((-4 * u1 + u2) / (2 * h)));
  }
  EXPECT_NEAR(v.b(), fd_min, 5e-3);
}

TEST(Geometry, Membership) {
  ExceptionalSet I{{Polynomial::variable(2, 0)}, 1e-6, ParamChart::identity(2)};
  Vec x(2);
  x << 0.0, 0.3;
  EXPECT_TRUE(membership(I, x));
  x << 0.5, 0.3;
  EXPECT_FALSE(membership(I, x));
  I.functions.push_back(sum({Polynomial::variable(2, 1), Polynomial::constant(2, -0.3)}));
  EXPECT_TRUE(membership(I, x));
  ExceptionalSet bad{{Polynomial(2)}, 1e-6, ParamChart::identity(2)};
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Geometry, SliceSubstitutionOracle) {
  // h(x1, x2, y3) = x1 y3 with y3 = 0.1 x1 gives 0.1 x1^2.
  const GenericGraph g{2, 3, PolyMap(3, {mono(3, {1, 0, 1}, 1.0)}), 0.5};
  Mat B(2, 1);
  B << 0.1, 0.0;
  const SliceResult r = slice(g, PlaneSlice{B});
  ASSERT_EQ(r.substituted.n_out(), 2);
  const Polynomial& h1 = r.substituted[0];
  EXPECT_NEAR(h1.coeff({2, 0}), 0.1, 1e-12);
  EXPECT_EQ(h1.terms().size(), 1u);
  const Polynomial& h2 = r.substituted[1];
  EXPECT_NEAR(h2.coeff({1, 0}), 0.1, 1e-12);
  EXPECT_EQ(h2.terms().size(), 1u);
}

TEST(Geometry, SliceOfTotallyRealIsIdentity) {
  const GenericGraph g{2, 2, quad_h(), 0.5};
  const SliceResult r = slice(g, PlaneSlice{Mat(2, 0)});
  Vec x(2);
  x << 0.1, -0.2;
  EXPECT_LE((r.normalized.graph.h(x) - quad_h().evaluate(x)).norm(), 1e-15);
  EXPECT_LE((r.normalized.to_original - CMat::Identity(2, 2)).norm(), 1e-15);
}

TEST(Geometry, FlatSliceStaysFlat) {
  const GenericGraph g{2, 3, PolyMap::zero(3, 1), 0.5};
  Mat B(2, 1);
  B << 0.03, -0.07;
  const SliceResult r = slice(g, PlaneSlice{B});
  EXPECT_TRUE(r.normalized.graph.is_flat());
  Vec x(2);
  x << 0.2, 0.1;
  EXPECT_LE(r.normalized.graph.h(x).norm(), 1e-15);
}

TEST(Geometry, NormalizeTiltedGraphRoundTrip) {
  // H(x) = 0.1 x: after normalization h~ = 0 and points round-trip.
  const PolyMap H(2, {mono(2, {1, 0}, 0.1), mono(2, {0, 1}, 0.1)});
  const NormalizedGraph ng = normalize_graph(H, 0.5);
  Vec x(2);
  x << 0.2, -0.1;
  EXPECT_LE(ng.graph.h(x).norm(), 1e-15);
  for (double s : {0.1, -0.3, 0.25}) {
    Vec p(2);
    p << s, 0.5 * s;
    CVec z(2);
    for (int i = 0; i < 2; ++i) z[i] = Complex(p[i], H.evaluate(p)[i]);
    const CVec w = ng.to_normalized * z;
    EXPECT_LE(w.imag().norm(), 1e-12);
    EXPECT_LE((ng.to_original * w - z).norm(), 1e-12);
  }
}

TEST(Geometry, NormalizeAlreadyNormalizedIsIdentity) {
  const NormalizedGraph ng = normalize_graph(quad_h(), 0.5);
  EXPECT_LE((ng.to_normalized - CMat::Identity(2, 2)).norm(), 1e-15);
}

TEST(Geometry, NormalizeComplexLineIsRejected) {
  const PolyMap H(2, {mono(2, {0, 1}, -1.0), mono(2, {1, 0}, 1.0)});
  try {
    normalize_graph(H, 0.5);
    FAIL() << "complex tangent accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotTotallyReal);
  }
}

TEST(Geometry, SampleGoodB) {
  const GenericGraph g = generic_quad();
  const ParamChart chart{2, 3, CMat::Identity(2, 2)};
  const ExceptionalSet empty{{}, 1e-6, chart};
  EXPECT_EQ(sample_good_B(g, empty, 1).attempts, 1);

  const ExceptionalSet on_x1{{Polynomial::variable(3, 0)}, 1e-6, chart};
  EXPECT_EQ(sample_good_B(g, on_x1, 2).attempts, 1);

  // y3 - 0.05 is killed by no B; y3 - 0.05 x1 is killed by B = (0.05, 0).
  const ExceptionalSet shifted{{sum({Polynomial::variable(3, 2), Polynomial::constant(3, -0.05)})}, 1e-6, chart};
  SliceSampling zero_first;
  zero_first.candidates.push_back(Mat::Zero(2, 1));
  EXPECT_EQ(sample_good_B(g, shifted, 3, zero_first).attempts, 1);

  const ExceptionalSet tilted{{sum({Polynomial::variable(3, 2), mono(3, {1, 0, 0}, -0.05)})}, 1e-6, chart};
  SliceSampling adversarial;
  Mat bad(2, 1);
  bad << 0.05, 0.0;
  adversarial.candidates.push_back(bad);
  const SampledSlice s = sample_good_B(g, tilted, 4, adversarial);
  EXPECT_EQ(s.attempts, 2);
  EXPECT_EQ(s.rejections.size(), 1u);
  EXPECT_GT((s.plane.B - bad).norm(), 0.0);

  SliceSampling none;
  none.candidates.assign(3, bad);
  none.max_attempts = 0;
  try {
    sample_good_B(g, tilted, 5, none);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ExhaustedAttempts);
  }
}

TEST(GeometryProperty, SlicedFixturesValidate) {
  const GenericGraph g = generic_quad();
  CounterRng rng(99, 1);
  for (int trial = 0; trial < 20; ++trial) {
    Mat B(2, 1);
    B << rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1);
    const SliceResult r = slice(g, PlaneSlice{B});
    EXPECT_NO_THROW(validate_graph(r.normalized.graph));
    // Normalized: h~(0) = 0 and Dh~(0) = 0.
    EXPECT_LE(r.normalized.graph.h(Vec::Zero(2)).norm(), 1e-14);
    EXPECT_LE(r.normalized.graph.dh(Vec::Zero(2)).norm(), 1e-10);
  }
}

TEST(GeometryProperty, NormalizeIsIdempotent) {
  const GenericGraph g = generic_quad();
  CounterRng rng(5, 2);
  for (int trial = 0; trial < 5; ++trial) {
    Mat B(2, 1);
    B << rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1);
    const SliceResult r = slice(g, PlaneSlice{B});
    const NormalizedGraph again = normalize_graph(r.normalized.graph.function(), 0.5);
    EXPECT_LE((again.to_normalized - CMat::Identity(2, 2)).norm(), 1e-12);
  }
}

TEST(GeometryProperty, RandomCutoffArcsHavePositiveBound) {
  CounterRng rng(3, 3);
  for (int trial = 0; trial < 5; ++trial) {
    const double a = rng.uniform(0.1, 1.4);
    const double b = rng.uniform(1.7, 3.0);
    EXPECT_GT(default_cutoff(CircleGrid(512), Arc{a, b}).b(), 0.0);
  }
}

}  // namespace
}  // namespace adisc
