#include "adisc/circle_ops.hpp"
#include "adisc/errors.hpp"
#include "adisc/geometry.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"

namespace adisc {
namespace {

constexpr int kN = 1024;

GridFn sample(const CircleGrid& g, const oracle::TrigPoly& p) {
  return GridFn::sample_scalar(g, [&](double th) { return p.value(th); });
}

double sup_error(const GridFn& f, const std::function<double(double)>& exact) {
  double e = 0.0;
  for (int j = 0; j < f.size(); ++j) e = std::max(e, std::abs(f.values()(j, 0) - exact(f.grid().node(j))));
  return e;
}

TEST(CircleOps, ConjugateOfCosine) {
  const CircleGrid g(kN);
  const GridFn f = GridFn::sample_scalar(g, [](double th) { return std::cos(3 * th); });
  EXPECT_LE(sup_error(conjugate(f), [](double th) { return std::sin(3 * th); }), 1e-12);
}

TEST(CircleOps, ConjugateKillsConstants) {
  const CircleGrid g(kN);
  const GridFn f = GridFn::constant(g, Vec::Constant(1, 7.0));
  EXPECT_LE(conjugate(f).sup_norm(), 1e-15);
  EXPECT_LE(d_tau(f).sup_norm(), 1e-13);
}

TEST(CircleOps, DtauOfCosine) {
  const CircleGrid g(kN);
  const GridFn f = GridFn::sample_scalar(g, [](double th) { return std::cos(5 * th); });
  EXPECT_LE(sup_error(d_tau(f), [](double th) { return -5 * std::sin(5 * th); }), 1e-11);
}

TEST(CircleOps, ClosedFormsOnRandomTrigPolynomials) {
  const CircleGrid g(kN);
  std::mt19937_64 gen(7);
  for (int degree : {1, 17, 128, 256}) {
    const oracle::TrigPoly p = oracle::TrigPoly::random(degree, gen);
    const GridFn f = sample(g, p);
    EXPECT_LE(sup_error(conjugate(f), [&](double th) { return p.conjugate(th); }), 1e-10) << degree;
    EXPECT_LE(sup_error(d_tau(f), [&](double th) { return p.derivative(th); }), 1e-10) << degree;
    for (double r : {0.0, 0.3, 0.9, 0.999}) {
      for (double th : {0.1, 2.0, 4.5}) {
        EXPECT_NEAR(poisson_extend(f, DiscPoint{r, th})[0], p.poisson(r, th), 1e-10) << degree;
      }
    }
  }
}

TEST(CircleOps, ConjugateMatchesDirectKernelSum) {
  const CircleGrid g(256);
  const GridFn v = GridFn::sample_scalar(g, oracle::cutoff);
  std::vector<double> vals(v.values().data(), v.values().data() + v.size());
  const std::vector<double> ref = oracle::conjugate_direct(vals);
  const GridFn c = conjugate(v);
  for (int j = 0; j < g.size(); ++j) EXPECT_NEAR(c.values()(j, 0), ref[static_cast<std::size_t>(j)], 1e-13);
}

TEST(CircleOps, PoissonOfCosine) {
  const CircleGrid g(kN);
  const GridFn f = GridFn::sample_scalar(g, [](double th) { return std::cos(4 * th); });
  EXPECT_NEAR(poisson_extend(f, DiscPoint{0.7, 0.4})[0], std::pow(0.7, 4) * std::cos(1.6), 1e-14);
}

TEST(CircleOps, PoissonAtOriginIsNodeMean) {
  const CircleGrid g(kN);
  const GridFn v = GridFn::sample_scalar(g, oracle::cutoff);
  EXPECT_EQ(poisson_extend(v, DiscPoint{0.0, 1.0})[0], v.mean()[0]);
}

TEST(CircleOps, PoissonOfCutoffNearBoundaryAgainstQuadrature) {
  const CircleGrid g(kN);
  const GridFn v = GridFn::sample_scalar(g, oracle::cutoff);
  // The kernel at r = 0.999 has width ~1e-3; 64x oversampling resolves it.
  const double ref = oracle::poisson_quadrature(oracle::cutoff, 0.999, 1.5 * oracle::kPi, 64 * kN);
  EXPECT_NEAR(poisson_extend(v, DiscPoint{0.999, 1.5 * oracle::kPi})[0], ref, 1e-8);
}

TEST(CircleOps, SchwarzOfCosineIsPower) {
  const CircleGrid g(kN);
  const GridFn f = GridFn::sample_scalar(g, [](double th) { return std::cos(3 * th); });
  const DiscPoint z{0.6, 1.1};
  const Complex F = schwarz(f, z)[0];
  EXPECT_LE(std::abs(F - std::pow(z.z(), 3)), 1e-14);
  const GridFn one = GridFn::constant(g, Vec::Ones(1));
  EXPECT_LE(std::abs(schwarz(one, z)[0] - Complex(1.0, 0.0)), 1e-15);
}

TEST(CircleOps, SchwarzOfCutoffVanishesOnGamma) {
  const CircleGrid g(kN);
  const GridFn v = GridFn::sample_scalar(g, oracle::cutoff);
  EXPECT_LE(std::abs(schwarz(v, DiscPoint{1.0 - 1e-9, oracle::kPi / 4})[0].real()), 1e-8);
}

// The bump is steep near its support ends, so this needs a finer grid than kN.
TEST(CircleOps, DtauOfCutoffAgainstCentralDifferences) {
  const CircleGrid g(4 * kN);
  const GridFn v = GridFn::sample_scalar(g, oracle::cutoff);
  const GridFn dv = d_tau(v);
  for (int j = 0; j < g.size(); j += 7) {
    const double th = g.node(j);
    if (std::abs(th - oracle::kPi) < 0.05 || th > 2 * oracle::kPi - 0.05) continue;
    EXPECT_NEAR(dv.values()(j, 0), oracle::diff4(oracle::cutoff, th, 1e-3), 1e-7) << th;
  }
}

TEST(CircleOps, InvalidInputs) {
  EXPECT_THROW(CircleGrid(1000), Error);
  EXPECT_THROW(DiscPoint::make(1.5, 0.0), Error);
  const CircleGrid g(64);
  const GridFn one = GridFn::constant(g, Vec::Ones(1));
  EXPECT_THROW(schwarz(one, DiscPoint{1.0, 0.0}), Error);
}

TEST(CircleOps, CsvHasOneRowPerNode) {
  const CircleGrid g(16);
  std::ostringstream os;
  write_csv(GridFn::constant(g, Vec::Ones(2)), os);
  const std::string s = os.str();
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 17);
}

// Properties over random inputs.

TEST(CircleOpsProperty, TransformRoundTrip) {
  const CircleGrid g(kN);
  std::mt19937_64 gen(11);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 5; ++trial) {
    Mat m(kN, 3);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n01(gen);
    const GridFn f(g, m);
    EXPECT_LE(sup_distance(inverse(transform(f), g), f), 1e-12);
  }
}

TEST(CircleOpsProperty, ConjugateInvolution) {
  const CircleGrid g(kN);
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 5; ++trial) {
    const oracle::TrigPoly p = oracle::TrigPoly::random(200, gen);
    const GridFn f = sample(g, p);
    const GridFn cc = conjugate(conjugate(f));
    const double mean = f.mean()[0];
    EXPECT_LE(sup_error(cc, [&](double th) { return -p.value(th) + mean; }), 1e-12);
  }
}

TEST(CircleOpsProperty, PoissonAtBoundaryReproducesNodes) {
  const CircleGrid g(kN);
  std::mt19937_64 gen(13);
  const oracle::TrigPoly p = oracle::TrigPoly::random(kN / 4, gen);
  const GridFn f = sample(g, p);
  for (int j = 0; j < g.size(); j += 31) {
    EXPECT_NEAR(poisson_extend(f, DiscPoint{1.0, g.node(j)})[0], f.values()(j, 0), 1e-12);
  }
}

TEST(CircleOpsProperty, DtauConjugateIsNormalDerivativeOnGamma) {
  const CircleGrid g(kN);
  const GridFn v = GridFn::sample_scalar(g, oracle::cutoff);
  const GridFn dcv = d_tau(conjugate(v));
  const FourierCoeffs a = transform(v);
  const double h = 1e-4;
  for (int j = 0; j < g.size(); j += 16) {
    const double th = g.node(j);
    if (!(th > 0.2 && th < oracle::kPi - 0.2)) continue;
    // Outward normal derivative: v = 0 on gamma, so use (v(1) - v(1-h)) / h at second order.
    const double u1 = poisson_extend(a, DiscPoint{1.0 - h, th})[0];
    const double u2 = poisson_extend(a, DiscPoint{1.0 - 2 * h, th})[0];
    const double dn = (3 * 0.0 - 4 * u1 + u2) / (2 * h);
    EXPECT_NEAR(dcv.values()(j, 0), dn, 1e-5) << th;
  }
}

}  // namespace
}  // namespace adisc
