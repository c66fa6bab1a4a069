#include "adisc/geometry.hpp"

#include "adisc/errors.hpp"
#include "adisc/rng.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace adisc {
namespace {

constexpr double kImplicitZeroTol = 1e-12;

// Graph of { x + i H(x) } rewritten in coordinates w = A z with A = (I + i DH(0))^-1.
// Evaluating h~(xi) solves Re(A (x + i H(x))) = xi for x by Newton's method.
Polynomial partial_derivative(const Polynomial& p, int var) {
  Polynomial d(p.n_vars());
  for (const auto& [m, c] : p.terms()) {
    const int e = m[static_cast<std::size_t>(var)];
    if (e == 0) continue;
    MultiIndex lowered = m;
    lowered[static_cast<std::size_t>(var)] = e - 1;
    d.add_term(lowered, c * e);
  }
  return d;
}

// xi -> Im A(x + i H(x)) where x solves Re A(x + i H(x)) = xi.
class ReparametrizedGraphFunction final : public GraphFunction {
 public:
  ReparametrizedGraphFunction(std::shared_ptr<const GraphFunction> H, CMat A)
      : H_(std::move(H)), A_(std::move(A)) {
    if (const PolyMap* poly = H_->polynomial()) {
      for (int k = 0; k < poly->n_out(); ++k) {
        for (int i = 0; i < poly->n_vars(); ++i) dH_.push_back(partial_derivative((*poly)[k], i));
      }
    }
  }

  int dim() const override { return H_->dim(); }

  Vec evaluate(const Vec& xi) const override {
    const Vec x = solve_base_point(xi);
    return (A_ * to_complex(x, H_->evaluate(x))).imag();
  }

  Mat jacobian(const Vec& xi) const override {
    const Vec x = solve_base_point(xi);
    const CMat D = A_ * to_complex(Mat::Identity(dim(), dim()), H_->jacobian(x));
    return D.imag() * D.real().inverse();
  }

  Mat evaluate_rows(const Mat& Xi) const override {
    if (dH_.empty()) return GraphFunction::evaluate_rows(Xi);
    const int n = dim();
    const Mat Ar = A_.real();
    const Mat Ai = A_.imag();
    Mat X = Xi;
    Mat H;
    Mat J(n, n);
    for (int it = 0; it < 60; ++it) {
      H = H_->evaluate_rows(X);
      const Mat F = X * Ar.transpose() - H * Ai.transpose() - Xi;
      std::vector<Vec> dcols;
      dcols.reserve(dH_.size());
      for (const auto& d : dH_) dcols.push_back(d.evaluate_rows(X));
      double step = 0.0;
      for (Eigen::Index r = 0; r < X.rows(); ++r) {
        Mat DH(n, n);
        for (int k = 0; k < n; ++k) {
          for (int i = 0; i < n; ++i) DH(k, i) = dcols[static_cast<std::size_t>(k * n + i)][r];
        }
        J = Ar - Ai * DH;
        const Vec dx = J.partialPivLu().solve(F.row(r).transpose());
        X.row(r) -= dx.transpose();
        step = std::max(step, dx.lpNorm<Eigen::Infinity>());
      }
      if (!X.allFinite()) break;
      if (step <= 1e-16 * (1.0 + X.lpNorm<Eigen::Infinity>())) break;
    }
    H = H_->evaluate_rows(X);
    const Mat F = X * Ar.transpose() - H * Ai.transpose() - Xi;
    if (!X.allFinite() || F.lpNorm<Eigen::Infinity>() > 1e-14 * (1.0 + Xi.lpNorm<Eigen::Infinity>())) {
      throw Error(ErrorKind::DomainEscape, "normalized graph: base point inversion failed");
    }
    return X * Ai.transpose() + H * Ar.transpose();
  }

 private:
  static CVec to_complex(const Vec& re, const Vec& im) {
    CVec z(re.size());
    for (Eigen::Index i = 0; i < re.size(); ++i) z[i] = Complex(re[i], im[i]);
    return z;
  }
  static CMat to_complex(const Mat& re, const Mat& im) {
    CMat z(re.rows(), re.cols());
    z.real() = re;
    z.imag() = im;
    return z;
  }

  Vec solve_base_point(const Vec& xi) const {
    Vec x = xi;
    for (int it = 0; it < 60; ++it) {
      const Vec F = (A_ * to_complex(x, H_->evaluate(x))).real() - xi;
      const Mat J = (A_ * to_complex(Mat::Identity(dim(), dim()), H_->jacobian(x))).real();
      const Vec dx = J.partialPivLu().solve(F);
      x -= dx;
      if (!x.allFinite()) break;
      if (dx.lpNorm<Eigen::Infinity>() <= 1e-16 * (1.0 + x.lpNorm<Eigen::Infinity>())) return x;
      if (it > 3 && F.lpNorm<Eigen::Infinity>() < 1e-17) return x;
    }
    if (x.allFinite()) {
      const Vec F = (A_ * to_complex(x, H_->evaluate(x))).real() - xi;
      if (F.lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + xi.lpNorm<Eigen::Infinity>())) return x;
    }
    throw Error(ErrorKind::DomainEscape, "normalized graph: base point inversion failed");
  }

  std::shared_ptr<const GraphFunction> H_;
  CMat A_;
  std::vector<Polynomial> dH_;
};

}  // namespace

Mat GraphFunction::evaluate_rows(const Mat& X) const {
  Mat out(X.rows(), dim());
  for (Eigen::Index j = 0; j < X.rows(); ++j) out.row(j) = evaluate(X.row(j).transpose()).transpose();
  return out;
}

PolynomialGraphFunction::PolynomialGraphFunction(PolyMap h) : h_(std::move(h)) {
  if (h_.n_vars() != h_.n_out()) {
    throw Error(ErrorKind::MalformedGraph, "h must map R^n to R^n");
  }
}

TotallyRealGraph::TotallyRealGraph(PolyMap h, double domain_radius)
    : TotallyRealGraph(std::make_shared<PolynomialGraphFunction>(std::move(h)), domain_radius) {}

TotallyRealGraph::TotallyRealGraph(std::shared_ptr<const GraphFunction> h, double domain_radius)
    : h_(std::move(h)), radius_(domain_radius) {
  if (!h_ || h_->dim() < 1) throw Error(ErrorKind::MalformedGraph, "graph needs dimension >= 1");
  if (!(domain_radius > 0.0)) throw Error(ErrorKind::MalformedGraph, "domain radius must be positive");
  flat_ = h_->polynomial() != nullptr && h_->polynomial()->is_zero();
}

const TotallyRealGraph& validate_graph(const TotallyRealGraph& g) {
  if (const PolyMap* p = g.polynomial()) {
    for (int i = 0; i < p->n_out(); ++i) {
      if ((*p)[i].constant_part() != 0.0) {
        throw Error(ErrorKind::MalformedGraph, "h(0) != 0: component " + std::to_string(i + 1));
      }
      if ((*p)[i].max_linear_coeff() != 0.0) {
        throw Error(ErrorKind::MalformedGraph, "Dh(0) != 0: component " + std::to_string(i + 1));
      }
    }
    return g;
  }
  const Vec zero = Vec::Zero(g.dim());
  if (g.h(zero).lpNorm<Eigen::Infinity>() > kImplicitZeroTol) {
    throw Error(ErrorKind::MalformedGraph, "h(0) != 0");
  }
  if (g.dh(zero).lpNorm<Eigen::Infinity>() > kImplicitZeroTol) {
    throw Error(ErrorKind::MalformedGraph, "Dh(0) != 0");
  }
  return g;
}

const GenericGraph& validate_graph(const GenericGraph& g) {
  if (g.n < 1 || g.m < g.n || g.m > 2 * g.n) {
    throw Error(ErrorKind::MalformedGraph, "generic graph needs n <= m <= 2n");
  }
  if (g.h.n_vars() != g.m || g.h.n_out() != 2 * g.n - g.m) {
    throw Error(ErrorKind::MalformedGraph, "generic graph h must map R^m to R^(2n-m)");
  }
  if (!(g.domain_radius > 0.0)) throw Error(ErrorKind::MalformedGraph, "domain radius must be positive");
  for (int i = 0; i < g.h.n_out(); ++i) {
    if (g.h[i].constant_part() != 0.0 || g.h[i].max_linear_coeff() != 0.0) {
      throw Error(ErrorKind::MalformedGraph,
                  "generic graph h has a constant or linear term in component " + std::to_string(i + 1));
    }
  }
  return g;
}

bool Arc::contains(double theta) const {
  constexpr double tol = 1e-12;
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  auto inside = [&](double s) { return s >= begin - tol && s <= end + tol; };
  return inside(t) || inside(t + kTwoPi) || inside(t - kTwoPi);
}

double CutoffV::evaluate(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  if (t <= kPi || t >= kTwoPi) return 0.0;
  return std::exp(-1.0 / ((t - kPi) * (kTwoPi - t)));
}

CutoffV::CutoffV(CircleGrid grid, Arc gamma0)
    : samples_(GridFn::sample_scalar(grid, &CutoffV::evaluate)),
      coeffs_(transform(samples_)),
      gamma0_(gamma0),
      conj_v_(conjugate(samples_)),
      dn_v_(d_tau(conj_v_)) {
  if (!(gamma0.begin > 0.0 && gamma0.end < kPi && gamma0.begin < gamma0.end)) {
    throw Error(ErrorKind::InvalidArgument, "gamma0 must lie strictly inside (0, pi)");
  }
  const std::vector<int> nodes = gamma0_nodes();
  if (nodes.empty()) throw Error(ErrorKind::InvalidArgument, "gamma0 contains no grid nodes");
  b_ = std::numeric_limits<double>::infinity();
  for (int j : nodes) b_ = std::min(b_, std::abs(dn_v_.values()(j, 0)));
}

double CutoffV::extend(DiscPoint zeta) const { return poisson_extend(coeffs_, zeta)[0]; }

std::vector<int> CutoffV::gamma0_nodes() const {
  std::vector<int> out;
  for (int j = 0; j < grid().size(); ++j) {
    const double th = grid().node(j);
    if (th >= gamma0_.begin && th <= gamma0_.end) out.push_back(j);
  }
  return out;
}

CutoffV default_cutoff(const CircleGrid& grid, Arc gamma0) { return CutoffV(grid, gamma0); }

ParamChart ParamChart::identity(int n) {
  return ParamChart{n, n, CMat::Identity(n, n)};
}

Vec ParamChart::param(const CVec& w) const {
  const CVec z = to_original * w;
  Vec p(m);
  p.head(n) = z.real();
  for (int j = 0; j < m - n; ++j) p[n + j] = z[2 * n - m + j].imag();
  return p;
}

void ExceptionalSet::validate() const {
  if (!(eta > 0.0)) throw Error(ErrorKind::InvalidArgument, "exceptional set tolerance must be positive");
  for (std::size_t i = 0; i < functions.size(); ++i) {
    if (functions[i].is_zero()) {
      throw Error(ErrorKind::InvalidArgument,
                  "exceptional set function " + std::to_string(i + 1) + " is identically zero");
    }
  }
}

bool membership(const ExceptionalSet& set, const Vec& x) {
  for (const auto& g : set.functions) {
    if (std::abs(g.evaluate(x)) <= set.eta) return true;
  }
  return false;
}

double totally_real_margin(const Mat& L) {
  const Eigen::Index n = L.rows();
  Mat frame(2 * n, 2 * n);
  frame << Mat::Identity(n, n), -L, L, Mat::Identity(n, n);
  Eigen::JacobiSVD<Mat> svd(frame);
  return svd.singularValues().minCoeff();
}

namespace {

bool is_linear(const PolyMap& p) {
  for (const auto& comp : p.components()) {
    if (comp.degree() > 1) return false;
  }
  return true;
}

}  // namespace

NormalizedGraph normalize_graph(std::shared_ptr<const GraphFunction> H, double domain_radius) {
  const int n = H->dim();
  const Vec zero = Vec::Zero(n);
  if (H->evaluate(zero).lpNorm<Eigen::Infinity>() > kImplicitZeroTol) {
    throw Error(ErrorKind::MalformedGraph, "parametrization is not pointed at the origin");
  }
  const Mat L = H->jacobian(zero);
  const double margin = totally_real_margin(L);
  if (!(margin > kTotallyRealTolerance)) {
    std::ostringstream msg;
    msg << "tangent space at 0 contains a complex line (frame singular value " << margin << ")";
    throw Error(ErrorKind::NotTotallyReal, msg.str());
  }
  if (L.lpNorm<Eigen::Infinity>() <= 1e-14) {
    return NormalizedGraph{TotallyRealGraph(std::move(H), domain_radius), CMat::Identity(n, n),
                           CMat::Identity(n, n)};
  }
  CMat T(n, n);
  T.real() = Mat::Identity(n, n);
  T.imag() = L;
  const CMat A = T.inverse();
  if (const PolyMap* poly = H->polynomial(); poly && is_linear(*poly)) {
    // A (x + i L x) = x, so the graph is exactly flat in the new coordinates.
    return NormalizedGraph{TotallyRealGraph(PolyMap::zero(n, n), domain_radius), T, A};
  }
  auto h = std::make_shared<ReparametrizedGraphFunction>(std::move(H), A);
  return NormalizedGraph{TotallyRealGraph(std::move(h), domain_radius), T, A};
}

NormalizedGraph normalize_graph(const PolyMap& H, double domain_radius) {
  return normalize_graph(std::make_shared<PolynomialGraphFunction>(H), domain_radius);
}

namespace {

// Variables of the slice (x_1..x_n) substituted for (x, y'') with y'' = x B.
std::vector<Polynomial> slice_substitution(int n, int m, const Mat& B) {
  std::vector<Polynomial> subs;
  subs.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < n; ++i) subs.push_back(Polynomial::variable(n, i));
  for (int j = 0; j < m - n; ++j) {
    Polynomial p(n);
    for (int i = 0; i < n; ++i) {
      MultiIndex e(static_cast<std::size_t>(n), 0);
      e[static_cast<std::size_t>(i)] = 1;
      p.add_term(e, B(i, j));
    }
    subs.push_back(std::move(p));
  }
  return subs;
}

void check_plane_shape(const GenericGraph& g, const Mat& B) {
  if (B.rows() != g.n || B.cols() != g.m - g.n) {
    throw Error(ErrorKind::InvalidArgument, "slice matrix B must be n x (m - n)");
  }
}

}  // namespace

SliceResult slice(const GenericGraph& g, const PlaneSlice& plane, double threshold) {
  validate_graph(g);
  check_plane_shape(g, plane.B);
  if (plane.norm() > threshold) {
    throw Error(ErrorKind::InvalidArgument, "slice matrix exceeds the smallness threshold");
  }
  const int n = g.n;
  const std::vector<Polynomial> subs = slice_substitution(n, g.m, plane.B);
  std::vector<Polynomial> comps;
  for (int i = 0; i < 2 * n - g.m; ++i) comps.push_back(g.h[i].substitute(subs));
  for (int j = 0; j < g.m - n; ++j) comps.push_back(subs[static_cast<std::size_t>(n + j)]);
  PolyMap substituted(n, std::move(comps));
  try {
    NormalizedGraph normalized = normalize_graph(substituted, g.domain_radius);
    validate_graph(normalized.graph);
    return SliceResult{plane, std::move(substituted), std::move(normalized)};
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::NotTotallyReal) throw Error(ErrorKind::SliceDegenerate, e.what());
    throw;
  }
}

ExceptionalSet restrict_to_slice(const ExceptionalSet& set, const GenericGraph& g,
                                 const NormalizedGraph& normalized) {
  ExceptionalSet out = set;
  out.chart = ParamChart{g.n, g.m, normalized.to_original};
  return out;
}

std::vector<Polynomial> slice_functions(const ExceptionalSet& set, const GenericGraph& g,
                                        const Mat& B) {
  check_plane_shape(g, B);
  const std::vector<Polynomial> subs = slice_substitution(g.n, g.m, B);
  std::vector<Polynomial> out;
  for (const auto& f : set.functions) out.push_back(f.substitute(subs));
  return out;
}

SampledSlice sample_good_B(const GenericGraph& g, const ExceptionalSet& set, std::uint64_t seed,
                           const SliceSampling& options) {
  validate_graph(g);
  set.validate();
  const int rows = g.n;
  const int cols = g.m - g.n;
  SampledSlice result;
  CounterRng rng(seed, 0x51ced5eedULL);
  const int budget = static_cast<int>(options.candidates.size()) + options.max_attempts;
  for (int attempt = 0; attempt < budget; ++attempt) {
    Mat B(rows, cols);
    if (attempt < static_cast<int>(options.candidates.size())) {
      B = options.candidates[static_cast<std::size_t>(attempt)];
      check_plane_shape(g, B);
    } else {
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) B(i, j) = rng.uniform(-options.b_max, options.b_max);
    }
    result.attempts = attempt + 1;
    const std::vector<Polynomial> sliced = slice_functions(set, g, B);
    bool ok = true;
    for (std::size_t i = 0; i < sliced.size(); ++i) {
      const double tol = 1e-12 * std::max(1.0, set.functions[i].max_abs_coeff());
      if (sliced[i].is_zero(tol)) {
        ok = false;
        result.rejections.push_back("attempt " + std::to_string(attempt + 1) +
                                    ": exceptional function " + std::to_string(i + 1) +
                                    " vanishes identically on the slice");
        break;
      }
    }
    if (ok) {
      result.plane = PlaneSlice{B};
      return result;
    }
  }
  throw Error(ErrorKind::ExhaustedAttempts,
              "no admissible slice after " + std::to_string(budget) + " attempts");
}

}  // namespace adisc
