#include "adisc/bishop.hpp"

#include "adisc/parallel.hpp"
#include "adisc/rng.hpp"

#include <cmath>
#include <limits>

namespace adisc {
namespace {

void check_domain(const TotallyRealGraph& M, const Mat& X) {
  const double r2 = M.domain_radius() * M.domain_radius();
  for (Eigen::Index j = 0; j < X.rows(); ++j) {
    if (!(X.row(j).squaredNorm() < r2)) {
      throw Error(ErrorKind::DomainEscape,
                  "boundary trace left the domain ball of radius " + std::to_string(M.domain_radius()));
    }
  }
}

Mat apply_h(const TotallyRealGraph& M, const Mat& X) { return M.h_rows(X); }

// t v(tau) laid out per component.
Mat forcing(const CutoffV& v, const Vec& t) { return v.samples().values().col(0) * t.transpose(); }

// c - conjugate(g), evaluated on the grid.
Mat picard_image(const CircleGrid& grid, const Vec& c, const Mat& g) {
  const GridFn conj = conjugate(GridFn(grid, g));
  return (-conj.values()).rowwise() + c.transpose();
}

}  // namespace

Vec DiscParams::packed() const {
  Vec p(2 * c.size());
  p << c, t;
  return p;
}

DiscParams DiscParams::unpack(const Vec& p) {
  const Eigen::Index n = p.size() / 2;
  return DiscParams{p.head(n), p.tail(n)};
}

bool ParamBox::contains(const DiscParams& p, double slack) const {
  for (int i = 0; i < dim(); ++i) {
    if (std::abs(p.c[i]) > c_half[i] * (1.0 + slack)) return false;
    if (std::abs(p.t[i]) > t_half[i] * (1.0 + slack)) return false;
  }
  return true;
}

void ParamBox::validate() const {
  if (c_half.size() == 0 || c_half.size() != t_half.size()) {
    throw Error(ErrorKind::InvalidArgument, "parameter box needs matching non-empty half-widths");
  }
  if (!(c_half.minCoeff() > 0.0 && t_half.minCoeff() > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "parameter box half-widths must be positive");
  }
}

BishopSolution solve_bishop(const TotallyRealGraph& M, const CutoffV& v, const DiscParams& p,
                            const BishopOptions& options) {
  const int n = M.dim();
  if (p.c.size() != n || p.t.size() != n) {
    throw Error(ErrorKind::InvalidArgument, "disc parameters do not match the manifold dimension");
  }
  const CircleGrid& grid = v.grid();
  const Mat tv = forcing(v, p.t);

  BishopSolution sol{p, GridFn::constant(grid, p.c), GridFn::constant(grid, Vec::Zero(n)), 0.0, 0, 0.0};
  Mat X = sol.X.values();

  if (M.is_flat()) {
    // The equation is explicit: X = c - conjugate(t v).
    X = picard_image(grid, p.c, tv);
    sol.iterations = 1;
  } else {
    double previous = std::numeric_limits<double>::infinity();
    int growing = 0;
    bool converged = false;
    for (int it = 1; it <= options.max_iter; ++it) {
      check_domain(M, X);
      const Mat next = picard_image(grid, p.c, apply_h(M, X) + tv);
      const double update = (next - X).cwiseAbs().maxCoeff();
      X = next;
      sol.iterations = it;
      if (!std::isfinite(update)) break;
      if (update < options.tol) {
        converged = true;
        break;
      }
      growing = update > previous ? growing + 1 : 0;
      if (growing >= options.divergence_window) {
        throw Error(ErrorKind::NoConvergence,
                    "Picard updates grew for " + std::to_string(growing) + " consecutive iterations");
      }
      previous = update;
    }
    if (!converged) {
      throw Error(ErrorKind::NoConvergence,
                  "Picard iteration did not reach tol within " + std::to_string(options.max_iter) +
                      " iterations");
    }
  }
  check_domain(M, X);
  const Mat H = apply_h(M, X);
  const Mat g = H + tv;
  sol.residual = (X - picard_image(grid, p.c, g)).cwiseAbs().maxCoeff();
  sol.X = GridFn(grid, X);
  sol.h_star = GridFn(grid, H);
  sol.spectral_tail = std::max(spectral_tail_fraction(transform(sol.X)),
                               spectral_tail_fraction(transform(GridFn(grid, g))));
  return sol;
}

AnalyticDisc::AnalyticDisc(BishopSolution solution, const CutoffV& v)
    : sol_(std::move(solution)),
      g_(sol_.X.grid(), sol_.h_star.values() + forcing(v, sol_.params.t)),
      x_coeffs_(transform(sol_.X)),
      g_coeffs_(transform(g_)) {
  if (!(v.grid() == sol_.X.grid())) {
    throw Error(ErrorKind::InvalidArgument, "cutoff and solution use different grids");
  }
}

CVec AnalyticDisc::evaluate(DiscPoint zeta) const {
  const Vec re = poisson_extend(x_coeffs_, zeta);
  const Vec im = poisson_extend(g_coeffs_, zeta);
  CVec out(dim());
  for (int k = 0; k < dim(); ++k) out[k] = Complex(re[k], im[k]);
  return out;
}

CVec AnalyticDisc::evaluate_schwarz(DiscPoint zeta) const {
  const CVec s = schwarz(g_coeffs_, zeta);
  return sol_.params.c.cast<Complex>() + Complex(0.0, 1.0) * s;
}

CVec AnalyticDisc::derivative(DiscPoint zeta) const {
  return Complex(0.0, 1.0) * schwarz_derivative(g_coeffs_, zeta);
}

CMat AnalyticDisc::boundary_values() const {
  const GridFn conj = conjugate(g_);
  CMat out(grid().size(), dim());
  out.real() = (-conj.values()).rowwise() + sol_.params.c.transpose();
  out.imag() = g_.values();
  return out;
}

CMat AnalyticDisc::on_circle(double r) const {
  if (r >= 1.0) return boundary_values();
  const CMat s = schwarz_on_circle(g_coeffs_, r);
  CMat out(s.rows(), s.cols());
  out.real() = (-s.imag()).rowwise() + sol_.params.c.transpose();
  out.imag() = s.real();
  return out;
}

double AnalyticDisc::cauchy_riemann_residual(double r, double step) const {
  double worst = 0.0;
  constexpr int kSamples = 64;
  for (int j = 0; j < kSamples; ++j) {
    const Complex z = std::polar(r, kTwoPi * j / kSamples);
    auto at = [&](Complex w) { return evaluate(DiscPoint::from_complex(w)); };
    const CVec dx = (at(z + step) - at(z - step)) / (2.0 * step);
    const CVec dy = (at(z + Complex(0.0, step)) - at(z - Complex(0.0, step))) / (2.0 * step);
    // d/dzbar = (d/dx + i d/dy) / 2 vanishes for holomorphic maps.
    const CVec dbar = 0.5 * (dx + Complex(0.0, 1.0) * dy);
    worst = std::max(worst, dbar.cwiseAbs().maxCoeff());
  }
  return worst;
}

AnalyticDisc assemble_disc(const BishopSolution& solution, const CutoffV& v) {
  return AnalyticDisc(solution, v);
}

double attachment_error(const AnalyticDisc& disc, const TotallyRealGraph& M) {
  const CMat phi = disc.boundary_values();
  double worst = 0.0;
  for (int j = 0; j < disc.grid().size(); ++j) {
    if (!kUpperArc.contains(disc.grid().node(j))) continue;
    const Vec re = phi.row(j).real().transpose();
    const Vec im = phi.row(j).imag().transpose();
    worst = std::max(worst, (im - M.h(re)).cwiseAbs().maxCoeff());
  }
  return worst;
}

Vec center(const AnalyticDisc& disc) {
  return poisson_extend(disc.solution().X, DiscPoint{0.0, 0.0});
}

namespace {

std::vector<DiscParams> certification_samples(const ParamBox& box, const CertifyOptions& options) {
  const int n = box.dim();
  std::vector<DiscParams> samples{DiscParams::zero(n)};
  const int axes = 2 * n;
  if (axes <= 8) {
    for (int mask = 0; mask < (1 << axes); ++mask) {
      DiscParams p = DiscParams::zero(n);
      for (int a = 0; a < axes; ++a) {
        const double s = (mask >> a) & 1 ? 1.0 : -1.0;
        if (a < n) p.c[a] = s * box.c_half[a];
        else p.t[a - n] = s * box.t_half[a - n];
      }
      samples.push_back(std::move(p));
    }
  }
  CounterRng rng(options.seed, 0xce27ULL);
  for (int k = 0; k < options.random_samples; ++k) {
    DiscParams p = DiscParams::zero(n);
    for (int i = 0; i < n; ++i) p.c[i] = rng.uniform(-box.c_half[i], box.c_half[i]);
    for (int i = 0; i < n; ++i) p.t[i] = rng.uniform(-box.t_half[i], box.t_half[i]);
    samples.push_back(std::move(p));
  }
  return samples;
}

}  // namespace

double estimate_contraction(const TotallyRealGraph& M, const CutoffV& v, const ParamBox& box,
                            const CertifyOptions& options) {
  box.validate();
  if (M.is_flat()) return 0.0;
  const CircleGrid& grid = v.grid();
  const int n = M.dim();
  CounterRng rng(options.seed, 0x11f5ULL);
  double worst = 0.0;
  for (const DiscParams& p : certification_samples(box, options)) {
    const Mat tv = forcing(v, p.t);
    try {
      Mat X = picard_image(grid, p.c, tv);
      for (int it = 0; it < 2; ++it) {
        check_domain(M, X);
        X = picard_image(grid, p.c, apply_h(M, X) + tv);
      }
      check_domain(M, X);
      const Mat base = picard_image(grid, p.c, apply_h(M, X) + tv);
      // Smooth low-mode perturbation.
      Mat delta = Mat::Zero(grid.size(), n);
      for (int k = 0; k < n; ++k) {
        for (int mode = 1; mode <= 4; ++mode) {
          const double a = rng.uniform(-1.0, 1.0);
          const double b = rng.uniform(-1.0, 1.0);
          for (int j = 0; j < grid.size(); ++j) {
            const double th = grid.node(j);
            delta(j, k) += a * std::cos(mode * th) + b * std::sin(mode * th);
          }
        }
      }
      const double scale = 1e-4 * std::max(box.epsilon(), 1e-3);
      delta *= scale / delta.cwiseAbs().maxCoeff();
      const Mat Xp = X + delta;
      check_domain(M, Xp);
      const Mat moved = picard_image(grid, p.c, apply_h(M, Xp) + tv);
      worst = std::max(worst, (moved - base).cwiseAbs().maxCoeff() / delta.cwiseAbs().maxCoeff());
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::DomainEscape) return std::numeric_limits<double>::infinity();
      throw;
    }
  }
  return worst;
}

ContractionCertificate contraction_certify(const TotallyRealGraph& M, const CutoffV& v,
                                           const ParamBox& box, const CertifyOptions& options) {
  box.validate();
  ContractionCertificate cert{box, 0.0, 0, {}};
  for (int h = 0; h <= options.max_halvings; ++h) {
    cert.factor = estimate_contraction(M, v, cert.box, options);
    cert.factor_history.push_back(cert.factor);
    if (cert.factor < options.target_factor) {
      cert.halvings = h;
      return cert;
    }
    if (h < options.max_halvings) cert.box = cert.box.halved();
  }
  throw Error(ErrorKind::BoxCollapsed,
              "contraction factor " + std::to_string(cert.factor) + " still above target after " +
                  std::to_string(options.max_halvings) + " halvings");
}

std::vector<DiscParams> box_lattice(const ParamBox& box, int points_per_axis) {
  box.validate();
  if (points_per_axis < 1) throw Error(ErrorKind::InvalidArgument, "points_per_axis must be >= 1");
  const int n = box.dim();
  const int axes = 2 * n;
  auto coordinate = [&](int axis, int idx) {
    const double hw = axis < n ? box.c_half[axis] : box.t_half[axis - n];
    if (points_per_axis == 1) return 0.0;
    return -hw + 2.0 * hw * idx / (points_per_axis - 1);
  };
  std::size_t total = 1;
  for (int a = 0; a < axes; ++a) total *= static_cast<std::size_t>(points_per_axis);
  std::vector<DiscParams> out;
  out.reserve(total);
  for (std::size_t flat = 0; flat < total; ++flat) {
    DiscParams p = DiscParams::zero(n);
    std::size_t rem = flat;
    for (int a = axes - 1; a >= 0; --a) {
      const int idx = static_cast<int>(rem % static_cast<std::size_t>(points_per_axis));
      rem /= static_cast<std::size_t>(points_per_axis);
      if (a < n) p.c[a] = coordinate(a, idx);
      else p.t[a - n] = coordinate(a, idx);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::size_t SweepResult::converged() const {
  std::size_t k = 0;
  for (const auto& e : entries) k += e.solution.has_value() ? 1 : 0;
  return k;
}

SweepResult solve_all(const TotallyRealGraph& M, const CutoffV& v,
                      const std::vector<DiscParams>& params, const BishopOptions& options) {
  SweepResult result;
  result.entries.resize(params.size());
  parallel_for(params.size(), [&](std::size_t i) {
    SweepEntry& entry = result.entries[i];
    entry.params = params[i];
    try {
      entry.solution = solve_bishop(M, v, params[i], options);
    } catch (const Error& e) {
      entry.error_kind = e.kind();
      entry.error = e.what();
    }
  });
  return result;
}

SweepResult sweep(const TotallyRealGraph& M, const CutoffV& v, const ParamBox& box,
                  int points_per_axis, const BishopOptions& options) {
  return solve_all(M, v, box_lattice(box, points_per_axis), options);
}

}  // namespace adisc
