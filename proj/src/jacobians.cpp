#include "adisc/jacobians.hpp"

#include "adisc/errors.hpp"
#include "adisc/parallel.hpp"
#include "adisc/rng.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace adisc {
namespace {

Mat central_differences(const std::function<Vec(const Vec&)>& f, const Vec& p, double step) {
  Mat J;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    const double h = step * std::max(1.0, std::abs(p[j]));
    Vec plus = p, minus = p;
    plus[j] += h;
    minus[j] -= h;
    const Vec col = (f(plus) - f(minus)) / (2.0 * h);
    if (j == 0) J.resize(col.size(), p.size());
    J.col(j) = col;
  }
  return J;
}

void check_step(const JacobianReport& rep, double max_relative_error) {
  if (rep.error_estimate > max_relative_error * std::abs(rep.determinant)) {
    throw Error(ErrorKind::StepTooLarge,
                rep.map + ": Richardson estimate " + std::to_string(rep.error_estimate) +
                    " exceeds " + std::to_string(max_relative_error) + " |det| = " +
                    std::to_string(std::abs(rep.determinant)));
  }
}

Vec boundary_value(const GridFn& f, double tau) {
  return poisson_extend(transform(f), DiscPoint{1.0, tau});
}

}  // namespace

RichardsonJacobian richardson_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& p,
                                       double step) {
  RichardsonJacobian r;
  r.step = step;
  if (p.size() == 0) {
    const Eigen::Index m = f(p).size();
    r.coarse = r.fine = r.extrapolated = Mat(m, 0);
    return r;
  }
  r.coarse = central_differences(f, p, step);
  r.fine = central_differences(f, p, 0.5 * step);
  r.extrapolated = (4.0 * r.fine - r.coarse) / 3.0;
  return r;
}

Vec disc_map(const TotallyRealGraph& M, const CutoffV& v, const DiscParams& p, DiscPoint zeta0,
             const BishopOptions& solver) {
  const AnalyticDisc disc(solve_bishop(M, v, p, solver), v);
  const CVec phi = disc.evaluate(zeta0);
  Vec out(2 * phi.size());
  out << phi.real(), phi.imag();
  return out;
}

JacobianReport jac_S_full(const TotallyRealGraph& M, const CutoffV& v, const DiscParams& p,
                          DiscPoint zeta0, const JacobianOptions& options) {
  auto f = [&](const Vec& q) { return disc_map(M, v, DiscParams::unpack(q), zeta0, options.solver); };
  const RichardsonJacobian rj = richardson_jacobian(f, p.packed(), options.step);
  JacobianReport rep;
  rep.map = "S_full";
  rep.point = p.packed();
  rep.matrix = rj.extrapolated;
  rep.determinant = rj.extrapolated.determinant();
  rep.step = options.step;
  rep.error_estimate = std::abs(rep.determinant - rj.fine.determinant());
  check_step(rep, options.max_relative_error);
  return rep;
}

ReducedJacobianReport jac_S_reduced(const TotallyRealGraph& M, const CutoffV& v,
                                    const DiscParams& p, DiscPoint zeta,
                                    const JacobianOptions& options) {
  const int n = M.dim();
  const int m = n - 1;
  auto params_of = [&](const Vec& q) {
    DiscParams r = p;
    r.c.head(m) = q.head(m);
    r.t.head(m) = q.segment(m, m);
    return r;
  };
  auto f = [&](const Vec& q) {
    const AnalyticDisc disc(solve_bishop(M, v, params_of(q), options.solver), v);
    const CVec phi = disc.evaluate(DiscPoint::from_complex(Complex(q[2 * m], q[2 * m + 1])));
    Vec out(2 * n);
    out << phi.head(m).real(), phi.head(m).imag(), phi[m].real(), phi[m].imag();
    return out;
  };
  Vec q(2 * n);
  const Complex z = zeta.z();
  q << p.c.head(m), p.t.head(m), z.real(), z.imag();

  const RichardsonJacobian rj = richardson_jacobian(f, q, options.step);
  ReducedJacobianReport out;
  JacobianReport& rep = out.report;
  rep.map = "S_reduced";
  rep.point = q;
  rep.matrix = rj.extrapolated;
  rep.determinant = rj.extrapolated.determinant();
  rep.step = options.step;
  rep.error_estimate = std::abs(rep.determinant - rj.fine.determinant());
  check_step(rep, options.max_relative_error);

  const Mat& J = rep.matrix;
  out.det_d11 = m > 0 ? J.block(0, 0, m, m).determinant() : 1.0;
  out.det_d22 = m > 0 ? J.block(m, m, m, m).determinant() : 1.0;
  out.d33_minor = J.block(2 * m, 2 * m, 2, 2).determinant();
  const AnalyticDisc base(solve_bishop(M, v, p, options.solver), v);
  out.d33_cr = std::norm(base.derivative(zeta)[m]);
  out.factorization_residual =
      std::abs(rep.determinant - out.det_d11 * out.det_d22 * out.d33_minor);
  out.v_power = std::pow(v.extend(zeta), m);
  return out;
}

JacobianReport jac_boundary(const TotallyRealGraph& M, const CutoffV& v, const DiscParams& p,
                            double tau, const JacobianOptions& options) {
  const int n = M.dim();
  const int m = n - 1;
  auto f = [&](const Vec& q) {
    DiscParams r = p;
    r.c.head(m) = q;
    return boundary_value(solve_bishop(M, v, r, options.solver).X, tau);
  };
  const BishopSolution base = solve_bishop(M, v, p, options.solver);
  const Vec dtau = boundary_value(d_tau(base.X), tau);
  const RichardsonJacobian rj = richardson_jacobian(f, p.c.head(m), options.step);

  auto with_tau = [&](const Mat& cols) {
    Mat J(n, n);
    J.leftCols(m) = cols;
    J.col(m) = dtau;
    return J;
  };
  JacobianReport rep;
  rep.map = "boundary";
  rep.point = Vec(n);
  rep.point << p.c.head(m), tau;
  rep.matrix = with_tau(rj.extrapolated);
  rep.determinant = rep.matrix.determinant();
  rep.step = options.step;
  rep.error_estimate = std::abs(rep.determinant - with_tau(rj.fine).determinant());
  rep.degenerate = p.t.cwiseAbs().maxCoeff() == 0.0;
  if (!rep.degenerate) check_step(rep, options.max_relative_error);
  return rep;
}

NewtonResult chord_newton(const TotallyRealGraph& M, const CutoffV& v, const Vec& target,
                          const DiscParams& start, const Mat& J, DiscPoint zeta0, int max_iter,
                          double tol, const BishopOptions& solver) {
  NewtonResult res;
  res.params = start;
  const Eigen::PartialPivLU<Mat> lu(J);
  Vec p = start.packed();
  try {
    for (int it = 0; it <= max_iter; ++it) {
      const Vec F = disc_map(M, v, DiscParams::unpack(p), zeta0, solver) - target;
      res.residual = F.cwiseAbs().maxCoeff();
      res.iterations = it;
      if (res.residual < tol) {
        res.converged = true;
        res.params = DiscParams::unpack(p);
        return res;
      }
      p -= lu.solve(F);
    }
    res.error = "no convergence in " + std::to_string(max_iter) + " chord steps";
  } catch (const Error& e) {
    res.error = e.what();
  }
  res.params = DiscParams::unpack(p);
  return res;
}

OpenImageReport open_image_check(const TotallyRealGraph& M, const CutoffV& v, const ParamBox& Q,
                                 DiscPoint zeta0, const OpenImageOptions& options) {
  Q.validate();
  const int n = M.dim();
  const DiscParams origin = DiscParams::zero(n);
  const JacobianReport J = jac_S_full(M, v, origin, zeta0, options.jacobian);
  const Vec s0 = disc_map(M, v, origin, zeta0, options.jacobian.solver);

  OpenImageReport rep;
  rep.probes = options.n_probes;
  rep.center_determinant = J.determinant;
  std::vector<NewtonResult> results(static_cast<std::size_t>(options.n_probes));
  parallel_for(results.size(), [&](std::size_t k) {
    CounterRng rng = CounterRng(options.seed, 0x0be4ULL).substream(k);
    Vec dir(2 * n);
    for (int i = 0; i < 2 * n; ++i) {
      // Box-Muller normal components give a uniform direction.
      const double u1 = 1.0 - rng.uniform();
      const double u2 = rng.uniform();
      dir[i] = std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    }
    const double radius = options.probe_radius * std::pow(rng.uniform(), 1.0 / (2 * n));
    const Vec target = s0 + radius * dir / dir.norm();
    results[k] = chord_newton(M, v, target, origin, J.matrix, zeta0, options.max_newton,
                              options.newton_tol, options.jacobian.solver);
  });
  for (std::size_t k = 0; k < results.size(); ++k) {
    const NewtonResult& r = results[k];
    if (r.converged && Q.contains(r.params, 1e-12)) {
      ++rep.attained;
    } else if (!r.converged) {
      ++rep.inversion_failed;
      rep.failures.push_back("probe " + std::to_string(k) + ": InversionFailed: " + r.error);
    } else {
      rep.failures.push_back("probe " + std::to_string(k) + ": preimage outside Q");
    }
  }
  return rep;
}

DerivativeBoundReport dtau_bounds(const TotallyRealGraph& M, const CutoffV& v,
                                  const std::vector<DiscParams>& family,
                                  const BishopOptions& solver) {
  const int n = M.dim();
  const std::vector<int> nodes = v.gamma0_nodes();
  const Mat& dnv = v.normal_derivative().values();
  std::vector<Mat> dx(family.size());
  for (const auto& p : family) {
    if (max_norm(p.t) == 0.0) {
      throw Error(ErrorKind::InvalidArgument, "derivative bounds need t != 0 for every disc");
    }
  }
  parallel_for(family.size(), [&](std::size_t i) {
    dx[i] = d_tau(solve_bishop(M, v, family[i], solver).X).values();
  });

  DerivativeBoundReport rep;
  rep.b = v.b();
  rep.discs = static_cast<int>(family.size());
  rep.lower_margin = std::numeric_limits<double>::infinity();
  rep.min_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < family.size(); ++i) {
    const Vec& t = family[i].t;
    const double tn = max_norm(t);
    rep.t_max = std::max(rep.t_max, tn);
    for (int j : nodes) {
      const Vec row = dx[i].row(j).transpose();
      rep.sup_component = std::max(rep.sup_component, row.cwiseAbs().maxCoeff());
      rep.sup_norm = std::max(rep.sup_norm, max_norm(row));
      rep.C = std::max(rep.C, max_norm(row) / tn);
      for (int k = 0; k < n; ++k) {
        rep.sandwich_eps = std::max(rep.sandwich_eps, std::abs(row[k] + t[k] * dnv(j, 0)) / tn);
      }
      const double xn = std::abs(row[n - 1]);
      rep.lower_margin = std::min(rep.lower_margin, xn - (std::abs(t[n - 1]) * rep.b - 0.5 * tn * rep.b));
      rep.min_ratio = std::min(rep.min_ratio, xn / (rep.b * tn));
    }
  }
  rep.sandwich_violation = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < family.size(); ++i) {
    const Vec& t = family[i].t;
    const double slack = rep.sandwich_eps * max_norm(t);
    for (int j : nodes) {
      for (int k = 0; k < n; ++k) {
        const double a = std::abs(dx[i](j, k));
        const double lead = std::abs(t[k] * dnv(j, 0));
        rep.sandwich_violation =
            std::max({rep.sandwich_violation, lead - slack - a, a - lead - slack});
      }
    }
  }
  return rep;
}

double homogeneity_drift(const TotallyRealGraph& M, const CutoffV& v,
                         const std::vector<DiscParams>& family, const BishopOptions& solver) {
  std::vector<DiscParams> half = family;
  for (auto& p : half) p.t *= 0.5;
  const double c1 = dtau_bounds(M, v, family, solver).C;
  const double c2 = dtau_bounds(M, v, half, solver).C;
  return std::abs(c2 - c1) / c1;
}

std::vector<DiscParams> sample_family(const ParamBox& box, int count, std::uint64_t seed) {
  box.validate();
  std::vector<DiscParams> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    CounterRng rng = CounterRng(seed, 0xfa3117ULL).substream(static_cast<std::uint64_t>(k));
    DiscParams p = DiscParams::zero(box.dim());
    for (int i = 0; i < box.dim(); ++i) p.c[i] = rng.uniform(-box.c_half[i], box.c_half[i]);
    for (int i = 0; i < box.dim(); ++i) p.t[i] = rng.uniform(-box.t_half[i], box.t_half[i]);
    out.push_back(std::move(p));
  }
  return out;
}

double sandwich_shrink_ratio(const TotallyRealGraph& M, const CutoffV& v, const ParamBox& box,
                             int count, std::uint64_t seed, const BishopOptions& solver) {
  const std::vector<DiscParams> family = sample_family(box, count, seed);
  std::vector<DiscParams> half = family;
  for (auto& p : half) {
    p.c *= 0.5;
    p.t *= 0.5;
  }
  const double e1 = dtau_bounds(M, v, family, solver).sandwich_eps;
  const double e2 = dtau_bounds(M, v, half, solver).sandwich_eps;
  return e1 == 0.0 ? 0.0 : e2 / e1;
}

JacobianScan jacobian_scan(const TotallyRealGraph& M, const CutoffV& v, const ParamBox& box,
                           DiscPoint zeta0, int points_per_axis, const JacobianOptions& options) {
  const std::vector<DiscParams> lattice = box_lattice(box, points_per_axis);
  JacobianScan scan;
  scan.points.resize(lattice.size());
  parallel_for(lattice.size(), [&](std::size_t i) {
    ScanPoint& sp = scan.points[i];
    sp.params = lattice[i];
    try {
      const JacobianReport rep = jac_S_full(M, v, lattice[i], zeta0, options);
      sp.determinant = rep.determinant;
      sp.error_estimate = rep.error_estimate;
    } catch (const Error& e) {
      sp.error_kind = e.kind();
      sp.error = e.what();
    }
  });
  bool pos = false, neg = false;
  scan.min_abs_det = std::numeric_limits<double>::infinity();
  for (const auto& sp : scan.points) {
    if (sp.error_kind) {
      ++scan.failures;
      continue;
    }
    pos = pos || sp.determinant > 0.0;
    neg = neg || sp.determinant < 0.0;
    scan.min_abs_det = std::min(scan.min_abs_det, std::abs(sp.determinant));
    scan.max_abs_det = std::max(scan.max_abs_det, std::abs(sp.determinant));
  }
  if (!std::isfinite(scan.min_abs_det)) scan.min_abs_det = 0.0;
  scan.sign_change = pos && neg;
  return scan;
}

}  // namespace adisc
