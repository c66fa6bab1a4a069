#include "adisc/potential.hpp"

#include "adisc/errors.hpp"
#include "adisc/parallel.hpp"
#include "adisc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace adisc {

double harmonic_measure_continued(const Arc& arc, Complex z) {
  const Complex a = std::polar(1.0, arc.begin);
  const Complex b = std::polar(1.0, arc.end);
  const double len = arc.length();
  // The angle subtended at z by the arc lies in [len/2, pi + len/2] on the closed disc;
  // centring the branch there keeps the cut outside.
  const double mid = 0.5 * len + 0.5 * kPi;
  const double delta = mid + std::remainder(std::arg((b - z) / (a - z)) - mid, kTwoPi);
  return -(delta / kPi - len / kTwoPi);
}

double harmonic_measure(const Arc& arc, DiscPoint zeta) {
  if (!(zeta.r >= 0.0 && zeta.r <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "harmonic_measure requires r in [0,1]");
  }
  if (zeta.r == 1.0) return arc.contains(zeta.theta) ? -1.0 : 0.0;
  return harmonic_measure_continued(arc, zeta.z());
}

double radial_limit(const Arc& arc, double theta) {
  const double near = harmonic_measure(arc, DiscPoint{1.0 - 1e-4, theta});
  const double far = harmonic_measure(arc, DiscPoint{1.0 - 2e-4, theta});
  return 2.0 * near - far;
}

PolarLattice polar_lattice(const CircleGrid& grid, int n) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "lattice needs at least one radius step");
  Vec radii(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double s = 1.0 - static_cast<double>(i) / n;
    radii[i] = 1.0 - s * s * s;
  }
  radii[n] = 1.0;
  return PolarLattice{grid, std::move(radii)};
}

LatticeField omega_field(const Arc& arc, const PolarLattice& lattice) {
  Mat values(lattice.n_radii(), lattice.n_angles());
  parallel_for(static_cast<std::size_t>(lattice.n_radii()), [&](std::size_t i) {
    for (int j = 0; j < lattice.n_angles(); ++j) {
      values(static_cast<Eigen::Index>(i), j) =
          harmonic_measure(arc, lattice.point(static_cast<int>(i), j));
    }
  });
  return LatticeField{lattice, std::move(values)};
}

void write_csv(const LatticeField& f, std::ostream& os) {
  os << "r,theta,value\n" << std::setprecision(17);
  for (int i = 0; i < f.lattice.n_radii(); ++i) {
    for (int j = 0; j < f.lattice.n_angles(); ++j) {
      os << f.lattice.radii[i] << ',' << f.lattice.grid.node(j) << ',' << f.values(i, j) << '\n';
    }
  }
}

HarmonicityReport harmonicity_residual(const Arc& arc, const PolarLattice& lattice,
                                       double resolution_floor) {
  constexpr int kRing = 32;
  constexpr double kRoundoff = 1e-15;
  const Complex a = std::polar(1.0, arc.begin);
  const Complex b = std::polar(1.0, arc.end);
  const int rows = lattice.n_radii() - 1;
  std::vector<HarmonicityReport> per_row(static_cast<std::size_t>(rows));
  parallel_for(per_row.size(), [&](std::size_t i) {
    HarmonicityReport& rep = per_row[i];
    for (int j = 0; j < lattice.n_angles(); ++j) {
      const Complex z = lattice.point(static_cast<int>(i), j).z();
      const double d = std::min(std::abs(z - a), std::abs(z - b));
      const double rho = std::min(0.05, 0.25 * d);
      if (4.0 * kRoundoff / (rho * rho) > resolution_floor) {
        ++rep.unresolved;
        continue;
      }
      double mean = 0.0;
      for (int k = 0; k < kRing; ++k) {
        mean += harmonic_measure_continued(arc, z + std::polar(rho, kTwoPi * k / kRing));
      }
      mean /= kRing;
      const double lap = 4.0 * (mean - harmonic_measure_continued(arc, z)) / (rho * rho);
      rep.max_residual = std::max(rep.max_residual, std::abs(lap));
      ++rep.checked;
    }
  });
  HarmonicityReport out;
  for (const auto& r : per_row) {
    out.max_residual = std::max(out.max_residual, r.max_residual);
    out.checked += r.checked;
    out.unresolved += r.unresolved;
  }
  return out;
}

OmegaRegion omega_region(const Arc& arc, double threshold, const PolarLattice& lattice,
                         const Arc& gamma0) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "omega threshold must lie in (0,1)");
  }
  OmegaRegion region{threshold, lattice, Mat(), BoolMat(), 0, Vec(), 0.0};
  region.one_plus_omega = omega_field(arc, lattice).values.array() + 1.0;
  region.mask = region.one_plus_omega.array() < threshold;
  const int last = lattice.n_radii() - 1;
  region.interior_count = static_cast<int>(region.mask.topRows(last).count());
  if (region.interior_count == 0) {
    throw Error(ErrorKind::ResolutionTooCoarse,
                "no interior lattice point satisfies 1 + omega < " + std::to_string(threshold) +
                    " with " + std::to_string(last) + " radial steps");
  }
  region.radial_depth = Vec::Zero(lattice.n_angles());
  for (int j = 0; j < lattice.n_angles(); ++j) {
    int i = last;
    while (i > 0 && region.mask(i - 1, j) && region.mask(i, j)) --i;
    if (region.mask(last, j)) region.radial_depth[j] = 1.0 - lattice.radii[i];
  }
  region.inradius = std::numeric_limits<double>::infinity();
  for (int j = 0; j < lattice.n_angles(); ++j) {
    const double th = lattice.grid.node(j);
    if (th >= gamma0.begin && th <= gamma0.end) {
      region.inradius = std::min(region.inradius, region.radial_depth[j]);
    }
  }
  if (!std::isfinite(region.inradius)) region.inradius = 0.0;
  return region;
}

TwoConstantsReport two_constants_check(const LatticeField& u, const Arc& arc, double k, double K,
                                       double tol, const std::vector<bool>& excluded,
                                       const LatticeField* omega_in) {
  const PolarLattice& lat = u.lattice;
  const int last = lat.n_radii() - 1;
  if (u.values.maxCoeff() > K + tol) {
    throw Error(ErrorKind::HypothesisViolated,
                "u exceeds K = " + std::to_string(K) + " on the lattice");
  }
  for (int j = 0; j < lat.n_angles(); ++j) {
    if (!arc.contains(lat.grid.node(j))) continue;
    if (!excluded.empty() && excluded[static_cast<std::size_t>(j)]) continue;
    if (u.values(last, j) > k + tol) {
      throw Error(ErrorKind::HypothesisViolated,
                  "u exceeds k = " + std::to_string(k) + " at arc node " + std::to_string(j));
    }
  }
  const LatticeField omega = omega_in ? *omega_in : omega_field(arc, lat);
  TwoConstantsReport rep{k, K, -std::numeric_limits<double>::infinity(), 0, 0, true};
  for (int i = 0; i <= last; ++i) {
    for (int j = 0; j < lat.n_angles(); ++j) {
      const double bound = k + (K - k) * (1.0 + omega.values(i, j));
      const double m = u.values(i, j) - bound;
      if (m > rep.worst_margin) {
        rep.worst_margin = m;
        rep.worst_radius = i;
        rep.worst_angle = j;
      }
    }
  }
  rep.passed = rep.worst_margin <= tol;
  return rep;
}

PshTestFn::PshTestFn(std::string name, std::string descriptor, double radius,
                     std::function<double(const CVec&)> eval)
    : name_(std::move(name)), descriptor_(std::move(descriptor)), radius_(radius), eval_(std::move(eval)) {}

PshTestFn PshTestFn::constant(std::string name, double value, double radius) {
  if (!(value >= 0.0 && value <= 1.0) || !(radius > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "constant fixture needs value in [0,1] and radius > 0");
  }
  std::ostringstream d;
  d << "constant " << value;
  return PshTestFn(std::move(name), d.str(), radius, [value](const CVec&) { return value; });
}

PshTestFn PshTestFn::log_modulus(std::string name, CVec a, Complex w, double eps, double radius) {
  if (a.size() == 0 || !(eps > 0.0) || !(radius > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "log_modulus fixture needs a, eps > 0, radius > 0");
  }
  // |a.z - w| <= |a| R + |w| <= 1 keeps V <= 1 on the ball.
  if (a.norm() * radius + std::abs(w) > 1.0 + 1e-12) {
    throw Error(ErrorKind::InvalidArgument,
                "log_modulus fixture '" + name + "' can exceed 1 on its validity ball");
  }
  std::ostringstream d;
  d << "max(0, 1 + " << eps << " log|a.z - (" << w.real() << "+" << w.imag() << "i)|)";
  return PshTestFn(std::move(name), d.str(), radius, [a = std::move(a), w, eps](const CVec& z) {
    const double m = std::abs((a.array() * z.array()).sum() - w);
    if (m == 0.0) return 0.0;
    return std::max(0.0, 1.0 + eps * std::log(m));
  });
}

PshTestFn PshTestFn::maximum(std::string name, const std::vector<PshTestFn>& parts) {
  if (parts.empty()) throw Error(ErrorKind::InvalidArgument, "maximum fixture needs parts");
  double radius = std::numeric_limits<double>::infinity();
  std::string d = "max(";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    radius = std::min(radius, parts[i].validity_radius());
    d += (i ? ", " : "") + parts[i].name();
  }
  d += ")";
  return PshTestFn(std::move(name), d, radius, [parts](const CVec& z) {
    double best = 0.0;
    for (const auto& p : parts) best = std::max(best, p(z));
    return best;
  });
}

double sub_mean_defect(const std::function<double(Complex)>& f, Complex zeta0, double rho,
                       int samples) {
  double mean = 0.0;
  for (int k = 0; k < samples; ++k) mean += f(zeta0 + std::polar(rho, kTwoPi * k / samples));
  return f(zeta0) - mean / samples;
}

double psh_spot_check(const PshTestFn& V, int dim, std::uint64_t seed, int lines) {
  CounterRng rng(seed, 0x95bULL);
  const double R = V.validity_radius();
  double worst = -std::numeric_limits<double>::infinity();
  for (int l = 0; l < lines; ++l) {
    CVec z0(dim), dir(dim);
    for (int k = 0; k < dim; ++k) {
      z0[k] = Complex(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
      dir[k] = Complex(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    }
    z0 *= 0.5 * R * rng.uniform() / z0.norm();
    dir /= dir.norm();
    const double rho = 0.25 * R * rng.uniform(0.05, 1.0);
    auto f = [&](Complex lambda) { return V(z0 + lambda * dir); };
    worst = std::max(worst, sub_mean_defect(f, 0.0, rho, 1024));
  }
  return worst;
}

DiscImage disc_image(const AnalyticDisc& disc, const PolarLattice& lattice) {
  if (!(lattice.grid == disc.grid())) {
    throw Error(ErrorKind::InvalidArgument, "lattice and disc use different grids");
  }
  DiscImage image{lattice, std::vector<CMat>(static_cast<std::size_t>(lattice.n_radii())), 0.0};
  parallel_for(image.rows.size(), [&](std::size_t i) {
    image.rows[i] = disc.on_circle(lattice.radii[static_cast<Eigen::Index>(i)]);
  });
  for (const CMat& block : image.rows) {
    image.max_norm = std::max(image.max_norm, block.rowwise().norm().maxCoeff());
  }
  return image;
}

ComposedField compose(const PshTestFn& V, const DiscImage& image) {
  if (!(image.max_norm < V.validity_radius())) {
    throw Error(ErrorKind::RangeEscape, "disc image reaches |z| = " + std::to_string(image.max_norm) +
                                            " outside the validity ball of '" + V.name() + "'");
  }
  const PolarLattice& lattice = image.lattice;
  Mat u(lattice.n_radii(), lattice.n_angles());
  parallel_for(image.rows.size(), [&](std::size_t i) {
    const CMat& block = image.rows[i];
    for (int j = 0; j < lattice.n_angles(); ++j) {
      u(static_cast<Eigen::Index>(i), j) = V(block.row(j).transpose());
    }
  });
  return ComposedField{LatticeField{lattice, std::move(u)}, image.max_norm};
}

ComposedField compose(const PshTestFn& V, const AnalyticDisc& disc, const PolarLattice& lattice) {
  return compose(V, disc_image(disc, lattice));
}

GoodDiscResult good_disc(const AnalyticDisc& disc, const ExceptionalSet& set,
                         const GoodDiscOptions& options) {
  const CircleGrid& grid = disc.grid();
  GoodDiscResult res;
  res.gamma_i.assign(static_cast<std::size_t>(grid.size()), false);
  if (set.empty()) return res;

  std::vector<int> arc;
  for (int j = 0; j < grid.size(); ++j) {
    if (kUpperArc.contains(grid.node(j))) arc.push_back(j);
  }
  const CMat phi = disc.boundary_values();
  const double h = grid.spacing();

  for (const Polynomial& g : set.functions) {
    std::vector<double> val(arc.size());
    std::vector<bool> near(arc.size());
    int hits = 0;
    for (std::size_t s = 0; s < arc.size(); ++s) {
      val[s] = g.evaluate(set.chart.param(phi.row(arc[s]).transpose()));
      near[s] = std::abs(val[s]) <= set.eta;
      if (near[s]) {
        ++hits;
        res.gamma_i[static_cast<std::size_t>(arc[s])] = true;
      }
    }
    res.hits += hits;
    if (hits * h > options.max_zero_arc) res.is_good = false;

    for (std::size_t s = 0; s < arc.size();) {
      if (!near[s]) {
        if (s + 1 < arc.size() && !near[s + 1] && val[s] * val[s + 1] < 0.0) ++res.crossings;
        ++s;
        continue;
      }
      std::size_t e = s;
      while (e + 1 < arc.size() && near[e + 1]) ++e;
      ++res.crossings;
      const bool interior = s > 0 && e + 1 < arc.size();
      const bool flips = interior && val[s - 1] * val[e + 1] < 0.0;
      if ((e - s) * h > options.max_zero_arc || (interior && !flips)) res.zero_isolation = false;
      s = e + 1;
    }
  }
  if (!res.zero_isolation) res.is_good = false;
  return res;
}

}  // namespace adisc
