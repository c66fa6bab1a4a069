#pragma once

// Harmonic measure of arcs (negative convention: boundary data -chi_arc),
// the region Omega, the two-constants bound, PSH test functions and good discs.

#include "adisc/bishop.hpp"
#include "adisc/circle_ops.hpp"
#include "adisc/geometry.hpp"

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace adisc {

using BoolMat = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// omega(zeta) = -(Poisson integral of chi_arc). Boundary points take -chi directly.
double harmonic_measure(const Arc& arc, DiscPoint zeta);

/// The same closed form at any complex point off the arc endpoints; harmonic across
/// the open unit circle away from the endpoints.
double harmonic_measure_continued(const Arc& arc, Complex z);

/// Extrapolated lim_{r->1} omega(r e^{i theta}) from probes at 1-1e-4 and 1-2e-4.
double radial_limit(const Arc& arc, double theta);

struct HarmonicMeasure {
  Arc arc = kUpperArc;
  double operator()(DiscPoint zeta) const { return harmonic_measure(arc, zeta); }
};

/// Radii 0 = r_0 < ... < r_n = 1, graded toward the circle, times the grid angles.
struct PolarLattice {
  CircleGrid grid;
  Vec radii;

  int n_radii() const noexcept { return static_cast<int>(radii.size()); }
  int n_angles() const noexcept { return grid.size(); }
  DiscPoint point(int i, int j) const { return DiscPoint{radii[i], grid.node(j)}; }
};

inline constexpr int kDefaultLatticeRadii = 256;

/// r_i = 1 - (1 - i/n)^3, i = 0..n.
PolarLattice polar_lattice(const CircleGrid& grid, int n = kDefaultLatticeRadii);

/// Scalar field on a polar lattice; values(i, j) lives at lattice.point(i, j).
struct LatticeField {
  PolarLattice lattice;
  Mat values;

  /// The r = 1 row.
  Vec boundary() const { return values.row(values.rows() - 1).transpose(); }
};

LatticeField omega_field(const Arc& arc, const PolarLattice& lattice);

/// Writes r, theta, value rows.
void write_csv(const LatticeField& f, std::ostream& os);

struct HarmonicityReport {
  double max_residual = 0.0;
  int checked = 0;
  /// Points so close to an arc endpoint that the stencil is below floating-point resolution.
  int unresolved = 0;
};

/// Ring-mean Laplacian estimate 4 (mean - u) / rho^2 of the continued omega at every
/// interior lattice point, rho = min(0.05, d/4) with d the distance to the nearest endpoint.
HarmonicityReport harmonicity_residual(const Arc& arc, const PolarLattice& lattice,
                                       double resolution_floor = 1e-7);

struct OmegaRegion {
  double threshold = 0.25;
  PolarLattice lattice;
  /// 1 + omega on the lattice.
  Mat one_plus_omega;
  BoolMat mask;
  int interior_count = 0;
  /// Per angle, 1 - (smallest radius from which the whole radial segment to 1 lies in Omega).
  Vec radial_depth;
  /// min of radial_depth over gamma0 angles.
  double inradius = 0.0;

  bool contains(int i, int j) const { return mask(i, j); }
};

/// Sublevel set {1 + omega < threshold}; ResolutionTooCoarse if no interior point qualifies.
OmegaRegion omega_region(const Arc& arc, double threshold, const PolarLattice& lattice,
                         const Arc& gamma0);

struct TwoConstantsReport {
  double k = 0.0;
  double K = 0.0;
  /// max over the lattice of u - (k + (K - k)(1 + omega)).
  double worst_margin = 0.0;
  int worst_radius = 0;
  int worst_angle = 0;
  bool passed = true;
};

/// Checks u <= k + (K-k)(1+omega) + tol on the lattice. Arc boundary nodes flagged in
/// `excluded` (gamma_I) are exempt from the u <= k precondition.
/// `omega`, when given, must be omega_field(arc, u.lattice).
TwoConstantsReport two_constants_check(const LatticeField& u, const Arc& arc, double k, double K,
                                       double tol = 1e-8, const std::vector<bool>& excluded = {},
                                       const LatticeField* omega = nullptr);

/// Plurisubharmonic test function with a declared validity ball |z| < radius
/// on which 0 <= V <= 1.
class PshTestFn {
 public:
  static PshTestFn constant(std::string name, double value, double radius);
  /// max(0, 1 + eps log|a.z - w|); requires |a| radius + |w| <= 1.
  static PshTestFn log_modulus(std::string name, CVec a, Complex w, double eps, double radius);
  /// Pointwise max; the validity radius is the smallest among the parts.
  static PshTestFn maximum(std::string name, const std::vector<PshTestFn>& parts);

  const std::string& name() const noexcept { return name_; }
  const std::string& descriptor() const noexcept { return descriptor_; }
  double validity_radius() const noexcept { return radius_; }
  bool in_validity_region(const CVec& z) const { return z.norm() < radius_; }
  double operator()(const CVec& z) const { return eval_(z); }

 private:
  PshTestFn(std::string name, std::string descriptor, double radius,
            std::function<double(const CVec&)> eval);

  std::string name_;
  std::string descriptor_;
  double radius_ = 0.0;
  std::function<double(const CVec&)> eval_;
};

/// f(zeta0) - mean of f on the circle of radius rho about zeta0 (<= 0 for subharmonic f).
double sub_mean_defect(const std::function<double(Complex)>& f, Complex zeta0, double rho,
                       int samples = 64);

/// Largest sub-mean defect of V restricted to random complex lines through random
/// points of the validity ball.
double psh_spot_check(const PshTestFn& V, int dim, std::uint64_t seed, int lines = 32);

struct ComposedField {
  LatticeField u;
  /// max |Phi| over the lattice.
  double max_image_norm = 0.0;
};

/// Phi sampled on a polar lattice, one N x n block per radius.
struct DiscImage {
  PolarLattice lattice;
  std::vector<CMat> rows;
  double max_norm = 0.0;
};

DiscImage disc_image(const AnalyticDisc& disc, const PolarLattice& lattice);

/// u = V o Phi on the lattice; RangeEscape when Phi leaves V's validity ball.
ComposedField compose(const PshTestFn& V, const AnalyticDisc& disc, const PolarLattice& lattice);
ComposedField compose(const PshTestFn& V, const DiscImage& image);

struct GoodDiscOptions {
  /// Longest arc of consecutive near-zero gamma nodes that still counts as one isolated zero.
  double max_zero_arc = 0.05;
};

struct GoodDiscResult {
  bool is_good = true;
  /// Near-zero gamma nodes (|g_i| <= eta), summed over i.
  int hits = 0;
  /// Zeros located on gamma: near-zero clusters plus sign changes between nodes.
  int crossings = 0;
  bool zero_isolation = true;
  /// Per gamma-index flag of near-zero nodes (gamma_I); indexed like the grid.
  std::vector<bool> gamma_i;
};

GoodDiscResult good_disc(const AnalyticDisc& disc, const ExceptionalSet& set,
                         const GoodDiscOptions& options = {});

}  // namespace adisc
