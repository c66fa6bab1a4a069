#pragma once

// Finite-difference Jacobians of the disc family and the tangential-derivative bounds.
//
// Every derivative in (c, t) re-solves the Bishop equation, so these checks are
// independent of the solver internals.

#include "adisc/bishop.hpp"
#include "adisc/circle_ops.hpp"
#include "adisc/geometry.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace adisc {

struct JacobianOptions {
  /// Base central-difference step, multiplied by max(1, |p_j|).
  double step = 1e-5;
  /// Tighter than the default so that second differences stay above the noise floor.
  BishopOptions solver{1e-14, 500, 5};
  /// StepTooLarge when the Richardson estimate exceeds this fraction of |det|.
  double max_relative_error = 0.1;
};

struct RichardsonJacobian {
  Mat coarse;    // step h
  Mat fine;      // step h/2
  Mat extrapolated;
  double step = 0.0;
};

/// Central differences at h and h/2 and J = (4 J_{h/2} - J_h)/3.
RichardsonJacobian richardson_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& p,
                                       double step);

struct JacobianReport {
  std::string map;
  Vec point;
  Mat matrix;
  double determinant = 0.0;
  double step = 0.0;
  /// |det J_R - det J_{h/2}|.
  double error_estimate = 0.0;
  /// Boundary minor at t = 0: the constant disc, reported rather than rejected.
  bool degenerate = false;
};

/// S(c, t) = (Re Phi, Im Phi)(c, t, zeta0) as a map R^{2n} -> R^{2n}.
Vec disc_map(const TotallyRealGraph& M, const CutoffV& v, const DiscParams& p, DiscPoint zeta0,
             const BishopOptions& solver = {});

JacobianReport jac_S_full(const TotallyRealGraph& M, const CutoffV& v, const DiscParams& p,
                          DiscPoint zeta0, const JacobianOptions& options = {});

struct ReducedJacobianReport {
  JacobianReport report;
  double det_d11 = 0.0;
  double det_d22 = 0.0;
  /// 2x2 minor d(x_n, y_n)/d(zeta', zeta'') from finite differences.
  double d33_minor = 0.0;
  /// |dPhi_n/dzeta|^2 from the spectral derivative.
  double d33_cr = 0.0;
  /// |det - det D11 det D22 D33|.
  double factorization_residual = 0.0;
  /// v^{n-1}(zeta) at the evaluation point.
  double v_power = 0.0;
};

/// Parameters ('c, 't, zeta', zeta'') with c_n, t_n held at the values in `p`;
/// outputs ordered (x_1..x_{n-1}, y_1..y_{n-1}, x_n, y_n).
ReducedJacobianReport jac_S_reduced(const TotallyRealGraph& M, const CutoffV& v,
                                    const DiscParams& p, DiscPoint zeta,
                                    const JacobianOptions& options = {});

/// n x n minor of ('c, tau) -> X(c, t, tau): columns d/dc_j (j < n) by finite
/// differences, last column D_tau X spectrally.
JacobianReport jac_boundary(const TotallyRealGraph& M, const CutoffV& v, const DiscParams& p,
                            double tau, const JacobianOptions& options = {});

struct OpenImageOptions {
  double probe_radius = 1e-3;
  int n_probes = 64;
  int max_newton = 40;
  double newton_tol = 1e-10;
  std::uint64_t seed = 0;
  JacobianOptions jacobian;
};

struct OpenImageReport {
  int attained = 0;
  int probes = 0;
  int inversion_failed = 0;
  double center_determinant = 0.0;
  std::vector<std::string> failures;

  double fraction() const { return probes ? static_cast<double>(attained) / probes : 0.0; }
};

/// Chord-Newton on S from the box centre toward random targets in a ball about S(0).
OpenImageReport open_image_check(const TotallyRealGraph& M, const CutoffV& v, const ParamBox& Q,
                                 DiscPoint zeta0, const OpenImageOptions& options = {});

struct NewtonResult {
  bool converged = false;
  DiscParams params;
  int iterations = 0;
  double residual = 0.0;
  std::string error;
};

/// Solves S(p) = target with the fixed Jacobian J (chord method) from `start`.
NewtonResult chord_newton(const TotallyRealGraph& M, const CutoffV& v, const Vec& target,
                          const DiscParams& start, const Mat& J, DiscPoint zeta0, int max_iter,
                          double tol, const BishopOptions& solver);

struct DerivativeBoundReport {
  /// sup over gamma0 and the family of |D_tau X_k|.
  double sup_component = 0.0;
  /// sup of ||D_tau X|| (max-norm).
  double sup_norm = 0.0;
  /// max ||D_tau X|| / ||t||.
  double C = 0.0;
  double b = 0.0;
  double t_max = 0.0;
  /// max |D_tau X_k + t_k D_n v| / ||t||: the O(eps) of the sandwich.
  double sandwich_eps = 0.0;
  /// Largest violation of the sandwich with the fitted O(eps) (<= 0 when it holds).
  double sandwich_violation = 0.0;
  /// min over gamma0 of |D_tau X_n| - (|t_n| b - ||t|| b/2).
  double lower_margin = 0.0;
  /// min over gamma0 of |D_tau X_n| / (b ||t||).
  double min_ratio = 0.0;
  int discs = 0;
};

/// All family members need t != 0.
DerivativeBoundReport dtau_bounds(const TotallyRealGraph& M, const CutoffV& v,
                                  const std::vector<DiscParams>& family,
                                  const BishopOptions& solver = {});

/// Relative change of the fitted C when every t in the family is halved.
double homogeneity_drift(const TotallyRealGraph& M, const CutoffV& v,
                         const std::vector<DiscParams>& family, const BishopOptions& solver = {});

/// Random family with t != 0 drawn from the box.
std::vector<DiscParams> sample_family(const ParamBox& box, int count, std::uint64_t seed);

/// sandwich_eps on the halved box over sandwich_eps on the box, same unit samples.
double sandwich_shrink_ratio(const TotallyRealGraph& M, const CutoffV& v, const ParamBox& box,
                             int count, std::uint64_t seed, const BishopOptions& solver = {});

struct ScanPoint {
  DiscParams params;
  double determinant = 0.0;
  double error_estimate = 0.0;
  std::optional<ErrorKind> error_kind;
  std::string error;
};

struct JacobianScan {
  std::vector<ScanPoint> points;
  double min_abs_det = 0.0;
  double max_abs_det = 0.0;
  bool sign_change = false;
  int failures = 0;
};

/// jac_S_full over the lexicographic box lattice.
JacobianScan jacobian_scan(const TotallyRealGraph& M, const CutoffV& v, const ParamBox& box,
                           DiscPoint zeta0, int points_per_axis,
                           const JacobianOptions& options = {});

}  // namespace adisc
