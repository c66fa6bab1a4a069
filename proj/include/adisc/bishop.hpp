#pragma once

#include "adisc/circle_ops.hpp"
#include "adisc/errors.hpp"
#include "adisc/geometry.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace adisc {

/// Max-norm of a parameter vector, the norm used in all epsilon bookkeeping.
inline double max_norm(const Vec& a) { return a.size() == 0 ? 0.0 : a.lpNorm<Eigen::Infinity>(); }

struct DiscParams {
  Vec c;
  Vec t;

  int dim() const noexcept { return static_cast<int>(c.size()); }
  static DiscParams zero(int n) { return DiscParams{Vec::Zero(n), Vec::Zero(n)}; }
  /// Packs (c, t) into one vector of length 2n.
  Vec packed() const;
  static DiscParams unpack(const Vec& p);
};

/// Q = Q_c x Q_t, both centred at the origin with per-axis half-widths.
struct ParamBox {
  Vec c_half;
  Vec t_half;

  int dim() const noexcept { return static_cast<int>(c_half.size()); }
  /// max over the box of ||c|| + ||t|| (max-norm).
  double epsilon() const { return max_norm(c_half) + max_norm(t_half); }
  ParamBox halved() const { return ParamBox{0.5 * c_half, 0.5 * t_half}; }
  ParamBox scaled(double s) const { return ParamBox{s * c_half, s * t_half}; }
  bool contains(const DiscParams& p, double slack = 0.0) const;
  void validate() const;
};

struct BishopOptions {
  double tol = 1e-12;
  int max_iter = 500;
  /// Consecutive growing updates that abort the iteration.
  int divergence_window = 5;
};

struct BishopSolution {
  DiscParams params;
  GridFn X;
  /// h o X on the grid.
  GridFn h_star;
  double residual = 0.0;
  int iterations = 0;
  double spectral_tail = 0.0;
};

/// Picard iteration X <- c - conjugate(h o X + t v) from X = c.
BishopSolution solve_bishop(const TotallyRealGraph& M, const CutoffV& v, const DiscParams& p,
                            const BishopOptions& options = {});

/// The holomorphic disc Phi(zeta) = X(zeta) + i [h*(zeta) + t v(zeta)].
class AnalyticDisc {
 public:
  AnalyticDisc(BishopSolution solution, const CutoffV& v);

  const BishopSolution& solution() const noexcept { return sol_; }
  const DiscParams& params() const noexcept { return sol_.params; }
  int dim() const noexcept { return sol_.X.dim(); }
  const CircleGrid& grid() const noexcept { return sol_.X.grid(); }
  /// h o X + t v on the grid.
  const GridFn& imaginary_trace() const noexcept { return g_; }
  const FourierCoeffs& x_coeffs() const noexcept { return x_coeffs_; }
  const FourierCoeffs& g_coeffs() const noexcept { return g_coeffs_; }

  /// First form: harmonic extensions of X and h* + t v. Valid on the closed disc.
  CVec evaluate(DiscPoint zeta) const;
  /// Second form: c + i S[h* + t v](zeta), holomorphic by construction. Requires r < 1.
  CVec evaluate_schwarz(DiscPoint zeta) const;
  /// dPhi/dzeta from the second form. Requires r < 1.
  CVec derivative(DiscPoint zeta) const;
  /// Boundary values of the second form at the grid nodes (N x n).
  CMat boundary_values() const;
  /// Values on the circle of radius r at the grid angles (N x n); r = 1 gives boundary_values().
  CMat on_circle(double r) const;
  /// Largest discrete Cauchy-Riemann defect of the first form on the circle of radius r.
  double cauchy_riemann_residual(double r, double step = 1e-5) const;

 private:
  BishopSolution sol_;
  GridFn g_;
  FourierCoeffs x_coeffs_;
  FourierCoeffs g_coeffs_;
};

AnalyticDisc assemble_disc(const BishopSolution& solution, const CutoffV& v);

/// sup over gamma nodes of |Im Phi - h(Re Phi)| using the holomorphic boundary values.
double attachment_error(const AnalyticDisc& disc, const TotallyRealGraph& M);

/// Phi's real part at the origin, i.e. the node mean of X.
Vec center(const AnalyticDisc& disc);

struct CertifyOptions {
  double target_factor = 0.5;
  int max_halvings = 20;
  int random_samples = 8;
  std::uint64_t seed = 0;
};

struct ContractionCertificate {
  ParamBox box;
  double factor = 0.0;
  int halvings = 0;
  std::vector<double> factor_history;
};

/// Empirical Lipschitz factor of the Picard map over sampled parameters of the box.
double estimate_contraction(const TotallyRealGraph& M, const CutoffV& v, const ParamBox& box,
                            const CertifyOptions& options = {});

/// Halves Q until the estimated factor drops below the target (BoxCollapsed otherwise).
ContractionCertificate contraction_certify(const TotallyRealGraph& M, const CutoffV& v,
                                           const ParamBox& box, const CertifyOptions& options = {});

/// Lexicographic lattice over (c_1..c_n, t_1..t_n), points_per_axis values per axis.
std::vector<DiscParams> box_lattice(const ParamBox& box, int points_per_axis);

struct SweepEntry {
  DiscParams params;
  std::optional<BishopSolution> solution;
  std::optional<ErrorKind> error_kind;
  std::string error;
};

struct SweepResult {
  std::vector<SweepEntry> entries;
  std::size_t converged() const;
};

/// Solves every lattice point; per-point failures are recorded, not thrown.
SweepResult sweep(const TotallyRealGraph& M, const CutoffV& v, const ParamBox& box,
                  int points_per_axis, const BishopOptions& options = {});
SweepResult solve_all(const TotallyRealGraph& M, const CutoffV& v,
                      const std::vector<DiscParams>& params, const BishopOptions& options = {});

}  // namespace adisc
