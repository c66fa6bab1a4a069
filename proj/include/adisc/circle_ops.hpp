#pragma once

// Spectral harmonic analysis on the unit circle and the unit disc.
//
// Grid functions are sampled at theta_j = 2*pi*j/N with N a power of two.
// Coefficients follow f(theta_j) = sum_k a_k exp(i k theta_j) for
// k = -N/2 .. N/2-1. Harmonic extensions use the r^|k| damped series.

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <numbers>

namespace adisc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using Complex = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Fraction of spectral energy in the top quarter above which operations warn.
inline constexpr double kAliasingThreshold = 1e-10;

class CircleGrid {
 public:
  /// Throws InvalidArgument unless n_nodes >= 8 and a power of two.
  explicit CircleGrid(int n_nodes);

  int size() const noexcept { return n_; }
  double spacing() const noexcept { return kTwoPi / n_; }
  double node(int j) const noexcept { return kTwoPi * j / n_; }
  Vec nodes() const;

  bool operator==(const CircleGrid&) const = default;

 private:
  int n_;
};

/// R^d-valued function sampled on the nodes of a CircleGrid (one column per component).
class GridFn {
 public:
  GridFn(CircleGrid grid, Mat values);

  static GridFn sample(const CircleGrid& grid, int dim,
                       const std::function<Vec(double)>& f);
  static GridFn sample_scalar(const CircleGrid& grid,
                              const std::function<double(double)>& f);
  static GridFn constant(const CircleGrid& grid, const Vec& value);

  const CircleGrid& grid() const noexcept { return grid_; }
  int size() const noexcept { return grid_.size(); }
  int dim() const noexcept { return static_cast<int>(values_.cols()); }
  const Mat& values() const noexcept { return values_; }
  Vec component(int k) const { return values_.col(k); }
  Vec at(int j) const { return values_.row(j).transpose(); }

  /// Mean over the nodes, per component.
  Vec mean() const { return values_.colwise().mean().transpose(); }
  double sup_norm() const { return values_.cwiseAbs().maxCoeff(); }

 private:
  CircleGrid grid_;
  Mat values_;
};

double sup_distance(const GridFn& a, const GridFn& b);

/// zeta = r exp(i theta) in the closed unit disc.
struct DiscPoint {
  double r = 0.0;
  double theta = 0.0;

  /// Throws InvalidArgument unless 0 <= r <= 1.
  static DiscPoint make(double r, double theta);
  static DiscPoint from_complex(Complex z);
  Complex z() const { return std::polar(r, theta); }
};

class FourierCoeffs {
 public:
  FourierCoeffs(int n_nodes, CMat raw) : n_(n_nodes), raw_(std::move(raw)) {}

  int size() const noexcept { return n_; }
  int dim() const noexcept { return static_cast<int>(raw_.cols()); }

  /// Coefficient of exp(i k theta), k in [-N/2, N/2).
  Complex operator()(int k, int comp) const { return raw_(slot(k), comp); }

  /// Storage in FFT order: k = 0..N/2-1 then -N/2..-1.
  const CMat& raw() const noexcept { return raw_; }
  int slot(int k) const noexcept { return k >= 0 ? k : k + n_; }
  static int wavenumber(int slot, int n) noexcept { return slot < n / 2 ? slot : slot - n; }

 private:
  int n_;
  CMat raw_;
};

FourierCoeffs transform(const GridFn& f);
GridFn inverse(const FourierCoeffs& a, const CircleGrid& grid);

/// Harmonic conjugate: multiplier -i sign(k), zero mean and zero Nyquist mode.
GridFn conjugate(const GridFn& f);

/// Spectral derivative with respect to the boundary angle (multiplier i k).
GridFn d_tau(const GridFn& f);

/// Harmonic extension into the closed disc, per component.
Vec poisson_extend(const GridFn& f, DiscPoint zeta);
Vec poisson_extend(const FourierCoeffs& a, DiscPoint zeta);

/// F = P[f] + i P[conjugate(f)] at an interior point. Throws InvalidArgument at r = 1.
CVec schwarz(const GridFn& f, DiscPoint zeta);
CVec schwarz(const FourierCoeffs& a, DiscPoint zeta);

/// Complex derivative dF/dzeta of the Schwarz integral at an interior point.
CVec schwarz_derivative(const FourierCoeffs& a, DiscPoint zeta);

/// Harmonic extension evaluated on the circle of radius r at the grid angles (N x d).
Mat extend_on_circle(const FourierCoeffs& a, double r);

/// Schwarz integral on the circle of radius r < 1 at the grid angles (N x d).
CMat schwarz_on_circle(const FourierCoeffs& a, double r);

/// Share of spectral energy carried by |k| >= N/4, pooled over components.
double spectral_tail_fraction(const FourierCoeffs& a);

/// Number of under-resolution warnings emitted so far in this process.
std::size_t underresolved_warning_count();

/// Columns: theta, value_1..value_d.
void write_csv(const GridFn& f, std::ostream& os);

}  // namespace adisc
