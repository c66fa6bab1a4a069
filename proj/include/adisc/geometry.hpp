#pragma once

#include "adisc/circle_ops.hpp"
#include "adisc/polynomial.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace adisc {

/// Smooth map h: R^n -> R^n whose graph y = h(x) is the manifold.
class GraphFunction {
 public:
  virtual ~GraphFunction() = default;
  virtual int dim() const = 0;
  virtual Vec evaluate(const Vec& x) const = 0;
  virtual Mat jacobian(const Vec& x) const = 0;
  /// evaluate() applied to every row of X.
  virtual Mat evaluate_rows(const Mat& X) const;
  /// Coefficient table when the map is a plain polynomial.
  virtual const PolyMap* polynomial() const { return nullptr; }
};

class PolynomialGraphFunction final : public GraphFunction {
 public:
  explicit PolynomialGraphFunction(PolyMap h);
  int dim() const override { return h_.n_out(); }
  Vec evaluate(const Vec& x) const override { return h_.evaluate(x); }
  Mat jacobian(const Vec& x) const override { return h_.jacobian(x); }
  Mat evaluate_rows(const Mat& X) const override { return h_.evaluate_rows(X); }
  const PolyMap* polynomial() const override { return &h_; }

 private:
  PolyMap h_;
};

/// M = { x + i h(x) : |x| < domain_radius } in C^n.
class TotallyRealGraph {
 public:
  TotallyRealGraph(PolyMap h, double domain_radius);
  TotallyRealGraph(std::shared_ptr<const GraphFunction> h, double domain_radius);

  int dim() const noexcept { return h_->dim(); }
  double domain_radius() const noexcept { return radius_; }
  Vec h(const Vec& x) const { return h_->evaluate(x); }
  Mat dh(const Vec& x) const { return h_->jacobian(x); }
  Mat h_rows(const Mat& X) const { return h_->evaluate_rows(X); }
  /// True when h is the zero polynomial.
  bool is_flat() const noexcept { return flat_; }
  const PolyMap* polynomial() const { return h_->polynomial(); }
  const std::shared_ptr<const GraphFunction>& function() const noexcept { return h_; }
  bool in_domain(const Vec& x) const { return x.norm() < radius_; }

 private:
  std::shared_ptr<const GraphFunction> h_;
  double radius_;
  bool flat_ = false;
};

/// Generic manifold of real dimension m given as y' = h(x, y''), with
/// y' = (y_1..y_{2n-m}) and y'' = (y_{2n-m+1}..y_n). h has m variables (x then y'').
struct GenericGraph {
  int n = 0;
  int m = 0;
  PolyMap h;
  double domain_radius = 0.5;
};

/// Rejects graphs with a constant or linear part (MalformedGraph).
const TotallyRealGraph& validate_graph(const TotallyRealGraph& g);
const GenericGraph& validate_graph(const GenericGraph& g);

/// Closed angular interval [begin, end] on the circle, begin < end, radians.
struct Arc {
  double begin = 0.0;
  double end = kPi;

  double length() const { return end - begin; }
  /// Membership of a node angle, tolerant to rounding at the endpoints.
  bool contains(double theta) const;
};

/// The attaching arc gamma = { theta in [0, pi] }.
inline constexpr Arc kUpperArc{0.0, kPi};

/// Smooth non-negative function on the circle vanishing exactly on gamma.
class CutoffV {
 public:
  CutoffV(CircleGrid grid, Arc gamma0);

  /// exp(-1/((theta-pi)(2pi-theta))) on (pi, 2pi), zero elsewhere.
  static double evaluate(double theta);

  const CircleGrid& grid() const noexcept { return samples_.grid(); }
  const GridFn& samples() const noexcept { return samples_; }
  const FourierCoeffs& coeffs() const noexcept { return coeffs_; }
  const Arc& gamma0() const noexcept { return gamma0_; }
  /// Support of v: the open lower half circle.
  static constexpr Arc support() { return Arc{kPi, kTwoPi}; }

  /// conjugate(v) on the grid.
  const GridFn& conjugate_v() const noexcept { return conj_v_; }
  /// D_tau conjugate(v), the outward normal derivative of the extension of v.
  const GridFn& normal_derivative() const noexcept { return dn_v_; }
  /// inf over gamma0 nodes of |D_n v|.
  double b() const noexcept { return b_; }
  /// Harmonic extension of v at an interior point.
  double extend(DiscPoint zeta) const;
  /// Indices of grid nodes lying on gamma0.
  std::vector<int> gamma0_nodes() const;

 private:
  GridFn samples_;
  FourierCoeffs coeffs_;
  Arc gamma0_;
  GridFn conj_v_;
  GridFn dn_v_;
  double b_ = 0.0;
};

/// Throws InvalidArgument unless gamma0 lies strictly inside (0, pi).
CutoffV default_cutoff(const CircleGrid& grid, Arc gamma0);

/// Maps points of C^n in working coordinates w to manifold parameters:
/// z = to_original * w, parameters (Re z, Im z_{2n-m..n-1}).
struct ParamChart {
  int n = 0;
  int m = 0;
  CMat to_original;

  static ParamChart identity(int n);
  Vec param(const CVec& w) const;
};

/// Finite union of zero sets of polynomials on the parameter domain of M.
struct ExceptionalSet {
  std::vector<Polynomial> functions;
  double eta = 1e-6;
  ParamChart chart;

  bool empty() const noexcept { return functions.empty(); }
  /// Throws InvalidArgument if eta <= 0 or some g_i is identically zero.
  void validate() const;
};

/// true iff min_i |g_i(x)| <= eta; x in parameter coordinates.
bool membership(const ExceptionalSet& set, const Vec& x);

/// Plane y'' = x * B with B of shape n x (m - n).
struct PlaneSlice {
  Mat B;
  double norm() const { return B.size() == 0 ? 0.0 : B.cwiseAbs().maxCoeff(); }
};

/// A totally real graph in coordinates w = to_normalized * z, with h~(0)=0, Dh~(0)=0.
struct NormalizedGraph {
  TotallyRealGraph graph;
  CMat to_original;
  CMat to_normalized;
};

/// Smallest singular value of the real frame [T, J T] of the tangent space of
/// { x + i H(x) } at 0, where L = DH(0).
double totally_real_margin(const Mat& L);

inline constexpr double kTotallyRealTolerance = 1e-8;

/// Rewrites { x + i H(x) } (H(0) = 0) as a normalized graph after a complex-linear
/// change of coordinates. Throws NotTotallyReal when the tangent at 0 holds a complex line.
NormalizedGraph normalize_graph(std::shared_ptr<const GraphFunction> H, double domain_radius);
NormalizedGraph normalize_graph(const PolyMap& H, double domain_radius);

struct SliceResult {
  PlaneSlice plane;
  /// x -> (h(x, xB), xB), the slice before normalization.
  PolyMap substituted;
  NormalizedGraph normalized;
};

inline constexpr double kDefaultSliceThreshold = 0.25;

/// Intersects M with the plane y'' = x B and normalizes the result.
SliceResult slice(const GenericGraph& g, const PlaneSlice& plane,
                  double threshold = kDefaultSliceThreshold);

/// The exceptional set carried onto a normalized slice.
ExceptionalSet restrict_to_slice(const ExceptionalSet& set, const GenericGraph& g,
                                 const NormalizedGraph& normalized);

struct SliceSampling {
  double b_max = 0.1;
  int max_attempts = 64;
  /// Tried in order before random draws.
  std::vector<Mat> candidates;
};

struct SampledSlice {
  PlaneSlice plane;
  int attempts = 0;
  std::vector<std::string> rejections;
};

/// Substitutes y'' = x B into each g_i.
std::vector<Polynomial> slice_functions(const ExceptionalSet& set, const GenericGraph& g,
                                        const Mat& B);

/// Draws small B until no sliced g_i vanishes identically (ExhaustedAttempts otherwise).
SampledSlice sample_good_B(const GenericGraph& g, const ExceptionalSet& set,
                           std::uint64_t seed, const SliceSampling& options = {});

}  // namespace adisc
