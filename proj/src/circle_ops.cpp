#include "adisc/circle_ops.hpp"

#include "adisc/errors.hpp"
#include "fft.hpp"

#include <atomic>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <ostream>
#include <vector>

namespace adisc {
namespace {

std::atomic<std::size_t> g_underresolved{0};

// Applies a per-wavenumber multiplier m (with m(-k) = conj m(k)) to a real grid function.
// Works on the non-negative half spectrum; slot n/2 stands for wavenumber -n/2.
template <class Multiplier>
GridFn apply_multiplier(const GridFn& f, Multiplier m, const char* where) {
  const int n = f.size();
  const int half = n / 2;
  std::vector<Complex> spec(static_cast<std::size_t>(half + 1));
  Mat out(n, f.dim());
  double total = 0.0;
  double tail = 0.0;
  for (int c = 0; c < f.dim(); ++c) {
    detail::fft_r2c(f.values().col(c).data(), spec.data(), n);
    for (int k = 0; k <= half; ++k) {
      const double e = std::norm(spec[static_cast<std::size_t>(k)]) * ((k == 0 || k == half) ? 1.0 : 2.0);
      total += e;
      if (k >= n / 4) tail += e;
      spec[static_cast<std::size_t>(k)] *= m(k == half ? -half : k) / static_cast<double>(n);
    }
    detail::fft_c2r(spec.data(), out.col(c).data(), n);
  }
  const double fraction = total > 0.0 ? tail / total : 0.0;
  if (fraction > kAliasingThreshold && g_underresolved.fetch_add(1) == 0) {
    std::clog << "warning: " << where << ": top quarter of the spectrum carries " << fraction
              << " of the energy at N=" << n << "; increase n_nodes\n";
  }
  return GridFn(f.grid(), std::move(out));
}

}  // namespace

CircleGrid::CircleGrid(int n_nodes) : n_(n_nodes) {
  if (n_nodes < 8 || (n_nodes & (n_nodes - 1)) != 0) {
    throw Error(ErrorKind::InvalidArgument,
                "n_nodes must be a power of two >= 8, got " + std::to_string(n_nodes));
  }
}

Vec CircleGrid::nodes() const {
  Vec th(n_);
  for (int j = 0; j < n_; ++j) th[j] = node(j);
  return th;
}

GridFn::GridFn(CircleGrid grid, Mat values) : grid_(grid), values_(std::move(values)) {
  if (values_.rows() != grid_.size()) {
    throw Error(ErrorKind::InvalidArgument, "GridFn row count does not match grid size");
  }
  if (!values_.allFinite()) {
    throw Error(ErrorKind::InvalidArgument, "GridFn values must be finite");
  }
}

GridFn GridFn::sample(const CircleGrid& grid, int dim, const std::function<Vec(double)>& f) {
  Mat v(grid.size(), dim);
  for (int j = 0; j < grid.size(); ++j) v.row(j) = f(grid.node(j)).transpose();
  return GridFn(grid, std::move(v));
}

GridFn GridFn::sample_scalar(const CircleGrid& grid, const std::function<double(double)>& f) {
  Mat v(grid.size(), 1);
  for (int j = 0; j < grid.size(); ++j) v(j, 0) = f(grid.node(j));
  return GridFn(grid, std::move(v));
}

GridFn GridFn::constant(const CircleGrid& grid, const Vec& value) {
  Mat v = value.transpose().replicate(grid.size(), 1);
  return GridFn(grid, std::move(v));
}

double sup_distance(const GridFn& a, const GridFn& b) {
  return (a.values() - b.values()).cwiseAbs().maxCoeff();
}

DiscPoint DiscPoint::make(double r, double theta) {
  if (!(r >= 0.0 && r <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "disc point radius must lie in [0,1]");
  }
  return DiscPoint{r, theta};
}

DiscPoint DiscPoint::from_complex(Complex z) {
  return make(std::abs(z), std::arg(z));
}

FourierCoeffs transform(const GridFn& f) {
  const int n = f.size();
  CMat out(n, f.dim());
  std::vector<Complex> in(n);
  for (int c = 0; c < f.dim(); ++c) {
    for (int j = 0; j < n; ++j) in[j] = f.values()(j, c);
    detail::fft_forward(in.data(), out.col(c).data(), n);
  }
  out /= static_cast<double>(n);
  return FourierCoeffs(n, std::move(out));
}

GridFn inverse(const FourierCoeffs& a, const CircleGrid& grid) {
  const int n = a.size();
  Mat values(n, a.dim());
  std::vector<Complex> out(n);
  for (int c = 0; c < a.dim(); ++c) {
    detail::fft_backward(a.raw().col(c).data(), out.data(), n);
    for (int j = 0; j < n; ++j) values(j, c) = out[j].real();
  }
  return GridFn(grid, std::move(values));
}

GridFn conjugate(const GridFn& f) {
  const int nyquist = -f.size() / 2;
  return apply_multiplier(
      f,
      [nyquist](int k) -> Complex {
        if (k == 0 || k == nyquist) return 0.0;
        return k > 0 ? Complex(0.0, -1.0) : Complex(0.0, 1.0);
      },
      "conjugate");
}

GridFn d_tau(const GridFn& f) {
  const int nyquist = -f.size() / 2;
  return apply_multiplier(
      f, [nyquist](int k) -> Complex { return k == nyquist ? 0.0 : Complex(0.0, k); },
      "d_tau");
}

namespace {

// sum_{k=1}^{N/2-1} a_k z^k by Horner's rule, per component.
CVec positive_series(const FourierCoeffs& a, Complex z) {
  const int half = a.size() / 2;
  CVec acc = CVec::Zero(a.dim());
  for (int k = half - 1; k >= 1; --k) {
    acc = (acc + a.raw().row(k).transpose()) * z;
  }
  return acc;
}

}  // namespace

Vec poisson_extend(const FourierCoeffs& a, DiscPoint zeta) {
  if (zeta.r > 1.0 || zeta.r < 0.0) {
    throw Error(ErrorKind::InvalidArgument, "poisson_extend requires r in [0,1]");
  }
  const int half = a.size() / 2;
  const CVec pos = positive_series(a, zeta.z());
  Vec out(a.dim());
  const double nyq = std::pow(zeta.r, half) * std::cos(half * zeta.theta);
  for (int c = 0; c < a.dim(); ++c) {
    out[c] = a.raw()(0, c).real() + 2.0 * pos[c].real() + a.raw()(half, c).real() * nyq;
  }
  return out;
}

Vec poisson_extend(const GridFn& f, DiscPoint zeta) {
  if (zeta.r == 0.0) return f.mean();
  return poisson_extend(transform(f), zeta);
}

CVec schwarz(const FourierCoeffs& a, DiscPoint zeta) {
  if (!(zeta.r < 1.0)) {
    throw Error(ErrorKind::InvalidArgument,
                "schwarz is defined on the open disc; use the boundary trace at r = 1");
  }
  const int half = a.size() / 2;
  const CVec pos = positive_series(a, zeta.z());
  const double nyq = std::pow(zeta.r, half) * std::cos(half * zeta.theta);
  CVec out(a.dim());
  for (int c = 0; c < a.dim(); ++c) {
    out[c] = a.raw()(0, c).real() + 2.0 * pos[c] + a.raw()(half, c).real() * nyq;
  }
  return out;
}

CVec schwarz(const GridFn& f, DiscPoint zeta) { return schwarz(transform(f), zeta); }

CVec schwarz_derivative(const FourierCoeffs& a, DiscPoint zeta) {
  if (!(zeta.r < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "schwarz_derivative requires r < 1");
  }
  const int half = a.size() / 2;
  const Complex z = zeta.z();
  CVec acc = CVec::Zero(a.dim());
  for (int k = half - 1; k >= 2; --k) {
    acc = (acc + static_cast<double>(k) * a.raw().row(k).transpose()) * z;
  }
  acc += a.raw().row(1).transpose();
  return 2.0 * acc;
}

Mat extend_on_circle(const FourierCoeffs& a, double r) {
  const int n = a.size();
  CMat damped(n, a.dim());
  for (int s = 0; s < n; ++s) {
    const int k = FourierCoeffs::wavenumber(s, n);
    damped.row(s) = a.raw().row(s) * std::pow(r, std::abs(k));
  }
  Mat values(n, a.dim());
  std::vector<Complex> out(n);
  for (int c = 0; c < a.dim(); ++c) {
    detail::fft_backward(damped.col(c).data(), out.data(), n);
    for (int j = 0; j < n; ++j) values(j, c) = out[j].real();
  }
  return values;
}

CMat schwarz_on_circle(const FourierCoeffs& a, double r) {
  if (!(r >= 0.0 && r < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "schwarz_on_circle requires 0 <= r < 1");
  }
  const int n = a.size();
  const int half = n / 2;
  CMat b = CMat::Zero(n, a.dim());
  b.row(0) = a.raw().row(0).real().cast<Complex>();
  double rk = 1.0;
  for (int k = 1; k < half; ++k) {
    rk *= r;
    b.row(k) = 2.0 * rk * a.raw().row(k);
  }
  const double nyq_scale = std::pow(r, half);
  CMat values(n, a.dim());
  std::vector<Complex> out(n);
  for (int c = 0; c < a.dim(); ++c) {
    detail::fft_backward(b.col(c).data(), out.data(), n);
    const double nyq = a.raw()(half, c).real() * nyq_scale;
    for (int j = 0; j < n; ++j) {
      values(j, c) = out[j] + ((j % 2 == 0) ? nyq : -nyq);
    }
  }
  return values;
}

double spectral_tail_fraction(const FourierCoeffs& a) {
  const int n = a.size();
  double total = 0.0;
  double tail = 0.0;
  for (int s = 0; s < n; ++s) {
    const double e = a.raw().row(s).squaredNorm();
    total += e;
    if (std::abs(FourierCoeffs::wavenumber(s, n)) >= n / 4) tail += e;
  }
  return total > 0.0 ? tail / total : 0.0;
}

std::size_t underresolved_warning_count() { return g_underresolved.load(); }

void write_csv(const GridFn& f, std::ostream& os) {
  os << "theta";
  for (int c = 0; c < f.dim(); ++c) os << ",value_" << (c + 1);
  os << '\n' << std::setprecision(17);
  for (int j = 0; j < f.size(); ++j) {
    os << f.grid().node(j);
    for (int c = 0; c < f.dim(); ++c) os << ',' << f.values()(j, c);
    os << '\n';
  }
}

}  // namespace adisc
