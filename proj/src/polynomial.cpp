#include "adisc/polynomial.hpp"

#include "adisc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace adisc {
namespace {

double ipow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

int total_degree(const MultiIndex& m) { return std::accumulate(m.begin(), m.end(), 0); }

}  // namespace

Polynomial Polynomial::constant(int n_vars, double value) {
  Polynomial p(n_vars);
  p.add_term(MultiIndex(static_cast<std::size_t>(n_vars), 0), value);
  return p;
}

Polynomial Polynomial::variable(int n_vars, int index) {
  Polynomial p(n_vars);
  MultiIndex m(static_cast<std::size_t>(n_vars), 0);
  m.at(static_cast<std::size_t>(index)) = 1;
  p.add_term(m, 1.0);
  return p;
}

void Polynomial::add_term(const MultiIndex& exponents, double coeff) {
  if (static_cast<int>(exponents.size()) != n_vars_) {
    throw Error(ErrorKind::InvalidArgument, "multi-index length does not match variable count");
  }
  if (std::any_of(exponents.begin(), exponents.end(), [](int e) { return e < 0; })) {
    throw Error(ErrorKind::InvalidArgument, "negative exponent in multi-index");
  }
  if (!std::isfinite(coeff)) {
    throw Error(ErrorKind::InvalidArgument, "non-finite polynomial coefficient");
  }
  auto [it, inserted] = terms_.try_emplace(exponents, coeff);
  if (!inserted) it->second += coeff;
  if (it->second == 0.0) terms_.erase(it);
}

double Polynomial::coeff(const MultiIndex& exponents) const {
  auto it = terms_.find(exponents);
  return it == terms_.end() ? 0.0 : it->second;
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, total_degree(m));
  return d;
}

double Polynomial::evaluate(const Eigen::VectorXd& x) const {
  double s = 0.0;
  for (const auto& [m, c] : terms_) {
    double t = c;
    for (int i = 0; i < n_vars_; ++i) t *= ipow(x[i], m[static_cast<std::size_t>(i)]);
    s += t;
  }
  return s;
}

Eigen::VectorXd Polynomial::evaluate_rows(const Eigen::MatrixXd& X) const {
  Eigen::ArrayXd s = Eigen::ArrayXd::Zero(X.rows());
  Eigen::ArrayXd t(X.rows());
  for (const auto& [m, c] : terms_) {
    t.setConstant(c);
    for (int i = 0; i < n_vars_; ++i) {
      for (int e = 0; e < m[static_cast<std::size_t>(i)]; ++e) t *= X.col(i).array();
    }
    s += t;
  }
  return s.matrix();
}

Eigen::VectorXd Polynomial::gradient(const Eigen::VectorXd& x) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n_vars_);
  for (const auto& [m, c] : terms_) {
    for (int i = 0; i < n_vars_; ++i) {
      const int ei = m[static_cast<std::size_t>(i)];
      if (ei == 0) continue;
      double t = c * ei;
      for (int j = 0; j < n_vars_; ++j) {
        const int e = m[static_cast<std::size_t>(j)] - (j == i ? 1 : 0);
        t *= ipow(x[j], e);
      }
      g[i] += t;
    }
  }
  return g;
}

bool Polynomial::is_zero(double tol) const {
  return std::all_of(terms_.begin(), terms_.end(),
                     [tol](const auto& kv) { return std::abs(kv.second) <= tol; });
}

double Polynomial::max_abs_coeff() const {
  double m = 0.0;
  for (const auto& [k, c] : terms_) m = std::max(m, std::abs(c));
  return m;
}

double Polynomial::constant_part() const {
  return std::abs(coeff(MultiIndex(static_cast<std::size_t>(n_vars_), 0)));
}

double Polynomial::max_linear_coeff() const {
  double m = 0.0;
  for (const auto& [k, c] : terms_) {
    if (total_degree(k) == 1) m = std::max(m, std::abs(c));
  }
  return m;
}

Polynomial Polynomial::substitute(const std::vector<Polynomial>& subs) const {
  if (static_cast<int>(subs.size()) != n_vars_) {
    throw Error(ErrorKind::InvalidArgument, "substitution needs one polynomial per variable");
  }
  const int out_vars = subs.empty() ? 0 : subs.front().n_vars();
  Polynomial result(out_vars);
  for (const auto& [m, c] : terms_) {
    Polynomial term = Polynomial::constant(out_vars, c);
    for (int i = 0; i < n_vars_; ++i) {
      for (int e = 0; e < m[static_cast<std::size_t>(i)]; ++e) term = term * subs[static_cast<std::size_t>(i)];
    }
    result += term;
  }
  return result;
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  if (other.n_vars_ != n_vars_) {
    throw Error(ErrorKind::InvalidArgument, "adding polynomials in different variable counts");
  }
  for (const auto& [m, c] : other.terms_) add_term(m, c);
  return *this;
}

Polynomial& Polynomial::operator*=(double s) {
  if (s == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto& [m, c] : terms_) c *= s;
  return *this;
}

Polynomial operator-(Polynomial a, const Polynomial& b) {
  Polynomial nb = b;
  nb *= -1.0;
  return a += nb;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  if (a.n_vars() != b.n_vars()) {
    throw Error(ErrorKind::InvalidArgument, "multiplying polynomials in different variable counts");
  }
  Polynomial out(a.n_vars());
  for (const auto& [ma, ca] : a.terms()) {
    for (const auto& [mb, cb] : b.terms()) {
      MultiIndex m(ma.size());
      for (std::size_t i = 0; i < m.size(); ++i) m[i] = ma[i] + mb[i];
      out.add_term(m, ca * cb);
    }
  }
  return out;
}

PolyMap::PolyMap(int n_vars, std::vector<Polynomial> components)
    : n_vars_(n_vars), comps_(std::move(components)) {
  for (const auto& p : comps_) {
    if (p.n_vars() != n_vars_) {
      throw Error(ErrorKind::InvalidArgument, "PolyMap component has wrong variable count");
    }
  }
}

PolyMap PolyMap::zero(int n_vars, int n_out) {
  return PolyMap(n_vars, std::vector<Polynomial>(static_cast<std::size_t>(n_out), Polynomial(n_vars)));
}

Eigen::VectorXd PolyMap::evaluate(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y(n_out());
  for (int i = 0; i < n_out(); ++i) y[i] = comps_[static_cast<std::size_t>(i)].evaluate(x);
  return y;
}

Eigen::MatrixXd PolyMap::evaluate_rows(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd out(X.rows(), n_out());
  for (int k = 0; k < n_out(); ++k) out.col(k) = comps_[static_cast<std::size_t>(k)].evaluate_rows(X);
  return out;
}

Eigen::MatrixXd PolyMap::jacobian(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd j(n_out(), n_vars_);
  for (int i = 0; i < n_out(); ++i) j.row(i) = comps_[static_cast<std::size_t>(i)].gradient(x).transpose();
  return j;
}

bool PolyMap::is_zero(double tol) const {
  return std::all_of(comps_.begin(), comps_.end(), [tol](const Polynomial& p) { return p.is_zero(tol); });
}

}  // namespace adisc
