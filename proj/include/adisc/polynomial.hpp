#pragma once

#include <Eigen/Dense>

#include <map>
#include <vector>

namespace adisc {

using MultiIndex = std::vector<int>;

/// Real polynomial in a fixed number of variables, stored as a sparse coefficient table.
class Polynomial {
 public:
  explicit Polynomial(int n_vars = 0) : n_vars_(n_vars) {}

  static Polynomial constant(int n_vars, double value);
  /// The coordinate function x_index.
  static Polynomial variable(int n_vars, int index);

  int n_vars() const noexcept { return n_vars_; }
  const std::map<MultiIndex, double>& terms() const noexcept { return terms_; }

  /// Accumulates coeff into the monomial; drops exact zeros.
  void add_term(const MultiIndex& exponents, double coeff);
  double coeff(const MultiIndex& exponents) const;
  int degree() const;

  double evaluate(const Eigen::VectorXd& x) const;
  /// One value per row of X.
  Eigen::VectorXd evaluate_rows(const Eigen::MatrixXd& X) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;

  /// True when every coefficient is at most tol in absolute value.
  bool is_zero(double tol = 0.0) const;
  double max_abs_coeff() const;

  /// Largest |coeff| among terms of total degree 0 and 1 respectively.
  double constant_part() const;
  double max_linear_coeff() const;

  /// Replaces variable i by subs[i]; all subs share one variable count.
  Polynomial substitute(const std::vector<Polynomial>& subs) const;

  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator*=(double s);
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b);
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }

 private:
  int n_vars_;
  std::map<MultiIndex, double> terms_;
};

/// Vector-valued polynomial map R^n_vars -> R^size().
class PolyMap {
 public:
  PolyMap() = default;
  PolyMap(int n_vars, std::vector<Polynomial> components);

  static PolyMap zero(int n_vars, int n_out);

  int n_vars() const noexcept { return n_vars_; }
  int n_out() const noexcept { return static_cast<int>(comps_.size()); }
  const std::vector<Polynomial>& components() const noexcept { return comps_; }
  const Polynomial& operator[](int i) const { return comps_[static_cast<std::size_t>(i)]; }

  Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const;
  /// Row j of the result is the map at row j of X.
  Eigen::MatrixXd evaluate_rows(const Eigen::MatrixXd& X) const;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;
  bool is_zero(double tol = 0.0) const;

 private:
  int n_vars_ = 0;
  std::vector<Polynomial> comps_;
};

}  // namespace adisc
