#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace gmsde {

/// Sparse multivariate polynomial with real coefficients.
class Polynomial {
 public:
  using Exponents = std::vector<int>;

  explicit Polynomial(std::size_t num_vars = 1);

  static Polynomial constant(std::size_t num_vars, double c);
  /// The coordinate function x_i.
  static Polynomial variable(std::size_t num_vars, std::size_t i);
  static Polynomial monomial(double coeff, Exponents exponents);

  std::size_t num_vars() const { return num_vars_; }
  int degree() const;
  bool is_zero() const { return terms_.empty(); }
  const std::map<Exponents, double>& terms() const { return terms_; }

  void add_term(double coeff, const Exponents& exponents);

  double operator()(std::span<const double> x) const;

  Polynomial derivative(std::size_t var) const;
  /// v . grad p
  Polynomial directional_derivative(std::span<const double> v) const;

  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator-=(const Polynomial& other);
  Polynomial& operator*=(double s);

  std::string to_string() const;

 private:
  std::size_t num_vars_;
  std::map<Exponents, double> terms_;
};

Polynomial operator+(Polynomial a, const Polynomial& b);
Polynomial operator-(Polynomial a, const Polynomial& b);
Polynomial operator*(const Polynomial& a, const Polynomial& b);
Polynomial operator*(double s, Polynomial a);

}  // namespace gmsde
