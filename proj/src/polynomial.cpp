#include "gmsde/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gmsde/error.hpp"

namespace gmsde {

Polynomial::Polynomial(std::size_t num_vars) : num_vars_(num_vars) {
  if (num_vars == 0) throw InputError("Polynomial: need at least one variable");
}

Polynomial Polynomial::constant(std::size_t num_vars, double c) {
  Polynomial p(num_vars);
  p.add_term(c, Exponents(num_vars, 0));
  return p;
}

Polynomial Polynomial::variable(std::size_t num_vars, std::size_t i) {
  if (i >= num_vars) throw InputError("Polynomial::variable: index out of range");
  Exponents e(num_vars, 0);
  e[i] = 1;
  Polynomial p(num_vars);
  p.add_term(1.0, e);
  return p;
}

Polynomial Polynomial::monomial(double coeff, Exponents exponents) {
  Polynomial p(exponents.size());
  p.add_term(coeff, exponents);
  return p;
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [e, c] : terms_) {
    int s = 0;
    for (int k : e) s += k;
    d = std::max(d, s);
  }
  return d;
}

void Polynomial::add_term(double coeff, const Exponents& exponents) {
  if (exponents.size() != num_vars_) throw InputError("Polynomial: exponent arity mismatch");
  if (coeff == 0.0) return;
  auto [it, inserted] = terms_.try_emplace(exponents, coeff);
  if (!inserted) {
    it->second += coeff;
    if (it->second == 0.0) terms_.erase(it);
  }
}

double Polynomial::operator()(std::span<const double> x) const {
  if (x.size() != num_vars_) throw InputError("Polynomial: evaluation point has wrong size");
  double total = 0.0;
  for (const auto& [e, c] : terms_) {
    double v = c;
    for (std::size_t i = 0; i < num_vars_; ++i)
      for (int k = 0; k < e[i]; ++k) v *= x[i];
    total += v;
  }
  return total;
}

Polynomial Polynomial::derivative(std::size_t var) const {
  if (var >= num_vars_) throw InputError("Polynomial::derivative: index out of range");
  Polynomial d(num_vars_);
  for (const auto& [e, c] : terms_) {
    if (e[var] == 0) continue;
    Exponents f = e;
    f[var] -= 1;
    d.add_term(c * e[var], f);
  }
  return d;
}

Polynomial Polynomial::directional_derivative(std::span<const double> v) const {
  if (v.size() != num_vars_) throw InputError("Polynomial: direction has wrong size");
  Polynomial d(num_vars_);
  for (std::size_t i = 0; i < num_vars_; ++i)
    if (v[i] != 0.0) d += v[i] * derivative(i);
  return d;
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  if (other.num_vars_ != num_vars_) throw InputError("Polynomial: arity mismatch");
  for (const auto& [e, c] : other.terms_) add_term(c, e);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) {
  if (other.num_vars_ != num_vars_) throw InputError("Polynomial: arity mismatch");
  for (const auto& [e, c] : other.terms_) add_term(-c, e);
  return *this;
}

Polynomial& Polynomial::operator*=(double s) {
  if (s == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto& [e, c] : terms_) c *= s;
  return *this;
}

std::string Polynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [e, c] : terms_) {
    if (!first) os << " + ";
    first = false;
    os << c;
    for (std::size_t i = 0; i < e.size(); ++i)
      if (e[i] > 0) os << "*x" << i << (e[i] > 1 ? "^" + std::to_string(e[i]) : "");
  }
  return os.str();
}

Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
Polynomial operator*(double s, Polynomial a) { return a *= s; }

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  if (a.num_vars() != b.num_vars()) throw InputError("Polynomial: arity mismatch");
  Polynomial p(a.num_vars());
  for (const auto& [ea, ca] : a.terms())
    for (const auto& [eb, cb] : b.terms()) {
      Polynomial::Exponents e(ea.size());
      for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
      p.add_term(ca * cb, e);
    }
  return p;
}

}  // namespace gmsde
