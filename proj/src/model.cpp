#include "gmsde/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gmsde/error.hpp"

namespace gmsde {

void SdeProblem::lambda_into(std::span<const double> x, Matrix& out) const {
  out.resize(dim, dim);
  if (lambda) {
    lambda(x, out.data());
    return;
  }
  std::vector<double> sig(dim * noise_dim);
  diffusion(x, sig);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = i; j < dim; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < noise_dim; ++k) s += sig[i * noise_dim + k] * sig[j * noise_dim + k];
      out(i, j) = s;
      out(j, i) = s;
    }
}

std::vector<double> SdeProblem::drift_at(std::span<const double> x) const {
  if (x.size() != dim) throw InputError(name + ": state has wrong dimension");
  std::vector<double> out(dim);
  drift(x, out);
  return out;
}

Matrix SdeProblem::sigma_at(std::span<const double> x) const {
  if (x.size() != dim) throw InputError(name + ": state has wrong dimension");
  Matrix s(dim, noise_dim);
  diffusion(x, s.data());
  return s;
}

Matrix lambda_at(const SdeProblem& problem, std::span<const double> x) {
  if (x.size() != problem.dim)
    throw InputError("lambda_at: expected a state of dimension " + std::to_string(problem.dim) +
                     ", got " + std::to_string(x.size()));
  if (!std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); }))
    throw InputError("lambda_at: non-finite state");
  Matrix out;
  problem.lambda_into(x, out);
  return out;
}

namespace {

class ParamReader {
 public:
  ParamReader(std::string problem, const ParamMap& overrides)
      : problem_(std::move(problem)), overrides_(overrides) {}

  double get(const std::string& key, double fallback) {
    used_.push_back(key);
    auto it = overrides_.find(key);
    const double v = it == overrides_.end() ? fallback : it->second;
    if (!std::isfinite(v)) throw InputError(problem_ + ": parameter " + key + " is not finite");
    values_[key] = v;
    return v;
  }

  ParamMap finish() const {
    for (const auto& [k, v] : overrides_)
      if (std::find(used_.begin(), used_.end(), k) == used_.end())
        throw InputError(problem_ + ": unknown parameter '" + k + "'");
    return values_;
  }

 private:
  std::string problem_;
  const ParamMap& overrides_;
  std::vector<std::string> used_;
  ParamMap values_;
};

double sum_squares(std::span<const double> x) {
  return std::inner_product(x.begin(), x.end(), x.begin(), 0.0);
}

double norm2(std::span<const double> x) { return std::sqrt(sum_squares(x)); }

// dX = lambda X dt + sqrt(X^2 + 4) dW
BuiltinProblem make_quad1d(const ParamMap& overrides) {
  ParamReader params("quad1d", overrides);
  const double lam = params.get("lambda", -2.0);
  const double x0 = params.get("x0", 2.0);
  const double horizon = params.get("T", 2.0);

  BuiltinProblem bp;
  SdeProblem& p = bp.problem;
  p.name = "quad1d";
  p.dim = 1;
  p.noise_dim = 1;
  p.drift = [lam](std::span<const double> x, std::span<double> out) { out[0] = lam * x[0]; };
  p.diffusion = [](std::span<const double> x, std::span<double> out) {
    out[0] = std::sqrt(x[0] * x[0] + 4.0);
  };
  p.lambda = [](std::span<const double> x, std::span<double> out) { out[0] = x[0] * x[0] + 4.0; };
  p.trace_bound = [](std::span<const double> c, double r) {
    const double m = std::abs(c[0]) + r;
    return m * m + 4.0;
  };
  PolynomialCoefficients poly;
  poly.drift.push_back(lam * Polynomial::variable(1, 0));
  poly.lambda.push_back(Polynomial::monomial(1.0, {2}) + Polynomial::constant(1, 4.0));
  p.polynomial = std::move(poly);

  bp.oracle.test_function = "x^2";
  bp.oracle.phi = [](std::span<const double> x) { return x[0] * x[0]; };
  bp.oracle.exact_expectation = [lam](std::span<const double> x, double t) {
    const double a = 2.0 * lam + 1.0;
    if (a == 0.0) return x[0] * x[0] + 4.0 * t;
    return x[0] * x[0] * std::exp(a * t) + 4.0 * std::expm1(a * t) / a;
  };
  bp.x0 = {x0};
  bp.horizon = horizon;
  bp.params = params.finish();
  return bp;
}

// dX = lambda X dt + sigma X dW
BuiltinProblem make_gbm(const ParamMap& overrides) {
  ParamReader params("gbm", overrides);
  const double lam = params.get("lambda", -0.8);
  const double sig = params.get("sigma", 0.85);
  const double x0 = params.get("x0", 5.0);
  const double horizon = params.get("T", 1.0);

  BuiltinProblem bp;
  SdeProblem& p = bp.problem;
  p.name = "gbm";
  p.dim = 1;
  p.noise_dim = 1;
  p.drift = [lam](std::span<const double> x, std::span<double> out) { out[0] = lam * x[0]; };
  p.diffusion = [sig](std::span<const double> x, std::span<double> out) { out[0] = sig * x[0]; };
  p.lambda = [s2 = sig * sig](std::span<const double> x, std::span<double> out) {
    out[0] = s2 * x[0] * x[0];
  };
  p.trace_bound = [s2 = sig * sig](std::span<const double> c, double r) {
    const double m = std::abs(c[0]) + r;
    return s2 * m * m;
  };
  PolynomialCoefficients poly;
  poly.drift.push_back(lam * Polynomial::variable(1, 0));
  poly.lambda.push_back(Polynomial::monomial(sig * sig, {2}));
  p.polynomial = std::move(poly);

  bp.oracle.test_function = "x^2";
  bp.oracle.phi = [](std::span<const double> x) { return x[0] * x[0]; };
  bp.oracle.exact_expectation = [lam, sig](std::span<const double> x, double t) {
    return x[0] * x[0] * std::exp((2.0 * lam + sig * sig) * t);
  };
  bp.x0 = {x0};
  bp.horizon = horizon;
  bp.params = params.finish();
  return bp;
}

// d(X1, X2) = (X1, -X2) dt + X1 (0, 1) dW1 + sigma (1, 1) dW2
BuiltinProblem make_rot2d(const ParamMap& overrides) {
  ParamReader params("rot2d", overrides);
  const double sig = params.get("sigma", 0.1);
  const double x0 = params.get("x0", 1.0);
  const double horizon = params.get("T", 1.0);

  BuiltinProblem bp;
  SdeProblem& p = bp.problem;
  p.name = "rot2d";
  p.dim = 2;
  p.noise_dim = 2;
  p.drift = [](std::span<const double> x, std::span<double> out) {
    out[0] = x[0];
    out[1] = -x[1];
  };
  p.diffusion = [sig](std::span<const double> x, std::span<double> out) {
    out[0] = 0.0;
    out[1] = sig;
    out[2] = x[0];
    out[3] = sig;
  };
  p.lambda = [s2 = sig * sig](std::span<const double> x, std::span<double> out) {
    out[0] = s2;
    out[1] = s2;
    out[2] = s2;
    out[3] = x[0] * x[0] + s2;
  };
  p.trace_bound = [s2 = sig * sig](std::span<const double> c, double r) {
    const double m = std::abs(c[0]) + r;
    return m * m + 2.0 * s2;
  };
  PolynomialCoefficients poly;
  poly.drift.push_back(Polynomial::variable(2, 0));
  poly.drift.push_back(-1.0 * Polynomial::variable(2, 1));
  const Polynomial s2c = Polynomial::constant(2, sig * sig);
  poly.lambda = {s2c, s2c, s2c, Polynomial::monomial(1.0, {2, 0}) + s2c};
  p.polynomial = std::move(poly);

  bp.oracle.test_function = "x2^2";
  bp.oracle.phi = [](std::span<const double> x) { return x[1] * x[1]; };
  bp.oracle.exact_expectation = [sig](std::span<const double> x, double t) {
    const double s2 = sig * sig;
    const double a = x[0] * x[0];
    const double b = x[1] * x[1];
    return std::exp(-2.0 * t) * (b - 0.25 * a - 3.0 * s2 / 8.0) + 0.25 * s2 +
           std::exp(2.0 * t) * (0.25 * a + s2 / 8.0);
  };
  bp.x0 = {x0, x0};
  bp.horizon = horizon;
  bp.params = params.finish();
  return bp;
}

constexpr std::size_t kRingDim = 6;

// Cyclic sigma: sqrt(0.1 (i+1) + x_i^2) on the diagonal, -0.1 on the two
// cyclic neighbours, all scaled by sigma.
void ring_sigma(double sig, std::span<const double> x, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < kRingDim; ++i) {
    out[i * kRingDim + i] = sig * std::sqrt(0.1 * static_cast<double>(i + 1) + x[i] * x[i]);
    out[i * kRingDim + (i + 1) % kRingDim] = -0.1 * sig;
    out[i * kRingDim + (i + kRingDim - 1) % kRingDim] = -0.1 * sig;
  }
}

// tr(Sigma Sigma^T) at x = 0: the diagonal offsets plus twelve 0.1^2 entries.
constexpr double ring_trace_offset() {
  double s = 0.0;
  for (std::size_t i = 1; i <= kRingDim; ++i) s += 0.1 * static_cast<double>(i);
  return s + 2.0 * kRingDim * 0.01;
}

BuiltinProblem make_ring6d(const ParamMap& overrides) {
  ParamReader params("ring6d", overrides);
  const double sig = params.get("sigma", 0.7);
  const double x0 = params.get("x0", 1.0);
  const double horizon = params.get("T", 2.0);

  BuiltinProblem bp;
  SdeProblem& p = bp.problem;
  p.name = "ring6d";
  p.dim = kRingDim;
  p.noise_dim = kRingDim;
  // -x_i + x_{i+1} - x_{i-1} (cyclic): -I plus an antisymmetric part.
  p.drift = [](std::span<const double> x, std::span<double> out) {
    for (std::size_t i = 0; i < kRingDim; ++i)
      out[i] = -x[i] + x[(i + 1) % kRingDim] - x[(i + kRingDim - 1) % kRingDim];
  };
  p.diffusion = [sig](std::span<const double> x, std::span<double> out) { ring_sigma(sig, x, out); };
  p.lambda = [sig](std::span<const double> x, std::span<double> out) {
    double s[kRingDim * kRingDim];
    ring_sigma(sig, x, s);
    // Row i of sigma is nonzero only in columns i-1, i, i+1 (cyclic).
    for (std::size_t i = 0; i < kRingDim; ++i)
      for (std::size_t j = i; j < kRingDim; ++j) {
        double v = 0.0;
        for (std::size_t k : {(i + kRingDim - 1) % kRingDim, i, (i + 1) % kRingDim})
          v += s[i * kRingDim + k] * s[j * kRingDim + k];
        out[i * kRingDim + j] = v;
        out[j * kRingDim + i] = v;
      }
  };
  p.trace_bound = [s2 = sig * sig](std::span<const double> c, double r) {
    const double m = norm2(c) + r;
    return s2 * (ring_trace_offset() + m * m);
  };

  bp.oracle.test_function = "sum x_i^2";
  bp.oracle.phi = [](std::span<const double> x) { return sum_squares(x); };
  bp.oracle.exact_expectation = [sig](std::span<const double> x, double t) {
    const double s2 = sig * sig;
    const double a = s2 - 2.0;
    const double c = ring_trace_offset() * s2;
    if (a == 0.0) return sum_squares(x) + c * t;
    return sum_squares(x) * std::exp(a * t) + c / a * std::expm1(a * t);
  };
  bp.x0.assign(kRingDim, x0);
  bp.horizon = horizon;
  bp.params = params.finish();
  return bp;
}

}  // namespace

BuiltinProblem builtin_problem(std::string_view name, const ParamMap& overrides) {
  if (name == "quad1d") return make_quad1d(overrides);
  if (name == "gbm") return make_gbm(overrides);
  if (name == "rot2d") return make_rot2d(overrides);
  if (name == "ring6d") return make_ring6d(overrides);
  throw InputError("unknown problem '" + std::string(name) + "' (expected quad1d, gbm, rot2d or ring6d)");
}

std::vector<std::string> builtin_problem_names() { return {"quad1d", "gbm", "rot2d", "ring6d"}; }

SdeProblem linear_problem(const Matrix& drift_matrix, std::span<const double> drift_offset,
                          const Matrix& sigma, std::string name) {
  const std::size_t d = drift_matrix.rows();
  if (!drift_matrix.square() || drift_offset.size() != d || sigma.rows() != d)
    throw InputError("linear_problem: inconsistent dimensions");
  std::vector<double> offset(drift_offset.begin(), drift_offset.end());
  Matrix lam = sigma * sigma.transpose();

  SdeProblem p;
  p.name = std::move(name);
  p.dim = d;
  p.noise_dim = sigma.cols();
  p.drift = [a = drift_matrix, offset, d](std::span<const double> x, std::span<double> out) {
    for (std::size_t i = 0; i < d; ++i) {
      double v = offset[i];
      for (std::size_t j = 0; j < d; ++j) v += a(i, j) * x[j];
      out[i] = v;
    }
  };
  p.diffusion = [sigma](std::span<const double>, std::span<double> out) {
    std::copy(sigma.data().begin(), sigma.data().end(), out.begin());
  };
  p.lambda = [lam](std::span<const double>, std::span<double> out) {
    std::copy(lam.data().begin(), lam.data().end(), out.begin());
  };
  double tr = 0.0;
  for (std::size_t i = 0; i < d; ++i) tr += lam(i, i);
  p.trace_bound = [tr](std::span<const double>, double) { return tr; };

  PolynomialCoefficients poly;
  for (std::size_t i = 0; i < d; ++i) {
    Polynomial bi = Polynomial::constant(d, offset[i]);
    for (std::size_t j = 0; j < d; ++j) bi += drift_matrix(i, j) * Polynomial::variable(d, j);
    poly.drift.push_back(std::move(bi));
  }
  for (double v : lam.data()) poly.lambda.push_back(Polynomial::constant(d, v));
  p.polynomial = std::move(poly);
  return p;
}

}  // namespace gmsde
