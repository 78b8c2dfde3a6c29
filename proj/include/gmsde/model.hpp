#pragma once

// Itô SDE problems dX = b(X) dt + sigma(X) dW and the builtin test problems
// with closed-form second-moment oracles.
//
// Coefficients are plain callables. Boundedness of b and sigma is not
// checked: the builtins (linear drift, sigma growing like |x|) are unbounded
// and rely on the process staying in a bounded region over a finite horizon.

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gmsde/linalg.hpp"
#include "gmsde/polynomial.hpp"

namespace gmsde {

using VectorField = std::function<void(std::span<const double> x, std::span<double> out)>;
/// sup of tr|Lambda| over the ball of the given radius around a center.
using TraceBound = std::function<double(std::span<const double> center, double radius)>;

/// b_i and Lambda_ij (row-major) as polynomials, when they are polynomial.
struct PolynomialCoefficients {
  std::vector<Polynomial> drift;
  std::vector<Polynomial> lambda;
};

struct SdeProblem {
  std::string name;
  std::size_t dim = 0;        // d
  std::size_t noise_dim = 0;  // m
  VectorField drift;          // writes d entries
  VectorField diffusion;      // writes sigma as d x m, row-major
  /// Optional closed form of sigma sigma^T (d x d, row-major). Must agree
  /// with the product of `diffusion`; used on hot paths.
  VectorField lambda;
  TraceBound trace_bound;
  std::optional<PolynomialCoefficients> polynomial;

  void drift_into(std::span<const double> x, std::span<double> out) const { drift(x, out); }
  /// Lambda(x) into a preallocated d x d matrix, no validation.
  void lambda_into(std::span<const double> x, Matrix& out) const;

  std::vector<double> drift_at(std::span<const double> x) const;
  Matrix sigma_at(std::span<const double> x) const;
};

/// Lambda(x) = sigma(x) sigma(x)^T. Throws InputError on a dimension mismatch
/// or non-finite x.
Matrix lambda_at(const SdeProblem& problem, std::span<const double> x);

using ParamMap = std::map<std::string, double>;

struct MomentOracle {
  std::string test_function;
  std::function<double(std::span<const double>)> phi;
  std::function<double(std::span<const double> x0, double horizon)> exact_expectation;
};

struct BuiltinProblem {
  SdeProblem problem;
  MomentOracle oracle;
  std::vector<double> x0;
  double horizon = 1.0;
  ParamMap params;
};

/// One of quad1d, gbm, rot2d, ring6d with default parameters overridden by
/// `overrides` (keys: lambda, sigma, x0, T as applicable). Throws InputError
/// for an unknown name or parameter.
BuiltinProblem builtin_problem(std::string_view name, const ParamMap& overrides = {});

std::vector<std::string> builtin_problem_names();

/// b(x) = A x + c, sigma constant. Handy for additive-noise and zero-noise
/// checks; carries polynomial coefficients.
SdeProblem linear_problem(const Matrix& drift_matrix, std::span<const double> drift_offset,
                          const Matrix& sigma, std::string name = "linear");

}  // namespace gmsde
