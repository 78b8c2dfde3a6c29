#pragma once

// Deterministic checks of the second-order machinery: Gaussian polynomial
// moments, exhaustive beam sums, sqrt(h)-expansion coefficients of the beam
// flow, the six order conditions and the one-step semigroup residual.
//
// Everything here enumerates all 3^d beams, so it is meant for d <= 3
// (d <= 6 for the pure beam sums).

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gmsde/linalg.hpp"
#include "gmsde/mixture.hpp"
#include "gmsde/model.hpp"
#include "gmsde/polynomial.hpp"
#include "gmsde/schemes.hpp"

namespace gmsde {

/// E phi(Y) for Y ~ N(mean, cov), exact for polynomial phi. Uses the Stein
/// recursion E[Y_i Y^b] = m_i E[Y^b] + sum_j S_ij b_j E[Y^{b - e_j}].
double gaussian_expectation(const Polynomial& phi, std::span<const double> mean, const Matrix& cov);

struct Beam {
  std::vector<int> z;
  double weight = 0.0;
};

/// All 3^d beams with their weights. Throws InputError for d = 0 or d > 6.
std::vector<Beam> enumerate_beams(std::size_t d, const MixtureParams& params = {});

/// |sum_p w_p phi(y_p) - (phi + h T2 + h^2 T4)(x0)|, where y_p are the beam
/// centers built from `eig` and T2, T4 are the second- and fourth-order
/// terms of the beam-sum expansion. O(h^3) for smooth phi.
double beam_sum_residual(const Polynomial& phi, std::span<const double> x0, const SymEig& eig,
                         double h, const MixtureParams& params = {});

/// Coefficients of m(h) - x0 = sum_k m_k h^{(k+1)/2} and S(h) = sum_k S_k h^{(k+1)/2}
/// for one beam, numbered as m_{i0}, m_{i1}, ... and S_{i1}, S_{i2}, ...
struct ExpansionCoeffs {
  std::vector<int> z;
  Matrix m_coeffs;  // d x K; column k is m_{ik}
  Matrix s_coeffs;  // d*d x K; column k is S_{i,k+1}, entries row-major
  std::vector<double> h_grid;
  double condition = 0.0;  // condition number of the scaled Vandermonde system
  double reconstruction_residual = 0.0;
};

/// Fits the expansion of the gm-ode beam selected by z on a geometric grid
/// of at least five step sizes, interpolating in sqrt(h) with as many powers
/// as grid points. Throws NumericalError if the system is ill-conditioned.
ExpansionCoeffs extract_expansion(const SdeProblem& problem, std::span<const double> x0,
                                  std::span<const int> z, std::span<const double> h_grid,
                                  const SchemeOptions& options = {});

/// Default grid used by the checkers: nine points halving from 2^-5.
std::vector<double> default_expansion_grid();

/// Closed-form 1D coefficients (m0..m3, S1..S3) for beam z, with b and
/// Lambda differentiated by central differences of step 1e-4 (1 + |x0|).
struct ClosedFormCoeffs {
  double m[4];
  double s[3];
};
ClosedFormCoeffs closed_form_coeffs(const SdeProblem& problem, double x0, int z,
                                    const MixtureParams& params = {});

struct OrderConditionReport {
  double residual[6];  // |lhs - rhs| / (1 + |rhs|)
  double lhs[6];
  double rhs[6];
};

/// Evaluates the six second-order conditions at x0 using coefficients
/// extracted from the gm-ode flow. `options.mixture` may carry deliberately
/// wrong weights. d = 1 only.
OrderConditionReport check_order_conditions(const SdeProblem& problem, double x0,
                                            const SchemeOptions& options = {});

/// Transition kernels the semigroup residual can evaluate.
enum class KernelKind { gm_ode, gm_var, single_gaussian };

/// |E_K phi(X^1) - (phi + h L phi + h^2/2 L^2 phi)(x0)| with E_K exact:
/// beams enumerated, Gaussian moments in closed form, S clipped as the
/// sampler would. Requires polynomial coefficients and d <= 3.
double semigroup_residual(const SdeProblem& problem, KernelKind kernel, std::span<const double> x0,
                          const Polynomial& phi, double h, const SchemeOptions& options = {});

/// L phi = b . grad phi + 1/2 Lambda : Hess phi, on polynomial coefficients.
Polynomial apply_generator(const PolynomialCoefficients& coeffs, const Polynomial& phi);

/// Least-squares slope of log residual against log h.
double loglog_slope(std::span<const double> h, std::span<const double> residual);

/// One row of the verification table.
struct CheckResult {
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  bool upper_bound = true;  // pass iff measured <= threshold (else >=)
  bool passed = false;
};

struct VerifyOptions {
  /// Weight used for z = +-1 in the order-condition rows; the default is
  /// the scheme's 1/6. Other values exist to prove the checks can fail.
  double order_condition_w1 = 1.0 / 6.0;
  int psd_trials = 10000;
  unsigned seed = 2024;
};

/// The full deterministic verification table.
std::vector<CheckResult> run_verification(const VerifyOptions& options = {});

}  // namespace gmsde
