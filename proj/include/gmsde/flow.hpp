#pragma once

// One macro-step of the beam ODEs  m' = b(m),  S' = G(m(t)),  S(0) = 0.
// Mean and covariance share the Runge-Kutta stages; only the upper triangle
// of S is accumulated and then mirrored, so S(h) is exactly symmetric.

#include <span>
#include <string_view>
#include <vector>

#include "gmsde/linalg.hpp"
#include "gmsde/mixture.hpp"
#include "gmsde/model.hpp"

namespace gmsde {

enum class OdeSolver { rk2, rk4 };

/// "rk2" (Heun) or "rk4"; throws InputError otherwise.
OdeSolver parse_solver(std::string_view name);
std::string_view to_string(OdeSolver solver);

struct GaussianState {
  std::vector<double> mean;
  Matrix cov;
};

/// Reusable workspace for the flow; one per thread.
class FlowIntegrator {
 public:
  explicit FlowIntegrator(const SdeProblem& problem);

  /// Advances m over [0, h] with a single Runge-Kutta step.
  void advance_mean(std::span<double> m, double h, OdeSolver solver);

  /// Advances m and writes S(h) into `cov`. S(h) is not clipped.
  void advance_mean_cov(std::span<double> m, double h, const CovarianceRate& rate,
                        OdeSolver solver, Matrix& cov);

 private:
  void eval_drift(std::span<const double> m, std::span<double> out) const;
  void accumulate_rate(const CovarianceRate& rate, std::span<const double> m, double weight,
                       Matrix& cov);

  const SdeProblem* problem_;
  std::vector<double> stage_, k1_, k2_, k3_, k4_;
  Matrix rate_;
};

/// m(h) from m(0) = m0. Throws NumericalError if the drift goes non-finite.
std::vector<double> integrate_mean(const SdeProblem& problem, std::span<const double> m0,
                                   double h, OdeSolver solver = OdeSolver::rk4);

/// (m(h), S(h)) from m(0) = m0, S(0) = 0.
GaussianState integrate_cov(const SdeProblem& problem, std::span<const double> m0, double h,
                            const CovarianceRate& rate, OdeSolver solver = OdeSolver::rk4);

}  // namespace gmsde
