#pragma once

// One-step transition kernels.
//
//   em      Euler-Maruyama, weak order 1.
//   gm-ode  Gaussian mixture with beam moments from the ODE flow.
//   gm-var  Gaussian mixture with directly constructed beam covariance.
//
// A single Gaussian cannot be weak order 2 for multiplicative noise, so the
// mixture kernels pick one of 3^d beams per step via z in {-1, 0, 1}^d.
//
// Random draws per step, in order: z components ascending (mixture kernels
// only), then d (m for em) standard normals ascending. The normals are drawn
// even when a degenerate covariance does not use them.
//
// Note the two center offsets in gm-var: the mean starts at
// x + z sqrt(3/2 lambda h) v like gm-ode, while Lambda is probed at
// x + z sqrt(6 lambda h) v + h b. The factor 4 between them comes from
// matching the h^{3/2} covariance coefficient of the ODE flow.

#include <span>
#include <string_view>
#include <vector>

#include "gmsde/flow.hpp"
#include "gmsde/linalg.hpp"
#include "gmsde/mixture.hpp"
#include "gmsde/model.hpp"
#include "gmsde/random.hpp"

namespace gmsde {

enum class SchemeKind { em, gm_ode, gm_var };

/// "em", "gm-ode" or "gm-var".
SchemeKind parse_scheme(std::string_view name);
std::string_view to_string(SchemeKind kind);

struct SchemeOptions {
  OdeSolver solver = OdeSolver::rk4;
  /// Keep the F h^3 term of the variance construction. Dropping it is the
  /// small-h shortcut; positivity is then no longer guaranteed.
  bool include_correction = true;
  /// Finite-difference step for the curvature of Lambda; 0 means "use h".
  double fd_step = 0.0;
  MixtureParams mixture{};
};

struct StepDiagnostics {
  bool negative_variance = false;       // S(h) had a negative eigenvalue
  int clipped_eigs = 0;                 // eigenvalues zeroed before sampling
  bool deterministic_fallback = false;  // 1D gm-ode returned m(h) because S(h) <= 0
  bool correction_fallback = false;     // gm-var could not invert A; F set to 0
};

struct StepOutcome {
  std::vector<double> next_state;
  StepDiagnostics diagnostics;
};

/// Mean and covariance of one beam before any clipping.
struct BeamMoments {
  std::vector<double> mean;
  Matrix cov;
  bool correction_fallback = false;
};

/// Per-thread transition kernel with preallocated workspace.
class Stepper {
 public:
  Stepper(const SdeProblem& problem, SchemeKind kind, SchemeOptions options = {});

  /// Advances x in place by one step of size h.
  StepDiagnostics step(std::span<double> x, double h, RandomStream& rng);

  /// Same kernel with explicit draws: z (ignored by em) and the normals.
  StepDiagnostics step_with(std::span<double> x, double h, std::span<const int> z,
                            std::span<const double> normals);

  /// Beam (m(h), S(h)) selected by z, pre-clip. Not defined for em.
  BeamMoments beam(std::span<const double> x, double h, std::span<const int> z);

  SchemeKind kind() const { return kind_; }
  const SchemeOptions& options() const { return options_; }
  const SdeProblem& problem() const { return *problem_; }
  std::size_t normals_per_step() const;

 private:
  double lambda_scalar(double x) const;
  double drift_scalar(double x) const;

  StepDiagnostics em_update(std::span<double> x, double h, std::span<const double> normals);

  // d = 1: Algorithms for scalar state, written without matrix machinery.
  void ode_beam_1d(double x, double h, int z, double& m, double& s);
  void var_beam_1d(double x, double h, int z, double& m, double& s, bool& correction_fallback);

  // d > 1: fills mean_ and cov_.
  void ode_beam_nd(std::span<const double> x, double h, std::span<const int> z);
  void var_beam_nd(std::span<const double> x, double h, std::span<const int> z,
                   bool& correction_fallback);
  void decompose_lambda(std::span<const double> x);
  int sample_gaussian(std::span<double> x, std::span<const double> normals);

  const SdeProblem* problem_;
  SchemeKind kind_;
  SchemeOptions options_;
  std::size_t d_;

  FlowIntegrator flow_;
  std::vector<double> drift_, mean_, probe_, theta_, plus_, minus_;
  std::vector<double> sigma_;
  Matrix lambda_, scratch_, cov_, factor_;
  Matrix lam_plus_, lam_minus_, lam_probe_;
  SymEig eig_, cov_eig_;
  CovarianceRate rate_;
};

/// X + b h + sigma dW with dW ~ N(0, h I_m).
StepOutcome em_step(const SdeProblem& problem, std::span<const double> x, double h,
                    RandomStream& rng);

StepOutcome gm_ode_step(const SdeProblem& problem, std::span<const double> x, double h,
                        RandomStream& rng, OdeSolver solver = OdeSolver::rk4);

StepOutcome gm_var_step(const SdeProblem& problem, std::span<const double> x, double h,
                        RandomStream& rng, const SchemeOptions& options = {});

BeamMoments gm_ode_beam(const SdeProblem& problem, std::span<const double> x, double h,
                        std::span<const int> z, const SchemeOptions& options = {});

BeamMoments gm_var_beam(const SdeProblem& problem, std::span<const double> x, double h,
                        std::span<const int> z, const SchemeOptions& options = {});

}  // namespace gmsde
