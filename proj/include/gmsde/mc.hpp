#pragma once

// Monte Carlo driver for weak-error studies.
//
// Trajectory i always draws from RandomStream(seed, i). Trajectories are
// grouped into fixed blocks of kBlockSize inside each slice; a block is summed
// in index order by whichever worker runs it and block sums are combined
// pairwise in a fixed order. The result is therefore bit-identical for any
// number of threads, and identical to the serial reference driver.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gmsde/model.hpp"
#include "gmsde/schemes.hpp"

namespace gmsde {

inline constexpr std::size_t kBlockSize = 1024;

struct RunDiagnostics {
  std::uint64_t steps = 0;                   // steps taken over all trajectories
  std::uint64_t negative_variance = 0;       // steps whose S(h) was not PSD
  std::uint64_t deterministic_fallback = 0;  // 1D steps that returned m(h)
  std::uint64_t clipped_eigs = 0;            // total eigenvalues zeroed
  std::uint64_t correction_fallback = 0;     // gm-var steps without the F term
  std::uint64_t excluded = 0;                // trajectories dropped as non-finite

  RunDiagnostics& operator+=(const RunDiagnostics& o);
  void record(const StepDiagnostics& d);
};

struct ErrorReport {
  double h = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t steps_per_path = 0;
  double estimate = 0.0;        // mean of phi(X_N) over included trajectories
  double oracle = 0.0;
  double relative_error = 0.0;  // |estimate - oracle| / |oracle|
  std::vector<double> slice_estimates;
  std::vector<double> slice_errors;
  double sigma_E = 0.0;         // sample standard deviation of slice_errors
  double ci_lo = 0.0;           // relative_error -/+ 1.65 sigma_E
  double ci_hi = 0.0;
  double std_error = 0.0;       // standard error of `estimate`, relative to |oracle|
  RunDiagnostics diagnostics;
};

struct RunConfig {
  SchemeKind scheme = SchemeKind::gm_ode;
  SchemeOptions options{};
  double h = 0.1;
  double horizon = 1.0;
  std::uint64_t samples = 1000000;
  std::uint64_t slices = 10;
  std::uint64_t seed = 1;
  /// Worker threads; 0 uses the OpenMP default. Ignored without OpenMP.
  int threads = 0;
};

/// round(T / h), provided T / h is an integer up to rounding in the inputs
/// (relative 1e-9). Throws InputError otherwise.
std::uint64_t step_count(double horizon, double h);

/// Weak error of phi(X_N) against the problem's oracle, run on OpenMP workers.
/// Non-finite trajectories are excluded and counted; a slice with no
/// surviving trajectory is a NumericalError.
ErrorReport run_weak_error(const BuiltinProblem& problem, const RunConfig& config);

/// Single-threaded reference with the same blocking; must agree bitwise with
/// run_weak_error.
ErrorReport run_weak_error_serial(const BuiltinProblem& problem, const RunConfig& config);

struct OrderFit {
  double slope = 0.0;
  double intercept = 0.0;  // log E at h = 1
  double residual = 0.0;   // root-mean-square residual in log E
  double r2 = 0.0;
};

/// Least squares of log E against log h. Needs at least three reports with
/// distinct h and positive E.
OrderFit fit_order(std::span<const ErrorReport> reports);
OrderFit fit_order(std::span<const double> h, std::span<const double> errors);

/// N endpoints X_steps from x0 (row-major, N x d). Trajectory i uses
/// RandomStream(seed, i). Throws NumericalError if any endpoint is non-finite.
std::vector<double> simulate_endpoints(const SdeProblem& problem, SchemeKind scheme,
                                       const SchemeOptions& options, std::span<const double> x0,
                                       double h, std::uint64_t steps, std::uint64_t samples,
                                       std::uint64_t seed, int threads = 0,
                                       RunDiagnostics* diagnostics = nullptr);

struct SampleMoments {
  double mean = 0.0;
  double variance = 0.0;  // population (1/N) central moment
  double skewness = 0.0;
  double kurtosis = 0.0;  // not excess: 3 for a Gaussian
};

/// Standardized central moments of one coordinate of a row-major sample.
/// Throws InputError for zero variance.
SampleMoments sample_moments(std::span<const double> samples, std::size_t dim = 1,
                             std::size_t component = 0);

/// Moments of the one-step law X^1 given X^0 = x0. Needs N >= 10^4.
SampleMoments one_step_moments(const SdeProblem& problem, SchemeKind scheme,
                               const SchemeOptions& options, std::span<const double> x0, double h,
                               std::uint64_t samples, std::uint64_t seed, std::size_t component = 0,
                               int threads = 0);

struct SecondMomentBound {
  double m2 = 0.0;          // mean of |X^1 - x0|^2
  double m2_sigma = 0.0;    // its Monte Carlo standard error
  double radius = 0.0;      // largest displacement seen
  double trace_bound = 0.0; // sup tr Lambda over the ball of that radius
  double bound = 0.0;       // 4 * trace_bound * h
  double trace_at_x0 = 0.0;
};

SecondMomentBound second_moment_bound(const SdeProblem& problem, SchemeKind scheme,
                                      const SchemeOptions& options, std::span<const double> x0,
                                      double h, std::uint64_t samples, std::uint64_t seed,
                                      int threads = 0);

/// Whether the library was built with OpenMP.
bool openmp_enabled();

}  // namespace gmsde
