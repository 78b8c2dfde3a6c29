#include "gmsde/mc.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>

#include "gmsde/error.hpp"

#ifdef GMSDE_HAVE_OPENMP
#include <omp.h>
#endif

namespace gmsde {

RunDiagnostics& RunDiagnostics::operator+=(const RunDiagnostics& o) {
  steps += o.steps;
  negative_variance += o.negative_variance;
  deterministic_fallback += o.deterministic_fallback;
  clipped_eigs += o.clipped_eigs;
  correction_fallback += o.correction_fallback;
  excluded += o.excluded;
  return *this;
}

void RunDiagnostics::record(const StepDiagnostics& d) {
  ++steps;
  negative_variance += d.negative_variance;
  deterministic_fallback += d.deterministic_fallback;
  clipped_eigs += static_cast<std::uint64_t>(d.clipped_eigs);
  correction_fallback += d.correction_fallback;
}

bool openmp_enabled() {
#ifdef GMSDE_HAVE_OPENMP
  return true;
#else
  return false;
#endif
}

std::uint64_t step_count(double horizon, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw InputError("step size must be positive and finite");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InputError("horizon must be positive and finite");
  const double ratio = horizon / h;
  const double n = std::round(ratio);
  if (n < 1.0 || std::abs(ratio - n) > 1e-9 * n)
    throw InputError("horizon " + std::to_string(horizon) + " is not an integer multiple of h = " +
                     std::to_string(h));
  return static_cast<std::uint64_t>(n);
}

namespace {

struct Block {
  std::uint64_t begin = 0;
  std::uint64_t end = 0;
};

// Contiguous slices [j N/k, (j+1) N/k), each cut into kBlockSize pieces.
std::vector<Block> make_blocks(std::uint64_t samples, std::uint64_t slices,
                               std::vector<std::size_t>& slice_first_block) {
  std::vector<Block> blocks;
  const std::uint64_t per_slice = samples / slices;
  slice_first_block.clear();
  for (std::uint64_t j = 0; j < slices; ++j) {
    slice_first_block.push_back(blocks.size());
    for (std::uint64_t b = j * per_slice; b < (j + 1) * per_slice; b += kBlockSize)
      blocks.push_back({b, std::min(b + kBlockSize, (j + 1) * per_slice)});
  }
  slice_first_block.push_back(blocks.size());
  return blocks;
}

std::vector<Block> make_blocks(std::uint64_t samples) {
  std::vector<Block> blocks;
  for (std::uint64_t b = 0; b < samples; b += kBlockSize)
    blocks.push_back({b, std::min(b + kBlockSize, samples)});
  return blocks;
}

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct BlockResult {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::uint64_t included = 0;
  RunDiagnostics diag;
};

bool all_finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

// Advances x by `steps` steps; false if the trajectory left the finite range.
bool run_path(Stepper& stepper, std::span<double> x, double h, std::uint64_t steps,
              RandomStream& rng, RunDiagnostics& diag) {
  try {
    for (std::uint64_t s = 0; s < steps; ++s) diag.record(stepper.step(x, h, rng));
  } catch (const NumericalError&) {
    return false;
  } catch (const InputError&) {
    return false;
  }
  return all_finite(x);
}

void simulate_block(const BuiltinProblem& bp, Stepper& stepper, const RunConfig& cfg,
                    std::uint64_t steps, const Block& block, std::vector<double>& x,
                    BlockResult& out) {
  for (std::uint64_t i = block.begin; i < block.end; ++i) {
    RandomStream rng(cfg.seed, i);
    std::copy(bp.x0.begin(), bp.x0.end(), x.begin());
    if (!run_path(stepper, x, cfg.h, steps, rng, out.diag)) {
      ++out.diag.excluded;
      continue;
    }
    const double phi = bp.oracle.phi(x);
    if (!std::isfinite(phi)) {
      ++out.diag.excluded;
      continue;
    }
    out.sum += phi;
    out.sum_sq += phi * phi;
    ++out.included;
  }
}

int resolve_threads(int threads) {
#ifdef GMSDE_HAVE_OPENMP
  return threads > 0 ? threads : omp_get_max_threads();
#else
  (void)threads;
  return 1;
#endif
}

// Runs body(stepper, x, block_index) over all blocks, in parallel unless
// `serial`. Each worker owns its Stepper and state buffer.
template <class Body>
void for_each_block(const SdeProblem& problem, SchemeKind scheme, const SchemeOptions& options,
                    std::size_t num_blocks, int threads, bool serial, Body&& body) {
  if (serial || resolve_threads(threads) == 1) {
    Stepper stepper(problem, scheme, options);
    std::vector<double> x(problem.dim);
    for (std::size_t b = 0; b < num_blocks; ++b) body(stepper, x, b);
    return;
  }
#ifdef GMSDE_HAVE_OPENMP
  Stepper probe(problem, scheme, options);  // surfaces configuration errors on this thread
  (void)probe;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const long n = static_cast<long>(num_blocks);
#pragma omp parallel num_threads(resolve_threads(threads))
  {
    Stepper stepper(problem, scheme, options);
    std::vector<double> x(problem.dim);
#pragma omp for schedule(dynamic, 1)
    for (long b = 0; b < n; ++b) {
      try {
        body(stepper, x, static_cast<std::size_t>(b));
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
#endif
}

void validate(const BuiltinProblem& bp, const RunConfig& cfg) {
  if (!bp.oracle.phi || !bp.oracle.exact_expectation)
    throw InputError("problem '" + bp.problem.name + "' has no moment oracle");
  if (bp.x0.size() != bp.problem.dim) throw InputError("initial state has wrong dimension");
  if (cfg.slices == 0) throw InputError("slices must be positive");
  if (cfg.samples == 0 || cfg.samples % cfg.slices != 0)
    throw InputError("samples (" + std::to_string(cfg.samples) + ") must be a positive multiple of slices (" +
                     std::to_string(cfg.slices) + ")");
  if (cfg.slices < 2) throw InputError("at least two slices are needed for an error bar");
}

ErrorReport run(const BuiltinProblem& bp, const RunConfig& cfg, bool serial) {
  validate(bp, cfg);
  const std::uint64_t steps = step_count(cfg.horizon, cfg.h);
  std::vector<std::size_t> slice_first;
  const std::vector<Block> blocks = make_blocks(cfg.samples, cfg.slices, slice_first);
  std::vector<BlockResult> results(blocks.size());

  for_each_block(bp.problem, cfg.scheme, cfg.options, blocks.size(), cfg.threads, serial,
                 [&](Stepper& stepper, std::vector<double>& x, std::size_t b) {
                   simulate_block(bp, stepper, cfg, steps, blocks[b], x, results[b]);
                 });

  ErrorReport rep;
  rep.h = cfg.h;
  rep.samples = cfg.samples;
  rep.steps_per_path = steps;
  rep.oracle = bp.oracle.exact_expectation(bp.x0, cfg.horizon);
  if (rep.oracle == 0.0) throw InputError("oracle value is zero; relative error undefined");

  std::vector<double> sums(blocks.size()), squares(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    sums[b] = results[b].sum;
    squares[b] = results[b].sum_sq;
    rep.diagnostics += results[b].diag;
  }

  std::vector<double> slice_sums, slice_counts;
  for (std::uint64_t j = 0; j < cfg.slices; ++j) {
    const std::size_t lo = slice_first[j], hi = slice_first[j + 1];
    std::uint64_t count = 0;
    for (std::size_t b = lo; b < hi; ++b) count += results[b].included;
    if (count == 0) throw NumericalError("every trajectory in slice " + std::to_string(j) + " was non-finite");
    const double s = pairwise_sum(std::span<const double>(sums).subspan(lo, hi - lo));
    slice_sums.push_back(s);
    slice_counts.push_back(static_cast<double>(count));
    rep.slice_estimates.push_back(s / static_cast<double>(count));
    rep.slice_errors.push_back(std::abs(rep.slice_estimates.back() - rep.oracle) / std::abs(rep.oracle));
  }

  const double total = pairwise_sum(slice_counts);
  rep.estimate = pairwise_sum(slice_sums) / total;
  rep.relative_error = std::abs(rep.estimate - rep.oracle) / std::abs(rep.oracle);

  const double k = static_cast<double>(cfg.slices);
  double mean_e = 0.0;
  for (double e : rep.slice_errors) mean_e += e;
  mean_e /= k;
  double var_e = 0.0;
  for (double e : rep.slice_errors) var_e += (e - mean_e) * (e - mean_e);
  rep.sigma_E = std::sqrt(var_e / (k - 1.0));
  rep.ci_lo = rep.relative_error - 1.65 * rep.sigma_E;
  rep.ci_hi = rep.relative_error + 1.65 * rep.sigma_E;

  const double mean_sq = pairwise_sum(squares) / total;
  const double var = std::max(mean_sq - rep.estimate * rep.estimate, 0.0) * total / std::max(total - 1.0, 1.0);
  rep.std_error = std::sqrt(var / total) / std::abs(rep.oracle);
  return rep;
}

}  // namespace

ErrorReport run_weak_error(const BuiltinProblem& problem, const RunConfig& config) {
  return run(problem, config, false);
}

ErrorReport run_weak_error_serial(const BuiltinProblem& problem, const RunConfig& config) {
  return run(problem, config, true);
}

OrderFit fit_order(std::span<const double> h, std::span<const double> errors) {
  if (h.size() != errors.size()) throw InputError("fit_order: size mismatch");
  if (h.size() < 3) throw InputError("fit_order: need at least three step sizes");
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!(h[i] > 0.0)) throw InputError("fit_order: step sizes must be positive");
    if (!(errors[i] > 0.0))
      throw InputError("fit_order: error at h = " + std::to_string(h[i]) +
                       " is zero or negative; increase the sample count");
    for (std::size_t j = 0; j < i; ++j)
      if (h[j] == h[i]) throw InputError("fit_order: step sizes must be distinct");
  }
  const double n = static_cast<double>(h.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    sx += std::log(h[i]);
    sy += std::log(errors[i]);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double dx = std::log(h[i]) - mx, dy = std::log(errors[i]) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  OrderFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double r = std::log(errors[i]) - (fit.intercept + fit.slope * std::log(h[i]));
    ss_res += r * r;
  }
  fit.residual = std::sqrt(ss_res / n);
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

OrderFit fit_order(std::span<const ErrorReport> reports) {
  std::vector<double> h, e;
  for (const auto& r : reports) {
    h.push_back(r.h);
    e.push_back(r.relative_error);
  }
  return fit_order(h, e);
}

std::vector<double> simulate_endpoints(const SdeProblem& problem, SchemeKind scheme,
                                       const SchemeOptions& options, std::span<const double> x0,
                                       double h, std::uint64_t steps, std::uint64_t samples,
                                       std::uint64_t seed, int threads, RunDiagnostics* diagnostics) {
  const std::size_t d = problem.dim;
  if (x0.size() != d) throw InputError("simulate_endpoints: initial state has wrong dimension");
  if (!(h > 0.0) || !std::isfinite(h)) throw InputError("simulate_endpoints: h must be positive");
  if (samples == 0) throw InputError("simulate_endpoints: need at least one sample");
  const std::vector<Block> blocks = make_blocks(samples);
  std::vector<double> out(samples * d);
  std::vector<RunDiagnostics> diags(blocks.size());
  std::vector<unsigned char> bad(blocks.size(), 0);

  for_each_block(problem, scheme, options, blocks.size(), threads, false,
                 [&](Stepper& stepper, std::vector<double>& x, std::size_t b) {
                   for (std::uint64_t i = blocks[b].begin; i < blocks[b].end; ++i) {
                     RandomStream rng(seed, i);
                     std::span<double> xi(out.data() + i * d, d);
                     std::copy(x0.begin(), x0.end(), xi.begin());
                     if (!run_path(stepper, xi, h, steps, rng, diags[b])) {
                       ++diags[b].excluded;
                       bad[b] = 1;
                     }
                   }
                 });

  RunDiagnostics total;
  for (const auto& dg : diags) total += dg;
  if (diagnostics) *diagnostics = total;
  if (total.excluded > 0)
    throw NumericalError(std::to_string(total.excluded) + " trajectories became non-finite");
  return out;
}

SampleMoments sample_moments(std::span<const double> samples, std::size_t dim, std::size_t component) {
  if (dim == 0 || component >= dim || samples.size() % dim != 0)
    throw InputError("sample_moments: bad dimension or component");
  const std::size_t n = samples.size() / dim;
  if (n < 2) throw InputError("sample_moments: need at least two samples");
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += samples[i * dim + component];
  SampleMoments m;
  m.mean = s / static_cast<double>(n);
  double m2 = 0, m3 = 0, m4 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = samples[i * dim + component] - m.mean;
    const double c2 = c * c;
    m2 += c2;
    m3 += c2 * c;
    m4 += c2 * c2;
  }
  m2 /= static_cast<double>(n);
  m3 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  // Identical samples leave only rounding noise in m2.
  const double floor = 1e-12 * std::abs(m.mean);
  if (!(m2 > floor * floor)) throw InputError("sample_moments: zero variance");
  m.variance = m2;
  m.skewness = m3 / (m2 * std::sqrt(m2));
  m.kurtosis = m4 / (m2 * m2);
  return m;
}

SampleMoments one_step_moments(const SdeProblem& problem, SchemeKind scheme,
                               const SchemeOptions& options, std::span<const double> x0, double h,
                               std::uint64_t samples, std::uint64_t seed, std::size_t component,
                               int threads) {
  if (samples < 10000) throw InputError("one_step_moments: need at least 10^4 samples");
  auto pts = simulate_endpoints(problem, scheme, options, x0, h, 1, samples, seed, threads);
  return sample_moments(pts, problem.dim, component);
}

SecondMomentBound second_moment_bound(const SdeProblem& problem, SchemeKind scheme,
                                      const SchemeOptions& options, std::span<const double> x0,
                                      double h, std::uint64_t samples, std::uint64_t seed,
                                      int threads) {
  if (samples < 2) throw InputError("second_moment_bound: need at least two samples");
  if (!problem.trace_bound) throw InputError("second_moment_bound: problem has no trace bound");
  const std::size_t d = problem.dim;
  auto pts = simulate_endpoints(problem, scheme, options, x0, h, 1, samples, seed, threads);
  SecondMomentBound out;
  double s = 0.0, ss = 0.0, radius = 0.0;
  for (std::uint64_t i = 0; i < samples; ++i) {
    double r2 = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double dx = pts[i * d + k] - x0[k];
      r2 += dx * dx;
    }
    s += r2;
    ss += r2 * r2;
    radius = std::max(radius, std::sqrt(r2));
  }
  const double n = static_cast<double>(samples);
  out.m2 = s / n;
  out.m2_sigma = std::sqrt(std::max(ss / n - out.m2 * out.m2, 0.0) / (n - 1.0));
  out.radius = radius;
  out.trace_bound = problem.trace_bound(x0, radius);
  out.bound = 4.0 * out.trace_bound * h;
  Matrix lam = lambda_at(problem, x0);
  for (std::size_t k = 0; k < d; ++k) out.trace_at_x0 += lam(k, k);
  return out;
}

}  // namespace gmsde
