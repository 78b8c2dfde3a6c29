#include "gmsde/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gmsde/error.hpp"

namespace gmsde {

SchemeKind parse_scheme(std::string_view name) {
  if (name == "em") return SchemeKind::em;
  if (name == "gm-ode") return SchemeKind::gm_ode;
  if (name == "gm-var") return SchemeKind::gm_var;
  throw InputError("unknown scheme '" + std::string(name) + "' (expected em, gm-ode or gm-var)");
}

std::string_view to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::em:
      return "em";
    case SchemeKind::gm_ode:
      return "gm-ode";
    case SchemeKind::gm_var:
      return "gm-var";
  }
  return "?";
}

namespace {

constexpr double kProbeScale = 6.0;

}  // namespace

Stepper::Stepper(const SdeProblem& problem, SchemeKind kind, SchemeOptions options)
    : problem_(&problem),
      kind_(kind),
      options_(options),
      d_(problem.dim),
      flow_(problem),
      drift_(problem.dim),
      mean_(problem.dim),
      probe_(problem.dim),
      theta_(problem.dim),
      plus_(problem.dim),
      minus_(problem.dim),
      sigma_(problem.dim * problem.noise_dim),
      lambda_(problem.dim, problem.dim),
      rate_(problem, Matrix(problem.dim, problem.dim)) {
  if (problem.dim == 0 || problem.noise_dim == 0) throw InputError("Stepper: empty problem");
  if (!problem.drift || !problem.diffusion) throw InputError("Stepper: problem lacks coefficients");
  if (!(options.fd_step >= 0.0)) throw InputError("Stepper: negative finite-difference step");
}

std::size_t Stepper::normals_per_step() const {
  return kind_ == SchemeKind::em ? problem_->noise_dim : d_;
}

double Stepper::lambda_scalar(double x) const {
  double out;
  if (problem_->lambda) {
    problem_->lambda(std::span<const double>(&x, 1), std::span<double>(&out, 1));
    return out;
  }
  double sig[64];
  std::span<double> s(sig, problem_->noise_dim);
  std::vector<double> heap;
  if (problem_->noise_dim > 64) {
    heap.resize(problem_->noise_dim);
    s = heap;
  }
  problem_->diffusion(std::span<const double>(&x, 1), s);
  out = 0.0;
  for (double v : s) out += v * v;
  return out;
}

double Stepper::drift_scalar(double x) const {
  double out;
  problem_->drift(std::span<const double>(&x, 1), std::span<double>(&out, 1));
  if (!std::isfinite(out)) throw NumericalError("flow: non-finite drift at state (" + std::to_string(x) + ")");
  return out;
}

StepDiagnostics Stepper::step(std::span<double> x, double h, RandomStream& rng) {
  int z[64];
  double xi[64];
  std::vector<int> zh;
  std::vector<double> xh;
  std::span<int> zs(z, std::min<std::size_t>(d_, 64));
  std::span<double> ns(xi, std::min<std::size_t>(normals_per_step(), 64));
  if (d_ > 64) {
    zh.resize(d_);
    zs = zh;
  }
  if (normals_per_step() > 64) {
    xh.resize(normals_per_step());
    ns = xh;
  }
  if (kind_ != SchemeKind::em) sample_z(rng, zs, options_.mixture);
  for (double& v : ns) v = rng.normal();
  return step_with(x, h, zs, ns);
}

StepDiagnostics Stepper::em_update(std::span<double> x, double h, std::span<const double> normals) {
  const std::size_t m = problem_->noise_dim;
  problem_->drift(x, drift_);
  problem_->diffusion(x, sigma_);
  const double sq = std::sqrt(h);
  for (std::size_t i = 0; i < d_; ++i) {
    double noise = 0.0;
    for (std::size_t k = 0; k < m; ++k) noise += sigma_[i * m + k] * normals[k];
    x[i] += drift_[i] * h + sq * noise;
  }
  return {};
}

void Stepper::ode_beam_1d(double x, double h, int z, double& m, double& s) {
  const double lam = lambda_scalar(x);
  const double half = 0.5 * lam;
  m = x + z * std::sqrt(options_.mixture.gamma * std::max(lam, 0.0) * h);
  const double k1 = drift_scalar(m);
  if (options_.solver == OdeSolver::rk2) {
    s = 0.5 * h * (lambda_scalar(m) - half);
    const double m2 = m + h * k1;
    const double k2 = drift_scalar(m2);
    s += 0.5 * h * (lambda_scalar(m2) - half);
    m += 0.5 * h * (k1 + k2);
    return;
  }
  const double w1 = h / 6.0;
  const double w2 = h / 3.0;
  s = w1 * (lambda_scalar(m) - half);
  const double m2 = m + 0.5 * h * k1;
  const double k2 = drift_scalar(m2);
  s += w2 * (lambda_scalar(m2) - half);
  const double m3 = m + 0.5 * h * k2;
  const double k3 = drift_scalar(m3);
  s += w2 * (lambda_scalar(m3) - half);
  const double m4 = m + h * k3;
  const double k4 = drift_scalar(m4);
  s += w1 * (lambda_scalar(m4) - half);
  m += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void Stepper::var_beam_1d(double x, double h, int z, double& m, double& s,
                          bool& correction_fallback) {
  const double lam = lambda_scalar(x);
  const double lam_pos = std::max(lam, 0.0);
  const double bx = drift_scalar(x);

  m = x + z * std::sqrt(options_.mixture.gamma * lam_pos * h);
  flow_.advance_mean(std::span<double>(&m, 1), h, options_.solver);

  if (z != 0) {
    s = 0.5 * h * lambda_scalar(x + z * std::sqrt(kProbeScale * lam_pos * h) + h * bx);
    return;
  }
  const double fd = options_.fd_step > 0.0 ? options_.fd_step : h;
  const double curvature = (lambda_scalar(x + fd) - 2.0 * lam + lambda_scalar(x - fd)) / (fd * fd);
  const double shifted = lambda_scalar(x + bx * h);
  const double c = 3.0 * lam * curvature / 8.0;
  s = 0.5 * h * shifted - c * h * h;
  if (options_.include_correction) {
    if (shifted > 0.0) {
      s += c * c / (0.5 * shifted) * h * h * h;
    } else if (c != 0.0) {
      correction_fallback = true;
    }
  }
}

void Stepper::decompose_lambda(std::span<const double> x) {
  problem_->lambda_into(x, lambda_);
  sym_eig_into(lambda_, eig_, scratch_);
}

void Stepper::ode_beam_nd(std::span<const double> x, double h, std::span<const int> z) {
  decompose_lambda(x);
  displaced_point_into(x, z, eig_, h, options_.mixture.gamma, mean_);
  rate_.reset(lambda_);
  flow_.advance_mean_cov(mean_, h, rate_, options_.solver, cov_);
}

void Stepper::var_beam_nd(std::span<const double> x, double h, std::span<const int> z,
                          bool& correction_fallback) {
  decompose_lambda(x);
  problem_->drift(x, drift_);

  // A = Lambda(probe) / 2
  displaced_point_into(x, z, eig_, h, kProbeScale, probe_);
  for (std::size_t i = 0; i < d_; ++i) probe_[i] += h * drift_[i];
  problem_->lambda_into(probe_, lam_probe_);
  Matrix a = 0.5 * lam_probe_;

  // B = -(3/8) sum_i (1 - |z^i|) lambda_i D_i^2 Lambda, by a central difference along theta.
  std::fill(theta_.begin(), theta_.end(), 0.0);
  bool any_zero = false;
  for (std::size_t i = 0; i < d_; ++i) {
    if (z[i] != 0) continue;
    any_zero = true;
    const double w = std::sqrt(std::max(eig_.values[i], 0.0));
    for (std::size_t k = 0; k < d_; ++k) theta_[k] += w * eig_.vectors(k, i);
  }
  Matrix b(d_, d_);
  if (any_zero) {
    const double fd = options_.fd_step > 0.0 ? options_.fd_step : h;
    for (std::size_t k = 0; k < d_; ++k) {
      plus_[k] = x[k] + fd * theta_[k];
      minus_[k] = x[k] - fd * theta_[k];
    }
    problem_->lambda_into(plus_, lam_plus_);
    problem_->lambda_into(minus_, lam_minus_);
    const double scale = -3.0 / 8.0 / (fd * fd);
    for (std::size_t i = 0; i < d_; ++i)
      for (std::size_t j = 0; j < d_; ++j)
        b(i, j) = scale * (lam_plus_(i, j) - 2.0 * lambda_(i, j) + lam_minus_(i, j));
  }

  cov_ = h * a + (h * h) * b;
  if (options_.include_correction && b.max_abs() > 0.0) {
    Matrix lower;
    if (cholesky_into(a, lower)) {
      Matrix f = 0.25 * (b * cholesky_solve(lower, b));
      for (std::size_t i = 0; i < d_; ++i)
        for (std::size_t j = 0; j < d_; ++j) cov_(i, j) += h * h * h * 0.5 * (f(i, j) + f(j, i));
    } else {
      correction_fallback = true;
    }
  }
  for (std::size_t i = 0; i < d_; ++i)
    for (std::size_t j = i + 1; j < d_; ++j) {
      const double v = 0.5 * (cov_(i, j) + cov_(j, i));
      cov_(i, j) = v;
      cov_(j, i) = v;
    }

  displaced_point_into(x, z, eig_, h, options_.mixture.gamma, mean_);
  flow_.advance_mean(mean_, h, options_.solver);
}

int Stepper::sample_gaussian(std::span<double> x, std::span<const double> normals) {
  int clipped = 0;
  if (!cholesky_into(cov_, factor_)) {
    sym_eig_into(cov_, cov_eig_, scratch_);
    const double tol = psd_tolerance(cov_eig_.values);
    for (double mu : cov_eig_.values)
      if (mu < -tol) ++clipped;
    sqrt_factor_into(cov_eig_, factor_);
  }
  for (std::size_t i = 0; i < d_; ++i) {
    double v = mean_[i];
    for (std::size_t k = 0; k < d_; ++k) v += factor_(i, k) * normals[k];
    x[i] = v;
  }
  return clipped;
}

StepDiagnostics Stepper::step_with(std::span<double> x, double h, std::span<const int> z,
                                   std::span<const double> normals) {
  if (kind_ == SchemeKind::em) return em_update(x, h, normals);

  StepDiagnostics diag;
  if (d_ == 1) {
    double m, s;
    if (kind_ == SchemeKind::gm_ode) {
      ode_beam_1d(x[0], h, z[0], m, s);
      if (s <= 0.0) {
        diag.deterministic_fallback = true;
        diag.negative_variance = s < 0.0;
        x[0] = m;
        return diag;
      }
    } else {
      var_beam_1d(x[0], h, z[0], m, s, diag.correction_fallback);
      if (s < 0.0) {
        diag.negative_variance = true;
        diag.clipped_eigs = 1;
        s = 0.0;
      }
    }
    x[0] = m + std::sqrt(s) * normals[0];
    return diag;
  }

  if (kind_ == SchemeKind::gm_ode) {
    ode_beam_nd(x, h, z);
  } else {
    var_beam_nd(x, h, z, diag.correction_fallback);
  }
  diag.clipped_eigs = sample_gaussian(x, normals);
  diag.negative_variance = diag.clipped_eigs > 0;
  return diag;
}

BeamMoments Stepper::beam(std::span<const double> x, double h, std::span<const int> z) {
  if (kind_ == SchemeKind::em) throw InputError("beam: Euler-Maruyama has no mixture beams");
  if (x.size() != d_ || z.size() != d_) throw InputError("beam: dimension mismatch");
  BeamMoments out;
  if (d_ == 1) {
    double m, s;
    if (kind_ == SchemeKind::gm_ode)
      ode_beam_1d(x[0], h, z[0], m, s);
    else
      var_beam_1d(x[0], h, z[0], m, s, out.correction_fallback);
    out.mean = {m};
    out.cov = Matrix{{s}};
    return out;
  }
  if (kind_ == SchemeKind::gm_ode)
    ode_beam_nd(x, h, z);
  else
    var_beam_nd(x, h, z, out.correction_fallback);
  out.mean = mean_;
  out.cov = cov_;
  return out;
}

namespace {

void validate_step(const SdeProblem& problem, std::span<const double> x, double h) {
  if (x.size() != problem.dim) throw InputError("step: state has wrong dimension");
  if (!(h > 0.0) || !std::isfinite(h)) throw InputError("step: h must be positive and finite");
  for (double v : x)
    if (!std::isfinite(v)) throw InputError("step: non-finite state");
}

StepOutcome run_one(const SdeProblem& problem, SchemeKind kind, const SchemeOptions& options,
                    std::span<const double> x, double h, RandomStream& rng) {
  validate_step(problem, x, h);
  Stepper stepper(problem, kind, options);
  StepOutcome out;
  out.next_state.assign(x.begin(), x.end());
  out.diagnostics = stepper.step(out.next_state, h, rng);
  for (double v : out.next_state)
    if (!std::isfinite(v)) throw NumericalError("step: non-finite next state");
  return out;
}

}  // namespace

StepOutcome em_step(const SdeProblem& problem, std::span<const double> x, double h,
                    RandomStream& rng) {
  return run_one(problem, SchemeKind::em, {}, x, h, rng);
}

StepOutcome gm_ode_step(const SdeProblem& problem, std::span<const double> x, double h,
                        RandomStream& rng, OdeSolver solver) {
  SchemeOptions options;
  options.solver = solver;
  return run_one(problem, SchemeKind::gm_ode, options, x, h, rng);
}

StepOutcome gm_var_step(const SdeProblem& problem, std::span<const double> x, double h,
                        RandomStream& rng, const SchemeOptions& options) {
  return run_one(problem, SchemeKind::gm_var, options, x, h, rng);
}

BeamMoments gm_ode_beam(const SdeProblem& problem, std::span<const double> x, double h,
                        std::span<const int> z, const SchemeOptions& options) {
  validate_step(problem, x, h);
  Stepper stepper(problem, SchemeKind::gm_ode, options);
  return stepper.beam(x, h, z);
}

BeamMoments gm_var_beam(const SdeProblem& problem, std::span<const double> x, double h,
                        std::span<const int> z, const SchemeOptions& options) {
  validate_step(problem, x, h);
  Stepper stepper(problem, SchemeKind::gm_var, options);
  return stepper.beam(x, h, z);
}

}  // namespace gmsde
