#include "gmsde/flow.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "gmsde/error.hpp"

namespace gmsde {

OdeSolver parse_solver(std::string_view name) {
  if (name == "rk2") return OdeSolver::rk2;
  if (name == "rk4") return OdeSolver::rk4;
  throw InputError("unknown ODE solver '" + std::string(name) + "' (expected rk2 or rk4)");
}

std::string_view to_string(OdeSolver solver) { return solver == OdeSolver::rk2 ? "rk2" : "rk4"; }

namespace {

[[noreturn]] void report_non_finite(const char* what, std::span<const double> m) {
  std::ostringstream os;
  os << "flow: non-finite " << what << " at state (";
  for (std::size_t i = 0; i < m.size(); ++i) os << (i ? ", " : "") << m[i];
  os << ")";
  throw NumericalError(os.str());
}

}  // namespace

FlowIntegrator::FlowIntegrator(const SdeProblem& problem)
    : problem_(&problem),
      stage_(problem.dim),
      k1_(problem.dim),
      k2_(problem.dim),
      k3_(problem.dim),
      k4_(problem.dim),
      rate_(problem.dim, problem.dim) {}

void FlowIntegrator::eval_drift(std::span<const double> m, std::span<double> out) const {
  problem_->drift(m, out);
  for (double v : out)
    if (!std::isfinite(v)) report_non_finite("drift", m);
}

void FlowIntegrator::accumulate_rate(const CovarianceRate& rate, std::span<const double> m,
                                     double weight, Matrix& cov) {
  rate(m, rate_);
  const std::size_t d = m.size();
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) cov(i, j) += weight * rate_(i, j);
}

void FlowIntegrator::advance_mean(std::span<double> m, double h, OdeSolver solver) {
  const std::size_t d = m.size();
  eval_drift(m, k1_);
  if (solver == OdeSolver::rk2) {
    for (std::size_t i = 0; i < d; ++i) stage_[i] = m[i] + h * k1_[i];
    eval_drift(stage_, k2_);
    for (std::size_t i = 0; i < d; ++i) m[i] += 0.5 * h * (k1_[i] + k2_[i]);
    return;
  }
  for (std::size_t i = 0; i < d; ++i) stage_[i] = m[i] + 0.5 * h * k1_[i];
  eval_drift(stage_, k2_);
  for (std::size_t i = 0; i < d; ++i) stage_[i] = m[i] + 0.5 * h * k2_[i];
  eval_drift(stage_, k3_);
  for (std::size_t i = 0; i < d; ++i) stage_[i] = m[i] + h * k3_[i];
  eval_drift(stage_, k4_);
  for (std::size_t i = 0; i < d; ++i)
    m[i] += h / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
}

void FlowIntegrator::advance_mean_cov(std::span<double> m, double h, const CovarianceRate& rate,
                                      OdeSolver solver, Matrix& cov) {
  const std::size_t d = m.size();
  cov.resize(d, d);
  cov.fill(0.0);

  eval_drift(m, k1_);
  if (solver == OdeSolver::rk2) {
    accumulate_rate(rate, m, 0.5 * h, cov);
    for (std::size_t i = 0; i < d; ++i) stage_[i] = m[i] + h * k1_[i];
    eval_drift(stage_, k2_);
    accumulate_rate(rate, stage_, 0.5 * h, cov);
    for (std::size_t i = 0; i < d; ++i) m[i] += 0.5 * h * (k1_[i] + k2_[i]);
  } else {
    const double w1 = h / 6.0;
    const double w2 = h / 3.0;
    accumulate_rate(rate, m, w1, cov);
    for (std::size_t i = 0; i < d; ++i) stage_[i] = m[i] + 0.5 * h * k1_[i];
    eval_drift(stage_, k2_);
    accumulate_rate(rate, stage_, w2, cov);
    for (std::size_t i = 0; i < d; ++i) stage_[i] = m[i] + 0.5 * h * k2_[i];
    eval_drift(stage_, k3_);
    accumulate_rate(rate, stage_, w2, cov);
    for (std::size_t i = 0; i < d; ++i) stage_[i] = m[i] + h * k3_[i];
    eval_drift(stage_, k4_);
    accumulate_rate(rate, stage_, w1, cov);
    for (std::size_t i = 0; i < d; ++i)
      m[i] += h / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
  }

  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) cov(j, i) = cov(i, j);
  if (!cov.all_finite()) report_non_finite("covariance", m);
}

std::vector<double> integrate_mean(const SdeProblem& problem, std::span<const double> m0,
                                   double h, OdeSolver solver) {
  if (m0.size() != problem.dim) throw InputError("integrate_mean: dimension mismatch");
  if (!(h > 0.0)) throw InputError("integrate_mean: step must be positive");
  std::vector<double> m(m0.begin(), m0.end());
  FlowIntegrator flow(problem);
  flow.advance_mean(m, h, solver);
  return m;
}

GaussianState integrate_cov(const SdeProblem& problem, std::span<const double> m0, double h,
                            const CovarianceRate& rate, OdeSolver solver) {
  if (m0.size() != problem.dim) throw InputError("integrate_cov: dimension mismatch");
  if (!(h > 0.0)) throw InputError("integrate_cov: step must be positive");
  GaussianState out;
  out.mean.assign(m0.begin(), m0.end());
  FlowIntegrator flow(problem);
  flow.advance_mean_cov(out.mean, h, rate, solver, out.cov);
  return out;
}

}  // namespace gmsde
