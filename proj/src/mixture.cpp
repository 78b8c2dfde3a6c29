#include "gmsde/mixture.hpp"

#include <algorithm>
#include <cmath>

#include "gmsde/error.hpp"

namespace gmsde {

int z_from_uniform(double u, const MixtureParams& params) {
  if (u < params.w1) return -1;
  if (u < 2.0 * params.w1) return 1;
  return 0;
}

void sample_z(RandomStream& rng, std::span<int> z, const MixtureParams& params) {
  for (int& zi : z) zi = z_from_uniform(rng.uniform(), params);
}

std::vector<int> sample_z(RandomStream& rng, std::size_t d, const MixtureParams& params) {
  if (d == 0) throw InputError("sample_z: dimension must be positive");
  std::vector<int> z(d);
  sample_z(rng, z, params);
  return z;
}

double beam_weight(std::span<const int> z, const MixtureParams& params) {
  double w = 1.0;
  for (int zi : z) w *= zi == 0 ? params.w0 : params.w1;
  return w;
}

void displaced_point_into(std::span<const double> x, std::span<const int> z, const SymEig& eig,
                          double h, double scale, std::span<double> out) {
  const std::size_t d = x.size();
  std::copy(x.begin(), x.end(), out.begin());
  for (std::size_t i = 0; i < d; ++i) {
    if (z[i] == 0) continue;
    const double lam = std::max(eig.values[i], 0.0);
    const double a = z[i] * std::sqrt(scale * lam * h);
    for (std::size_t k = 0; k < d; ++k) out[k] += a * eig.vectors(k, i);
  }
}

std::vector<double> beam_center(std::span<const double> x, std::span<const int> z,
                                const SymEig& eig, double h, const MixtureParams& params) {
  const std::size_t d = x.size();
  if (z.size() != d || eig.values.size() != d) throw InputError("beam_center: dimension mismatch");
  if (!(h > 0.0) || !std::isfinite(h)) throw InputError("beam_center: step must be positive");
  if (!std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); }))
    throw InputError("beam_center: non-finite state");
  for (double lam : eig.values)
    if (!std::isfinite(lam)) throw InputError("beam_center: non-finite eigenvalue");
  std::vector<double> out(d);
  displaced_point_into(x, z, eig, h, params.gamma, out);
  return out;
}

CovarianceRate::CovarianceRate(const SdeProblem& problem, std::span<const double> anchor)
    : CovarianceRate(problem, lambda_at(problem, anchor)) {}

CovarianceRate::CovarianceRate(const SdeProblem& problem, const Matrix& lambda_anchor)
    : problem_(&problem), half_anchor_(0.5 * lambda_anchor) {}

void CovarianceRate::reset(const Matrix& lambda_anchor) {
  half_anchor_.resize(lambda_anchor.rows(), lambda_anchor.cols());
  auto dst = half_anchor_.data();
  auto src = lambda_anchor.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = 0.5 * src[i];
}

void CovarianceRate::operator()(std::span<const double> x, Matrix& out) const {
  problem_->lambda_into(x, out);
  auto o = out.data();
  auto a = half_anchor_.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= a[i];
}

Matrix CovarianceRate::operator()(std::span<const double> x) const {
  Matrix out;
  (*this)(x, out);
  return out;
}

}  // namespace gmsde
