#pragma once

// Ingredients of one Gaussian-mixture step: the three-point beam selector z,
// the displaced beam centers and the covariance-rate function.
//
// Only the sampled beam is ever materialized, so a step costs O(d) draws even
// though the mixture has 3^d components.

#include <cstddef>
#include <span>
#include <vector>

#include "gmsde/linalg.hpp"
#include "gmsde/model.hpp"
#include "gmsde/random.hpp"

namespace gmsde {

struct MixtureParams {
  double gamma = 1.5;           // center spread, sqrt(gamma * lambda_i * h)
  double w0 = 2.0 / 3.0;        // P(z^i = 0)
  double w1 = 1.0 / 6.0;        // P(z^i = +1) = P(z^i = -1)
};

/// Maps one uniform on [0, 1) to a beam index: u < w1 -> -1,
/// w1 <= u < 2 w1 -> +1, otherwise 0.
int z_from_uniform(double u, const MixtureParams& params = {});

/// Fills z with i.i.d. draws, one uniform per component in ascending order.
void sample_z(RandomStream& rng, std::span<int> z, const MixtureParams& params = {});
std::vector<int> sample_z(RandomStream& rng, std::size_t d, const MixtureParams& params = {});

/// Weight of a beam, prod_i w^{z^i}.
double beam_weight(std::span<const int> z, const MixtureParams& params = {});

/// center = x + sum_i z^i sqrt(scale * max(lambda_i, 0) * h) v_i.
///
/// With scale = gamma this is the beam's initial center; the variance
/// construction probes Lambda with scale = 4 gamma = 6.
void displaced_point_into(std::span<const double> x, std::span<const int> z, const SymEig& eig,
                          double h, double scale, std::span<double> out);

/// Beam initial center m(0). Throws InputError for non-finite input or h <= 0.
std::vector<double> beam_center(std::span<const double> x, std::span<const int> z,
                                const SymEig& eig, double h, const MixtureParams& params = {});

/// Frozen-anchor covariance rate G(x) = Lambda(x) - Lambda(anchor) / 2.
class CovarianceRate {
 public:
  CovarianceRate(const SdeProblem& problem, std::span<const double> anchor);
  /// Reuses a Lambda(anchor) the caller already computed.
  CovarianceRate(const SdeProblem& problem, const Matrix& lambda_anchor);

  /// Re-anchors at a new Lambda(anchor) without reallocating.
  void reset(const Matrix& lambda_anchor);

  void operator()(std::span<const double> x, Matrix& out) const;
  Matrix operator()(std::span<const double> x) const;

  const Matrix& half_anchor() const { return half_anchor_; }

 private:
  const SdeProblem* problem_;
  Matrix half_anchor_;
};

}  // namespace gmsde
