#include <doctest.h>

#include <cmath>
#include <vector>

#include "gmsde/error.hpp"
#include "gmsde/flow.hpp"
#include "support.hpp"

using namespace gmsde;

namespace {

// Scalar problem with a nonlinear drift, for order checks.
SdeProblem nonlinear_1d() {
  SdeProblem p;
  p.name = "nonlinear";
  p.dim = 1;
  p.noise_dim = 1;
  p.drift = [](std::span<const double> x, std::span<double> out) { out[0] = std::sin(x[0]) - 0.5 * x[0] * x[0]; };
  p.diffusion = [](std::span<const double> x, std::span<double> out) { out[0] = 1.0 + 0.5 * std::cos(x[0]); };
  return p;
}

double substepped(const SdeProblem& p, double m0, double h, int n) {
  std::vector<double> m{m0};
  for (int i = 0; i < n; ++i) m = integrate_mean(p, m, h / n, OdeSolver::rk4);
  return m[0];
}

}  // namespace

TEST_CASE("solver names") {
  CHECK(parse_solver("rk2") == OdeSolver::rk2);
  CHECK(parse_solver("rk4") == OdeSolver::rk4);
  CHECK(to_string(OdeSolver::rk4) == "rk4");
  CHECK_THROWS_AS(parse_solver("euler"), InputError);
}

TEST_CASE("zero drift leaves the mean in place") {
  std::vector<double> off{0.0, 0.0};
  SdeProblem p = linear_problem(Matrix(2, 2), off, Matrix::identity(2));
  std::vector<double> m0{0.7, -3.0};
  CHECK(integrate_mean(p, m0, 0.3, OdeSolver::rk4) == m0);
  CHECK(integrate_mean(p, m0, 0.3, OdeSolver::rk2) == m0);
}

TEST_CASE("rk4 on a linear ODE is the degree-4 Taylor polynomial of the exponential") {
  auto quad = builtin_problem("quad1d");
  std::vector<double> m0{2.0};
  const double got = integrate_mean(quad.problem, m0, 0.1, OdeSolver::rk4)[0];
  const double z = -0.2;
  CHECK(got == doctest::Approx(2.0 * (1 + z + z * z / 2 + z * z * z / 6 + z * z * z * z / 24)).epsilon(1e-15));
  // Lagrange remainder of exp on [-0.2, 0]: at most |z|^5 / 5! times m0.
  CHECK(std::abs(got - 2.0 * std::exp(-0.2)) <= 2.0 * std::pow(0.2, 5) / 120.0);
  CHECK(2.0 * std::exp(-0.2) == doctest::Approx(1.637462).epsilon(1e-6));
}

TEST_CASE("rk2 on rot2d matches Heun by hand") {
  auto rot = builtin_problem("rot2d");
  std::vector<double> m0{1.0, 1.0};
  auto m = integrate_mean(rot.problem, m0, 0.1, OdeSolver::rk2);
  // k1 = (1, -1); stage (1.1, 0.9); k2 = (1.1, -0.9)
  CHECK(m[0] == doctest::Approx(1.0 + 0.05 * 2.1).epsilon(1e-15));
  CHECK(m[1] == doctest::Approx(1.0 - 0.05 * 1.9).epsilon(1e-15));
}

TEST_CASE("constant covariance rate integrates to C h") {
  std::vector<double> off{0.0, 0.0};
  Matrix sig{{1.0, 0.3}, {0.0, 0.8}};
  SdeProblem p = linear_problem(Matrix(2, 2), off, sig);
  std::vector<double> m0{1.0, 2.0};
  CovarianceRate rate(p, m0);
  for (auto solver : {OdeSolver::rk2, OdeSolver::rk4}) {
    auto st = integrate_cov(p, m0, 0.25, rate, solver);
    Matrix half = 0.5 * lambda_at(p, m0);
    CHECK(max_abs_diff(st.cov, 0.25 * half) <= 1e-15);
    CHECK(st.mean == m0);
  }
}

TEST_CASE("frozen mean makes the integrand constant") {
  auto flat = builtin_problem("quad1d", {{"lambda", 0.0}});
  std::vector<double> m0{2.0};
  CovarianceRate rate(flat.problem, m0);
  auto st = integrate_cov(flat.problem, m0, 0.1, rate);
  CHECK(st.cov(0, 0) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(st.mean[0] == 2.0);
}

TEST_CASE("additive noise: every beam gets half of Lambda h") {
  std::vector<double> off{0.5, 0.0};
  SdeProblem p = linear_problem(Matrix{{-1, 2}, {0.5, -3}}, off, Matrix{{0.4, 0.0}, {0.1, 0.9}});
  std::vector<double> anchor{0.0, 0.0};
  CovarianceRate rate(p, anchor);
  Matrix expect = 0.05 * lambda_at(p, anchor);
  for (double shift : {-1.0, 0.0, 2.0}) {
    std::vector<double> m0{shift, -shift};
    auto st = integrate_cov(p, m0, 0.1, rate);
    CHECK(max_abs_diff(st.cov, expect) <= 1e-15);
  }
}

TEST_CASE("covariance output is exactly symmetric") {
  auto rot = builtin_problem("rot2d");
  auto ring = builtin_problem("ring6d");
  testing::Gen gen(31);
  for (auto* bp : {&rot, &ring}) {
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> m0 = bp->x0;
      for (double& v : m0) v += gen.uniform(-1, 1);
      CovarianceRate rate(bp->problem, m0);
      auto st = integrate_cov(bp->problem, m0, gen.uniform(0.01, 0.3), rate);
      CHECK(st.cov == st.cov.transpose());
    }
  }
}

TEST_CASE("Runge-Kutta local order") {
  SdeProblem p = nonlinear_1d();
  std::vector<double> hs, e4, e2;
  for (int k = 2; k <= 6; ++k) {
    const double h = std::ldexp(1.0, -k);
    const double ref = substepped(p, 0.8, h, 100);
    std::vector<double> m0{0.8};
    hs.push_back(h);
    e4.push_back(std::abs(integrate_mean(p, m0, h, OdeSolver::rk4)[0] - ref));
    e2.push_back(std::abs(integrate_mean(p, m0, h, OdeSolver::rk2)[0] - ref));
  }
  CHECK(testing::loglog_slope(hs, e4) >= 4.5);
  CHECK(testing::loglog_slope(hs, e2) >= 2.7);
}

TEST_CASE("one-dimensional covariance matches its small-h expansion") {
  auto quad = builtin_problem("quad1d");
  const double x0 = 2.0, lam = 8.0, dlam = 4.0, d2lam = 2.0, b = -4.0, gamma = 1.5;
  for (int z : {-1, 0, 1}) {
    const double s1 = 0.5 * lam;
    const double s2 = z * dlam * std::sqrt(gamma * lam);
    const double s3 = 0.75 * z * z * d2lam * lam + 0.5 * dlam * b;
    std::vector<double> hs, res;
    for (int k = 4; k <= 9; ++k) {
      const double h = std::ldexp(1.0, -k);
      std::vector<double> m0{x0 + z * std::sqrt(gamma * lam * h)};
      CovarianceRate rate(quad.problem, std::vector<double>{x0});
      const double s = integrate_cov(quad.problem, m0, h, rate).cov(0, 0);
      hs.push_back(h);
      res.push_back(std::abs(s - (s1 * h + s2 * std::pow(h, 1.5) + s3 * h * h)));
    }
    CHECK(testing::loglog_slope(hs, res) >= 2.3);
  }
}

TEST_CASE("non-finite drift is reported") {
  SdeProblem p = nonlinear_1d();
  p.drift = [](std::span<const double> x, std::span<double> out) { out[0] = x[0] > 1.0 ? NAN : 1.0; };
  std::vector<double> m0{0.9};
  CHECK_THROWS_AS(integrate_mean(p, m0, 0.5), NumericalError);
  CHECK_THROWS_AS(integrate_mean(p, m0, 0.0), InputError);
}
