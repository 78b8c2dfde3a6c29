#include <doctest.h>

#include <cmath>

#include "gmsde/error.hpp"
#include "gmsde/linalg.hpp"
#include "support.hpp"

using namespace gmsde;

namespace {

double orthogonality_error(const Matrix& v) {
  return max_abs_diff(v.transpose() * v, Matrix::identity(v.cols()));
}

}  // namespace

TEST_CASE("sym_eig on small closed-form cases") {
  SUBCASE("identity") {
    SymEig e = sym_eig(Matrix::identity(3));
    for (double v : e.values) CHECK(v == doctest::Approx(1.0));
    CHECK(orthogonality_error(e.vectors) <= 1e-14);
  }
  SUBCASE("2x2 with off-diagonal coupling") {
    SymEig e = sym_eig(Matrix{{2, 1}, {1, 2}});
    CHECK(e.values[0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(e.values[1] == doctest::Approx(1.0).epsilon(1e-14));
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(e.vectors(0, 0) == doctest::Approx(r));
    CHECK(e.vectors(1, 0) == doctest::Approx(r));
    // (1, -1)/sqrt2 up to the sign convention: largest-magnitude entry >= 0.
    CHECK(std::abs(e.vectors(0, 1)) == doctest::Approx(r));
    CHECK(e.vectors(0, 1) == doctest::Approx(-e.vectors(1, 1)));
  }
  SUBCASE("diagonal with a negative entry") {
    SymEig e = sym_eig(Matrix{{5, 0}, {0, -2}});
    CHECK(e.values[0] == 5.0);
    CHECK(e.values[1] == -2.0);
  }
}

TEST_CASE("sym_eig rejects non-finite input") {
  CHECK_THROWS_AS(sym_eig(Matrix{{1, NAN}, {NAN, 1}}), InputError);
  CHECK_THROWS_AS(sym_eig(Matrix{{INFINITY}}), InputError);
}

TEST_CASE("sym_eig invariants on random symmetric matrices") {
  testing::Gen gen(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t d = static_cast<std::size_t>(gen.integer(1, 8));
    Matrix a = gen.symmetric(d, gen.uniform(0.01, 100.0));
    SymEig e = sym_eig(a);
    REQUIRE(orthogonality_error(e.vectors) <= 1e-10);
    REQUIRE(max_abs_diff(reconstruct(e), a) <= 1e-10 * (1.0 + a.max_abs()));
    for (std::size_t i = 1; i < d; ++i) REQUIRE(e.values[i - 1] >= e.values[i]);
    for (std::size_t j = 0; j < d; ++j) {
      double big = 0.0;
      for (std::size_t i = 0; i < d; ++i)
        if (std::abs(e.vectors(i, j)) > std::abs(big)) big = e.vectors(i, j);
      REQUIRE(big >= 0.0);
    }
  }
}

TEST_CASE("sym_eig symmetrizes its input") {
  Matrix a{{2, 1.5}, {0.5, 2}};
  SymEig e = sym_eig(a);
  CHECK(e.values[0] == doctest::Approx(3.0));
  CHECK(e.values[1] == doctest::Approx(1.0));
}

TEST_CASE("sym_eig warm start gives the same decomposition") {
  testing::Gen gen(11);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = static_cast<std::size_t>(gen.integer(2, 6));
    Matrix a = gen.spd(d);
    SymEig cold = sym_eig(a);
    Matrix b = a;
    for (double& v : b.data()) v *= 1.0 + 1e-3 * gen.uniform(-1, 1);
    b = 0.5 * (b + b.transpose());
    SymEig warm = sym_eig(b, &cold.vectors);
    SymEig fresh = sym_eig(b);
    for (std::size_t i = 0; i < d; ++i)
      CHECK(warm.values[i] == doctest::Approx(fresh.values[i]).epsilon(1e-10));
    CHECK(max_abs_diff(reconstruct(warm), b) <= 1e-10 * (1.0 + b.max_abs()));
  }
}

TEST_CASE("psd_clip examples") {
  SUBCASE("diagonal") {
    PsdClip c = psd_clip(Matrix{{1, 0}, {0, -0.5}});
    CHECK(max_abs_diff(c.clipped, Matrix{{1, 0}, {0, 0}}) <= 1e-15);
    CHECK(c.clipped_count == 1);
  }
  SUBCASE("PSD input is unchanged") {
    testing::Gen gen(3);
    for (int trial = 0; trial < 50; ++trial) {
      Matrix s = gen.spd(static_cast<std::size_t>(gen.integer(1, 6)));
      PsdClip c = psd_clip(s);
      CHECK(c.clipped_count == 0);
      CHECK(max_abs_diff(c.clipped, s) <= 1e-10 * (1.0 + s.max_abs()));
    }
  }
  SUBCASE("swap matrix") {
    PsdClip c = psd_clip(Matrix{{0, 1}, {1, 0}});
    CHECK(c.clipped_count == 1);
    CHECK(max_abs_diff(c.clipped, Matrix{{0.5, 0.5}, {0.5, 0.5}}) <= 1e-14);
  }
  SUBCASE("non-finite") { CHECK_THROWS_AS(psd_clip(Matrix{{NAN}}), InputError); }
}

TEST_CASE("psd_clip is idempotent and PSD") {
  testing::Gen gen(5);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t d = static_cast<std::size_t>(gen.integer(1, 8));
    Matrix s = gen.symmetric(d, 3.0);
    PsdClip once = psd_clip(s);
    PsdClip twice = psd_clip(once.clipped);
    REQUIRE(max_abs_diff(once.clipped, twice.clipped) <= 1e-10);
    REQUIRE(twice.clipped_count == 0);
    SymEig e = sym_eig(once.clipped);
    REQUIRE(e.values.back() >= -1e-12 * (1.0 + s.max_abs()));
  }
}

TEST_CASE("sqrt_factor examples") {
  Matrix r = sqrt_factor(Matrix{{4, 0}, {0, 9}});
  std::vector<double> norms;
  for (std::size_t j = 0; j < 2; ++j) norms.push_back(std::hypot(r(0, j), r(1, j)));
  std::sort(norms.begin(), norms.end());
  CHECK(norms[0] == doctest::Approx(2.0));
  CHECK(norms[1] == doctest::Approx(3.0));

  CHECK(sqrt_factor(Matrix(3, 3)).max_abs() == 0.0);

  Matrix clipped = psd_clip(Matrix{{0, 1}, {1, 0}}).clipped;
  Matrix rc = sqrt_factor(clipped);
  CHECK(max_abs_diff(rc * rc.transpose(), Matrix{{0.5, 0.5}, {0.5, 0.5}}) <= 1e-14);
}

TEST_CASE("sqrt_factor reproduces random PSD matrices") {
  testing::Gen gen(13);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t d = static_cast<std::size_t>(gen.integer(1, 8));
    Matrix s = psd_clip(gen.symmetric(d, 2.0)).clipped;
    Matrix r = sqrt_factor(s);
    REQUIRE(max_abs_diff(r * r.transpose(), s) <= 1e-10 * (1.0 + s.max_abs()));
  }
}

TEST_CASE("sampling with sqrt_factor has the target covariance") {
  testing::Gen gen(17);
  Matrix s{{2.0, 0.6, -0.3}, {0.6, 1.0, 0.2}, {-0.3, 0.2, 0.5}};
  Matrix r = sqrt_factor(s);
  const int n = 100000;
  Matrix acc(3, 3);
  std::vector<double> xi(3), y(3);
  for (int k = 0; k < n; ++k) {
    for (double& v : xi) v = gen.normal();
    y = r * std::span<const double>(xi);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) acc(i, j) += y[i] * y[j];
  }
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      const double est = acc(i, j) / n;
      // Var(Y_i Y_j) = S_ii S_jj + S_ij^2 for a centred Gaussian.
      const double se = std::sqrt((s(i, i) * s(j, j) + s(i, j) * s(i, j)) / n);
      CHECK(std::abs(est - s(i, j)) <= 5.0 * se);
    }
}

TEST_CASE("cholesky factor and solve") {
  testing::Gen gen(19);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = static_cast<std::size_t>(gen.integer(1, 7));
    Matrix a = gen.spd(d, 0.5);
    Matrix l;
    REQUIRE(cholesky_into(a, l));
    REQUIRE(max_abs_diff(l * l.transpose(), a) <= 1e-12 * (1.0 + a.max_abs()));
    Matrix b = gen.symmetric(d);
    Matrix x = cholesky_solve(l, b);
    REQUIRE(max_abs_diff(a * x, b) <= 1e-9 * (1.0 + b.max_abs()));
  }
  Matrix l;
  CHECK_FALSE(cholesky_into(Matrix{{1, 2}, {2, 1}}, l));
  CHECK_FALSE(cholesky_into(Matrix{{0, 0}, {0, 1}}, l));
}
