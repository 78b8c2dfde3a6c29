#include "gmsde/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gmsde/error.hpp"

namespace gmsde {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& row : rows) {
    if (row.size() != cols_) throw InputError("Matrix: ragged initializer");
    data_.insert(data_.end(), row.begin(), row.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

void Matrix::resize(std::size_t rows, std::size_t cols) {
  rows_ = rows;
  cols_ = cols;
  data_.resize(rows * cols);
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

double Matrix::frobenius() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InputError(std::string("Matrix ") + op + ": shape mismatch");
}

void require_square(const Matrix& a, const char* who) {
  if (!a.square()) throw InputError(std::string(who) + ": matrix is not square");
}

}  // namespace

Matrix operator+(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "+");
  Matrix c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] += bd[i];
  return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "-");
  Matrix c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] -= bd[i];
  return c;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw InputError("Matrix *: inner dimension mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix c = a;
  for (double& v : c.data()) v *= s;
  return c;
}

std::vector<double> operator*(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw InputError("Matrix-vector: dimension mismatch");
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) y[i] += a(i, j) * x[j];
  return y;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

namespace {

constexpr int kMaxSweeps = 100;
constexpr std::size_t kMaxEigDim = 64;
constexpr double kOffDiagonalTolerance = 1e-14;

struct Rotation {
  std::size_t p, q;
  double c, s, t;
};

// Cyclic Jacobi with a round-robin ordering: each sweep visits every (p, q)
// pair once, in rounds of pairwise disjoint planes. Rotations within a round
// commute, so their angles are all computed from the matrix at the start of
// the round. Only the upper triangle of `a` is read and updated; rotations
// are accumulated into `v`.
//
// N > 0 fixes the dimension at compile time so small cases unroll; N = 0 is
// the generic path. Both perform the same arithmetic.
template <std::size_t N>
void jacobi_kernel(std::size_t dyn_n, double* a, double* v, double target_upper) {
  const std::size_t n = N > 0 ? N : dyn_n;

  const std::size_t players = n + (n % 2);  // odd n gets a bye
  std::size_t order[kMaxEigDim + 1];
  Rotation rot[(kMaxEigDim + 1) / 2];

  for (int sweep = 0; sweep <= kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a[i * n + j] * a[i * n + j];
    if (off <= target_upper) return;
    if (sweep == kMaxSweeps) break;

    for (std::size_t i = 0; i < players; ++i) order[i] = i;
    for (std::size_t round = 0; round + 1 < players; ++round) {
      std::size_t count = 0;
      for (std::size_t k = 0; k < players / 2; ++k) {
        std::size_t p = order[k], q = order[players - 1 - k];
        if (p >= n || q >= n) continue;
        if (p > q) std::swap(p, q);
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        const double app = a[p * n + p], aqq = a[q * n + q];
        const double g = 100.0 * std::abs(apq);
        if (std::abs(app) + g == std::abs(app) && std::abs(aqq) + g == std::abs(aqq)) {
          a[p * n + q] = 0.0;  // below rounding of both diagonal entries
          continue;
        }
        const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        rot[count++] = {p, q, c, t * c, t};
      }
      for (std::size_t r = 0; r < count; ++r) {
        const auto [p, q, c, s, t] = rot[r];
        const double tau = s / (1.0 + c);
        const double apq = a[p * n + q];
        a[p * n + p] -= t * apq;
        a[q * n + q] += t * apq;
        a[p * n + q] = 0.0;
        // Upper triangle only: (g, h) <- (c g - s h, s g + c h).
        auto rotate = [s, tau](double& g, double& h) {
          const double g0 = g, h0 = h;
          g = g0 - s * (h0 + g0 * tau);
          h = h0 + s * (g0 - h0 * tau);
        };
        for (std::size_t j = 0; j < p; ++j) rotate(a[j * n + p], a[j * n + q]);
        for (std::size_t j = p + 1; j < q; ++j) rotate(a[p * n + j], a[j * n + q]);
        for (std::size_t j = q + 1; j < n; ++j) rotate(a[p * n + j], a[q * n + j]);
        for (std::size_t j = 0; j < n; ++j) rotate(v[j * n + p], v[j * n + q]);
      }
      // Circle method: keep order[0], rotate the rest by one.
      const std::size_t last = order[players - 1];
      for (std::size_t i = players - 1; i > 1; --i) order[i] = order[i - 1];
      order[1] = last;
    }
  }
  throw NumericalError("sym_eig: Jacobi iteration did not converge in 100 sweeps");
}

void jacobi_sweeps(Matrix& m, Matrix& vm) {
  const std::size_t n = m.rows();
  if (n < 2) return;
  const double target = kOffDiagonalTolerance * m.frobenius();
  const double target_upper = 0.5 * target * target;  // ||offdiag||^2 = 2 * upper sum
  double* a = m.data().data();
  double* v = vm.data().data();
  switch (n) {
    case 2: return jacobi_kernel<2>(n, a, v, target_upper);
    case 3: return jacobi_kernel<3>(n, a, v, target_upper);
    case 4: return jacobi_kernel<4>(n, a, v, target_upper);
    case 6: return jacobi_kernel<6>(n, a, v, target_upper);
    default: return jacobi_kernel<0>(n, a, v, target_upper);
  }
}

void swap_columns(Matrix& m, std::size_t i, std::size_t j) {
  for (std::size_t k = 0; k < m.rows(); ++k) std::swap(m(k, i), m(k, j));
}

}  // namespace

void sym_eig_into(const Matrix& a, SymEig& out, Matrix& scratch, const Matrix* warm_start) {
  require_square(a, "sym_eig");
  if (a.rows() > kMaxEigDim) throw InputError("sym_eig: dimension above 64 is not supported");
  if (!a.all_finite()) throw InputError("sym_eig: non-finite entry");
  const std::size_t n = a.rows();

  scratch.resize(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) scratch(i, j) = 0.5 * (a(i, j) + a(j, i));

  out.vectors.resize(n, n);
  out.values.resize(n);
  if (warm_start != nullptr) {
    if (warm_start->rows() != n || warm_start->cols() != n)
      throw InputError("sym_eig: warm start has the wrong shape");
    // scratch <- W^T scratch W
    Matrix tmp = scratch * (*warm_start);
    scratch = warm_start->transpose() * tmp;
    out.vectors = *warm_start;
  } else {
    out.vectors.fill(0.0);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, i) = 1.0;
  }

  jacobi_sweeps(scratch, out.vectors);

  for (std::size_t i = 0; i < n; ++i) out.values[i] = scratch(i, i);

  // Selection sort, descending; n is small.
  for (std::size_t i = 0; i + 1 < n; ++i) {
    std::size_t best = i;
    for (std::size_t j = i + 1; j < n; ++j)
      if (out.values[j] > out.values[best]) best = j;
    if (best != i) {
      std::swap(out.values[i], out.values[best]);
      swap_columns(out.vectors, i, best);
    }
  }

  for (std::size_t j = 0; j < n; ++j) {
    std::size_t arg = 0;
    double big = -1.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double m = std::abs(out.vectors(k, j));
      if (m > big) {
        big = m;
        arg = k;
      }
    }
    if (out.vectors(arg, j) < 0.0)
      for (std::size_t k = 0; k < n; ++k) out.vectors(k, j) = -out.vectors(k, j);
  }
}

SymEig sym_eig(const Matrix& a, const Matrix* warm_start) {
  SymEig out;
  Matrix scratch;
  sym_eig_into(a, out, scratch, warm_start);
  return out;
}

Matrix reconstruct(const SymEig& eig) {
  const std::size_t n = eig.values.size();
  Matrix m(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double mu = eig.values[k];
    for (std::size_t i = 0; i < n; ++i) {
      const double vi = mu * eig.vectors(i, k);
      for (std::size_t j = 0; j < n; ++j) m(i, j) += vi * eig.vectors(j, k);
    }
  }
  return m;
}

double psd_tolerance(std::span<const double> values) {
  double scale = 0.0;
  for (double v : values) scale = std::max(scale, std::abs(v));
  return 1e-12 * scale;
}

PsdClip psd_clip(const Matrix& s) {
  SymEig eig = sym_eig(s);
  const double tol = psd_tolerance(eig.values);
  PsdClip out;
  for (double& mu : eig.values) {
    if (mu < -tol) ++out.clipped_count;
    if (mu <= tol) mu = 0.0;
  }
  out.clipped = reconstruct(eig);
  return out;
}

void sqrt_factor_into(const SymEig& eig, Matrix& r) {
  const std::size_t n = eig.values.size();
  const double tol = psd_tolerance(eig.values);
  r.resize(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const double mu = eig.values[j];
    const double scale = mu > tol ? std::sqrt(mu) : 0.0;
    for (std::size_t i = 0; i < n; ++i) r(i, j) = scale * eig.vectors(i, j);
  }
}

Matrix sqrt_factor(const Matrix& s) {
  Matrix r;
  sqrt_factor_into(sym_eig(s), r);
  return r;
}

bool cholesky_into(const Matrix& a, Matrix& lower) {
  require_square(a, "cholesky");
  const std::size_t n = a.rows();
  lower.resize(n, n);
  lower.fill(0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= lower(j, k) * lower(j, k);
    if (!(diag > 0.0)) return false;
    const double ljj = std::sqrt(diag);
    lower(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = 0.5 * (a(i, j) + a(j, i));
      for (std::size_t k = 0; k < j; ++k) v -= lower(i, k) * lower(j, k);
      lower(i, j) = v / ljj;
    }
  }
  return true;
}

Matrix cholesky_solve(const Matrix& lower, const Matrix& b) {
  const std::size_t n = lower.rows();
  if (b.rows() != n) throw InputError("cholesky_solve: dimension mismatch");
  Matrix x = b;
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double v = x(i, c);
      for (std::size_t k = 0; k < i; ++k) v -= lower(i, k) * x(k, c);
      x(i, c) = v / lower(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
      double v = x(i, c);
      for (std::size_t k = i + 1; k < n; ++k) v -= lower(k, i) * x(k, c);
      x(i, c) = v / lower(i, i);
    }
  }
  return x;
}

}  // namespace gmsde
