#pragma once

// Small dense linear algebra for the mixture schemes. Matrices are row-major
// and expected to be small (d <= 64); nothing here is blocked or vectorized.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace gmsde {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  /// Resizes without preserving contents; keeps capacity.
  void resize(std::size_t rows, std::size_t cols);
  void fill(double value);

  double max_abs() const;
  double frobenius() const;
  bool all_finite() const;
  Matrix transpose() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);
std::vector<double> operator*(const Matrix& a, std::span<const double> x);

/// Largest absolute entry of a - b.
double max_abs_diff(const Matrix& a, const Matrix& b);

/// Eigenpairs of a symmetric matrix.
///
/// Eigenvalues are sorted in descending order. Column j of `vectors` is the
/// unit eigenvector for values[j]; its entry of largest magnitude is made
/// nonnegative so the decomposition is reproducible.
struct SymEig {
  std::vector<double> values;
  Matrix vectors;
};

/// Cyclic Jacobi eigendecomposition of (A + A^T)/2.
///
/// Iterates until the off-diagonal Frobenius norm is at most 1e-14 ||A||_F,
/// for at most 100 sweeps. An optional orthogonal `warm_start` (for example
/// the previous step's eigenvectors) is used as the initial basis.
/// Throws InputError on non-finite entries and NumericalError when the
/// sweep limit is reached.
SymEig sym_eig(const Matrix& a, const Matrix* warm_start = nullptr);

/// Allocation-free variant of sym_eig once `out` and `scratch` are sized.
void sym_eig_into(const Matrix& a, SymEig& out, Matrix& scratch,
                  const Matrix* warm_start = nullptr);

/// V diag(values) V^T.
Matrix reconstruct(const SymEig& eig);

/// Eigenvalues with |mu| <= psd_tolerance(values) count as zero.
double psd_tolerance(std::span<const double> values);

struct PsdClip {
  Matrix clipped;
  int clipped_count = 0;
};

/// Projection onto the PSD cone: negative eigenvalues are set to zero and the
/// eigenvectors kept. clipped_count is the number of eigenvalues below
/// -psd_tolerance.
PsdClip psd_clip(const Matrix& s);

/// R = U diag(sqrt(max(mu, 0))) so that R R^T equals the clipped S.
Matrix sqrt_factor(const Matrix& s);
void sqrt_factor_into(const SymEig& eig, Matrix& r);

/// Lower Cholesky factor. Returns false (leaving `lower` unspecified) when a
/// pivot is not strictly positive.
bool cholesky_into(const Matrix& a, Matrix& lower);

/// Solves (L L^T) X = B for X given the lower Cholesky factor L.
Matrix cholesky_solve(const Matrix& lower, const Matrix& b);

}  // namespace gmsde
