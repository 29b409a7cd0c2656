#pragma once

// Dense double-precision vectors and matrices, plus the handful of solvers the
// estimators and oracles need. Everything is value-typed; operations are pure.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace metagrad {

class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t n, double fill = 0.0) : data_(n, fill) {}
  Vector(std::initializer_list<double> values) : data_(values) {}
  explicit Vector(std::vector<double> values) : data_(std::move(values)) {}

  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> span() { return data_; }
  std::span<const double> span() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  Vector& operator+=(const Vector& other);
  Vector& operator-=(const Vector& other);
  Vector& operator*=(double s);

  /// this += s * x
  Vector& axpy(double s, const Vector& x);

  bool all_finite() const;

  friend bool operator==(const Vector&, const Vector&) = default;

 private:
  std::vector<double> data_;
};

Vector operator+(Vector a, const Vector& b);
Vector operator-(Vector a, const Vector& b);
Vector operator-(Vector a);
Vector operator*(double s, Vector a);
Vector operator*(Vector a, double s);

double dot(const Vector& a, const Vector& b);
double norm(const Vector& a);
double norm_inf(const Vector& a);
/// ‖a − b‖₂
double distance(const Vector& a, const Vector& b);

/// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(const Vector& diag);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  Vector column(std::size_t c) const;
  void set_column(std::size_t c, const Vector& v);

  Matrix transpose() const;
  double max_abs() const;
  /// max|M − Mᵀ| ≤ 1e−12·max|M| on a square matrix.
  bool is_symmetric() const;
  bool all_finite() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(double s, Matrix a);

/// Throws ConstraintError on dimension mismatch.
Vector matvec(const Matrix& m, const Vector& v);
Matrix matmul(const Matrix& a, const Matrix& b);
/// v · 1ᵀ, an n-column matrix whose columns all equal v.
Matrix outer_ones(const Vector& v, std::size_t n);

/// n×n matrix with ones strictly below the diagonal.
Matrix strict_lower_ones(std::size_t n);

/// Largest singular value, via Jacobi eigenvalues of MᵀM.
double spectral_norm(const Matrix& m);

/// All eigenvalues of a symmetric matrix in ascending order (cyclic Jacobi).
std::vector<double> symmetric_eigenvalues(const Matrix& m);

using LinearMap = std::function<Vector(const Vector&)>;

struct PowerIterationResult {
  double value = 0.0;  // |λ_max|
  int iterations = 0;
  bool converged = false;
};

/// Largest-magnitude eigenvalue of a symmetric map. Starts from a fixed deterministic direction.
PowerIterationResult power_iteration(const LinearMap& apply, std::size_t dim, int max_iters = 50,
                                     double tol = 1e-8);

struct CgResult {
  Vector x;
  int iterations = 0;
  double residual_norm = 0.0;
  bool converged = false;
  /// Set when a step sees pᵀAp ≤ 0, i.e. the map is not positive definite.
  bool breakdown = false;
};

/// Solves apply(x) = b for a symmetric positive-definite map, starting at x = 0.
/// Stops when ‖apply(x) − b‖ ≤ tol·‖b‖. Non-convergence and breakdown are reported, not thrown.
CgResult conjugate_gradient(const LinearMap& apply, const Vector& b, double tol, int max_iters);

}  // namespace metagrad
