#include "metagrad/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "metagrad/errors.hpp"

namespace metagrad {

namespace {

void check_same_size(const Vector& a, const Vector& b, const char* op) {
  if (a.size() != b.size()) {
    throw ConstraintError(std::string(op) + ": dimension mismatch (" + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()) + ")");
  }
}

}  // namespace

Vector& Vector::operator+=(const Vector& other) {
  check_same_size(*this, other, "vector add");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Vector& Vector::operator-=(const Vector& other) {
  check_same_size(*this, other, "vector subtract");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Vector& Vector::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

Vector& Vector::axpy(double s, const Vector& x) {
  check_same_size(*this, x, "axpy");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * x.data_[i];
  return *this;
}

bool Vector::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Vector operator+(Vector a, const Vector& b) { return a += b; }
Vector operator-(Vector a, const Vector& b) { return a -= b; }
Vector operator-(Vector a) { return a *= -1.0; }
Vector operator*(double s, Vector a) { return a *= s; }
Vector operator*(Vector a, double s) { return a *= s; }

double dot(const Vector& a, const Vector& b) {
  check_same_size(a, b, "dot");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double norm(const Vector& a) { return std::sqrt(dot(a, a)); }

double norm_inf(const Vector& a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

double distance(const Vector& a, const Vector& b) { return norm(a - b); }

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& row : rows) {
    require(row.size() == cols_, "Matrix: ragged initializer");
    data_.insert(data_.end(), row.begin(), row.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(const Vector& diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

Vector Matrix::column(std::size_t c) const {
  Vector v(rows_);
  for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
  return v;
}

void Matrix::set_column(std::size_t c, const Vector& v) {
  require(v.size() == rows_, "set_column: dimension mismatch");
  for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = v[r];
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::abs(x));
  return m;
}

bool Matrix::is_symmetric() const {
  if (rows_ != cols_) return false;
  double asym = 0.0;
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = r + 1; c < cols_; ++c)
      asym = std::max(asym, std::abs((*this)(r, c) - (*this)(c, r)));
  return asym <= 1e-12 * max_abs();
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Matrix& Matrix::operator+=(const Matrix& other) {
  require(rows_ == other.rows_ && cols_ == other.cols_, "matrix add: dimension mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require(rows_ == other.rows_ && cols_ == other.cols_, "matrix subtract: dimension mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Vector matvec(const Matrix& m, const Vector& v) {
  if (m.cols() != v.size()) {
    throw ConstraintError("matvec: matrix has " + std::to_string(m.cols()) +
                          " columns but vector has " + std::to_string(v.size()) + " entries");
  }
  Vector out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) sum += m(r, c) * v[c];
    out[r] = sum;
  }
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

Matrix outer_ones(const Vector& v, std::size_t n) {
  Matrix out(v.size(), n);
  for (std::size_t r = 0; r < v.size(); ++r)
    for (std::size_t c = 0; c < n; ++c) out(r, c) = v[r];
  return out;
}

Matrix strict_lower_ones(std::size_t n) {
  require(n >= 1, "strict_lower_ones: n must be positive");
  Matrix t(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) t(i, j) = 1.0;
  return t;
}

std::vector<double> symmetric_eigenvalues(const Matrix& m) {
  require(m.rows() == m.cols(), "symmetric_eigenvalues: matrix must be square");
  const std::size_t n = m.rows();
  Matrix a = m;
  // Cyclic Jacobi rotations until the off-diagonal mass is negligible.
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= 1e-30 * std::max(1.0, a.max_abs() * a.max_abs())) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

double spectral_norm(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  const auto eig = symmetric_eigenvalues(matmul(m.transpose(), m));
  return std::sqrt(std::max(0.0, eig.back()));
}

PowerIterationResult power_iteration(const LinearMap& apply, std::size_t dim, int max_iters,
                                     double tol) {
  PowerIterationResult result;
  if (dim == 0) return result;
  Vector v(dim);
  for (std::size_t i = 0; i < dim; ++i) v[i] = 1.0 + 0.01 * static_cast<double>(i % 7);
  v *= 1.0 / norm(v);
  double estimate = 0.0;
  for (int it = 1; it <= max_iters; ++it) {
    Vector w = apply(v);
    const double w_norm = norm(w);
    result.iterations = it;
    if (w_norm == 0.0) {
      result.value = 0.0;
      result.converged = true;
      return result;
    }
    const double next = w_norm;
    v = (1.0 / w_norm) * std::move(w);
    if (std::abs(next - estimate) <= tol * std::max(1.0, next)) {
      result.value = next;
      result.converged = true;
      return result;
    }
    estimate = next;
  }
  result.value = estimate;
  return result;
}

CgResult conjugate_gradient(const LinearMap& apply, const Vector& b, double tol, int max_iters) {
  require(tol > 0.0, "conjugate_gradient: tol must be positive");
  require(max_iters >= 0, "conjugate_gradient: max_iters must be nonnegative");
  CgResult result;
  result.x = Vector(b.size());
  Vector r = b;
  Vector p = r;
  double rr = dot(r, r);
  const double target = tol * norm(b);
  result.residual_norm = std::sqrt(rr);
  if (result.residual_norm <= target) {
    result.converged = true;
    return result;
  }
  for (int it = 0; it < max_iters; ++it) {
    const Vector ap = apply(p);
    ++result.iterations;
    const double curvature = dot(p, ap);
    if (!(curvature > 0.0)) {
      result.breakdown = true;
      return result;
    }
    const double step = rr / curvature;
    result.x.axpy(step, p);
    r.axpy(-step, ap);
    const double rr_next = dot(r, r);
    result.residual_norm = std::sqrt(rr_next);
    if (result.residual_norm <= target) {
      result.converged = true;
      return result;
    }
    p *= rr_next / rr;
    p += r;
    rr = rr_next;
  }
  return result;
}

}  // namespace metagrad
