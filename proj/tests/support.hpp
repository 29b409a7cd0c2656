#pragma once

// Hand-rolled generators and independent oracles shared by the test binaries.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "metagrad/estimators.hpp"
#include "metagrad/linalg.hpp"
#include "metagrad/objectives.hpp"

namespace metagrad::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
  std::size_t index(std::size_t lo, std::size_t hi) {  // inclusive
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }

  Vector vector(std::size_t n) {
    Vector v(n);
    for (auto& x : v) x = normal();
    return v;
  }

  Matrix matrix(std::size_t r, std::size_t c) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) m(i, j) = normal();
    return m;
  }

  /// Symmetric with spectral norm ≤ scale (scaled by its own norm).
  Matrix symmetric(std::size_t n, double scale) {
    Matrix b = matrix(n, n);
    Matrix s = 0.5 * (b + b.transpose());
    const double nrm = spectral_norm(s);
    return nrm > 0.0 ? (scale / nrm) * s : s;
  }

  /// Symmetric positive definite with eigenvalues in [lo, hi].
  Matrix spd(std::size_t n, double lo, double hi) {
    Matrix q = orthogonal(n);
    Vector lam(n);
    for (auto& x : lam) x = uniform(lo, hi);
    Matrix a = matmul(matmul(q, Matrix::diagonal(lam)), q.transpose());
    return 0.5 * (a + a.transpose());
  }

  Matrix orthogonal(std::size_t n) {
    Matrix q(n, n);
    for (std::size_t c = 0; c < n; ++c) {
      Vector v = vector(n);
      for (int pass = 0; pass < 2; ++pass)
        for (std::size_t j = 0; j < c; ++j) v.axpy(-dot(v, q.column(j)), q.column(j));
      v *= 1.0 / norm(v);
      q.set_column(c, v);
    }
    return q;
  }

  /// K independent symmetric Hessians with ‖H^k‖ ≤ scale, plus a random g.
  PrescribedHessianSequence prescribed(std::size_t k_steps, std::size_t dim, double scale) {
    std::vector<Matrix> hs;
    for (std::size_t k = 0; k < k_steps; ++k) hs.push_back(symmetric(dim, uniform(0.1, 1.0) * scale));
    return PrescribedHessianSequence(std::move(hs), vector(dim));
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

inline double rel_error(const Vector& a, const Vector& b) {
  return distance(a, b) / std::max(1.0, norm(b));
}

/// ∏_{k=first}^{last−1}(I − αH^k) as an explicit matrix (leftmost factor k = first).
inline Matrix dense_product(const std::vector<Matrix>& hs, double alpha, std::size_t first,
                            std::size_t last) {
  const std::size_t d = hs.front().rows();
  Matrix p = Matrix::identity(d);
  for (std::size_t k = first; k < last; ++k) p = matmul(p, Matrix::identity(d) - alpha * hs[k]);
  return p;
}

/// Gaussian elimination with partial pivoting; test-only reference solve.
inline Vector solve_dense(Matrix a, Vector b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    for (std::size_t j = 0; j < n; ++j) std::swap(a(c, j), a(piv, j));
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a(r, c) / a(c, c);
      for (std::size_t j = c; j < n; ++j) a(r, j) -= f * a(c, j);
      b[r] -= f * b[c];
    }
  }
  Vector x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return x;
}

/// Wraps another sequence and zeroes H^k for k < first. Reference for BinomTrunc.
class WindowedHessians final : public StepHessians {
 public:
  WindowedHessians(const StepHessians& base, std::size_t first) : base_(base), first_(first) {}
  std::size_t steps() const override { return base_.steps(); }
  std::size_t dimension() const override { return base_.dimension(); }
  Vector hvp(std::size_t k, const Vector& v) const override {
    return k < first_ ? Vector(v.size()) : base_.hvp(k, v);
  }

 private:
  const StepHessians& base_;
  std::size_t first_;
};

}  // namespace metagrad::testing
