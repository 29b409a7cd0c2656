#pragma once

// Smooth task losses exposing value, gradient and Hessian-vector products.

#include <cstddef>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "metagrad/curvature.hpp"
#include "metagrad/linalg.hpp"

namespace metagrad {

class TaskObjective {
 public:
  virtual ~TaskObjective() = default;

  virtual std::size_t dimension() const = 0;
  virtual double value(const Vector& phi) const = 0;
  virtual Vector gradient(const Vector& phi) const = 0;
  virtual Vector hvp(const Vector& phi, const Vector& v) const = 0;
  virtual std::optional<Matrix> full_hessian(const Vector& /*phi*/) const { return std::nullopt; }
  /// Lipschitz constant of the gradient, when known in closed form.
  virtual std::optional<double> smoothness() const { return std::nullopt; }
};

using ObjectivePtr = std::shared_ptr<const TaskObjective>;

/// Default central-difference step: 1e−5·(1 + ‖φ‖).
double default_fd_step(const Vector& phi);

/// Central-difference HVP along the normalized direction u = v/‖v‖, rescaled by ‖v‖ afterwards.
/// Throws ConstraintError when v is zero, subnormal or non-finite, or when eps ≤ 0.
Vector hvp_finite_difference(const TaskObjective& obj, const Vector& phi, const Vector& v,
                             double eps);
Vector hvp_finite_difference(const TaskObjective& obj, const Vector& phi, const Vector& v);

/// ½φᵀAφ + bᵀφ with symmetric A.
class QuadraticObjective final : public TaskObjective {
 public:
  QuadraticObjective(Matrix a, Vector b);

  std::size_t dimension() const override { return b_.size(); }
  double value(const Vector& phi) const override;
  Vector gradient(const Vector& phi) const override;
  Vector hvp(const Vector& phi, const Vector& v) const override;
  std::optional<Matrix> full_hessian(const Vector& phi) const override;
  std::optional<double> smoothness() const override { return smoothness_; }

  const Matrix& a() const { return a_; }
  const Vector& b() const { return b_; }

 private:
  Matrix a_;
  Vector b_;
  double smoothness_;
};

/// Mean negative log-likelihood of a logistic model; X is d×N with one sample per column.
class LogisticObjective final : public TaskObjective {
 public:
  LogisticObjective(Matrix x, std::vector<int> labels);

  std::size_t dimension() const override { return x_.rows(); }
  double value(const Vector& phi) const override;
  Vector gradient(const Vector& phi) const override;
  /// (1/N)·X·diag(σ′)·Xᵀ·v, evaluated analytically.
  Vector hvp(const Vector& phi, const Vector& v) const override;
  std::optional<Matrix> full_hessian(const Vector& phi) const override;
  /// ¼·λ_max(XXᵀ)/N
  std::optional<double> smoothness() const override { return smoothness_; }

 private:
  Vector margins(const Vector& phi) const;

  Matrix x_;
  std::vector<int> labels_;
  double smoothness_;
};

/// Fully connected tanh regressor with a linear output layer. Layer sizes include input and
/// output, e.g. {1, 40, 40, 1}. Parameters are packed layer by layer as W (row-major, out×in)
/// followed by b.
struct MlpShape {
  std::vector<std::size_t> layers{1, 40, 40, 1};

  std::size_t parameter_count() const;
  /// W and b ~ U(−1/√fan_in, 1/√fan_in), the usual framework default, from a seeded generator.
  Vector initialize(unsigned long long seed) const;
  double predict(const Vector& params, double x) const;
};

/// Mean squared error of an MlpShape network over scalar (x, y) pairs. HVPs use central
/// finite differences of the analytic gradient.
class MlpRegressionObjective final : public TaskObjective {
 public:
  MlpRegressionObjective(MlpShape shape, std::vector<double> xs, std::vector<double> ys);

  std::size_t dimension() const override { return shape_.parameter_count(); }
  double value(const Vector& phi) const override;
  Vector gradient(const Vector& phi) const override;
  Vector hvp(const Vector& phi, const Vector& v) const override;

  const MlpShape& shape() const { return shape_; }

 private:
  MlpShape shape_;
  std::vector<double> xs_;
  std::vector<double> ys_;
};

/// Step-indexed Hessians {H^k} given explicitly, with a final validation gradient g.
class PrescribedHessianSequence final : public StepHessians {
 public:
  PrescribedHessianSequence(std::vector<Matrix> hessians, Vector g);

  std::size_t steps() const override { return hessians_.size(); }
  std::size_t dimension() const override { return g_.size(); }
  Vector hvp(std::size_t k, const Vector& v) const override;
  std::optional<Matrix> hessian(std::size_t k) const override;

  const std::vector<Matrix>& hessians() const { return hessians_; }
  const Vector& validation_gradient() const { return g_; }
  double max_spectral_norm() const;

 private:
  std::vector<Matrix> hessians_;
  Vector g_;
};

enum class SharpnessKind { Theorem2Negative, Theorem3Positive, Theorem3Truncated };

SharpnessKind parse_sharpness_kind(std::string_view name);

/// Constant ±H·I sequences (and the mixed H·I / 0 one) on which the error bounds are attained.
/// g is the unit vector e_0.
PrescribedHessianSequence sharpness_sequence(SharpnessKind kind, std::size_t k_steps,
                                             std::size_t l_trunc, double h_const, std::size_t dim);

/// Largest |eigenvalue| of the training Hessian along any of the given points (power iteration
/// on HVPs, 50 steps, tol 1e−8). Used when no closed-form smoothness constant exists.
double estimate_smoothness(const TaskObjective& obj, const std::vector<Vector>& points);

}  // namespace metagrad
