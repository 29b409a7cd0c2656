#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "metagrad/curvature.hpp"
#include "metagrad/objectives.hpp"

namespace metagrad {

/// Recorded inner-loop path φ^0 = θ, φ^{k+1} = φ^k − α∇ℓ^trn(φ^k), k < K.
///
/// Training gradients are cached at adaptation time; Hessian-vector products are replayed on
/// demand against the training objective, so a Trajectory doubles as the StepHessians input
/// of every estimator. Immutable once built.
class Trajectory final : public StepHessians {
 public:
  Trajectory(ObjectivePtr objective, double step_size, std::vector<Vector> iterates,
             std::vector<Vector> gradients);

  std::size_t steps() const override { return gradients_.size(); }
  std::size_t dimension() const override { return iterates_.front().size(); }
  Vector hvp(std::size_t k, const Vector& v) const override;
  std::optional<Matrix> hessian(std::size_t k) const override;

  double step_size() const { return step_size_; }
  const Vector& initial() const { return iterates_.front(); }
  const Vector& final_iterate() const { return iterates_.back(); }
  const std::vector<Vector>& iterates() const { return iterates_; }
  const std::vector<Vector>& gradients() const { return gradients_; }
  const TaskObjective& objective() const { return *objective_; }
  const ObjectivePtr& objective_ptr() const { return objective_; }

  /// max_k ‖φ^{k+1} − (φ^k − α∇ℓ^trn(φ^k))‖ / (1 + ‖φ^k‖), re-evaluating the gradients.
  double resimulation_residual() const;

 private:
  ObjectivePtr objective_;
  double step_size_;
  std::vector<Vector> iterates_;
  std::vector<Vector> gradients_;
};

/// K steps of constant-step gradient descent from θ. Requires α > 0 and K ≥ 1; a non-finite
/// gradient raises DivergenceError naming the step.
Trajectory gd_adapt(ObjectivePtr objective, const Vector& theta, double alpha, std::size_t k_steps);

/// g = ∇ℓ^val(φ^K).
Vector validation_gradient(const TaskObjective& validation, const Trajectory& trajectory);

/// step,phi_0..phi_{d-1},grad_0..grad_{d-1}; the final row (step K) has empty gradient cells.
void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory);

}  // namespace metagrad
