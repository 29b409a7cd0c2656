#include "metagrad/adaptation.hpp"

#include <algorithm>
#include <ostream>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "metagrad/errors.hpp"

namespace metagrad {

Trajectory::Trajectory(ObjectivePtr objective, double step_size, std::vector<Vector> iterates,
                       std::vector<Vector> gradients)
    : objective_(std::move(objective)),
      step_size_(step_size),
      iterates_(std::move(iterates)),
      gradients_(std::move(gradients)) {
  require(objective_ != nullptr, "Trajectory: objective is required");
  require(!iterates_.empty() && iterates_.size() == gradients_.size() + 1,
          "Trajectory: need K+1 iterates and K gradients");
}

Vector Trajectory::hvp(std::size_t k, const Vector& v) const {
  require(k < steps(), "Trajectory::hvp: step index out of range");
  return objective_->hvp(iterates_[k], v);
}

std::optional<Matrix> Trajectory::hessian(std::size_t k) const {
  require(k < steps(), "Trajectory::hessian: step index out of range");
  return objective_->full_hessian(iterates_[k]);
}

double Trajectory::resimulation_residual() const {
  double worst = 0.0;
  for (std::size_t k = 0; k < steps(); ++k) {
    Vector expected = iterates_[k];
    expected.axpy(-step_size_, objective_->gradient(iterates_[k]));
    worst = std::max(worst, distance(iterates_[k + 1], expected) / (1.0 + norm(iterates_[k])));
  }
  return worst;
}

Trajectory gd_adapt(ObjectivePtr objective, const Vector& theta, double alpha,
                    std::size_t k_steps) {
  require(objective != nullptr, "gd_adapt: objective is required");
  require(alpha > 0.0, "gd_adapt: step size alpha must be positive");
  require(k_steps >= 1, "gd_adapt: K must be at least 1");
  require(theta.size() == objective->dimension(), "gd_adapt: theta dimension mismatch");

  std::vector<Vector> iterates;
  std::vector<Vector> gradients;
  iterates.reserve(k_steps + 1);
  gradients.reserve(k_steps);
  iterates.push_back(theta);
  for (std::size_t k = 0; k < k_steps; ++k) {
    Vector grad = objective->gradient(iterates.back());
    if (!grad.all_finite()) {
      throw DivergenceError("gd_adapt: non-finite training gradient at step " + std::to_string(k));
    }
    Vector next = iterates.back();
    next.axpy(-alpha, grad);
    gradients.push_back(std::move(grad));
    iterates.push_back(std::move(next));
  }
  return Trajectory(std::move(objective), alpha, std::move(iterates), std::move(gradients));
}

Vector validation_gradient(const TaskObjective& validation, const Trajectory& trajectory) {
  require(validation.dimension() == trajectory.dimension(),
          "validation_gradient: train and validation objectives differ in dimension");
  Vector g = validation.gradient(trajectory.final_iterate());
  if (!g.all_finite()) throw DivergenceError("validation_gradient: non-finite gradient at phi^K");
  return g;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory) {
  const std::size_t d = trajectory.dimension();
  os << "step";
  for (std::size_t i = 0; i < d; ++i) fmt::print(os, ",phi_{}", i);
  for (std::size_t i = 0; i < d; ++i) fmt::print(os, ",grad_{}", i);
  os << '\n';
  for (std::size_t k = 0; k <= trajectory.steps(); ++k) {
    os << k;
    for (double x : trajectory.iterates()[k]) fmt::print(os, ",{}", x);
    if (k < trajectory.steps()) {
      for (double x : trajectory.gradients()[k]) fmt::print(os, ",{}", x);
    } else {
      for (std::size_t i = 0; i < d; ++i) os << ',';
    }
    os << '\n';
  }
}

}  // namespace metagrad
