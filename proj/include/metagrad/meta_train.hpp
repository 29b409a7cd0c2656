#pragma once

// Outer meta-training loop: sample a batch, adapt every task, estimate its meta-gradient and
// take a plain gradient step on θ.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "metagrad/estimators.hpp"
#include "metagrad/tasks.hpp"

namespace metagrad {

struct MetaTrainConfig {
  EstimatorConfig estimator;
  FamilyConfig tasks;
  double alpha = 0.25;       // inner step
  double beta = 1e-3;        // meta step
  std::size_t k_steps = 5;
  std::size_t meta_batch = 10;
  std::size_t iterations = 10000;
  std::uint64_t seed = 0;
  /// Reuse one batch for every iteration instead of drawing a fresh one.
  bool fixed_batch = false;
  /// Compute FO/Trunc/Binom errors against Full every this many iterations (0 = never).
  std::size_t error_every = 0;
  /// Tasks of a batch run concurrently when Parallel.
  Execution execution = Execution::Parallel;
};

void validate(const MetaTrainConfig& config);

struct TrainRow {
  std::size_t iter = 0;
  double meta_loss = 0.0;  // mean validation loss at φ^K over the batch, before the update
  double grad_norm = 0.0;  // ‖mean estimate‖, or ‖mean Reptile direction‖
  std::optional<double> err_fo, err_tr, err_bin;
  std::size_t hvp_total = 0;  // cumulative HVPs spent by the configured estimator
};

struct MetaStepResult {
  Vector theta;
  TrainRow row;  // row.hvp_total holds this step's HVPs only
};

/// θ′ = θ − β·mean(estimate_t), or θ′ = θ + ε·mean(φ_t^K − θ) for Reptile. The batch is reduced
/// in task order, so the result does not depend on thread scheduling.
MetaStepResult meta_step(const Vector& theta, const std::vector<TaskSample>& batch,
                         const MetaTrainConfig& config, bool with_errors = false);

struct TrainResult {
  Vector theta;
  std::vector<TrainRow> rows;
  std::vector<Vector> thetas;  // θ after each iteration, only when requested
};

/// Runs config.iterations meta-steps from θ₀ (drawn from the seed unless given). A non-finite
/// update raises DivergenceError naming the meta-iteration.
TrainResult meta_train(const MetaTrainConfig& config, std::optional<Vector> theta0 = std::nullopt,
                       bool keep_thetas = false);

/// iter,meta_loss,grad_norm,err_fo,err_tr,err_bin,hvp_total
void write_train_csv(std::ostream& os, const std::vector<TrainRow>& rows);

}  // namespace metagrad
