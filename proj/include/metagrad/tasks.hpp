#pragma once

// Synthetic task generators. Each task pairs a training loss (used by the inner GD loop) with
// a validation loss (whose gradient at φ^K seeds every meta-gradient estimator).

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "metagrad/objectives.hpp"

namespace metagrad {

enum class TaskFamily { Quadratic, Logistic, Sinusoid };

TaskFamily parse_task_family(std::string_view name);
std::string_view to_string(TaskFamily family);

struct TaskSample {
  ObjectivePtr train;
  ObjectivePtr validation;
};

struct SinusoidTask {
  double amplitude = 1.0;
  double phase = 0.0;
  std::vector<double> train_x, train_y;
  std::vector<double> val_x, val_y;
};

/// Amplitude ~ U[0.1, 5], phase ~ U[0, π], inputs ~ U[−5, 5]; `shots` training and `shots`
/// validation points per task, targets A·sin(x + phase). Deterministic in the seed.
std::vector<SinusoidTask> sample_sinusoid_batch(std::uint64_t seed, std::size_t batch,
                                                std::size_t shots);

TaskSample make_sinusoid_sample(const SinusoidTask& task, const MlpShape& shape);

struct QuadraticFamily {
  std::size_t dim = 4;
  /// Hessian spectra are drawn uniformly from [0, smoothness].
  double smoothness = 1.0;
};

/// Train loss ½φᵀAφ + bᵀφ with A = Q·diag(λ)·Qᵀ (Q random orthogonal); the validation loss
/// shares A with an independently drawn linear term.
std::vector<TaskSample> sample_quadratic_tasks(std::uint64_t seed, std::size_t count,
                                               const QuadraticFamily& family);

struct LogisticFamily {
  std::size_t dim = 3;
  std::size_t samples = 20;
};

/// Gaussian features, labels from a random ground-truth weight; separate validation draw.
std::vector<TaskSample> sample_logistic_tasks(std::uint64_t seed, std::size_t count,
                                              const LogisticFamily& family);

/// Everything needed to draw tasks of one family and a matching initialization θ.
struct FamilyConfig {
  TaskFamily family = TaskFamily::Quadratic;
  QuadraticFamily quadratic;
  LogisticFamily logistic;
  MlpShape mlp;
  std::size_t shots = 10;  // sinusoid points per split
};

std::size_t parameter_dimension(const FamilyConfig& config);

std::vector<TaskSample> sample_tasks(const FamilyConfig& config, std::uint64_t seed,
                                     std::size_t count);

/// θ ~ N(0, I) for the convex families, MlpShape::initialize for the MLP.
Vector initial_parameters(const FamilyConfig& config, std::uint64_t seed);

/// Independent stream seed for (seed, stream), via splitmix64 mixing.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Training and validation rows: task_id,split,x,y (split is "train" or "val").
void write_sinusoid_csv(std::ostream& os, const std::vector<SinusoidTask>& tasks);

}  // namespace metagrad
