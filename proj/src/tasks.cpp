#include "metagrad/tasks.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "metagrad/errors.hpp"

namespace metagrad {

TaskFamily parse_task_family(std::string_view name) {
  if (name == "quadratic") return TaskFamily::Quadratic;
  if (name == "logistic") return TaskFamily::Logistic;
  if (name == "sinusoid") return TaskFamily::Sinusoid;
  throw ConstraintError("unknown task family: " + std::string(name) +
                        " (expected quadratic, logistic or sinusoid)");
}

std::string_view to_string(TaskFamily family) {
  switch (family) {
    case TaskFamily::Quadratic: return "quadratic";
    case TaskFamily::Logistic: return "logistic";
    case TaskFamily::Sinusoid: return "sinusoid";
  }
  return "unknown";
}

std::vector<SinusoidTask> sample_sinusoid_batch(std::uint64_t seed, std::size_t batch,
                                                std::size_t shots) {
  require(batch >= 1, "sample_sinusoid_batch: batch must be at least 1");
  require(shots >= 1, "sample_sinusoid_batch: shots must be at least 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amplitude(0.1, 5.0);
  std::uniform_real_distribution<double> phase(0.0, std::numbers::pi);
  std::uniform_real_distribution<double> input(-5.0, 5.0);

  std::vector<SinusoidTask> tasks(batch);
  for (auto& task : tasks) {
    task.amplitude = amplitude(rng);
    task.phase = phase(rng);
    auto fill = [&](std::vector<double>& xs, std::vector<double>& ys) {
      xs.resize(shots);
      ys.resize(shots);
      for (std::size_t i = 0; i < shots; ++i) {
        xs[i] = input(rng);
        ys[i] = task.amplitude * std::sin(xs[i] + task.phase);
      }
    };
    fill(task.train_x, task.train_y);
    fill(task.val_x, task.val_y);
  }
  return tasks;
}

TaskSample make_sinusoid_sample(const SinusoidTask& task, const MlpShape& shape) {
  return {std::make_shared<MlpRegressionObjective>(shape, task.train_x, task.train_y),
          std::make_shared<MlpRegressionObjective>(shape, task.val_x, task.val_y)};
}

namespace {

Matrix random_orthogonal(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix q(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    Vector v(n);
    for (auto& x : v) x = normal(rng);
    // Two Gram-Schmidt passes keep the columns orthonormal to working precision.
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < c; ++j) {
        const Vector qj = q.column(j);
        v.axpy(-dot(v, qj), qj);
      }
    }
    v *= 1.0 / norm(v);
    q.set_column(c, v);
  }
  return q;
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

std::vector<TaskSample> sample_quadratic_tasks(std::uint64_t seed, std::size_t count,
                                               const QuadraticFamily& family) {
  require(family.dim >= 1, "sample_quadratic_tasks: dimension must be positive");
  require(family.smoothness > 0.0, "sample_quadratic_tasks: smoothness must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> spectrum(0.0, family.smoothness);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<TaskSample> tasks;
  tasks.reserve(count);
  for (std::size_t t = 0; t < count; ++t) {
    const Matrix q = random_orthogonal(family.dim, rng);
    Vector lambda(family.dim);
    for (auto& x : lambda) x = spectrum(rng);
    const Matrix a = symmetrize(matmul(matmul(q, Matrix::diagonal(lambda)), q.transpose()));
    Vector b_train(family.dim), b_val(family.dim);
    for (auto& x : b_train) x = normal(rng);
    for (auto& x : b_val) x = normal(rng);
    tasks.push_back({std::make_shared<QuadraticObjective>(a, b_train),
                     std::make_shared<QuadraticObjective>(a, b_val)});
  }
  return tasks;
}

std::vector<TaskSample> sample_logistic_tasks(std::uint64_t seed, std::size_t count,
                                              const LogisticFamily& family) {
  require(family.dim >= 1 && family.samples >= 1, "sample_logistic_tasks: empty family");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto draw = [&](const Vector& truth) {
    Matrix x(family.dim, family.samples);
    std::vector<int> labels(family.samples);
    for (std::size_t i = 0; i < family.samples; ++i) {
      double z = 0.0;
      for (std::size_t r = 0; r < family.dim; ++r) {
        x(r, i) = normal(rng);
        z += truth[r] * x(r, i);
      }
      labels[i] = unit(rng) < 1.0 / (1.0 + std::exp(-z)) ? 1 : 0;
    }
    return std::make_shared<LogisticObjective>(std::move(x), std::move(labels));
  };

  std::vector<TaskSample> tasks;
  tasks.reserve(count);
  for (std::size_t t = 0; t < count; ++t) {
    Vector truth(family.dim);
    for (auto& w : truth) w = normal(rng);
    auto train = draw(truth);
    auto val = draw(truth);
    tasks.push_back({std::move(train), std::move(val)});
  }
  return tasks;
}

std::size_t parameter_dimension(const FamilyConfig& config) {
  switch (config.family) {
    case TaskFamily::Quadratic: return config.quadratic.dim;
    case TaskFamily::Logistic: return config.logistic.dim;
    case TaskFamily::Sinusoid: return config.mlp.parameter_count();
  }
  return 0;
}

std::vector<TaskSample> sample_tasks(const FamilyConfig& config, std::uint64_t seed,
                                     std::size_t count) {
  switch (config.family) {
    case TaskFamily::Quadratic: return sample_quadratic_tasks(seed, count, config.quadratic);
    case TaskFamily::Logistic: return sample_logistic_tasks(seed, count, config.logistic);
    case TaskFamily::Sinusoid: break;
  }
  std::vector<TaskSample> out;
  out.reserve(count);
  for (const auto& task : sample_sinusoid_batch(seed, count, config.shots))
    out.push_back(make_sinusoid_sample(task, config.mlp));
  return out;
}

Vector initial_parameters(const FamilyConfig& config, std::uint64_t seed) {
  if (config.family == TaskFamily::Sinusoid) return config.mlp.initialize(seed);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector theta(parameter_dimension(config));
  for (auto& x : theta) x = normal(rng);
  return theta;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void write_sinusoid_csv(std::ostream& os, const std::vector<SinusoidTask>& tasks) {
  os << "task_id,split,x,y\n";
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    for (std::size_t i = 0; i < tasks[t].train_x.size(); ++i)
      fmt::print(os, "{},train,{},{}\n", t, tasks[t].train_x[i], tasks[t].train_y[i]);
    for (std::size_t i = 0; i < tasks[t].val_x.size(); ++i)
      fmt::print(os, "{},val,{},{}\n", t, tasks[t].val_x[i], tasks[t].val_y[i]);
  }
}

}  // namespace metagrad
