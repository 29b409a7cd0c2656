#include "metagrad/meta_train.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "metagrad/adaptation.hpp"
#include "metagrad/errors.hpp"
#include "metagrad/parallel.hpp"

namespace metagrad {

void validate(const MetaTrainConfig& config) {
  require(config.alpha > 0.0, "metatrain: alpha must be positive");
  require(config.beta > 0.0, "metatrain: beta must be positive");
  require(config.k_steps >= 1, "metatrain: K must be at least 1");
  require(config.meta_batch >= 1, "metatrain: meta batch must be at least 1");
  require(config.estimator.truncation <= config.k_steps, "metatrain: need 0 <= L <= K");
  if (config.estimator.kind == EstimatorKind::Reptile)
    require(config.estimator.reptile_eps > 0.0, "metatrain: reptile epsilon must be positive");
  if (config.estimator.kind == EstimatorKind::IMaml)
    require(config.estimator.lambda > 0.0, "metatrain: lambda must be positive");
}

namespace {

struct TaskOutcome {
  Vector direction;  // estimate, or φ^K − θ for Reptile
  double val_loss = 0.0;
  std::size_t hvps = 0;
  double err_fo = 0.0, err_tr = 0.0, err_bin = 0.0;
};

TaskOutcome run_task(const Vector& theta, const TaskSample& task, const MetaTrainConfig& config,
                     bool with_errors) {
  const Trajectory traj = gd_adapt(task.train, theta, config.alpha, config.k_steps);
  const Vector g = validation_gradient(*task.validation, traj);

  TaskOutcome out;
  out.val_loss = task.validation->value(traj.final_iterate());
  if (config.estimator.kind == EstimatorKind::Reptile) {
    out.direction = traj.final_iterate() - theta;
  } else {
    MetaGradient est = estimate_meta_gradient(config.estimator, traj, g);
    out.direction = std::move(est.estimate);
    out.hvps = est.cost.hvp_total;
  }
  if (with_errors) {
    const std::size_t l = config.estimator.truncation;
    const MetaGradient full = full_meta_gradient(traj, config.alpha, g);
    out.err_fo = estimation_error(fo_meta_gradient(g), full);
    out.err_tr = estimation_error(trunc_meta_gradient(traj, config.alpha, g, l), full);
    out.err_bin = estimation_error(
        binom_meta_gradient(traj, config.alpha, g, l, config.estimator.rescale_alpha,
                            Execution::Serial),
        full);
  }
  return out;
}

}  // namespace

MetaStepResult meta_step(const Vector& theta, const std::vector<TaskSample>& batch,
                         const MetaTrainConfig& config, bool with_errors) {
  require(!batch.empty(), "meta_step: batch must not be empty");
  validate(config);

  std::vector<TaskOutcome> outcomes(batch.size());
  detail::for_each_index(batch.size(), config.execution == Execution::Parallel,
                         [&](std::size_t t) { outcomes[t] = run_task(theta, batch[t], config, with_errors); });

  const double inv_b = 1.0 / static_cast<double>(batch.size());
  Vector mean_direction(theta.size());
  MetaStepResult result;
  double loss = 0.0, e_fo = 0.0, e_tr = 0.0, e_bin = 0.0;
  for (const auto& o : outcomes) {
    mean_direction += o.direction;
    loss += o.val_loss;
    result.row.hvp_total += o.hvps;
    e_fo += o.err_fo;
    e_tr += o.err_tr;
    e_bin += o.err_bin;
  }
  mean_direction *= inv_b;

  result.row.meta_loss = loss * inv_b;
  result.row.grad_norm = norm(mean_direction);
  if (with_errors) {
    result.row.err_fo = e_fo * inv_b;
    result.row.err_tr = e_tr * inv_b;
    result.row.err_bin = e_bin * inv_b;
  }
  result.theta = theta;
  if (config.estimator.kind == EstimatorKind::Reptile)
    result.theta.axpy(config.estimator.reptile_eps, mean_direction);
  else
    result.theta.axpy(-config.beta, mean_direction);
  if (!result.theta.all_finite()) throw DivergenceError("meta_step: non-finite meta-parameters");
  return result;
}

TrainResult meta_train(const MetaTrainConfig& config, std::optional<Vector> theta0,
                       bool keep_thetas) {
  validate(config);
  TrainResult result;
  result.theta = theta0 ? std::move(*theta0) : initial_parameters(config.tasks, derive_seed(config.seed, 0));
  require(result.theta.size() == parameter_dimension(config.tasks),
          "meta_train: initial parameters have the wrong dimension");

  std::vector<TaskSample> batch;
  if (config.fixed_batch) batch = sample_tasks(config.tasks, derive_seed(config.seed, 1), config.meta_batch);

  std::size_t hvps = 0;
  result.rows.reserve(config.iterations);
  for (std::size_t it = 0; it < config.iterations; ++it) {
    if (!config.fixed_batch)
      batch = sample_tasks(config.tasks, derive_seed(config.seed, it + 1), config.meta_batch);
    const bool with_errors = config.error_every > 0 && it % config.error_every == 0;
    MetaStepResult step;
    try {
      step = meta_step(result.theta, batch, config, with_errors);
    } catch (const DivergenceError& e) {
      throw DivergenceError("meta-iteration " + std::to_string(it) + ": " + e.what());
    }
    hvps += step.row.hvp_total;
    step.row.iter = it;
    step.row.hvp_total = hvps;
    result.rows.push_back(step.row);
    result.theta = std::move(step.theta);
    if (keep_thetas) result.thetas.push_back(result.theta);
  }
  return result;
}

void write_train_csv(std::ostream& os, const std::vector<TrainRow>& rows) {
  const auto cell = [](const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string(); };
  os << "iter,meta_loss,grad_norm,err_fo,err_tr,err_bin,hvp_total\n";
  for (const auto& r : rows) {
    fmt::print(os, "{},{},{},{},{},{},{}\n", r.iter, r.meta_loss, r.grad_norm, cell(r.err_fo),
               cell(r.err_tr), cell(r.err_bin), r.hvp_total);
  }
}

}  // namespace metagrad
