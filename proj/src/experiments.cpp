#include "metagrad/experiments.hpp"

#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "metagrad/adaptation.hpp"
#include "metagrad/errors.hpp"
#include "metagrad/parallel.hpp"

namespace metagrad {

namespace {

struct TaskErrors {
  double fo = 0.0;
  std::vector<double> tr, bin;  // indexed by L
};

TaskErrors task_errors(const Vector& theta, const TaskSample& task, const ErrorExperimentConfig& cfg) {
  const Trajectory traj = gd_adapt(task.train, theta, cfg.alpha, cfg.k_steps);
  const Vector g = validation_gradient(*task.validation, traj);
  const MetaGradient full = full_meta_gradient(traj, cfg.alpha, g);

  TaskErrors out;
  out.fo = estimation_error(fo_meta_gradient(g), full);
  out.tr.resize(cfg.k_steps + 1);
  out.bin.resize(cfg.k_steps + 1);
  for (std::size_t l = 0; l <= cfg.k_steps; ++l) {
    out.tr[l] = estimation_error(trunc_meta_gradient(traj, cfg.alpha, g, l), full);
    out.bin[l] = estimation_error(
        binom_meta_gradient(traj, cfg.alpha, g, l, cfg.rescale_alpha, Execution::Serial), full);
  }
  return out;
}

}  // namespace

ErrorTable run_error_experiment(const ErrorExperimentConfig& cfg) {
  require(cfg.alpha > 0.0, "error experiment: alpha must be positive");
  require(cfg.k_steps >= 1, "error experiment: K must be at least 1");
  require(cfg.batches >= 1 && cfg.batch_size >= 1, "error experiment: need at least one task");

  const Vector theta = initial_parameters(cfg.tasks, derive_seed(cfg.seed, 0));
  const std::size_t rows_per_batch = cfg.k_steps + 1;
  const double inv_t = 1.0 / static_cast<double>(cfg.batch_size);

  ErrorTable table;
  table.per_batch.reserve(cfg.batches * rows_per_batch);
  for (std::size_t b = 0; b < cfg.batches; ++b) {
    const auto tasks = sample_tasks(cfg.tasks, derive_seed(cfg.seed, b + 1), cfg.batch_size);
    std::vector<TaskErrors> errs(tasks.size());
    detail::for_each_index(tasks.size(), cfg.execution == Execution::Parallel,
                           [&](std::size_t t) { errs[t] = task_errors(theta, tasks[t], cfg); });
    for (std::size_t l = 0; l < rows_per_batch; ++l) {
      ErrorRow row{b, l, 0.0, 0.0, 0.0};
      for (const auto& e : errs) {
        row.err_fo += e.fo;
        row.err_tr += e.tr[l];
        row.err_bin += e.bin[l];
      }
      row.err_fo *= inv_t;
      row.err_tr *= inv_t;
      row.err_bin *= inv_t;
      table.per_batch.push_back(row);
    }
  }

  table.averaged.resize(rows_per_batch);
  for (std::size_t l = 0; l < rows_per_batch; ++l) table.averaged[l].truncation = l;
  for (const auto& row : table.per_batch) {
    auto& avg = table.averaged[row.truncation];
    avg.err_fo += row.err_fo;
    avg.err_tr += row.err_tr;
    avg.err_bin += row.err_bin;
  }
  const double inv_b = 1.0 / static_cast<double>(cfg.batches);
  for (auto& avg : table.averaged) {
    avg.err_fo *= inv_b;
    avg.err_tr *= inv_b;
    avg.err_bin *= inv_b;
  }
  return table;
}

void write_error_batches_csv(std::ostream& os, const std::vector<ErrorRow>& rows) {
  os << "batch,L,err_fo,err_tr,err_bin\n";
  for (const auto& r : rows)
    fmt::print(os, "{},{},{},{},{}\n", r.batch, r.truncation, r.err_fo, r.err_tr, r.err_bin);
}

void write_error_average_csv(std::ostream& os, const std::vector<ErrorRow>& rows) {
  os << "L,err_fo,err_tr,err_bin\n";
  for (const auto& r : rows)
    fmt::print(os, "{},{},{},{}\n", r.truncation, r.err_fo, r.err_tr, r.err_bin);
}

std::vector<CostRow> cost_table(const std::vector<EstimatorKind>& kinds, std::size_t k_steps,
                                const EstimatorConfig& base) {
  require(k_steps >= 1, "cost: K must be at least 1");
  auto objective = std::make_shared<QuadraticObjective>(Matrix{{0.5}}, Vector{1.0});
  const Trajectory traj = gd_adapt(objective, Vector{1.0}, 0.25, k_steps);
  const Vector g{1.0};

  std::vector<CostRow> rows;
  for (const EstimatorKind kind : kinds) {
    EstimatorConfig cfg = base;
    cfg.kind = kind;
    std::vector<std::size_t> truncations;
    switch (kind) {
      case EstimatorKind::Full: truncations = {k_steps}; break;
      case EstimatorKind::FO:
      case EstimatorKind::IMaml: truncations = {0}; break;
      case EstimatorKind::Reptile:
        throw ConstraintError("cost: reptile performs no HVPs and has no meta-gradient estimate");
      case EstimatorKind::BinomTrunc: {
        const std::size_t window = base.window.value_or(k_steps);
        require(window <= k_steps, "cost: need C <= K");
        for (std::size_t l = 0; l <= window; ++l) truncations.push_back(l);
        break;
      }
      default:
        for (std::size_t l = 0; l <= k_steps; ++l) truncations.push_back(l);
    }
    for (const std::size_t l : truncations) {
      cfg.truncation = l;
      rows.push_back({kind, k_steps, l, estimate_meta_gradient(cfg, traj, g).cost});
    }
  }
  return rows;
}

void write_cost_csv(std::ostream& os, const std::vector<CostRow>& rows) {
  os << "estimator,K,L,hvp_total,sequential_depth,peak_live_vectors\n";
  for (const auto& r : rows) {
    fmt::print(os, "{},{},{},{},{},{}\n", to_string(r.kind), r.k_steps, r.truncation,
               r.cost.hvp_total, r.cost.sequential_depth, r.cost.peak_live_vectors);
  }
}

}  // namespace metagrad
