#pragma once

// Estimator-error experiments at a fixed θ: no outer updates, Full as the reference.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "metagrad/estimators.hpp"
#include "metagrad/tasks.hpp"

namespace metagrad {

struct ErrorExperimentConfig {
  FamilyConfig tasks;
  double alpha = 0.25;
  std::size_t k_steps = 5;
  std::size_t batches = 100;
  std::size_t batch_size = 10;
  std::uint64_t seed = 0;
  bool rescale_alpha = false;
  Execution execution = Execution::Parallel;
};

/// Mean over the tasks of a batch (or over batches, for the averaged table) of ‖est − full‖.
struct ErrorRow {
  std::size_t batch = 0;
  std::size_t truncation = 0;
  double err_fo = 0.0;
  double err_tr = 0.0;
  double err_bin = 0.0;
};

struct ErrorTable {
  std::vector<ErrorRow> per_batch;  // batch-major, L = 0..K within each batch
  std::vector<ErrorRow> averaged;   // one row per L
};

ErrorTable run_error_experiment(const ErrorExperimentConfig& config);

/// batch,L,err_fo,err_tr,err_bin
void write_error_batches_csv(std::ostream& os, const std::vector<ErrorRow>& rows);
/// L,err_fo,err_tr,err_bin
void write_error_average_csv(std::ostream& os, const std::vector<ErrorRow>& rows);

struct CostRow {
  EstimatorKind kind = EstimatorKind::Full;
  std::size_t k_steps = 0;
  std::size_t truncation = 0;
  CostCounters cost;
};

/// Logical cost of each estimator, measured by running it on a one-dimensional quadratic
/// trajectory of K steps. L-dependent estimators get rows L = 0..K (0..C for BinomTrunc);
/// Full is reported at L = K, FO and iMAML at L = 0. Reptile is rejected.
std::vector<CostRow> cost_table(const std::vector<EstimatorKind>& kinds, std::size_t k_steps,
                                const EstimatorConfig& base);

/// estimator,K,L,hvp_total,sequential_depth,peak_live_vectors
void write_cost_csv(std::ostream& os, const std::vector<CostRow>& rows);

}  // namespace metagrad
