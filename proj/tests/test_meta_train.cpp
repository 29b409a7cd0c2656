#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <sstream>
#include <string>

#include "metagrad/errors.hpp"
#include "metagrad/experiments.hpp"
#include "metagrad/meta_train.hpp"
#include "support.hpp"

using namespace metagrad;
using metagrad::testing::rel_error;

namespace {

MetaTrainConfig quadratic_config(EstimatorKind kind, std::size_t l = 0) {
  MetaTrainConfig cfg;
  cfg.estimator.kind = kind;
  cfg.estimator.truncation = l;
  cfg.iterations = 50;
  cfg.seed = 3;
  return cfg;
}

MetaTrainConfig sinusoid_config(EstimatorKind kind, std::size_t l) {
  MetaTrainConfig cfg;
  cfg.estimator.kind = kind;
  cfg.estimator.truncation = l;
  cfg.tasks.family = TaskFamily::Sinusoid;
  cfg.tasks.mlp = MlpShape{{1, 10, 10, 1}};
  cfg.alpha = 0.01;
  cfg.beta = 1e-3;
  cfg.meta_batch = 4;
  cfg.iterations = 100;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST(MetaStep, QuadraticClosedForm) {
  const Matrix a{{0.8, 0.1}, {0.1, 0.4}};
  const Vector b{0.5, -1.0}, c{-0.3, 0.2};
  const TaskSample task{std::make_shared<QuadraticObjective>(a, b),
                        std::make_shared<QuadraticObjective>(a, c)};
  MetaTrainConfig cfg = quadratic_config(EstimatorKind::Full);
  cfg.k_steps = 3;
  cfg.beta = 0.1;
  const Vector theta{1.0, 2.0};
  Vector phi = theta;
  for (int k = 0; k < 3; ++k) phi = phi - 0.25 * (matvec(a, phi) + b);
  const Vector g = matvec(a, phi) + c;
  const Matrix step = Matrix::identity(2) - 0.25 * a;
  const Vector meta = matvec(matmul(step, matmul(step, step)), g);
  const auto r = meta_step(theta, {task}, cfg);
  EXPECT_LT(rel_error(r.theta, theta - 0.1 * meta), 1e-14);
  EXPECT_NEAR(r.row.grad_norm, norm(meta), 1e-14);
  EXPECT_EQ(r.row.hvp_total, 3u);
  EXPECT_FALSE(r.row.err_fo.has_value());
}

TEST(MetaStep, StationaryWhenValidationGradientVanishes) {
  // Validation minimum at the adapted point of a task whose training loss is already minimized.
  const Matrix a = Matrix::identity(2);
  const TaskSample task{std::make_shared<QuadraticObjective>(a, Vector{-1.0, 1.0}),
                        std::make_shared<QuadraticObjective>(a, Vector{-1.0, 1.0})};
  const Vector theta{1.0, -1.0};
  for (auto kind : {EstimatorKind::Full, EstimatorKind::FO, EstimatorKind::Binom, EstimatorKind::Reptile}) {
    MetaTrainConfig cfg = quadratic_config(kind, 2);
    EXPECT_EQ(meta_step(theta, {task}, cfg).theta, theta) << to_string(kind);
  }
}

TEST(MetaStep, ReptileMovesTowardAdaptedMean) {
  const Matrix a = Matrix::identity(1);
  const TaskSample task{std::make_shared<QuadraticObjective>(a, Vector{-2.0}),
                        std::make_shared<QuadraticObjective>(a, Vector{0.0})};
  MetaTrainConfig cfg = quadratic_config(EstimatorKind::Reptile);
  cfg.k_steps = 1;
  cfg.alpha = 0.5;
  cfg.estimator.reptile_eps = 0.5;
  // φ¹ = 0 − 0.5·(0 − 2) = 1, so θ′ = 0 + 0.5·1.
  const auto r = meta_step(Vector{0.0}, {task}, cfg);
  EXPECT_EQ(r.theta, Vector{0.5});
  EXPECT_EQ(r.row.hvp_total, 0u);
}

TEST(MetaStep, SerialAndParallelAgreeBitwise) {
  MetaTrainConfig cfg = quadratic_config(EstimatorKind::Binom, 2);
  const auto batch = sample_tasks(cfg.tasks, 5, 16);
  const Vector theta = initial_parameters(cfg.tasks, 6);
  cfg.execution = Execution::Serial;
  const auto serial = meta_step(theta, batch, cfg, true);
  cfg.execution = Execution::Parallel;
  const auto parallel = meta_step(theta, batch, cfg, true);
  EXPECT_EQ(serial.theta, parallel.theta);
  EXPECT_EQ(serial.row.meta_loss, parallel.row.meta_loss);
  EXPECT_EQ(*serial.row.err_bin, *parallel.row.err_bin);
}

TEST(MetaTrain, DeterministicGivenSeed) {
  for (auto kind : {EstimatorKind::Full, EstimatorKind::Trunc, EstimatorKind::IMaml, EstimatorKind::Reptile}) {
    MetaTrainConfig cfg = quadratic_config(kind, 2);
    cfg.error_every = 7;
    const auto a = meta_train(cfg);
    const auto b = meta_train(cfg);
    std::ostringstream sa, sb;
    write_train_csv(sa, a.rows);
    write_train_csv(sb, b.rows);
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_EQ(a.theta, b.theta);
    cfg.seed += 1;
    EXPECT_NE(meta_train(cfg).theta, a.theta);
  }
}

TEST(MetaTrain, RowsAccumulateCostAndSampleErrors) {
  MetaTrainConfig cfg = quadratic_config(EstimatorKind::Binom, 2);
  cfg.iterations = 10;
  cfg.error_every = 4;
  const auto r = meta_train(cfg);
  ASSERT_EQ(r.rows.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(r.rows[i].iter, i);
    // 10 tasks × L(K−L+1) = 10 × 8 per step.
    EXPECT_EQ(r.rows[i].hvp_total, 80 * (i + 1));
    EXPECT_EQ(r.rows[i].err_bin.has_value(), i % 4 == 0);
    if (r.rows[i].err_bin) {
      EXPECT_LT(*r.rows[i].err_bin, *r.rows[i].err_tr);
      EXPECT_LE(*r.rows[i].err_tr, *r.rows[i].err_fo);
    }
  }
}

TEST(MetaTrain, FullMetaLossIsNonIncreasingOnFixedConvexBatch) {
  MetaTrainConfig cfg = quadratic_config(EstimatorKind::Full);
  cfg.iterations = 1000;
  cfg.fixed_batch = true;
  const auto r = meta_train(cfg);
  for (std::size_t i = 1; i < r.rows.size(); ++i)
    ASSERT_LE(r.rows[i].meta_loss, r.rows[i - 1].meta_loss) << "iteration " << i;
  EXPECT_LT(r.rows.back().meta_loss, r.rows.front().meta_loss);
}

TEST(MetaTrain, BinomAtFullDepthTracksFullOnSinusoid) {
  const auto full = meta_train(sinusoid_config(EstimatorKind::Full, 0), std::nullopt, true);
  const auto binom = meta_train(sinusoid_config(EstimatorKind::Binom, 5), std::nullopt, true);
  ASSERT_EQ(full.thetas.size(), 100u);
  for (std::size_t i = 0; i < full.thetas.size(); ++i)
    EXPECT_LT(rel_error(binom.thetas[i], full.thetas[i]), 1e-8) << "iteration " << i;
  for (std::size_t i = 0; i < full.rows.size(); ++i)
    EXPECT_NEAR(binom.rows[i].meta_loss, full.rows[i].meta_loss, 1e-6);
}

TEST(MetaTrain, BinomEndsBelowTruncAtDepthOne) {
  double binom_loss = 0.0, trunc_loss = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    MetaTrainConfig cfg = quadratic_config(EstimatorKind::Binom, 1);
    cfg.iterations = 10000;
    cfg.seed = seed;
    binom_loss += meta_train(cfg).rows.back().meta_loss;
    cfg.estimator.kind = EstimatorKind::Trunc;
    trunc_loss += meta_train(cfg).rows.back().meta_loss;
  }
  EXPECT_LE(binom_loss / 5, trunc_loss / 5);
}

TEST(MetaTrain, DivergenceNamesTheIteration) {
  MetaTrainConfig cfg = quadratic_config(EstimatorKind::Full);
  cfg.beta = 1e306;
  try {
    meta_train(cfg);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("meta-iteration "), std::string::npos) << e.what();
  }
}

TEST(MetaTrain, ConfigValidation) {
  MetaTrainConfig cfg = quadratic_config(EstimatorKind::Binom, 6);
  EXPECT_THROW(meta_train(cfg), ConstraintError);
  cfg.estimator.truncation = 1;
  cfg.beta = 0.0;
  EXPECT_THROW(meta_train(cfg), ConstraintError);
  cfg.beta = 1e-3;
  EXPECT_THROW(meta_train(cfg, Vector(3)), ConstraintError);
  cfg.meta_batch = 0;
  EXPECT_THROW(meta_train(cfg), ConstraintError);
  EXPECT_THROW(meta_step(Vector(4), {}, quadratic_config(EstimatorKind::Full)), ConstraintError);
}

TEST(MetaTrain, CsvLayout) {
  std::vector<TrainRow> rows(2);
  rows[0] = {0, 1.5, 0.25, 1.0, 0.5, 0.125, 8};
  rows[1] = {1, 1.25, 0.2, std::nullopt, std::nullopt, std::nullopt, 16};
  std::ostringstream os;
  write_train_csv(os, rows);
  EXPECT_EQ(os.str(),
            "iter,meta_loss,grad_norm,err_fo,err_tr,err_bin,hvp_total\n"
            "0,1.5,0.25,1,0.5,0.125,8\n"
            "1,1.25,0.2,,,,16\n");
}

TEST(ErrorExperiment, DegenerateColumnsAndDominance) {
  ErrorExperimentConfig cfg;
  cfg.seed = 1;
  const auto table = run_error_experiment(cfg);
  ASSERT_EQ(table.per_batch.size(), 100u * 6);
  ASSERT_EQ(table.averaged.size(), 6u);
  for (const auto& row : table.per_batch) {
    if (row.truncation == 0) {
      EXPECT_EQ(row.err_tr, row.err_fo);
      EXPECT_EQ(row.err_bin, row.err_fo);
    }
    if (row.truncation == 5) EXPECT_LE(row.err_bin, 1e-10);
  }
  for (std::size_t l = 1; l <= 4; ++l) EXPECT_LT(table.averaged[l].err_bin, table.averaged[l].err_tr);
  EXPECT_LE(table.averaged[4].err_bin, 1e-2 * table.averaged[4].err_tr);
}

TEST(ErrorExperiment, SingleBatchAverageEqualsBatch) {
  ErrorExperimentConfig cfg;
  cfg.batches = 1;
  cfg.tasks.family = TaskFamily::Logistic;
  const auto table = run_error_experiment(cfg);
  std::ostringstream per, avg;
  write_error_batches_csv(per, table.per_batch);
  write_error_average_csv(avg, table.averaged);
  ASSERT_EQ(table.per_batch.size(), table.averaged.size());
  for (std::size_t i = 0; i < table.averaged.size(); ++i) {
    EXPECT_EQ(table.per_batch[i].err_bin, table.averaged[i].err_bin);
    EXPECT_EQ(table.per_batch[i].err_tr, table.averaged[i].err_tr);
  }
  EXPECT_EQ(per.str().substr(0, per.str().find('\n')), "batch,L,err_fo,err_tr,err_bin");
  EXPECT_EQ(avg.str().substr(0, avg.str().find('\n')), "L,err_fo,err_tr,err_bin");
}

TEST(CostTable, RowsAndCounters) {
  EstimatorConfig base;
  base.window = 3;
  const auto rows = cost_table({EstimatorKind::Full, EstimatorKind::FO, EstimatorKind::Binom,
                                EstimatorKind::BinomTrunc},
                               5, base);
  ASSERT_EQ(rows.size(), 1u + 1u + 6u + 4u);
  EXPECT_EQ(rows[0].truncation, 5u);
  EXPECT_EQ(rows[0].cost, (CostCounters{5, 5, 1}));
  EXPECT_EQ(rows[1].cost, (CostCounters{0, 0, 0}));
  EXPECT_EQ(rows[2].cost, (CostCounters{0, 0, 0}));
  EXPECT_EQ(rows[4].cost, (CostCounters{8, 2, 4}));
  EXPECT_EQ(rows.back().truncation, 3u);
  std::ostringstream os;
  write_cost_csv(os, {rows[4]});
  EXPECT_EQ(os.str(), "estimator,K,L,hvp_total,sequential_depth,peak_live_vectors\nbinom,5,2,8,2,4\n");
  EXPECT_THROW(cost_table({EstimatorKind::Reptile}, 5, base), ConstraintError);
}
