#pragma once

// Meta-gradient estimators over a step-indexed Hessian sequence {H^k} and a validation
// gradient g. The exact MAML meta-gradient is ∏_{k=0}^{K−1}(I − αH^k)·g, applied right to left.

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "metagrad/adaptation.hpp"
#include "metagrad/curvature.hpp"
#include "metagrad/linalg.hpp"
#include "metagrad/objectives.hpp"

namespace metagrad {

enum class EstimatorKind { Full, FO, Trunc, Binom, BinomBatched, BinomOracle, BinomTrunc, IMaml, Reptile };

EstimatorKind parse_estimator_kind(std::string_view name);
std::string_view to_string(EstimatorKind kind);

/// Serial is the reference path; Parallel runs independent HVPs of a stage on OpenMP threads.
/// Both produce bitwise-identical estimates.
enum class Execution { Serial, Parallel };

/// Logical cost of one estimate: total HVPs, the longest chain of HVPs that depend on each
/// other, and the number of d-vectors held live between stages.
struct CostCounters {
  std::size_t hvp_total = 0;
  std::size_t sequential_depth = 0;
  std::size_t peak_live_vectors = 0;

  friend bool operator==(const CostCounters&, const CostCounters&) = default;
};

struct MetaGradient {
  Vector estimate;
  EstimatorKind kind = EstimatorKind::Full;
  std::size_t truncation = 0;
  CostCounters cost;
  /// False only when an iterative solver (iMAML's CG) hit its iteration cap.
  bool converged = true;
};

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::Full;
  std::size_t truncation = 0;                 // L
  std::optional<std::size_t> window;          // C for BinomTrunc; defaults to K
  /// Replace α by α′ = Lα/K everywhere inside the binomial expansion (Binom, BinomBatched,
  /// BinomOracle, BinomTrunc). Off by default.
  bool rescale_alpha = false;
  double lambda = 1.0;                        // iMAML regularization
  double cg_tol = 1e-10;
  int cg_iters = 0;                           // 0 means "dimension of the problem"
  double reptile_eps = 1.0;
  Execution execution = Execution::Parallel;
};

MetaGradient full_meta_gradient(const StepHessians& hessians, double alpha, const Vector& g);

MetaGradient fo_meta_gradient(const Vector& g);

/// Keeps only the last L factors: ∏_{k=K−L}^{K−1}(I − αH^k)·g.
MetaGradient trunc_meta_gradient(const StepHessians& hessians, double alpha, const Vector& g,
                                 std::size_t truncation);

/// Truncated binomial expansion of order L, evaluated as a cascade of L stages with K−L+1
/// independent HVPs each. Counters: (L·(K−L+1), L, K−L+1); L = 0 short-circuits to g with
/// zero cost.
MetaGradient binom_meta_gradient(const StepHessians& hessians, double alpha, const Vector& g,
                                 std::size_t truncation, bool rescale_alpha = false,
                                 Execution execution = Execution::Parallel);

/// Same estimate with every stage written as a matrix update
/// V ← v_last·1ᵀ − α·(U·T + U), T = strict_lower_ones(K−L+1).
MetaGradient binom_meta_gradient_batched(const StepHessians& hessians, double alpha,
                                         const Vector& g, std::size_t truncation,
                                         bool rescale_alpha = false,
                                         Execution execution = Execution::Parallel);

struct OracleResult {
  Vector estimate;
  std::size_t terms = 0;  // index tuples enumerated, excluding the identity term
};

/// Brute-force enumeration of every product Π(−αH^{k_i})·g over strictly increasing tuples of
/// length 1..L. Deliberately unoptimized; limited to K ≤ 14.
OracleResult binom_oracle(const StepHessians& hessians, double alpha, const Vector& g,
                          std::size_t truncation);

inline constexpr std::size_t kOracleMaxSteps = 14;

/// Binomial expansion restricted to the last C steps (H^k treated as zero for k < K−C).
/// Only HVPs inside the window are executed and counted.
MetaGradient binomtrunc_meta_gradient(const StepHessians& hessians, double alpha,
                                      const Vector& g, std::size_t truncation, std::size_t window,
                                      bool rescale_alpha = false,
                                      Execution execution = Execution::Parallel);

/// [I + (1/λ)∇²ℓ^trn(φ)]⁻¹·g by conjugate gradients. Counters: one HVP per CG iteration.
/// Throws DivergenceError when CG detects a non-positive-definite system.
MetaGradient imaml_meta_gradient(const TaskObjective& train, const Vector& phi_final,
                                 const Vector& g, double lambda, double cg_tol, int cg_iters);

/// (1/T)·Σ(φ_t^K − θ). The ε step is applied by the meta-trainer.
Vector reptile_direction(const Vector& theta, const std::vector<Vector>& finals);

/// ‖estimate − exact‖₂
double estimation_error(const MetaGradient& estimate, const MetaGradient& exact);

/// Intermediate vectors of the binomial cascade. stage(s) holds the K−L+1 vectors produced
/// after s stages, indexed by k = L−s .. K−s; stage(0) is g repeated. at(s, K−s) equals
/// P^s·g, the last-s-factor product, which is what lets each stage reuse it as its seed.
struct BinomCascadeTrace {
  std::size_t steps = 0;
  std::size_t truncation = 0;
  std::vector<std::vector<Vector>> stages;

  const Vector& at(std::size_t stage, std::size_t k) const;
};

BinomCascadeTrace binom_cascade_trace(const StepHessians& hessians, double alpha, const Vector& g,
                                      std::size_t truncation);

/// Dispatches on config.kind. Reptile has no per-task meta-gradient and is rejected here.
MetaGradient estimate_meta_gradient(const EstimatorConfig& config, const Trajectory& trajectory,
                                    const Vector& g);

}  // namespace metagrad
