#include "metagrad/estimators.hpp"

#include <algorithm>
#include <string>

#include "metagrad/errors.hpp"
#include "metagrad/parallel.hpp"

namespace metagrad {

EstimatorKind parse_estimator_kind(std::string_view name) {
  if (name == "full") return EstimatorKind::Full;
  if (name == "fo") return EstimatorKind::FO;
  if (name == "trunc") return EstimatorKind::Trunc;
  if (name == "binom") return EstimatorKind::Binom;
  if (name == "binom-batched") return EstimatorKind::BinomBatched;
  if (name == "binom-oracle") return EstimatorKind::BinomOracle;
  if (name == "binomtrunc") return EstimatorKind::BinomTrunc;
  if (name == "imaml") return EstimatorKind::IMaml;
  if (name == "reptile") return EstimatorKind::Reptile;
  throw ConstraintError("unknown estimator: " + std::string(name));
}

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Full: return "full";
    case EstimatorKind::FO: return "fo";
    case EstimatorKind::Trunc: return "trunc";
    case EstimatorKind::Binom: return "binom";
    case EstimatorKind::BinomBatched: return "binom-batched";
    case EstimatorKind::BinomOracle: return "binom-oracle";
    case EstimatorKind::BinomTrunc: return "binomtrunc";
    case EstimatorKind::IMaml: return "imaml";
    case EstimatorKind::Reptile: return "reptile";
  }
  return "unknown";
}

namespace {

void check_inputs(const StepHessians& hessians, const Vector& g, const char* who) {
  require(g.size() == hessians.dimension(),
          std::string(who) + ": validation gradient dimension does not match the trajectory");
}

void check_truncation(std::size_t truncation, std::size_t k_steps, const char* who) {
  if (truncation > k_steps) {
    throw ConstraintError(std::string(who) + ": truncation L=" + std::to_string(truncation) +
                          " out of range 0..K=" + std::to_string(k_steps));
  }
}

void check_finite_step(const Vector& v, const char* who, std::size_t k) {
  if (!v.all_finite()) {
    throw DivergenceError(std::string(who) + ": non-finite value at step " + std::to_string(k));
  }
}

double expansion_alpha(double alpha, std::size_t truncation, std::size_t k_steps, bool rescale) {
  return rescale ? alpha * static_cast<double>(truncation) / static_cast<double>(k_steps) : alpha;
}

// Product of the factors (I − αH^k) for k = last−1 down to first, applied to g.
Vector apply_product(const StepHessians& hessians, double alpha, Vector v, std::size_t first,
                     std::size_t last, const char* who) {
  for (std::size_t k = last; k-- > first;) {
    v.axpy(-alpha, hessians.hvp(k, v));
    check_finite_step(v, who, k);
  }
  return v;
}

struct CascadeOptions {
  std::size_t window_start = 0;   // H^k treated as zero for k < window_start
  bool keep_stages = false;
  bool parallel = true;
};

struct CascadeResult {
  Vector estimate;
  std::size_t hvps = 0;
  std::size_t active_stages = 0;
  std::vector<std::vector<Vector>> stages;
};

// Stage s (0-based) turns the K−L+1 vectors w_s(k), k = L−s .. K−s, into w_{s+1}(k) for
// k = L−s−1 .. K−s−1 where
//   w_{s+1}(k) = w_{s+1}(k+1) − α·H^k·w_s(k+1),   seeded by w_{s+1}(K−s) = w_s(K−s) = P^s·g.
// w_s(k) collects every expansion term of order ≤ s built from factors with index ≥ k, so
// w_L(0) is the order-L truncated expansion. The HVPs of one stage are independent; the
// running sum is accumulated in descending-k order.
CascadeResult run_cascade(const StepHessians& hessians, double alpha, const Vector& g,
                          std::size_t truncation, const CascadeOptions& options) {
  const std::size_t k_steps = hessians.steps();
  const std::size_t width = k_steps - truncation + 1;
  CascadeResult result;
  std::vector<Vector> current(width, g);
  if (options.keep_stages) result.stages.push_back(current);

  std::vector<Vector> hvps(width);
  std::vector<char> active(width);
  for (std::size_t s = 0; s < truncation; ++s) {
    const std::size_t first_k = truncation - s - 1;
    std::size_t executed = 0;
    for (std::size_t j = 0; j < width; ++j) {
      active[j] = first_k + j >= options.window_start;
      executed += active[j] ? 1 : 0;
    }
    detail::for_each_index(width, options.parallel, [&](std::size_t j) {
      if (active[j]) hvps[j] = hessians.hvp(first_k + j, current[j]);
    });
    result.hvps += executed;
    if (executed > 0) ++result.active_stages;

    std::vector<Vector> next(width);
    Vector running = current.back();
    for (std::size_t j = width; j-- > 0;) {
      if (active[j]) running.axpy(-alpha, hvps[j]);
      if (!running.all_finite()) {
        throw DivergenceError("binomial cascade: non-finite value at stage " + std::to_string(s) +
                              ", index " + std::to_string(first_k + j));
      }
      next[j] = running;
    }
    current = std::move(next);
    if (options.keep_stages) result.stages.push_back(current);
  }
  result.estimate = current.front();
  return result;
}

MetaGradient make_result(Vector estimate, EstimatorKind kind, std::size_t truncation,
                         CostCounters cost) {
  MetaGradient mg;
  mg.estimate = std::move(estimate);
  mg.kind = kind;
  mg.truncation = truncation;
  mg.cost = cost;
  return mg;
}

}  // namespace

MetaGradient full_meta_gradient(const StepHessians& hessians, double alpha, const Vector& g) {
  check_inputs(hessians, g, "full_meta_gradient");
  const std::size_t k_steps = hessians.steps();
  Vector v = apply_product(hessians, alpha, g, 0, k_steps, "full_meta_gradient");
  return make_result(std::move(v), EstimatorKind::Full, k_steps, {k_steps, k_steps, 1});
}

MetaGradient fo_meta_gradient(const Vector& g) {
  return make_result(g, EstimatorKind::FO, 0, {0, 0, 0});
}

MetaGradient trunc_meta_gradient(const StepHessians& hessians, double alpha, const Vector& g,
                                 std::size_t truncation) {
  check_inputs(hessians, g, "trunc_meta_gradient");
  const std::size_t k_steps = hessians.steps();
  check_truncation(truncation, k_steps, "trunc_meta_gradient");
  Vector v = apply_product(hessians, alpha, g, k_steps - truncation, k_steps, "trunc_meta_gradient");
  return make_result(std::move(v), EstimatorKind::Trunc, truncation, {truncation, truncation, 1});
}

MetaGradient binom_meta_gradient(const StepHessians& hessians, double alpha, const Vector& g,
                                 std::size_t truncation, bool rescale_alpha, Execution execution) {
  check_inputs(hessians, g, "binom_meta_gradient");
  const std::size_t k_steps = hessians.steps();
  check_truncation(truncation, k_steps, "binom_meta_gradient");
  if (truncation == 0) return make_result(g, EstimatorKind::Binom, 0, {0, 0, 0});
  const double a = expansion_alpha(alpha, truncation, k_steps, rescale_alpha);
  auto run = run_cascade(hessians, a, g, truncation,
                         {.window_start = 0, .keep_stages = false,
                          .parallel = execution == Execution::Parallel});
  const std::size_t width = k_steps - truncation + 1;
  return make_result(std::move(run.estimate), EstimatorKind::Binom, truncation,
                     {truncation * width, truncation, width});
}

MetaGradient binom_meta_gradient_batched(const StepHessians& hessians, double alpha,
                                         const Vector& g, std::size_t truncation,
                                         bool rescale_alpha, Execution execution) {
  check_inputs(hessians, g, "binom_meta_gradient_batched");
  const std::size_t k_steps = hessians.steps();
  check_truncation(truncation, k_steps, "binom_meta_gradient_batched");
  if (truncation == 0) return make_result(g, EstimatorKind::BinomBatched, 0, {0, 0, 0});
  const double a = expansion_alpha(alpha, truncation, k_steps, rescale_alpha);
  const std::size_t width = k_steps - truncation + 1;
  const Matrix lower = strict_lower_ones(width);

  Matrix v = outer_ones(g, width);
  Matrix u(g.size(), width);
  for (std::size_t s = 0; s < truncation; ++s) {
    const std::size_t first_k = truncation - s - 1;
    std::vector<Vector> cols(width);
    detail::for_each_index(width, execution == Execution::Parallel, [&](std::size_t j) {
      cols[j] = hessians.hvp(first_k + j, v.column(j));
    });
    for (std::size_t j = 0; j < width; ++j) u.set_column(j, cols[j]);
    // Column j needs the HVPs of columns j..width−1: the strict lower-triangular sum plus the
    // diagonal term.
    Matrix suffix = matmul(u, lower);
    suffix += u;
    v = outer_ones(v.column(width - 1), width) - a * suffix;
    if (!v.all_finite()) {
      throw DivergenceError("binom_meta_gradient_batched: non-finite value at stage " +
                            std::to_string(s));
    }
  }
  return make_result(v.column(0), EstimatorKind::BinomBatched, truncation,
                     {truncation * width, truncation, width});
}

OracleResult binom_oracle(const StepHessians& hessians, double alpha, const Vector& g,
                          std::size_t truncation) {
  check_inputs(hessians, g, "binom_oracle");
  const std::size_t k_steps = hessians.steps();
  check_truncation(truncation, k_steps, "binom_oracle");
  if (k_steps > kOracleMaxSteps) {
    throw ConstraintError("binom_oracle: K=" + std::to_string(k_steps) +
                          " exceeds the enumeration guard K <= " +
                          std::to_string(kOracleMaxSteps));
  }
  OracleResult result{g, 0};
  std::vector<std::size_t> tuple;
  // Enumerate k_1 < k_2 < … < k_l; each complete tuple contributes
  // (−αH^{k_1})(−αH^{k_2})…(−αH^{k_l})·g, applied from the right.
  auto visit = [&](auto&& self, std::size_t start) -> void {
    if (!tuple.empty()) {
      Vector term = g;
      for (std::size_t i = tuple.size(); i-- > 0;) term = -alpha * hessians.hvp(tuple[i], term);
      result.estimate += term;
      ++result.terms;
    }
    if (tuple.size() == truncation) return;
    for (std::size_t k = start; k < k_steps; ++k) {
      tuple.push_back(k);
      self(self, k + 1);
      tuple.pop_back();
    }
  };
  visit(visit, 0);
  return result;
}

MetaGradient binomtrunc_meta_gradient(const StepHessians& hessians, double alpha,
                                      const Vector& g, std::size_t truncation, std::size_t window,
                                      bool rescale_alpha, Execution execution) {
  check_inputs(hessians, g, "binomtrunc_meta_gradient");
  const std::size_t k_steps = hessians.steps();
  if (!(truncation <= window && window <= k_steps)) {
    throw ConstraintError("binomtrunc_meta_gradient: need L <= C <= K (got L=" +
                          std::to_string(truncation) + ", C=" + std::to_string(window) +
                          ", K=" + std::to_string(k_steps) + ")");
  }
  if (truncation == 0) return make_result(g, EstimatorKind::BinomTrunc, 0, {0, 0, 0});
  const double a = expansion_alpha(alpha, truncation, k_steps, rescale_alpha);
  auto run = run_cascade(hessians, a, g, truncation,
                         {.window_start = k_steps - window, .keep_stages = false,
                          .parallel = execution == Execution::Parallel});
  return make_result(std::move(run.estimate), EstimatorKind::BinomTrunc, truncation,
                     {run.hvps, run.active_stages, k_steps - truncation + 1});
}

MetaGradient imaml_meta_gradient(const TaskObjective& train, const Vector& phi_final,
                                 const Vector& g, double lambda, double cg_tol, int cg_iters) {
  require(lambda > 0.0, "imaml_meta_gradient: lambda must be positive");
  require(phi_final.size() == train.dimension() && g.size() == train.dimension(),
          "imaml_meta_gradient: dimension mismatch");
  const int iters = cg_iters > 0 ? cg_iters : static_cast<int>(g.size());
  const double inv_lambda = 1.0 / lambda;
  const auto cg = conjugate_gradient(
      [&](const Vector& v) {
        Vector out = v;
        out.axpy(inv_lambda, train.hvp(phi_final, v));
        return out;
      },
      g, cg_tol, iters);
  if (cg.breakdown) {
    throw DivergenceError(
        "imaml_meta_gradient: CG breakdown, I + H/lambda is not positive definite at phi^K");
  }
  if (!cg.x.all_finite()) throw DivergenceError("imaml_meta_gradient: non-finite CG iterate");
  const auto n = static_cast<std::size_t>(cg.iterations);
  MetaGradient mg = make_result(cg.x, EstimatorKind::IMaml, 0, {n, n, 4});
  mg.converged = cg.converged;
  return mg;
}

Vector reptile_direction(const Vector& theta, const std::vector<Vector>& finals) {
  require(!finals.empty(), "reptile_direction: need at least one adapted parameter");
  Vector sum(theta.size());
  for (const auto& phi : finals) {
    require(phi.size() == theta.size(), "reptile_direction: dimension mismatch");
    sum += phi;
    sum -= theta;
  }
  return (1.0 / static_cast<double>(finals.size())) * std::move(sum);
}

double estimation_error(const MetaGradient& estimate, const MetaGradient& exact) {
  require(estimate.estimate.size() == exact.estimate.size(),
          "estimation_error: dimension mismatch");
  return distance(estimate.estimate, exact.estimate);
}

const Vector& BinomCascadeTrace::at(std::size_t stage, std::size_t k) const {
  require(stage < stages.size(), "BinomCascadeTrace: stage out of range");
  require(k + stage >= truncation && k + stage <= steps,
          "BinomCascadeTrace: index outside the stage window");
  return stages[stage][k + stage - truncation];
}

BinomCascadeTrace binom_cascade_trace(const StepHessians& hessians, double alpha, const Vector& g,
                                      std::size_t truncation) {
  check_inputs(hessians, g, "binom_cascade_trace");
  check_truncation(truncation, hessians.steps(), "binom_cascade_trace");
  auto run = run_cascade(hessians, alpha, g, truncation,
                         {.window_start = 0, .keep_stages = true, .parallel = false});
  return {hessians.steps(), truncation, std::move(run.stages)};
}

MetaGradient estimate_meta_gradient(const EstimatorConfig& config, const Trajectory& trajectory,
                                    const Vector& g) {
  const double alpha = trajectory.step_size();
  const std::size_t l_trunc = config.truncation;
  switch (config.kind) {
    case EstimatorKind::Full: return full_meta_gradient(trajectory, alpha, g);
    case EstimatorKind::FO: return fo_meta_gradient(g);
    case EstimatorKind::Trunc: return trunc_meta_gradient(trajectory, alpha, g, l_trunc);
    case EstimatorKind::Binom:
      return binom_meta_gradient(trajectory, alpha, g, l_trunc, config.rescale_alpha,
                                 config.execution);
    case EstimatorKind::BinomBatched:
      return binom_meta_gradient_batched(trajectory, alpha, g, l_trunc, config.rescale_alpha,
                                         config.execution);
    case EstimatorKind::BinomOracle: {
      check_truncation(l_trunc, trajectory.steps(), "binom_oracle");
      const double a = expansion_alpha(alpha, l_trunc, trajectory.steps(), config.rescale_alpha);
      auto oracle = binom_oracle(trajectory, a, g, l_trunc);
      // Every tuple of length l costs l chained HVPs.
      std::size_t hvps = 0;
      std::vector<std::size_t> row(l_trunc + 1, 0);  // binomial coefficients C(K, l)
      row[0] = 1;
      for (std::size_t n = 1; n <= trajectory.steps(); ++n)
        for (std::size_t l = std::min(n, l_trunc); l >= 1; --l) row[l] += row[l - 1];
      for (std::size_t l = 1; l <= l_trunc; ++l) hvps += l * row[l];
      return make_result(std::move(oracle.estimate), EstimatorKind::BinomOracle, l_trunc,
                         {hvps, l_trunc, l_trunc == 0 ? 0u : 2u});
    }
    case EstimatorKind::BinomTrunc:
      return binomtrunc_meta_gradient(trajectory, alpha, g, l_trunc,
                                      config.window.value_or(trajectory.steps()),
                                      config.rescale_alpha, config.execution);
    case EstimatorKind::IMaml:
      return imaml_meta_gradient(trajectory.objective(), trajectory.final_iterate(), g,
                                 config.lambda, config.cg_tol, config.cg_iters);
    case EstimatorKind::Reptile:
      throw ConstraintError("reptile has no per-task meta-gradient; use reptile_direction");
  }
  throw ConstraintError("unknown estimator kind");
}

}  // namespace metagrad
