#include "metagrad/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "metagrad/errors.hpp"

namespace metagrad {

uint128 binomial(std::size_t n, std::size_t k) {
  if (n > kMaxBoundSteps) {
    throw ConstraintError("binomial: n=" + std::to_string(n) + " exceeds the overflow guard " +
                          std::to_string(kMaxBoundSteps));
  }
  if (k > n) return 0;
  k = std::min(k, n - k);
  uint128 c = 1;
  // c·(n−k+i)/i stays integral at every step.
  for (std::size_t i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

namespace {

double binom_d(std::size_t n, std::size_t k) { return static_cast<double>(binomial(n, k)); }

void check_common(const BoundInputs& in) {
  require(in.k_steps >= 1, "bounds: K must be at least 1");
  require(in.k_steps <= kMaxBoundSteps, "bounds: K exceeds the overflow guard K <= 60");
  require(in.truncation <= in.k_steps, "bounds: need 0 <= L <= K");
  require(in.alpha > 0.0, "bounds: alpha must be positive");
  require(in.smoothness > 0.0, "bounds: H must be positive");
  require(in.g_norm >= 0.0, "bounds: ||g|| must be nonnegative");
}

void check_step_size(const BoundInputs& in) {
  if (in.alpha * in.smoothness > 1.0) {
    throw ConstraintError("bounds: step size violates 0 < α ≤ 1/H (alpha*H = " +
                          fmt::format("{}", in.alpha * in.smoothness) + ")");
  }
}

}  // namespace

BoundValues bounds_smooth(const BoundInputs& in) {
  check_common(in);
  const double ah = in.alpha * in.smoothness;
  const auto big_k = static_cast<double>(in.k_steps);
  const auto l = static_cast<double>(in.truncation);
  BoundValues out;
  out.e_fo = (std::pow(1.0 + ah, big_k) - 1.0) * in.g_norm;
  out.e_tr = (std::pow(1.0 + ah, big_k) - std::pow(1.0 + ah, l)) * in.g_norm;
  double tail = 0.0;
  for (std::size_t j = in.truncation + 1; j <= in.k_steps; ++j)
    tail += binom_d(in.k_steps, j) * std::pow(ah, static_cast<double>(j));
  out.e_bin = tail * in.g_norm;
  return out;
}

BoundValues bounds_convex(const BoundInputs& in) {
  check_common(in);
  check_step_size(in);
  const double ah = in.alpha * in.smoothness;
  BoundValues out;
  out.e_fo = (1.0 - std::pow(1.0 - ah, static_cast<double>(in.k_steps))) * in.g_norm;
  out.e_tr = (1.0 - std::pow(1.0 - ah, static_cast<double>(in.k_steps - in.truncation))) * in.g_norm;
  out.e_bin = binom_d(in.k_steps, in.truncation + 1) *
              std::pow(ah, static_cast<double>(in.truncation + 1)) * in.g_norm;
  // At L = 0 the estimator is FO itself, so the (tighter here) FO bound applies too.
  if (in.truncation == 0) out.e_bin = std::min(out.e_bin, out.e_fo);
  return out;
}

BoundValues bounds_strongcvx(const BoundInputs& in) {
  check_common(in);
  check_step_size(in);
  const std::size_t k = in.k_steps;
  const std::size_t l = in.truncation;
  const std::size_t m = in.window;
  require(in.strong_convexity >= 0.0, "bounds: h must be nonnegative");
  require(in.strong_convexity <= in.smoothness, "bounds: need h <= H");
  if (m > l || (l < k && m > k - l) || m > k) {
    throw ConstraintError("bounds: strong-convexity window violates M ≤ min{L, K−L} (M=" +
                          std::to_string(m) + ", L=" + std::to_string(l) +
                          ", K=" + std::to_string(k) + ")");
  }
  const double ah = in.alpha * in.smoothness;
  const double contraction = 1.0 - in.alpha * in.strong_convexity;
  const double tail_factor = std::pow(contraction, static_cast<double>(m));
  const auto pw = [](double base, std::size_t e) { return std::pow(base, static_cast<double>(e)); };

  BoundValues out;
  out.e_fo = std::max(pw(1.0 + ah, k - m) * tail_factor - 1.0, 1.0 - pw(1.0 - ah, k)) * in.g_norm;
  out.e_tr = (pw(1.0 + ah, k - m) - pw(1.0 + ah, l - m)) * tail_factor * in.g_norm;

  double head = 0.0;
  for (std::size_t j = 1; j <= m; ++j) head += binom_d(k - j, l) * pw(contraction, j - 1);
  double tail = 0.0;
  for (std::size_t j = l + 1; j + m <= k; ++j) tail += binom_d(k - m, j) * pw(ah, j);
  out.e_bin = (pw(ah, l + 1) * head + tail_factor * tail) * in.g_norm;
  if (l == 0) out.e_bin = std::min(out.e_bin, out.e_fo);
  return out;
}

bool bound_ordering_check(const BoundInputs& in) {
  if (in.truncation < 1 || in.truncation >= in.k_steps) return false;
  const auto b = bounds_smooth(in);
  return b.e_bin < b.e_tr && b.e_tr < b.e_fo;
}

std::pair<double, double> lemma_partial_sum_identity(std::size_t k_steps, std::size_t truncation,
                                                     double gamma) {
  require(truncation < k_steps, "lemma_partial_sum_identity: need 0 <= L <= K-1");
  double lhs = 0.0;
  for (std::size_t l = truncation + 1; l <= k_steps; ++l)
    lhs += binom_d(k_steps, l) * std::pow(gamma, static_cast<double>(l));
  double inner = 0.0;
  for (std::size_t l = 1; l <= k_steps - truncation; ++l)
    inner += binom_d(k_steps - l, truncation) * std::pow(1.0 + gamma, static_cast<double>(l - 1));
  const double rhs = std::pow(gamma, static_cast<double>(truncation + 1)) * inner;
  return {lhs, rhs};
}

bool lemma_binom_bound_check(std::size_t k_steps, std::size_t truncation) {
  require(truncation >= 1 && truncation <= k_steps, "lemma_binom_bound_check: need 1 <= L <= K");
  const double bound = std::pow(std::numbers::e * static_cast<double>(k_steps) /
                                    static_cast<double>(truncation),
                                static_cast<double>(truncation));
  return binom_d(k_steps, truncation) < bound;
}

bool binom_sum_collapse_check(std::size_t k_steps, std::size_t truncation) {
  require(truncation < k_steps, "binom_sum_collapse_check: need 0 <= L < K");
  uint128 sum = 0;
  for (std::size_t l = 1; l <= k_steps - truncation; ++l) sum += binomial(k_steps - l, truncation);
  return sum == binomial(k_steps, truncation + 1);
}

std::vector<BoundRow> bound_sweep(int theorem, const BoundInputs& base) {
  require(theorem >= 2 && theorem <= 4, "bound_sweep: theorem must be 2, 3 or 4");
  std::vector<std::size_t> truncations;
  if (theorem == 4) {
    // Admissible L satisfy M ≤ L ≤ K−M; L = K is appended as the exact endpoint.
    const std::size_t m = base.window;
    if (2 * m > base.k_steps) {
      throw ConstraintError("bound_sweep: no L satisfies M ≤ min{L, K−L} (M=" + std::to_string(m) +
                            ", K=" + std::to_string(base.k_steps) + ")");
    }
    for (std::size_t l = m; l + m <= base.k_steps; ++l) truncations.push_back(l);
    if (truncations.back() != base.k_steps) truncations.push_back(base.k_steps);
  } else {
    for (std::size_t l = 0; l <= base.k_steps; ++l) truncations.push_back(l);
  }
  std::vector<BoundRow> rows;
  for (const std::size_t l : truncations) {
    BoundRow row;
    row.theorem = theorem;
    row.inputs = base;
    row.inputs.truncation = l;
    if (theorem != 4) {
      row.inputs.window = 0;
      row.inputs.strong_convexity = 0.0;
    }
    switch (theorem) {
      case 2: row.values = bounds_smooth(row.inputs); break;
      case 3: row.values = bounds_convex(row.inputs); break;
      default: row.values = bounds_strongcvx(row.inputs); break;
    }
    row.ratio_tr = row.values.e_tr / row.values.e_fo;
    row.ratio_bin = row.values.e_bin / row.values.e_fo;
    rows.push_back(row);
  }
  return rows;
}

void write_bound_csv(std::ostream& os, const std::vector<BoundRow>& rows) {
  os << "theorem,K,L,M,alpha,H,h,e_fo,e_tr,e_bin,ratio_tr,ratio_bin\n";
  for (const auto& r : rows) {
    fmt::print(os, "{},{},{},{},{},{},{},{},{},{},{},{}\n", r.theorem, r.inputs.k_steps,
               r.inputs.truncation, r.inputs.window, r.inputs.alpha, r.inputs.smoothness,
               r.inputs.strong_convexity, r.values.e_fo, r.values.e_tr, r.values.e_bin,
               r.ratio_tr, r.ratio_bin);
  }
}

}  // namespace metagrad
