#pragma once

// Closed-form upper bounds on ‖exact − estimate‖ for the FO, Trunc and Binom estimators under
// three curvature assumptions, together with the combinatorial identities behind them.

#include <cstddef>
#include <iosfwd>
#include <utility>
#include <vector>

namespace metagrad {

/// Binomial coefficients are exact up to this K.
inline constexpr std::size_t kMaxBoundSteps = 60;

__extension__ typedef unsigned __int128 uint128;

/// Exact C(n, k) in 128-bit integer arithmetic; 0 when k > n. Requires n ≤ kMaxBoundSteps.
uint128 binomial(std::size_t n, std::size_t k);

struct BoundInputs {
  std::size_t k_steps = 5;   // K
  std::size_t truncation = 0;  // L
  std::size_t window = 0;    // M, strongly convex tail length
  double alpha = 0.25;
  double smoothness = 1.0;   // H
  double strong_convexity = 0.0;  // h
  double g_norm = 1.0;
};

struct BoundValues {
  double e_fo = 0.0;
  double e_tr = 0.0;
  double e_bin = 0.0;
};

/// H-Lipschitz gradient only:
///   e_FO = [(1+αH)^K − 1]‖g‖, e_Tr = [(1+αH)^K − (1+αH)^L]‖g‖, e_Bin = Σ_{l>L} C(K,l)(αH)^l ‖g‖.
BoundValues bounds_smooth(const BoundInputs& in);

/// Convex training loss with αH ≤ 1:
///   e_FO = [1 − (1−αH)^K]‖g‖, e_Tr = [1 − (1−αH)^{K−L}]‖g‖, e_Bin = C(K,L+1)(αH)^{L+1}‖g‖.
/// At L = 0 Binom coincides with FO and e_Bin is reported as min{C(K,1)αH‖g‖, e_FO}.
BoundValues bounds_convex(const BoundInputs& in);

/// h-strongly convex around the last M iterates, αH ≤ 1, h ≤ H, M ≤ min{L, K−L}. The L = K
/// endpoint is accepted for any M ≤ K because both the Trunc and Binom estimators are exact
/// there (their bounds evaluate to 0).
BoundValues bounds_strongcvx(const BoundInputs& in);

/// e_Bin < e_Tr < e_FO under bounds_smooth. Returns false outside 1 ≤ L < K, where no strict
/// ordering is claimed.
bool bound_ordering_check(const BoundInputs& in);

/// Both sides of Σ_{l=L+1}^K C(K,l)γ^l = γ^{L+1}·Σ_{l=1}^{K−L} C(K−l,L)(1+γ)^{l−1}.
std::pair<double, double> lemma_partial_sum_identity(std::size_t k_steps, std::size_t truncation,
                                                     double gamma);

/// C(K,L) < (eK/L)^L for 1 ≤ L ≤ K.
bool lemma_binom_bound_check(std::size_t k_steps, std::size_t truncation);

/// Σ_{l=1}^{K−L} C(K−l, L) == C(K, L+1), in exact integer arithmetic.
bool binom_sum_collapse_check(std::size_t k_steps, std::size_t truncation);

struct BoundRow {
  int theorem = 2;
  BoundInputs inputs;
  BoundValues values;
  double ratio_tr = 1.0;
  double ratio_bin = 1.0;
};

/// One row per L: 0..K for theorems 2 and 3; for theorem 4 the admissible M..K−M plus the exact
/// endpoint L = K. Ratios are normalized by e_FO.
std::vector<BoundRow> bound_sweep(int theorem, const BoundInputs& base);

/// theorem,K,L,M,alpha,H,h,e_fo,e_tr,e_bin,ratio_tr,ratio_bin
void write_bound_csv(std::ostream& os, const std::vector<BoundRow>& rows);

}  // namespace metagrad
