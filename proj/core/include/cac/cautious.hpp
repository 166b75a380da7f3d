#pragma once

#include "cac/mdp.hpp"
#include "cac/regularizers.hpp"
#include "cac/tables.hpp"

#include <utility>

namespace cac {

/// pi_tilde = zeta * pi_new + (1 - zeta) * pi_old, rowwise. Convexity keeps
/// the rows on the simplex; zeta outside [0, 1] throws.
Policy interpolate(const Policy& pi_new, const Policy& pi_old, double zeta);

/// Largest spread of the expected advantage over state pairs:
/// max_{s,s'} |A(s) - A(s')| with A = expected_advantage(pi_new, q, v).
double max_adv_diff(const Policy& pi_new, const QTable& q, const VTable& v);

/** Total-variation bound between consecutive entropy-regularized policies at
 * iteration k (1-based):
 *   B_k = epsilon * beta * (1 - gamma^k) / (1 - gamma)
 *   C_k = r_max * beta * sum_{j=0}^{k-1} alpha^j gamma^(k-j-1)
 *   bound = sqrt(4 B_k + 2 C_k)
 */
struct TvBound {
    double b_k = 0.0;
    double c_k = 0.0;
    double bound = 0.0;
};

TvBound tv_bound(const RegParams& params, std::size_t k, double epsilon, double r_max,
                 double gamma);

/// Floor under the zeta denominators; below it the clip limit applies.
inline constexpr double kZetaDenomFloor = 1e-12;

/** Guaranteed-improvement interpolation coefficient,
 *   zeta* = clip(2 * horizon_const * c_k * m / delta, 0, 1),
 * with the horizon constant removed by default. When delta is below the floor
 * the limit of the clip applies: 1 if m > 0, else 0. */
double zeta_exact(double m, double delta, double c_k, double horizon_const = 1.0);

enum class NegativeRule {
    SetToM,         // on m <= 0, the running estimate becomes m itself
    SetToConstant,  // on m <= 0, the running estimate becomes a fixed c <= 0
    Disabled,       // ablation preset: no special casing of m <= 0
};

/** Moving-average state behind the adaptive zeta: exponential averages of the
 * improvement estimate M and of its scale, at decay rates nu_a >=
 * nu_maxdiff. Updated functionally: callers pass the old state in and keep
 * the returned one. */
struct ZetaMovingState {
    double a_tilde = 0.0;
    double a_maxdiff = 0.0;
    double nu_a = 0.01;
    double nu_maxdiff = 0.001;
    NegativeRule negative_rule = NegativeRule::SetToM;
    double negative_constant = 0.0; // used by SetToConstant; must be <= 0

    void validate() const;
};

struct ZetaUpdate {
    ZetaMovingState state;
    double zeta = 0.0;
};

/** One adaptive update:
 *   a_tilde    <- m (or c) if m <= 0, else (1-nu_a) a_tilde + nu_a m
 *   a_maxdiff  <- (1-nu_maxdiff) a_maxdiff + nu_maxdiff m   (always, signed)
 *   zeta        = clip(a_tilde / |a_maxdiff|, 0, 1)
 * With the default rules zeta is exactly 0 whenever m <= 0. */
ZetaUpdate zeta_cac_update(const ZetaMovingState& state, double m);

/** Improvement estimate M = sum_s w(s) * [sum_a pi_next(a|s) Q(s,a) - V(s)]
 * with w normalized to sum one. Exact mode passes w proportional to the
 * occupancy of the previous policy; sampled mode passes empirical state
 * frequencies. Throws on all-zero weights. */
double estimate_M(const Policy& pi_next, const QTable& q_prev, const VTable& v_prev,
                  const numvec& state_weights);

struct PolicyDistance {
    double max_tv = 0.0;
    double max_kl = 0.0;   // +infinity when kl_finite is false
    bool kl_finite = true;
};

/// Worst-state total variation (half L1) and KL divergence between policies,
/// with the usual zero conventions; an infinite KL is flagged, not thrown.
PolicyDistance policy_distance(const Policy& p, const Policy& q);

} // namespace cac
