#pragma once

#include "cac/mdp.hpp"
#include "cac/tables.hpp"

#include <cstdint>
#include <optional>

namespace cac {

/** Shannon/KL regularization weights. kappa scales the entropy bonus, tau the
 * KL penalty against the anchor policy; kappa + tau must be positive.
 *
 * Derived coefficients: alpha = kappa/(kappa+tau), beta = 1/(kappa+tau), so
 * alpha = kappa*beta and alpha + tau*beta = 1 hold by construction. The
 * Boltzmann greedy step raises the anchor policy to anchor_exponent() =
 * tau*beta, the KL share of the total weight: that exponent is what the
 * maximizer of E_pi[Q] + I works out to, and it is what makes the fixed point
 * the Shannon-optimal softmax(Q* / kappa). */
struct RegParams {
    double kappa = 0.0;
    double tau = 0.0;

    RegParams(double kappa_, double tau_) : kappa(kappa_), tau(tau_) {
        require(kappa >= 0.0 && tau >= 0.0, "kappa and tau must be nonnegative");
        require(kappa + tau > 0.0, "kappa + tau must be positive");
    }

    double alpha() const noexcept { return kappa / (kappa + tau); }
    double beta() const noexcept { return 1.0 / (kappa + tau); }
    double anchor_exponent() const noexcept { return tau / (kappa + tau); }
};

/** Per-state regularization bonus
 *   I(s) = sum_a pi_new(a|s) [ -kappa log pi_new(a|s)
 *                              - tau (log pi_new(a|s) - log pi_base(a|s)) ],
 * with the convention 0 log 0 = 0. Throws InfiniteKlError when tau > 0 and
 * pi_new puts mass where pi_base has none. */
numvec regularization_bonus(const Policy& pi_new, const Policy& pi_base,
                            const RegParams& params);

/** Row-wise maximizer of E_pi[Q] + I_{pi_base}^{pi}:
 *   pi(a|s) proportional to pi_base(a|s)^(tau*beta) exp(beta Q(s,a)),
 * computed in log space with per-row max subtraction. */
Policy boltzmann_greedy(const Policy& pi_base, const QTable& q, const RegParams& params);

/** Entropy/KL-regularized policy evaluation: the fixed point of
 *   Q <- R(s,a) + gamma P [ E_{pi_new} Q + I_{pi_base}^{pi_new} ](s,a)
 * with sup-norm residual <= tol. Since the bonus does not depend on Q this is
 * unregularized evaluation of the bonus-augmented reward.
 *
 * q_init seeds the fixed-point iteration (zeros by default); any seed yields
 * the same certified fixed point. */
EvalResult soft_policy_evaluation(const TabularMdp& mdp, const Policy& pi_new,
                                  const Policy& pi_base, const RegParams& params,
                                  double tol = kDefaultEvalTol,
                                  std::size_t max_iter = kDefaultMaxIter);

struct SoftViResult {
    QTable q;
    Policy policy;   // softmax(Q*/kappa) rows
    std::size_t sweeps = 0;
};

/// One Shannon-soft Bellman backup: out = R + gamma P [kappa logsumexp(Q/kappa)].
QTable soft_bellman_sweep(const TabularMdp& mdp, double kappa, const QTable& q);

/** Shannon-regularized optimal values by soft value iteration. The returned Q
 * is within tol of the unique fixed point in sup-norm (span-based stopping),
 * so runs from different initializations agree to 2*tol. */
SoftViResult soft_value_iteration_oracle(const TabularMdp& mdp, double kappa,
                                         double tol = 1e-10,
                                         std::size_t max_iter = kDefaultMaxIter,
                                         const std::optional<QTable>& q_init = std::nullopt);

/// Normalization factor of the Boltzmann greedy row:
/// Z(s) = sum_a pi_base(a|s)^(tau*beta) exp(beta Q(s,a)).
double z_exact(const Policy& pi_base, const QTable& q, const RegParams& params,
               std::size_t s);

/** Importance-sampled estimate of Z(s) with n draws from `proposal`:
 *   (1/n) sum_i pi_base(a_i|s)^(tau*beta) exp(beta Q(s,a_i)) / proposal(a_i|s).
 * Deterministic given the seed. The proposal must be positive wherever the
 * integrand is. */
double z_monte_carlo(const Policy& pi_base, const QTable& q, const RegParams& params,
                     std::size_t s, const Policy& proposal, std::size_t n,
                     std::uint64_t seed);

} // namespace cac
