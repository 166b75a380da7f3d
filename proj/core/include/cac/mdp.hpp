#pragma once

#include "cac/tables.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace cac {

/** Finite MDP with a dense transition tensor P[s][a][s'], a reward table
 * R[s][a] bounded by r_max, and discount 0 < gamma < 1.
 *
 * Instances are immutable after construction; every operation in this header
 * is a pure function and safe to call concurrently. */
struct TabularMdp {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    numvec transition; // flat [s][a][s'], every row sums to one
    Grid2 reward;      // [s][a]
    double discount = 0.0;
    double r_max = 0.0;

    double p(std::size_t s, std::size_t a, std::size_t s2) const {
        return transition[(s * num_actions + a) * num_states + s2];
    }
    double& p(std::size_t s, std::size_t a, std::size_t s2) {
        return transition[(s * num_actions + a) * num_states + s2];
    }
    const double* row(std::size_t s, std::size_t a) const {
        return transition.data() + (s * num_actions + a) * num_states;
    }

    /// Checks row sums, reward bounds and discount range; throws
    /// std::invalid_argument when violated.
    void validate() const;
};

struct EvalResult {
    QTable q;
    VTable v;
    double residual = 0.0;     // sup-norm of Q - (R + gamma P E_pi Q)
    std::size_t sweeps = 0;
};

inline constexpr double kDefaultEvalTol = 1e-10;
inline constexpr std::size_t kDefaultMaxIter = 100000;

/** Exact policy evaluation by fixed-point iteration of the Bellman operator,
 * accumulated as a power series with a certified tail extrapolation. The
 * returned Q satisfies sup|Q - (R + gamma P E_pi Q)| <= tol.
 *
 * Throws ConvergenceError (carrying the last residual) if max_iter sweeps do
 * not reach tol. */
EvalResult policy_evaluation_exact(const TabularMdp& mdp, const Policy& pi,
                                   double tol = kDefaultEvalTol,
                                   std::size_t max_iter = kDefaultMaxIter);

/// A(s,a) = Q(s,a) - V(s). Throws on shape mismatch.
ATable advantage(const QTable& q, const VTable& v);

/// Expected advantage of pi_new against (q, v): sum_a pi_new(a|s) Q(s,a) - V(s).
numvec expected_advantage(const Policy& pi_new, const QTable& q, const VTable& v);

/** Unnormalized discounted occupancy d(s) = sum_t gamma^t P(s_t = s); the
 * total mass is 1/(1-gamma). `init` must be a distribution over states. */
numvec occupancy_measure(const TabularMdp& mdp, const Policy& pi, const numvec& init,
                         double tol = kDefaultEvalTol,
                         std::size_t max_iter = kDefaultMaxIter);

/// J = sum_s init(s) V^pi(s) under unregularized evaluation.
double expected_return(const TabularMdp& mdp, const Policy& pi, const numvec& init,
                       double tol = kDefaultEvalTol,
                       std::size_t max_iter = kDefaultMaxIter);

/// Uniform distribution over the MDP's states.
numvec uniform_init(const TabularMdp& mdp);

/// Floor under the mixture denominator; states below it fall back to uniform.
inline constexpr double kMixtureFloor = 1e-12;

/** Policy whose state-action occupancy equals the weight-mixed occupancies of
 * the given policies: pi'(a|s) = sum_i w_i d_i(s) pi_i(a|s) / sum_i w_i d_i(s).
 * Where the denominator is below kMixtureFloor the row is uniform. */
Policy mixture_occupancy_policy(const TabularMdp& mdp, const std::vector<Policy>& policies,
                                const numvec& weights, const numvec& init,
                                double tol = 1e-12,
                                std::size_t max_iter = kDefaultMaxIter);

struct HardViResult {
    QTable q;
    VTable v;
    Policy greedy;     // deterministic argmax rows, ties to the lowest index
    std::size_t sweeps = 0;
};

/** Hard-max value iteration with span-based stopping: the returned tables are
 * within tol of the optimal fixed point in sup-norm. */
HardViResult value_iteration_hard(const TabularMdp& mdp, double tol = 1e-10,
                                  std::size_t max_iter = kDefaultMaxIter);

} // namespace cac
