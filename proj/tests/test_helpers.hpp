#pragma once

// Shared fixtures and independent oracles for the test suites. Everything in
// here deliberately avoids the library's solver paths: oracles are brute
// force, truncated series, or closed form.

#include "cac/envs.hpp"
#include "cac/mdp.hpp"
#include "cac/rng.hpp"
#include "cac/tables.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace cactest {

using namespace cac;

inline TabularMdp single_state_mdp(std::size_t num_actions, const numvec& rewards,
                                   double gamma) {
    TabularMdp mdp;
    mdp.num_states = 1;
    mdp.num_actions = num_actions;
    mdp.discount = gamma;
    mdp.transition.assign(num_actions, 1.0);
    mdp.reward = Grid2(1, num_actions);
    mdp.r_max = 0.0;
    for (std::size_t a = 0; a < num_actions; ++a) {
        mdp.reward(0, a) = rewards[a];
        mdp.r_max = std::max(mdp.r_max, std::abs(rewards[a]));
    }
    mdp.validate();
    return mdp;
}

/// Two states, one action, deterministic swap.
inline TabularMdp two_state_cycle(double gamma) {
    TabularMdp mdp;
    mdp.num_states = 2;
    mdp.num_actions = 1;
    mdp.discount = gamma;
    mdp.r_max = 0.0;
    mdp.transition.assign(4, 0.0);
    mdp.p(0, 0, 1) = 1.0;
    mdp.p(1, 0, 0) = 1.0;
    mdp.reward = Grid2(2, 1, 0.0);
    mdp.validate();
    return mdp;
}

inline Policy random_policy(std::size_t num_states, std::size_t num_actions,
                            std::uint64_t seed) {
    Rng rng(seed);
    Grid2 probs(num_states, num_actions);
    for (std::size_t s = 0; s < num_states; ++s) {
        const auto row = rng.dirichlet_flat(num_actions);
        for (std::size_t a = 0; a < num_actions; ++a) probs(s, a) = row[a];
    }
    return Policy(std::move(probs));
}

inline QTable random_q(std::size_t num_states, std::size_t num_actions,
                       std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    QTable q(num_states, num_actions);
    for (double& v : q.data()) v = rng.uniform(-scale, scale);
    return q;
}

struct McEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
};

/// Monte-Carlo value of `policy` from a fixed start state: truncated rollouts
/// of the given length, averaged over episodes.
inline McEstimate mc_rollout_value(const TabularMdp& mdp, const Policy& pi,
                                   std::size_t start, std::size_t episodes,
                                   std::size_t horizon, std::uint64_t seed) {
    Rng rng(seed);
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t e = 0; e < episodes; ++e) {
        double ret = 0.0, disc = 1.0;
        std::size_t s = start;
        for (std::size_t t = 0; t < horizon; ++t) {
            const std::size_t a = rng.categorical(
                std::span<const double>(pi.probs.row(s), mdp.num_actions));
            ret += disc * mdp.reward(s, a);
            disc *= mdp.discount;
            s = rng.categorical(std::span<const double>(mdp.row(s, a), mdp.num_states));
        }
        sum += ret;
        sumsq += ret * ret;
    }
    McEstimate est;
    est.mean = sum / double(episodes);
    const double sample_var =
        (sumsq - sum * sum / double(episodes)) / double(episodes - 1);
    est.stderr_ = std::sqrt(std::max(sample_var, 0.0) / double(episodes));
    return est;
}

/// Occupancy by direct truncated power series d = sum_t gamma^t (P_pi^T)^t init.
inline numvec occupancy_series_oracle(const TabularMdp& mdp, const Policy& pi,
                                      const numvec& init, std::size_t horizon) {
    const std::size_t S = mdp.num_states;
    numvec cur = init, next(S), total(S, 0.0);
    double disc = 1.0;
    for (std::size_t t = 0; t <= horizon; ++t) {
        for (std::size_t s = 0; s < S; ++s) total[s] += disc * cur[s];
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < mdp.num_actions; ++a) {
                const double w = cur[s] * pi(s, a);
                if (w == 0.0) continue;
                const double* row = mdp.row(s, a);
                for (std::size_t s2 = 0; s2 < S; ++s2) next[s2] += w * row[s2];
            }
        std::swap(cur, next);
        disc *= mdp.discount;
    }
    return total;
}

inline double linf_diff(const numvec& a, const numvec& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/// Residual sup|Q - (R + gamma P E_pi Q)| recomputed from the dense tensor.
inline double eval_residual_oracle(const TabularMdp& mdp, const Policy& pi,
                                   const QTable& q) {
    const std::size_t S = mdp.num_states, A = mdp.num_actions;
    numvec v(S, 0.0);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) v[s] += pi(s, a) * q(s, a);
    double r = 0.0;
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            double backup = mdp.reward(s, a);
            const double* row = mdp.row(s, a);
            for (std::size_t s2 = 0; s2 < S; ++s2)
                backup += mdp.discount * row[s2] * v[s2];
            r = std::max(r, std::abs(q(s, a) - backup));
        }
    return r;
}

} // namespace cactest
