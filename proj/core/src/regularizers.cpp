#include "cac/regularizers.hpp"

#include "cac/rng.hpp"
#include "series_solve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cac {

namespace {

void check_shapes(const Policy& a, const Policy& b) {
    require(a.probs.same_shape(b.probs), "policies have different shapes");
}

/// log(pi_base^(tau*beta) * exp(beta q)) for one entry, with 0^0 = 1.
inline double boltzmann_logit(double base_p, double q, double anchor_exp, double beta) {
    double logit = beta * q;
    if (anchor_exp > 0.0)
        logit += anchor_exp * std::log(base_p); // -inf when base_p == 0
    return logit;
}

} // namespace

numvec regularization_bonus(const Policy& pi_new, const Policy& pi_base,
                            const RegParams& params) {
    check_shapes(pi_new, pi_base);
    const std::size_t S = pi_new.num_states(), A = pi_new.num_actions();
    numvec out(S, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
        double acc = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
            const double p = pi_new(s, a);
            if (p <= kProbFloor) continue; // 0 log 0 = 0
            const double lp = std::log(p);
            acc -= params.kappa * p * lp;
            if (params.tau > 0.0) {
                const double b = pi_base(s, a);
                if (b <= kProbFloor)
                    throw InfiniteKlError("KL divergence is infinite at state " +
                                          std::to_string(s));
                acc -= params.tau * p * (lp - std::log(b));
            }
        }
        out[s] = acc;
    }
    return out;
}

Policy boltzmann_greedy(const Policy& pi_base, const QTable& q, const RegParams& params) {
    require(pi_base.probs.same_shape(q), "boltzmann_greedy: policy and Q shapes disagree");
    const std::size_t S = q.rows(), A = q.cols();
    const double e = params.anchor_exponent();
    const double beta = params.beta();
    Grid2 probs(S, A);
    for (std::size_t s = 0; s < S; ++s) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < A; ++a) {
            probs(s, a) = boltzmann_logit(pi_base(s, a), q(s, a), e, beta);
            mx = std::max(mx, probs(s, a));
        }
        if (!std::isfinite(mx))
            throw std::logic_error("boltzmann_greedy: empty row at state " +
                                   std::to_string(s));
        double sum = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
            probs(s, a) = std::exp(probs(s, a) - mx);
            sum += probs(s, a);
        }
        for (std::size_t a = 0; a < A; ++a) probs(s, a) /= sum;
    }
    return Policy(std::move(probs));
}

namespace detail {

EvalResult soft_policy_evaluation_kernel(const TabularMdp& mdp,
                                         const CompactKernel& kernel,
                                         const Policy& pi_new, const Policy& pi_base,
                                         const RegParams& params, double tol,
                                         std::size_t max_iter) {
    const numvec bonus = regularization_bonus(pi_new, pi_base, params);
    const std::size_t S = mdp.num_states, A = mdp.num_actions;

    // augmented reward R'(s,a) = R(s,a) + gamma (P I)(s,a)
    numvec c(S * A);
    kernel.apply_to_values(bonus, c);
    for (std::size_t sa = 0; sa < S * A; ++sa)
        c[sa] = mdp.reward.data()[sa] + mdp.discount * c[sa];

    numvec v(S);
    auto apply = [&](const numvec& in, numvec& out) {
        policy_values(pi_new, in, v);
        kernel.apply_to_values(v, out);
    };
    auto sol = affine_series_solve(c, mdp.discount, tol, max_iter, apply,
                                   "soft policy evaluation");
    EvalResult res;
    res.q = Grid2(S, A);
    res.q.data() = std::move(sol.x);
    res.v.resize(S);
    policy_values(pi_new, res.q.data(), res.v);
    res.residual = sol.residual;
    res.sweeps = sol.sweeps;
    return res;
}

} // namespace detail

EvalResult soft_policy_evaluation(const TabularMdp& mdp, const Policy& pi_new,
                                  const Policy& pi_base, const RegParams& params,
                                  double tol, std::size_t max_iter) {
    require(pi_new.num_states() == mdp.num_states &&
                pi_new.num_actions() == mdp.num_actions,
            "soft_policy_evaluation: policy shape does not match the MDP");
    check_shapes(pi_new, pi_base);
    require(tol > 0.0 && max_iter > 0, "tol and max_iter must be positive");
    const detail::CompactKernel kernel(mdp);
    return detail::soft_policy_evaluation_kernel(mdp, kernel, pi_new, pi_base, params,
                                                 tol, max_iter);
}

namespace {

/// kappa * log sum_a exp(q_row[a]/kappa), max-subtracted.
double soft_max_value(const double* q_row, std::size_t A, double kappa) {
    double mx = q_row[0];
    for (std::size_t a = 1; a < A; ++a) mx = std::max(mx, q_row[a]);
    double acc = 0.0;
    for (std::size_t a = 0; a < A; ++a) acc += std::exp((q_row[a] - mx) / kappa);
    return mx + kappa * std::log(acc);
}

} // namespace

QTable soft_bellman_sweep(const TabularMdp& mdp, double kappa, const QTable& q) {
    require(kappa > 0.0, "kappa must be positive");
    const detail::CompactKernel kernel(mdp);
    const std::size_t S = mdp.num_states, A = mdp.num_actions;
    numvec v(S);
    for (std::size_t s = 0; s < S; ++s) v[s] = soft_max_value(q.row(s), A, kappa);
    QTable out(S, A);
    kernel.apply_to_values(v, out.data());
    for (std::size_t sa = 0; sa < S * A; ++sa)
        out.data()[sa] = mdp.reward.data()[sa] + mdp.discount * out.data()[sa];
    return out;
}

namespace detail {

SoftViResult soft_value_iteration_kernel(const TabularMdp& mdp,
                                         const CompactKernel& kernel, double kappa,
                                         double tol, std::size_t max_iter,
                                         const std::optional<QTable>& q_init) {
    require(kappa > 0.0, "kappa must be positive");
    const std::size_t S = mdp.num_states, A = mdp.num_actions;
    numvec v(S);
    auto sweep = [&](const numvec& q, numvec& out) {
        for (std::size_t s = 0; s < S; ++s) v[s] = soft_max_value(q.data() + s * A, A, kappa);
        kernel.apply_to_values(v, out);
        for (std::size_t sa = 0; sa < S * A; ++sa)
            out[sa] = mdp.reward.data()[sa] + mdp.discount * out[sa];
    };
    numvec q0(S * A, 0.0);
    if (q_init) {
        require(q_init->rows() == S && q_init->cols() == A,
                "q_init shape does not match the MDP");
        q0 = q_init->data();
    }
    auto sol = detail::span_contraction_solve(std::move(q0), mdp.discount, tol, max_iter,
                                              sweep, nullptr, "soft value iteration");
    SoftViResult res;
    res.q = Grid2(S, A);
    res.q.data() = std::move(sol.x);
    res.sweeps = sol.sweeps;

    // pi*(a|s) = exp(Q*(s,a)/kappa) / sum_a exp(Q*(s,a)/kappa)
    Grid2 probs(S, A);
    for (std::size_t s = 0; s < S; ++s) {
        double mx = res.q(s, 0);
        for (std::size_t a = 1; a < A; ++a) mx = std::max(mx, res.q(s, a));
        double sum = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
            probs(s, a) = std::exp((res.q(s, a) - mx) / kappa);
            sum += probs(s, a);
        }
        for (std::size_t a = 0; a < A; ++a) probs(s, a) /= sum;
    }
    res.policy = Policy(std::move(probs));
    return res;
}

double z_exact(const Policy& pi_base, const QTable& q, const RegParams& params,
               std::size_t s) {
    require(pi_base.probs.same_shape(q), "z_exact: policy and Q shapes disagree");
    require(s < q.rows(), "z_exact: state out of range");
    const double e = params.anchor_exponent();
    const double beta = params.beta();
    double z = 0.0;
    for (std::size_t a = 0; a < q.cols(); ++a) {
        const double logit = boltzmann_logit(pi_base(s, a), q(s, a), e, beta);
        z += std::exp(logit);
    }
    return z;
}

double z_monte_carlo(const Policy& pi_base, const QTable& q, const RegParams& params,
                     std::size_t s, const Policy& proposal, std::size_t n,
                     std::uint64_t seed) {
    require(pi_base.probs.same_shape(q), "z_monte_carlo: policy and Q shapes disagree");
    check_shapes(pi_base, proposal);
    require(s < q.rows(), "z_monte_carlo: state out of range");
    require(n > 0, "z_monte_carlo: n must be positive");
    const double e = params.anchor_exponent();
    const double beta = params.beta();
    const std::size_t A = q.cols();

    Rng rng(seed);
    std::span<const double> row(proposal.probs.row(s), A);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t a = rng.categorical(row);
        const double pq = proposal(s, a);
        if (pq <= 0.0)
            throw std::invalid_argument("z_monte_carlo: sampled an action with zero "
                                        "proposal probability");
        acc += std::exp(boltzmann_logit(pi_base(s, a), q(s, a), e, beta)) / pq;
    }
    return acc / double(n);
}

} // namespace cac
