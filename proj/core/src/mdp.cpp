#include "cac/mdp.hpp"

#include "series_solve.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cac {

void TabularMdp::validate() const {
    require(num_states > 0 && num_actions > 0, "MDP must have at least one state and action");
    require(transition.size() == num_states * num_actions * num_states,
            "transition tensor has the wrong size");
    require(reward.rows() == num_states && reward.cols() == num_actions,
            "reward table has the wrong shape");
    require(discount > 0.0 && discount < 1.0, "discount must be in (0, 1)");
    require(r_max >= 0.0, "r_max must be nonnegative");
    for (std::size_t s = 0; s < num_states; ++s)
        for (std::size_t a = 0; a < num_actions; ++a) {
            const double* row = this->row(s, a);
            double sum = 0.0;
            for (std::size_t s2 = 0; s2 < num_states; ++s2) {
                require(std::isfinite(row[s2]) && row[s2] >= 0.0,
                        "transition row (" + std::to_string(s) + "," + std::to_string(a) +
                            ") has a negative or non-finite entry");
                sum += row[s2];
            }
            require(std::abs(sum - 1.0) <= kRowSumTol,
                    "transition row (" + std::to_string(s) + "," + std::to_string(a) +
                        ") sums to " + std::to_string(sum));
            require(std::abs(reward(s, a)) <= r_max + 1e-15,
                    "reward (" + std::to_string(s) + "," + std::to_string(a) +
                        ") exceeds r_max");
        }
}

namespace {

void check_policy_shape(const TabularMdp& mdp, const Policy& pi) {
    require(pi.num_states() == mdp.num_states && pi.num_actions() == mdp.num_actions,
            "policy shape does not match the MDP");
}

void check_distribution(const numvec& d, std::size_t n, const char* name) {
    require(d.size() == n, std::string(name) + " has the wrong length");
    double sum = 0.0;
    for (double x : d) {
        require(std::isfinite(x) && x >= 0.0,
                std::string(name) + " has a negative or non-finite entry");
        sum += x;
    }
    require(std::abs(sum - 1.0) <= 1e-9, std::string(name) + " does not sum to one");
}

} // namespace

namespace detail {

EvalResult policy_evaluation_kernel(const TabularMdp& mdp, const CompactKernel& kernel,
                                    const Policy& pi, double tol, std::size_t max_iter) {
    const std::size_t S = mdp.num_states;
    numvec v(S);
    auto apply = [&](const numvec& in, numvec& out) {
        policy_values(pi, in, v);
        kernel.apply_to_values(v, out);
    };
    auto sol = affine_series_solve(mdp.reward.data(), mdp.discount, tol, max_iter, apply,
                                   "policy evaluation");
    EvalResult res;
    res.q = Grid2(S, mdp.num_actions);
    res.q.data() = std::move(sol.x);
    res.v.resize(S);
    policy_values(pi, res.q.data(), res.v);
    res.residual = sol.residual;
    res.sweeps = sol.sweeps;
    return res;
}

numvec occupancy_measure_kernel(const TabularMdp& mdp, const CompactKernel& kernel,
                                const Policy& pi, const numvec& init, double tol,
                                std::size_t max_iter) {
    const PolicyKernel chain(kernel, pi);
    auto apply = [&](const numvec& in, numvec& out) { chain.apply_transpose(in, out); };
    auto sol = affine_series_solve(init, mdp.discount, tol, max_iter, apply,
                                   "occupancy measure");
    return std::move(sol.x);
}

HardViResult value_iteration_hard_kernel(const TabularMdp& mdp,
                                         const CompactKernel& kernel, double tol,
                                         std::size_t max_iter) {
    const std::size_t S = mdp.num_states, A = mdp.num_actions;
    numvec v(S);
    auto sweep = [&](const numvec& q, numvec& out) {
        for (std::size_t s = 0; s < S; ++s) {
            double m = q[s * A];
            for (std::size_t a = 1; a < A; ++a) m = std::max(m, q[s * A + a]);
            v[s] = m;
        }
        kernel.apply_to_values(v, out);
        for (std::size_t sa = 0; sa < S * A; ++sa)
            out[sa] = mdp.reward.data()[sa] + mdp.discount * out[sa];
    };
    auto sol = span_contraction_solve(numvec(S * A, 0.0), mdp.discount, tol, max_iter,
                                      sweep, nullptr, "value iteration");
    HardViResult res;
    res.q = Grid2(S, A);
    res.q.data() = std::move(sol.x);
    res.v.resize(S);
    Grid2 greedy(S, A, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
        std::size_t best = 0;
        for (std::size_t a = 1; a < A; ++a)
            if (res.q(s, a) > res.q(s, best)) best = a;
        greedy(s, best) = 1.0;
        res.v[s] = res.q(s, best);
    }
    res.greedy = Policy(std::move(greedy));
    res.sweeps = sol.sweeps;
    return res;
}

} // namespace detail

EvalResult policy_evaluation_exact(const TabularMdp& mdp, const Policy& pi, double tol,
                                   std::size_t max_iter) {
    check_policy_shape(mdp, pi);
    require(tol > 0.0 && max_iter > 0, "tol and max_iter must be positive");
    const detail::CompactKernel kernel(mdp);
    return detail::policy_evaluation_kernel(mdp, kernel, pi, tol, max_iter);
}

ATable advantage(const QTable& q, const VTable& v) {
    require(q.rows() == v.size(), "advantage: Q and V shapes disagree");
    ATable a(q.rows(), q.cols());
    for (std::size_t s = 0; s < q.rows(); ++s)
        for (std::size_t c = 0; c < q.cols(); ++c) a(s, c) = q(s, c) - v[s];
    return a;
}

numvec expected_advantage(const Policy& pi_new, const QTable& q, const VTable& v) {
    require(pi_new.probs.same_shape(q), "expected_advantage: policy and Q shapes disagree");
    require(q.rows() == v.size(), "expected_advantage: Q and V shapes disagree");
    numvec out(q.rows());
    for (std::size_t s = 0; s < q.rows(); ++s) {
        double acc = 0.0;
        for (std::size_t a = 0; a < q.cols(); ++a) acc += pi_new(s, a) * q(s, a);
        out[s] = acc - v[s];
    }
    return out;
}

numvec occupancy_measure(const TabularMdp& mdp, const Policy& pi, const numvec& init,
                         double tol, std::size_t max_iter) {
    check_policy_shape(mdp, pi);
    check_distribution(init, mdp.num_states, "init");
    const detail::CompactKernel kernel(mdp);
    return detail::occupancy_measure_kernel(mdp, kernel, pi, init, tol, max_iter);
}

double expected_return(const TabularMdp& mdp, const Policy& pi, const numvec& init,
                       double tol, std::size_t max_iter) {
    check_distribution(init, mdp.num_states, "init");
    auto eval = policy_evaluation_exact(mdp, pi, tol, max_iter);
    double j = 0.0;
    for (std::size_t s = 0; s < mdp.num_states; ++s) j += init[s] * eval.v[s];
    return j;
}

numvec uniform_init(const TabularMdp& mdp) {
    return numvec(mdp.num_states, 1.0 / double(mdp.num_states));
}

Policy mixture_occupancy_policy(const TabularMdp& mdp, const std::vector<Policy>& policies,
                                const numvec& weights, const numvec& init, double tol,
                                std::size_t max_iter) {
    require(!policies.empty(), "mixture_occupancy_policy: empty policy list");
    require(weights.size() == policies.size(),
            "mixture_occupancy_policy: one weight per policy required");
    check_distribution(weights, weights.size(), "weights");
    for (const auto& pi : policies) check_policy_shape(mdp, pi);

    const std::size_t S = mdp.num_states, A = mdp.num_actions;
    Grid2 num(S, A);   // sum_i w_i d_i(s) pi_i(a|s)
    numvec den(S, 0.0);
    for (std::size_t i = 0; i < policies.size(); ++i) {
        if (weights[i] == 0.0) continue;
        numvec d = occupancy_measure(mdp, policies[i], init, tol, max_iter);
        for (std::size_t s = 0; s < S; ++s) {
            den[s] += weights[i] * d[s];
            for (std::size_t a = 0; a < A; ++a)
                num(s, a) += weights[i] * d[s] * policies[i](s, a);
        }
    }
    Grid2 probs(S, A);
    for (std::size_t s = 0; s < S; ++s) {
        if (den[s] < kMixtureFloor) {
            for (std::size_t a = 0; a < A; ++a) probs(s, a) = 1.0 / double(A);
            continue;
        }
        double sum = 0.0;
        for (std::size_t a = 0; a < A; ++a) sum += num(s, a);
        for (std::size_t a = 0; a < A; ++a) probs(s, a) = num(s, a) / sum;
    }
    return Policy(std::move(probs));
}

HardViResult value_iteration_hard(const TabularMdp& mdp, double tol, std::size_t max_iter) {
    const detail::CompactKernel kernel(mdp);
    return detail::value_iteration_hard_kernel(mdp, kernel, tol, max_iter);
}

} // namespace cac
