#pragma once

// Internal solver machinery shared by mdp.cpp, regularizers.cpp and the
// iteration loops.

#include "cac/mdp.hpp"
#include "cac/regularizers.hpp"
#include "cac/tables.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

namespace cac::detail {

inline double linf(const numvec& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

struct SolveResult {
    numvec x;
    double residual = 0.0;
    std::size_t sweeps = 0;
};

/** Solves x = c + gamma M x for a linear operator M with operator norm <= 1,
 * by accumulating the power series x = sum_t (gamma M)^t c.
 *
 * With x_n the partial sum and y = (gamma M)^{n+1} c, the fixed-point residual
 * of x_n is exactly y, and the tail-extrapolated candidate x_n + y/(1-gamma)
 * has residual gamma (M y - y)/(1-gamma). Once the chain has mixed, y aligns
 * with an invariant direction of M and the extrapolated residual collapses at
 * the mixing rate instead of gamma; this is what makes gamma ~ 1 affordable.
 * Every exit is confirmed against the explicitly recomputed residual, so the
 * returned bound is exact regardless of rounding drift in the accumulation.
 *
 * apply(in, out) must compute out = M in.
 */
template <class Apply>
SolveResult affine_series_solve(const numvec& c, double gamma, double tol,
                                std::size_t max_iter, Apply&& apply,
                                const char* what = "fixed-point iteration") {
    const std::size_t n = c.size();
    numvec x(n, 0.0);
    numvec y = c;     // residual of x, maintained by the loop invariant
    numvec z(n), buf(n);
    const double tail = gamma / (1.0 - gamma);

    auto true_residual = [&](const numvec& cand) {
        apply(cand, buf); // buf = M cand
        double r = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            r = std::max(r, std::abs(c[i] + gamma * buf[i] - cand[i]));
        return r;
    };

    double last = std::numeric_limits<double>::infinity();
    for (std::size_t sweep = 0; sweep < max_iter; ++sweep) {
        if (linf(y) <= tol) {
            double r = true_residual(x);
            if (r <= tol) return {std::move(x), r, sweep};
        }
        apply(y, z); // z = M y
        double pred = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            pred = std::max(pred, std::abs(tail * (z[i] - y[i])));
        if (pred <= tol) {
            numvec cand = x;
            for (std::size_t i = 0; i < n; ++i) cand[i] += y[i] * (1.0 + tail);
            double r = true_residual(cand);
            if (r <= tol) return {std::move(cand), r, sweep + 1};
        }
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += y[i];
            y[i] = gamma * z[i];
        }
        last = linf(y);
    }
    throw ConvergenceError(std::string(what) + " did not converge", last, max_iter);
}

/** Value-iteration loop for a monotone gamma-contraction T with the constant
 * shift property T(q + c) = Tq + gamma c. Stops via the span bound
 *     ||Tq + shift - q*||_inf <= gamma/(1-gamma) * span(Tq - q)/2,
 * so the result is within tol of the unique fixed point (not merely a small
 * one-step residual).
 *
 * sweep(in, out) must compute out = T in. residual_trace, when given,
 * receives ||Tq - q||_inf per sweep.
 */
template <class Sweep>
SolveResult span_contraction_solve(numvec q, double gamma, double tol,
                                   std::size_t max_iter, Sweep&& sweep,
                                   numvec* residual_trace = nullptr,
                                   const char* what = "value iteration") {
    const std::size_t n = q.size();
    numvec qn(n);
    const double tail = gamma / (1.0 - gamma);
    double err = std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < max_iter; ++it) {
        sweep(q, qn);
        double dmin = std::numeric_limits<double>::infinity();
        double dmax = -dmin;
        for (std::size_t i = 0; i < n; ++i) {
            double d = qn[i] - q[i];
            dmin = std::min(dmin, d);
            dmax = std::max(dmax, d);
        }
        if (residual_trace)
            residual_trace->push_back(std::max(std::abs(dmin), std::abs(dmax)));
        err = tail * 0.5 * (dmax - dmin);
        if (err <= tol) {
            const double shift = tail * 0.5 * (dmax + dmin);
            for (double& v : qn) v += shift;
            return {std::move(qn), err, it + 1};
        }
        std::swap(q, qn);
    }
    throw ConvergenceError(std::string(what) + " did not converge", err, max_iter);
}

/** Transition tensor compacted to per-(s,a) nonzero successor lists. Sparse
 * environments (the pendulum keeps at most four successors per pair) sweep
 * hundreds of times faster than the dense tensor. */
struct CompactKernel {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::vector<std::size_t> offset; // size S*A+1
    std::vector<std::uint32_t> succ;
    numvec prob;

    explicit CompactKernel(const TabularMdp& mdp) {
        num_states = mdp.num_states;
        num_actions = mdp.num_actions;
        offset.reserve(num_states * num_actions + 1);
        offset.push_back(0);
        for (std::size_t s = 0; s < num_states; ++s)
            for (std::size_t a = 0; a < num_actions; ++a) {
                const double* row = mdp.row(s, a);
                for (std::size_t s2 = 0; s2 < num_states; ++s2)
                    if (row[s2] != 0.0) {
                        succ.push_back(std::uint32_t(s2));
                        prob.push_back(row[s2]);
                    }
                offset.push_back(succ.size());
            }
    }

    /// out[(s,a)] = sum_{s'} P(s'|s,a) v[s']
    void apply_to_values(const numvec& v, numvec& out) const {
        for (std::size_t sa = 0; sa < num_states * num_actions; ++sa) {
            double acc = 0.0;
            for (std::size_t i = offset[sa]; i < offset[sa + 1]; ++i)
                acc += prob[i] * v[succ[i]];
            out[sa] = acc;
        }
    }
};

// Kernel-reusing variants of the public solvers. The iteration loops build
// one CompactKernel per run and pass it to every evaluation; the public
// one-shot entry points wrap these.
EvalResult policy_evaluation_kernel(const TabularMdp& mdp, const CompactKernel& kernel,
                                    const Policy& pi, double tol, std::size_t max_iter);
EvalResult soft_policy_evaluation_kernel(const TabularMdp& mdp,
                                         const CompactKernel& kernel,
                                         const Policy& pi_new, const Policy& pi_base,
                                         const RegParams& params, double tol,
                                         std::size_t max_iter);
numvec occupancy_measure_kernel(const TabularMdp& mdp, const CompactKernel& kernel,
                                const Policy& pi, const numvec& init, double tol,
                                std::size_t max_iter);
SoftViResult soft_value_iteration_kernel(const TabularMdp& mdp,
                                         const CompactKernel& kernel, double kappa,
                                         double tol, std::size_t max_iter,
                                         const std::optional<QTable>& q_init);
HardViResult value_iteration_hard_kernel(const TabularMdp& mdp,
                                         const CompactKernel& kernel, double tol,
                                         std::size_t max_iter);

/// V(s) = sum_a pi(a|s) q[(s,a)]
inline void policy_values(const Policy& pi, const numvec& q, numvec& v) {
    const std::size_t S = pi.num_states(), A = pi.num_actions();
    for (std::size_t s = 0; s < S; ++s) {
        double acc = 0.0;
        for (std::size_t a = 0; a < A; ++a) acc += pi(s, a) * q[s * A + a];
        v[s] = acc;
    }
}

/// State-to-state kernel of a fixed policy, compacted to nonzeros.
struct PolicyKernel {
    std::size_t num_states = 0;
    std::vector<std::size_t> offset; // size S+1
    std::vector<std::uint32_t> succ;
    numvec prob;

    PolicyKernel(const CompactKernel& kernel, const Policy& pi) {
        num_states = kernel.num_states;
        numvec row(num_states, 0.0);
        std::vector<std::uint32_t> touched;
        offset.reserve(num_states + 1);
        offset.push_back(0);
        for (std::size_t s = 0; s < num_states; ++s) {
            touched.clear();
            for (std::size_t a = 0; a < kernel.num_actions; ++a) {
                const double pa = pi(s, a);
                if (pa == 0.0) continue;
                const std::size_t sa = s * kernel.num_actions + a;
                for (std::size_t i = kernel.offset[sa]; i < kernel.offset[sa + 1]; ++i) {
                    const std::uint32_t s2 = kernel.succ[i];
                    if (row[s2] == 0.0) touched.push_back(s2);
                    row[s2] += pa * kernel.prob[i];
                }
            }
            std::sort(touched.begin(), touched.end());
            for (const std::uint32_t s2 : touched) {
                succ.push_back(s2);
                prob.push_back(row[s2]);
                row[s2] = 0.0;
            }
            offset.push_back(succ.size());
        }
    }

    /// out = P_pi^T in  (push flow forward along the chain)
    void apply_transpose(const numvec& in, numvec& out) const {
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t s = 0; s < num_states; ++s) {
            const double w = in[s];
            if (w == 0.0) continue;
            for (std::size_t i = offset[s]; i < offset[s + 1]; ++i)
                out[succ[i]] += w * prob[i];
        }
    }
};

} // namespace cac::detail
