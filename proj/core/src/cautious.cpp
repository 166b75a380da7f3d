#include "cac/cautious.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cac {

Policy interpolate(const Policy& pi_new, const Policy& pi_old, double zeta) {
    require(pi_new.probs.same_shape(pi_old.probs),
            "interpolate: policies have different shapes");
    require(zeta >= 0.0 && zeta <= 1.0, "interpolate: zeta must lie in [0, 1]");
    Grid2 probs(pi_new.num_states(), pi_new.num_actions());
    for (std::size_t i = 0; i < probs.size(); ++i)
        probs.data()[i] =
            zeta * pi_new.probs.data()[i] + (1.0 - zeta) * pi_old.probs.data()[i];
    return Policy(std::move(probs));
}

double max_adv_diff(const Policy& pi_new, const QTable& q, const VTable& v) {
    const numvec adv = expected_advantage(pi_new, q, v);
    const auto [lo, hi] = std::minmax_element(adv.begin(), adv.end());
    return *hi - *lo;
}

TvBound tv_bound(const RegParams& params, std::size_t k, double epsilon, double r_max,
                 double gamma) {
    require(k >= 1, "tv_bound: k must be a positive iteration index");
    require(epsilon >= 0.0 && r_max >= 0.0, "tv_bound: epsilon and r_max nonnegative");
    require(gamma > 0.0 && gamma < 1.0, "tv_bound: gamma in (0, 1)");
    const double beta = params.beta();
    const double alpha = params.alpha();
    TvBound out;
    out.b_k = epsilon * beta * (1.0 - std::pow(gamma, double(k))) / (1.0 - gamma);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j)
        sum += std::pow(alpha, double(j)) * std::pow(gamma, double(k - j - 1));
    out.c_k = r_max * beta * sum;
    out.bound = std::sqrt(4.0 * out.b_k + 2.0 * out.c_k);
    return out;
}

double zeta_exact(double m, double delta, double c_k, double horizon_const) {
    require(delta >= 0.0, "zeta_exact: delta must be nonnegative");
    if (delta < kZetaDenomFloor) return m > 0.0 ? 1.0 : 0.0;
    return std::clamp(2.0 * horizon_const * c_k * m / delta, 0.0, 1.0);
}

void ZetaMovingState::validate() const {
    require(nu_a >= 0.0 && nu_a <= 1.0 && nu_maxdiff >= 0.0 && nu_maxdiff <= 1.0,
            "decay rates must lie in [0, 1]");
    require(nu_maxdiff <= nu_a, "nu_maxdiff must not exceed nu_a");
    if (negative_rule == NegativeRule::SetToConstant)
        require(negative_constant <= 0.0,
                "SetToConstant requires a nonpositive constant");
}

ZetaUpdate zeta_cac_update(const ZetaMovingState& state, double m) {
    state.validate();
    ZetaUpdate out;
    out.state = state;
    if (m <= 0.0 && state.negative_rule != NegativeRule::Disabled) {
        out.state.a_tilde =
            state.negative_rule == NegativeRule::SetToM ? m : state.negative_constant;
    } else {
        out.state.a_tilde = (1.0 - state.nu_a) * state.a_tilde + state.nu_a * m;
    }
    // the scale tracker takes the signed m unconditionally; the absolute
    // value appears only in the ratio
    out.state.a_maxdiff =
        (1.0 - state.nu_maxdiff) * state.a_maxdiff + state.nu_maxdiff * m;

    const double denom = std::abs(out.state.a_maxdiff);
    if (denom < kZetaDenomFloor)
        out.zeta = out.state.a_tilde > 0.0 ? 1.0 : 0.0;
    else
        out.zeta = std::clamp(out.state.a_tilde / denom, 0.0, 1.0);
    return out;
}

double estimate_M(const Policy& pi_next, const QTable& q_prev, const VTable& v_prev,
                  const numvec& state_weights) {
    require(state_weights.size() == q_prev.rows(),
            "estimate_M: one weight per state required");
    double wsum = 0.0;
    for (double w : state_weights) {
        require(std::isfinite(w) && w >= 0.0,
                "estimate_M: weights must be finite and nonnegative");
        wsum += w;
    }
    require(wsum > 0.0, "estimate_M: weights sum to zero");
    const numvec adv = expected_advantage(pi_next, q_prev, v_prev);
    double m = 0.0;
    for (std::size_t s = 0; s < adv.size(); ++s) m += state_weights[s] * adv[s];
    return m / wsum;
}

PolicyDistance policy_distance(const Policy& p, const Policy& q) {
    require(p.probs.same_shape(q.probs), "policy_distance: shapes disagree");
    PolicyDistance out;
    for (std::size_t s = 0; s < p.num_states(); ++s) {
        double l1 = 0.0;
        double kl = 0.0;
        bool finite = true;
        for (std::size_t a = 0; a < p.num_actions(); ++a) {
            const double pa = p(s, a), qa = q(s, a);
            l1 += std::abs(pa - qa);
            if (pa <= kProbFloor) continue;
            if (qa <= kProbFloor) {
                finite = false;
                continue;
            }
            kl += pa * (std::log(pa) - std::log(qa));
        }
        out.max_tv = std::max(out.max_tv, 0.5 * l1);
        if (!finite) {
            out.kl_finite = false;
            out.max_kl = std::numeric_limits<double>::infinity();
        } else if (out.kl_finite) {
            out.max_kl = std::max(out.max_kl, kl);
        }
    }
    return out;
}

} // namespace cac
