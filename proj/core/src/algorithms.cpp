#include "cac/algorithms.hpp"

#include "cac/rng.hpp"
#include "series_solve.hpp"

#include <algorithm>
#include <cmath>
#include <span>

namespace cac {

void AlgoConfig::validate() const {
    require(iterations >= 1, "iterations must be >= 1");
    require(noise_sigma >= 0.0, "noise_sigma must be nonnegative");
    require(eval_tol > 0.0, "eval_tol must be positive");
    require(epsilon >= 0.0, "epsilon must be nonnegative");
    require(sample_window >= 1, "sample_window must be >= 1");
    if (const auto* fixed = std::get_if<ZetaModeFixed>(&zeta_mode))
        require(fixed->zeta >= 0.0 && fixed->zeta <= 1.0, "fixed zeta must lie in [0, 1]");
    if (const auto* ad = std::get_if<ZetaModeAdaptive>(&zeta_mode)) ad->state.validate();
}

namespace {

void add_noise(QTable& q, double sigma, Rng& rng) {
    if (sigma == 0.0) return;
    for (double& v : q.data()) v += sigma * rng.gaussian();
}

double occupancy_return(const TabularMdp& mdp, const Policy& pi, const numvec& d) {
    double j = 0.0;
    for (std::size_t s = 0; s < mdp.num_states; ++s) {
        double r = 0.0;
        for (std::size_t a = 0; a < mdp.num_actions; ++a)
            r += pi(s, a) * mdp.reward(s, a);
        j += d[s] * r;
    }
    return j;
}

numvec empirical_state_weights(const TabularMdp& mdp, const Policy& pi,
                               std::size_t window, Rng& rng) {
    numvec counts(mdp.num_states, 0.0);
    std::size_t s = std::size_t(rng.uniform_below(mdp.num_states));
    for (std::size_t t = 0; t < window; ++t) {
        counts[s] += 1.0;
        const std::size_t a =
            rng.categorical(std::span<const double>(pi.probs.row(s), mdp.num_actions));
        s = rng.categorical(std::span<const double>(mdp.row(s, a), mdp.num_states));
    }
    return counts;
}

/// Deterministic argmax rows of Q, ties to the lowest action index.
Policy hard_greedy(const QTable& q) {
    Grid2 probs(q.rows(), q.cols(), 0.0);
    for (std::size_t s = 0; s < q.rows(); ++s) {
        std::size_t best = 0;
        for (std::size_t a = 1; a < q.cols(); ++a)
            if (q(s, a) > q(s, best)) best = a;
        probs(s, best) = 1.0;
    }
    return Policy(std::move(probs));
}

double sup_diff(const QTable& a, const QTable& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

} // namespace

RunResult run_cac(const TabularMdp& mdp, const AlgoConfig& config,
                  const StepObserver& observer, const GreedyHook& greedy_hook) {
    config.validate();
    Policy pi = config.init_policy
                    ? *config.init_policy
                    : Policy::uniform(mdp.num_states, mdp.num_actions);
    require(pi.num_states() == mdp.num_states && pi.num_actions() == mdp.num_actions,
            "init_policy shape does not match the MDP");

    // reference for dist_to_soft_optimal_policy: the Shannon-optimal softmax
    // when kappa > 0, the hard optimum for pure-KL runs
    Policy reference;
    if (config.reg.kappa > 0.0)
        reference =
            soft_value_iteration_oracle(mdp, config.reg.kappa, config.eval_tol).policy;
    else
        reference = value_iteration_hard(mdp, config.eval_tol).greedy;

    Rng rng(config.seed);
    const numvec init = uniform_init(mdp);

    // Q_0: the KL term vanishes against the policy itself at step 0
    QTable q = soft_policy_evaluation(mdp, pi, pi, config.reg, config.eval_tol,
                                      config.eval_max_iter)
                   .q;
    add_noise(q, config.noise_sigma, rng);
    numvec d = occupancy_measure(mdp, pi, init, config.eval_tol, config.eval_max_iter);
    Policy greedy_prev = pi;
    ZetaMovingState zstate;
    if (const auto* ad = std::get_if<ZetaModeAdaptive>(&config.zeta_mode))
        zstate = ad->state;

    RunResult out;
    out.records.reserve(config.iterations);
    numvec v(mdp.num_states);
    for (std::size_t k = 0; k < config.iterations; ++k) {
        Policy greedy = boltzmann_greedy(pi, q, config.reg);
        if (greedy_hook) greedy_hook(k, greedy);

        detail::policy_values(pi, q.data(), v);
        const double m =
            config.sampled_m
                ? estimate_M(greedy, q, v,
                             empirical_state_weights(mdp, pi, config.sample_window, rng))
                : estimate_M(greedy, q, v, d);

        double zeta = 0.0;
        if (const auto* fixed = std::get_if<ZetaModeFixed>(&config.zeta_mode)) {
            zeta = fixed->zeta;
        } else if (std::holds_alternative<ZetaModeAdaptive>(config.zeta_mode)) {
            auto upd = zeta_cac_update(zstate, m);
            zstate = upd.state;
            zeta = upd.zeta;
        } else {
            const auto& lb = std::get<ZetaModeExactLowerBound>(config.zeta_mode);
            const auto bound_k =
                tv_bound(config.reg, k + 1, config.epsilon, mdp.r_max, mdp.discount);
            zeta = zeta_exact(m, max_adv_diff(greedy, q, v), bound_k.c_k,
                              lb.horizon_const);
        }

        Policy deployed = interpolate(greedy, pi, zeta);
        const Policy& eval_target = config.evaluate_pre_interpolation ? greedy : deployed;
        const Policy& anchor =
            config.kl_anchor == KlAnchor::PreviousPolicy ? pi : eval_target;
        QTable q_next = soft_policy_evaluation(mdp, eval_target, anchor, config.reg,
                                               config.eval_tol, config.eval_max_iter)
                            .q;
        add_noise(q_next, config.noise_sigma, rng);

        const auto dist = policy_distance(greedy, greedy_prev);
        const auto bound_k =
            tv_bound(config.reg, k + 1, config.epsilon, mdp.r_max, mdp.discount);
        d = occupancy_measure(mdp, deployed, init, config.eval_tol, config.eval_max_iter);

        IterationRecord rec;
        rec.k = k;
        rec.return_J = occupancy_return(mdp, deployed, d);
        rec.zeta = zeta;
        rec.m = m;
        rec.max_tv_consecutive = dist.max_tv;
        rec.max_kl_consecutive = dist.max_kl;
        rec.tv_bound_theorem2 = bound_k.bound;
        rec.q_sup_norm_change = sup_diff(q_next, q);
        rec.dist_to_soft_optimal_policy = policy_distance(deployed, reference).max_tv;
        rec.hash_pi_prev = hash_table(pi.probs);
        rec.hash_pi_greedy = hash_table(greedy.probs);
        rec.hash_pi_deployed = hash_table(deployed.probs);

        if (observer)
            observer(StepInfo{k, pi, greedy, deployed, q, q_next, m, zeta});

        out.records.push_back(rec);
        pi = std::move(deployed);
        q = std::move(q_next);
        greedy_prev = std::move(greedy);
        if (config.stop_dist_tol > 0.0 &&
            rec.dist_to_soft_optimal_policy <= config.stop_dist_tol)
            break;
    }
    out.final_policy = std::move(pi);
    out.final_q = std::move(q);
    return out;
}

RunResult run_cvi(const TabularMdp& mdp, const RegParams& reg, std::size_t iterations,
                  double eval_tol) {
    require(reg.tau > 0.0, "run_cvi requires tau > 0");
    AlgoConfig config;
    config.reg = reg;
    config.iterations = iterations;
    config.zeta_mode = ZetaModeFixed{1.0};
    config.eval_tol = eval_tol;
    return run_cac(mdp, config);
}

RunResult run_spi_shannon(const TabularMdp& mdp, double kappa, std::size_t iterations,
                          double eval_tol) {
    require(kappa > 0.0, "run_spi_shannon requires kappa > 0");
    AlgoConfig config;
    config.reg = RegParams(kappa, 0.0);
    config.iterations = iterations;
    config.zeta_mode = ZetaModeFixed{1.0};
    config.eval_tol = eval_tol;
    return run_cac(mdp, config);
}

RunResult run_cpi_classic(const TabularMdp& mdp, const CpiConfig& config,
                          const StepObserver& observer, const GreedyHook& greedy_hook) {
    require(config.iterations >= 1, "iterations must be >= 1");
    require(!std::holds_alternative<ZetaModeAdaptive>(config.zeta_rule),
            "run_cpi_classic takes a fixed or exact-lower-bound zeta rule");
    if (const auto* fixed = std::get_if<ZetaModeFixed>(&config.zeta_rule))
        require(fixed->zeta >= 0.0 && fixed->zeta <= 1.0, "fixed zeta must lie in [0, 1]");

    const auto oracle = value_iteration_hard(mdp, std::min(config.eval_tol, 1e-10));
    Rng rng(config.seed);
    const numvec init = uniform_init(mdp);
    const double gamma = mdp.discount;

    Policy pi = Policy::uniform(mdp.num_states, mdp.num_actions);
    auto eval = policy_evaluation_exact(mdp, pi, config.eval_tol, config.eval_max_iter);
    add_noise(eval.q, config.noise_sigma, rng);
    numvec d = occupancy_measure(mdp, pi, init, config.eval_tol, config.eval_max_iter);
    Policy greedy_prev = pi;

    RunResult out;
    out.records.reserve(config.iterations);
    numvec v(mdp.num_states);
    for (std::size_t k = 0; k < config.iterations; ++k) {
        Policy greedy = hard_greedy(eval.q);
        if (greedy_hook) greedy_hook(k, greedy);

        detail::policy_values(pi, eval.q.data(), v);
        const double m = estimate_M(greedy, eval.q, v, d);

        double zeta = 0.0;
        if (const auto* fixed = std::get_if<ZetaModeFixed>(&config.zeta_rule)) {
            zeta = fixed->zeta;
        } else {
            // exact lower bound: the maximizer of the measured improvement
            // quadratic  dJ >= zeta M/(1-g) - zeta^2 g v delta/(1-g)^2
            const double v_tv = std::max(policy_distance(greedy, pi).max_tv,
                                         kZetaDenomFloor);
            const double delta = max_adv_diff(greedy, eval.q, v);
            const double c_k = (1.0 - gamma) / (4.0 * gamma * v_tv);
            zeta = zeta_exact(m, delta, c_k, 1.0);
        }

        Policy deployed = interpolate(greedy, pi, zeta);
        auto eval_next =
            policy_evaluation_exact(mdp, deployed, config.eval_tol, config.eval_max_iter);
        add_noise(eval_next.q, config.noise_sigma, rng);

        const auto dist = policy_distance(greedy, greedy_prev);
        d = occupancy_measure(mdp, deployed, init, config.eval_tol, config.eval_max_iter);

        IterationRecord rec;
        rec.k = k;
        rec.return_J = occupancy_return(mdp, deployed, d);
        rec.zeta = zeta;
        rec.m = m;
        rec.max_tv_consecutive = dist.max_tv;
        rec.max_kl_consecutive = dist.max_kl;
        rec.tv_bound_theorem2 = 1.0; // unregularized: only the trivial TV cap applies
        rec.q_sup_norm_change = sup_diff(eval_next.q, eval.q);
        rec.dist_to_soft_optimal_policy = policy_distance(deployed, oracle.greedy).max_tv;
        rec.hash_pi_prev = hash_table(pi.probs);
        rec.hash_pi_greedy = hash_table(greedy.probs);
        rec.hash_pi_deployed = hash_table(deployed.probs);

        if (observer)
            observer(StepInfo{k, pi, greedy, deployed, eval.q, eval_next.q, m, zeta});

        out.records.push_back(rec);
        pi = std::move(deployed);
        eval = std::move(eval_next);
        greedy_prev = std::move(greedy);
        if (config.stop_dist_tol > 0.0 &&
            rec.dist_to_soft_optimal_policy <= config.stop_dist_tol)
            break;
    }
    out.final_policy = std::move(pi);
    out.final_q = std::move(eval.q);
    return out;
}

AlgoConfig with_noisy_critic(AlgoConfig config, double sigma, std::uint64_t seed) {
    require(sigma >= 0.0, "sigma must be nonnegative");
    config.noise_sigma = sigma;
    config.seed = seed;
    return config;
}

} // namespace cac
