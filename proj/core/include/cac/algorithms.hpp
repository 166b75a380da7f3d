#pragma once

#include "cac/cautious.hpp"
#include "cac/mdp.hpp"
#include "cac/regularizers.hpp"
#include "cac/tables.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

namespace cac {

struct ZetaModeFixed {
    double zeta = 1.0;
};
struct ZetaModeAdaptive {
    ZetaMovingState state;
};
struct ZetaModeExactLowerBound {
    double horizon_const = 1.0;
};

using ZetaMode = std::variant<ZetaModeFixed, ZetaModeAdaptive, ZetaModeExactLowerBound>;

/// Which policy anchors the KL term of the evaluation step. PreviousPolicy
/// follows the update rule literally (anchor = the policy deployed before the
/// step); SelfConsistent anchors at the evaluated policy itself, which makes
/// the per-step improvement guarantee exact.
enum class KlAnchor {
    PreviousPolicy,
    SelfConsistent,
};

struct AlgoConfig {
    RegParams reg{0.2, 0.1};
    std::size_t iterations = 100;
    ZetaMode zeta_mode = ZetaModeFixed{1.0};
    double eval_tol = kDefaultEvalTol;
    std::size_t eval_max_iter = kDefaultMaxIter;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    std::optional<Policy> init_policy;      // uniform when absent

    double epsilon = 0.0;                   // uniform error bound fed to tv_bound
    bool evaluate_pre_interpolation = false;
    KlAnchor kl_anchor = KlAnchor::PreviousPolicy;

    bool sampled_m = false;                 // empirical state weights for M
    std::size_t sample_window = 1000;       // on-policy window length

    double stop_dist_tol = 0.0;             // > 0: stop once dist_to_opt falls below

    void validate() const;
};

/** Per-iteration trace. max_kl_consecutive may be +infinity (disjoint
 * supports under hard-greedy interpolation); every other field is finite. */
struct IterationRecord {
    std::size_t k = 0;
    double return_J = 0.0;
    double zeta = 0.0;
    double m = 0.0;
    double max_tv_consecutive = 0.0;
    double max_kl_consecutive = 0.0;
    double tv_bound_theorem2 = 0.0;
    double q_sup_norm_change = 0.0;
    double dist_to_soft_optimal_policy = 0.0;
    std::uint64_t hash_pi_prev = 0;
    std::uint64_t hash_pi_greedy = 0;
    std::uint64_t hash_pi_deployed = 0;

    friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

struct RunResult {
    std::vector<IterationRecord> records;
    Policy final_policy;
    QTable final_q;
};

/// Everything a step observer may inspect; references stay valid only during
/// the callback.
struct StepInfo {
    std::size_t k;
    const Policy& pi_prev;
    const Policy& pi_greedy;
    const Policy& pi_deployed;
    const QTable& q_prev;
    const QTable& q_next;
    double m;
    double zeta;
};

using StepObserver = std::function<void(const StepInfo&)>;

/// Test hook: may mutate the greedy policy right after the improvement step.
using GreedyHook = std::function<void(std::size_t k, Policy& pi_greedy)>;

/** The full interpolated iteration. Per step: Boltzmann-greedy improvement
 * against the deployed policy, improvement estimate M over the deployed
 * policy's occupancy, zeta per zeta_mode, convex interpolation, then soft
 * evaluation of the deployed (or, with evaluate_pre_interpolation, the
 * greedy) policy. Deterministic given (config, seed). */
RunResult run_cac(const TabularMdp& mdp, const AlgoConfig& config,
                  const StepObserver& observer = {}, const GreedyHook& greedy_hook = {});

/// Entropy+KL-regularized value iteration: run_cac with zeta fixed to one.
RunResult run_cvi(const TabularMdp& mdp, const RegParams& reg, std::size_t iterations,
                  double eval_tol = kDefaultEvalTol);

/// Shannon-only soft policy iteration: pi <- softmax(Q/kappa) alternated with
/// entropy-regularized evaluation.
RunResult run_spi_shannon(const TabularMdp& mdp, double kappa, std::size_t iterations,
                          double eval_tol = kDefaultEvalTol);

struct CpiConfig {
    std::size_t iterations = 100;
    ZetaMode zeta_rule = ZetaModeExactLowerBound{}; // fixed or exact lower bound
    double eval_tol = kDefaultEvalTol;
    std::size_t eval_max_iter = kDefaultMaxIter;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    double stop_dist_tol = 0.0;
};

/** Classic conservative policy iteration: hard argmax reference policy (ties
 * to the lowest action index), unregularized evaluation, and interpolation
 * with either a fixed zeta or the exact improvement-guaranteeing lower-bound
 * zeta computed from measured quantities. */
RunResult run_cpi_classic(const TabularMdp& mdp, const CpiConfig& config,
                          const StepObserver& observer = {},
                          const GreedyHook& greedy_hook = {});

/// Returns a copy of the config with a noisy critic: zero-mean Gaussian noise
/// of the given scale is added to every Q entry after each evaluation, before
/// the greedy and M computations.
AlgoConfig with_noisy_critic(AlgoConfig config, double sigma, std::uint64_t seed);

} // namespace cac
