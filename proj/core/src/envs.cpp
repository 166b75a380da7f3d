#include "cac/envs.hpp"

#include "cac/rng.hpp"

#include <algorithm>
#include <cmath>

namespace cac {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;

double wrap_angle(double theta) {
    // into [-pi, pi)
    theta = std::fmod(theta + kPi, 2.0 * kPi);
    if (theta < 0.0) theta += 2.0 * kPi;
    return theta - kPi;
}
} // namespace

TabularMdp make_random_mdp(std::size_t num_states, std::size_t num_actions,
                           std::size_t branching, std::uint64_t seed, double gamma) {
    require(num_states >= 1 && num_actions >= 1 && branching >= 1, "sizes must be >= 1");
    require(branching <= num_states, "branching cannot exceed num_states");
    Rng rng(seed);
    TabularMdp mdp;
    mdp.num_states = num_states;
    mdp.num_actions = num_actions;
    mdp.discount = gamma;
    mdp.r_max = 1.0;
    mdp.transition.assign(num_states * num_actions * num_states, 0.0);
    mdp.reward = Grid2(num_states, num_actions);
    for (std::size_t s = 0; s < num_states; ++s)
        for (std::size_t a = 0; a < num_actions; ++a) {
            const auto succ = rng.sample_distinct(branching, num_states);
            const auto w = rng.dirichlet_flat(branching);
            for (std::size_t i = 0; i < branching; ++i) mdp.p(s, a, succ[i]) = w[i];
            mdp.reward(s, a) = rng.uniform(-1.0, 1.0);
        }
    mdp.validate();
    return mdp;
}

TabularMdp make_chain(std::size_t n, double slip_prob, double gamma) {
    require(n >= 2, "chain needs at least two states");
    require(slip_prob >= 0.0 && slip_prob <= 1.0, "slip_prob must be a probability");
    TabularMdp mdp;
    mdp.num_states = n;
    mdp.num_actions = 2;
    mdp.discount = gamma;
    mdp.r_max = 1.0;
    mdp.transition.assign(n * 2 * n, 0.0);
    mdp.reward = Grid2(n, 2);
    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t left = s == 0 ? 0 : s - 1;
        const std::size_t right = s + 1 >= n ? n - 1 : s + 1;
        mdp.p(s, 0, left) += 1.0 - slip_prob;
        mdp.p(s, 0, right) += slip_prob;
        mdp.p(s, 1, right) += 1.0 - slip_prob;
        mdp.p(s, 1, left) += slip_prob;
        mdp.reward(s, 0) = mdp.reward(s, 1) = (s == n - 1) ? 1.0 : 0.0;
    }
    mdp.validate();
    return mdp;
}

TabularMdp make_gridworld(std::size_t w, std::size_t h, std::size_t goal_x,
                          std::size_t goal_y, double step_cost, double gamma) {
    require(w >= 1 && h >= 1, "grid must be at least 1x1");
    require(goal_x < w && goal_y < h, "goal must lie inside the grid");
    require(step_cost >= 0.0, "step_cost must be nonnegative");
    const std::size_t S = w * h;
    const std::size_t goal = goal_y * w + goal_x;
    TabularMdp mdp;
    mdp.num_states = S;
    mdp.num_actions = 4; // up, right, down, left
    mdp.discount = gamma;
    mdp.r_max = step_cost;
    mdp.transition.assign(S * 4 * S, 0.0);
    mdp.reward = Grid2(S, 4);
    const int dx[4] = {0, 1, 0, -1};
    const int dy[4] = {-1, 0, 1, 0};
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            const std::size_t s = y * w + x;
            for (std::size_t a = 0; a < 4; ++a) {
                if (s == goal) {
                    mdp.p(s, a, s) = 1.0; // absorbing
                    mdp.reward(s, a) = 0.0;
                    continue;
                }
                const long nx = std::clamp<long>(long(x) + dx[a], 0, long(w) - 1);
                const long ny = std::clamp<long>(long(y) + dy[a], 0, long(h) - 1);
                mdp.p(s, a, std::size_t(ny) * w + std::size_t(nx)) = 1.0;
                mdp.reward(s, a) = -step_cost;
            }
        }
    mdp.validate();
    return mdp;
}

std::pair<double, double> pendulum_step(const PendulumParams& p, double theta,
                                        double thetadot, double torque) {
    const double u = std::clamp(torque, -p.max_torque, p.max_torque);
    double newthdot =
        thetadot + (3.0 * p.gravity / (2.0 * p.length) * std::sin(theta) +
                    3.0 / (p.mass * p.length * p.length) * u) *
                       p.dt;
    newthdot = std::clamp(newthdot, -p.max_speed, p.max_speed);
    const double newtheta = wrap_angle(theta + newthdot * p.dt);
    return {newtheta, newthdot};
}

double pendulum_torque(const PendulumParams& p, std::size_t action) {
    if (p.torque_levels == 1) return 0.0;
    return -p.max_torque +
           2.0 * p.max_torque * double(action) / double(p.torque_levels - 1);
}

std::pair<double, double> pendulum_state_coords(const PendulumParams& p,
                                                std::size_t state) {
    const std::size_t it = state / p.thetadot_bins;
    const std::size_t iv = state % p.thetadot_bins;
    // cell centers are offset by half a bin so theta = 0 (upright) is a
    // center whenever theta_bins is odd
    const double theta =
        -kPi + (double(it) + 0.5) * 2.0 * kPi / double(p.theta_bins);
    const double thetadot =
        -p.max_speed + 2.0 * p.max_speed * double(iv) / double(p.thetadot_bins - 1);
    return {theta, thetadot};
}

std::size_t pendulum_state_index(const PendulumParams& p, double theta, double thetadot) {
    const double ft =
        (wrap_angle(theta) + kPi) / (2.0 * kPi) * double(p.theta_bins) - 0.5;
    const long long n = (long long)(p.theta_bins);
    const std::size_t it = std::size_t(((std::llround(ft) % n) + n) % n);
    const double fv = (std::clamp(thetadot, -p.max_speed, p.max_speed) + p.max_speed) /
                      (2.0 * p.max_speed) * double(p.thetadot_bins - 1);
    std::size_t iv = std::size_t(std::llround(fv));
    iv = std::min(iv, p.thetadot_bins - 1);
    return it * p.thetadot_bins + iv;
}

TabularMdp make_discretized_pendulum(const PendulumParams& p) {
    require(p.theta_bins >= 3 && p.thetadot_bins >= 3, "need at least 3 bins per dimension");
    require(p.torque_levels >= 1, "need at least one torque level");
    require(p.dt > 0.0 && p.gravity > 0.0 && p.mass > 0.0 && p.length > 0.0 &&
                p.max_speed > 0.0 && p.max_torque > 0.0,
            "physical parameters must be positive");
    require(p.gamma > 0.0 && p.gamma < 1.0, "gamma must be in (0, 1)");

    const std::size_t S = p.theta_bins * p.thetadot_bins;
    const std::size_t A = p.torque_levels;
    TabularMdp mdp;
    mdp.num_states = S;
    mdp.num_actions = A;
    mdp.discount = p.gamma;
    mdp.transition.assign(S * A * S, 0.0);
    mdp.reward = Grid2(S, A);

    const double dtheta = 2.0 * kPi / double(p.theta_bins);
    const double dvel = 2.0 * p.max_speed / double(p.thetadot_bins - 1);

    // raw costs first; rescaled into [-1, 0] afterwards
    double worst = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        const auto [theta, thetadot] = pendulum_state_coords(p, s);
        for (std::size_t a = 0; a < A; ++a) {
            const double u = pendulum_torque(p, a);
            const double cost =
                theta * theta + 0.1 * thetadot * thetadot + 0.001 * u * u;
            mdp.reward(s, a) = -cost;
            worst = std::max(worst, cost);

            const auto [nt, nv] = pendulum_step(p, theta, thetadot, u);

            // fractional grid coordinates of the successor (half-bin offset)
            const double ft = (nt + kPi) / dtheta - 0.5; // periodic, in [-0.5, N-0.5)
            double fv = (nv + p.max_speed) / dvel;       // clamped
            fv = std::clamp(fv, 0.0, double(p.thetadot_bins - 1));
            const long long nbins = (long long)(p.theta_bins);
            const long long fl = (long long)(std::floor(ft));
            const std::size_t t0 = std::size_t(((fl % nbins) + nbins) % nbins);
            const std::size_t t1 = (t0 + 1) % p.theta_bins;
            const double wt = ft - double(fl);
            std::size_t v0 = std::size_t(std::floor(fv));
            v0 = std::min(v0, p.thetadot_bins - 2);
            const std::size_t v1 = v0 + 1;
            const double wv = fv - double(v0);

            double weights[4] = {(1.0 - wt) * (1.0 - wv), (1.0 - wt) * wv,
                                 wt * (1.0 - wv), wt * wv};
            const std::size_t cells[4] = {
                t0 * p.thetadot_bins + v0, t0 * p.thetadot_bins + v1,
                t1 * p.thetadot_bins + v0, t1 * p.thetadot_bins + v1};
            double wsum = weights[0] + weights[1] + weights[2] + weights[3];
            for (int i = 0; i < 4; ++i)
                mdp.p(s, a, cells[i]) += weights[i] / wsum;
        }
    }
    for (double& r : mdp.reward.data()) r /= worst;
    mdp.r_max = 1.0;
    mdp.validate();
    return mdp;
}

} // namespace cac
