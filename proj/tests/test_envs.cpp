#include "cac/envs.hpp"

#include "cac/mdp.hpp"
#include "cac/regularizers.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <set>
#include <tuple>

using namespace cac;
using namespace cactest;

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

TEST_CASE("random MDPs: density, determinism and invariants") {
    const auto dense = make_random_mdp(6, 3, 6, 5);
    for (std::size_t s = 0; s < 6; ++s)
        for (std::size_t a = 0; a < 3; ++a)
            for (std::size_t s2 = 0; s2 < 6; ++s2) CHECK(dense.p(s, a, s2) > 0.0);

    const auto a = make_random_mdp(7, 4, 3, 42);
    const auto b = make_random_mdp(7, 4, 3, 42);
    CHECK(a.transition == b.transition);
    CHECK(a.reward == b.reward);

    for (std::uint64_t seed = 0; seed < 100; ++seed)
        CHECK_NOTHROW(make_random_mdp(5 + seed % 6, 2 + seed % 4, 2 + seed % 3, seed));

    CHECK_THROWS_AS(make_random_mdp(4, 2, 5, 1), std::invalid_argument);
}

TEST_CASE("chain: deterministic kernel and closed-form optimum") {
    const auto chain = make_chain(2, 0.0, 0.9);
    CHECK(chain.p(0, 1, 1) == doctest::Approx(1.0));
    CHECK(chain.p(0, 0, 0) == doctest::Approx(1.0));
    CHECK(chain.reward(1, 0) == doctest::Approx(1.0));

    const auto vi = value_iteration_hard(chain, 1e-12);
    CHECK(vi.v[0] == doctest::Approx(0.9 / 0.1).epsilon(1e-10));
    CHECK(vi.v[1] == doctest::Approx(1.0 / 0.1).epsilon(1e-10));

    const auto longer = make_chain(6, 0.0, 0.95);
    const auto vi6 = value_iteration_hard(longer, 1e-12);
    for (std::size_t s = 0; s < 6; ++s) {
        const double expect = s == 5 ? 1.0 / 0.05
                                     : std::pow(0.95, double(5 - s)) / 0.05;
        CHECK(vi6.v[s] == doctest::Approx(expect).epsilon(1e-9));
    }

    CHECK_THROWS_AS(make_chain(1, 0.0), std::invalid_argument);
    for (std::uint64_t i = 0; i < 20; ++i)
        CHECK_NOTHROW(make_chain(2 + i, double(i) / 25.0));
}

TEST_CASE("gridworld: absorbing goal and shortest-path values") {
    const auto tiny = make_gridworld(1, 1, 0, 0, 1.0);
    CHECK(tiny.num_states == 1);
    CHECK(tiny.p(0, 0, 0) == doctest::Approx(1.0));
    CHECK(tiny.reward(0, 2) == doctest::Approx(0.0));

    const std::size_t w = 4, h = 4, gx = 3, gy = 1;
    const double cost = 0.7, gamma = 0.95;
    const auto grid = make_gridworld(w, h, gx, gy, cost, gamma);
    const auto vi = value_iteration_hard(grid, 1e-12);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            // BFS on a wall-clamped grid is Manhattan distance
            const auto dist = double(std::llabs(long(x) - long(gx)) +
                                     std::llabs(long(y) - long(gy)));
            const double expect = -cost * (1.0 - std::pow(gamma, dist)) / (1.0 - gamma);
            CHECK(vi.v[y * w + x] == doctest::Approx(expect).epsilon(1e-9));
        }

    CHECK_THROWS_AS(make_gridworld(3, 3, 5, 1, 1.0), std::invalid_argument);
}

TEST_CASE("pendulum: rows are distributions and rewards peak upright") {
    PendulumParams small;
    small.theta_bins = 9;
    small.thetadot_bins = 7;
    small.torque_levels = 3;
    const auto mdp = make_discretized_pendulum(small);
    CHECK(mdp.num_states == 63);
    for (std::size_t s = 0; s < mdp.num_states; ++s)
        for (std::size_t a = 0; a < mdp.num_actions; ++a) {
            double sum = 0.0;
            for (std::size_t s2 = 0; s2 < mdp.num_states; ++s2) {
                CHECK(mdp.p(s, a, s2) >= 0.0);
                sum += mdp.p(s, a, s2);
            }
            CHECK(std::abs(sum - 1.0) <= 1e-12);
            CHECK(mdp.reward(s, a) <= 0.0);
            CHECK(mdp.reward(s, a) >= -1.0);
        }

    // upright, zero velocity, zero torque sits in the best reward bin
    const auto upright = pendulum_state_index(small, 0.0, 0.0);
    const std::size_t mid_torque = small.torque_levels / 2;
    CHECK(pendulum_torque(small, mid_torque) == doctest::Approx(0.0));
    CHECK(mdp.reward(upright, mid_torque) == doctest::Approx(0.0).epsilon(1e-12));
    for (std::size_t s = 0; s < mdp.num_states; ++s)
        for (std::size_t a = 0; a < mdp.num_actions; ++a)
            CHECK(mdp.reward(s, a) <= mdp.reward(upright, mid_torque) + 1e-12);

    PendulumParams bad = small;
    bad.theta_bins = 2;
    CHECK_THROWS_AS(make_discretized_pendulum(bad), std::invalid_argument);
}

TEST_CASE("pendulum: the theta seam is continuous") {
    PendulumParams p;
    p.theta_bins = 15;
    p.thetadot_bins = 9;
    p.torque_levels = 3;
    const auto mdp = make_discretized_pendulum(p);

    // successors never jump more theta bins than one step of motion allows
    const double dtheta = 2.0 * kPi / double(p.theta_bins);
    const auto max_jump =
        std::size_t(std::ceil(p.max_speed * p.dt / dtheta)) + 1;
    for (std::size_t s = 0; s < mdp.num_states; ++s) {
        const std::size_t bin = s / p.thetadot_bins;
        for (std::size_t a = 0; a < mdp.num_actions; ++a)
            for (std::size_t s2 = 0; s2 < mdp.num_states; ++s2) {
                if (mdp.p(s, a, s2) == 0.0) continue;
                const std::size_t bin2 = s2 / p.thetadot_bins;
                const std::size_t diff =
                    (bin2 + p.theta_bins - bin) % p.theta_bins;
                const std::size_t circ = std::min(diff, p.theta_bins - diff);
                CHECK(circ <= max_jump);
            }
    }

    // physically adjacent states across the seam share successors
    const std::size_t vmid = p.thetadot_bins / 2;
    const std::size_t zero_torque = p.torque_levels / 2;
    std::size_t overlaps = 0;
    for (std::size_t v = 0; v < p.thetadot_bins; ++v) {
        const std::size_t left = 0 * p.thetadot_bins + v;
        const std::size_t right = (p.theta_bins - 1) * p.thetadot_bins + v;
        std::set<std::size_t> succ_left, succ_right;
        for (std::size_t s2 = 0; s2 < mdp.num_states; ++s2) {
            if (mdp.p(left, zero_torque, s2) > 0.0) succ_left.insert(s2);
            if (mdp.p(right, zero_torque, s2) > 0.0) succ_right.insert(s2);
        }
        std::size_t common = 0;
        for (auto s2 : succ_left) common += succ_right.count(s2);
        if (common > 0) ++overlaps;
        if (v == vmid) CHECK(common > 0);
    }
    CHECK(overlaps * 2 >= p.thetadot_bins);
}

TEST_CASE("pendulum: hard-max planning swings up from the hanging state") {
    const PendulumParams p; // 31 x 31 x 5 defaults
    const auto mdp = make_discretized_pendulum(p);
    const auto vi = value_iteration_hard(mdp, 1e-8);

    double theta = -kPi, thetadot = 0.0;
    bool reached = false;
    for (int step = 0; step < 200 && !reached; ++step) {
        const std::size_t s = pendulum_state_index(p, theta, thetadot);
        std::size_t best = 0;
        for (std::size_t a = 1; a < mdp.num_actions; ++a)
            if (vi.q(s, a) > vi.q(s, best)) best = a;
        std::tie(theta, thetadot) = pendulum_step(p, theta, thetadot,
                                                  pendulum_torque(p, best));
        reached = std::abs(theta) < 0.3;
    }
    CHECK(reached);
}
