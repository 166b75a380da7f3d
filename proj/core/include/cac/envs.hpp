#pragma once

#include "cac/mdp.hpp"

#include <cstdint>

namespace cac {

/** Garnet-style random MDP: each (s,a) transitions to `branching` distinct
 * uniformly chosen successors with Dirichlet(1) weights; rewards are uniform
 * in [-1, 1] and r_max = 1. Deterministic given the seed. */
TabularMdp make_random_mdp(std::size_t num_states, std::size_t num_actions,
                           std::size_t branching, std::uint64_t seed,
                           double gamma = 0.99);

/** Two-action chain over states 0..n-1. Action 0 steps left, action 1 steps
 * right, clamping at the ends; with probability slip_prob the step goes the
 * opposite way. Reward layout: R(s, a) = 1 exactly when s == n-1, else 0, so
 * with slip_prob = 0 the optimal value from state s is
 * gamma^(n-1-s) / (1 - gamma). */
TabularMdp make_chain(std::size_t n, double slip_prob, double gamma = 0.99);

/** Deterministic w x h gridworld with four moves (up, right, down, left) that
 * clamp at the walls. Every action from a non-goal state costs step_cost; the
 * goal is absorbing with zero reward, so V*(s) = -step_cost (1 -
 * gamma^d(s)) / (1 - gamma) with d the Manhattan distance to the goal. States
 * are indexed y * w + x. */
TabularMdp make_gridworld(std::size_t w, std::size_t h, std::size_t goal_x,
                          std::size_t goal_y, double step_cost, double gamma = 0.99);

struct PendulumParams {
    std::size_t theta_bins = 31;
    std::size_t thetadot_bins = 31;
    std::size_t torque_levels = 5;
    double dt = 0.05;
    double gravity = 10.0;
    double mass = 1.0;
    double length = 1.0;
    double max_speed = 8.0;
    double max_torque = 2.0;
    double gamma = 0.99;
};

/** Pendulum swing-up discretized onto a theta x thetadot grid (theta wraps,
 * thetadot clamps). One continuous step lands between grid points and is
 * assigned to the four surrounding cells with bilinear weights, which keeps
 * the kernel stochastic. Reward -(theta^2 + 0.1 thetadot^2 + 0.001 u^2) is
 * rescaled into [-1, 0] so r_max = 1. theta = 0 is upright. */
TabularMdp make_discretized_pendulum(const PendulumParams& params = {});

/// Continuous one-step pendulum dynamics (used by the discretizer and by
/// closed-loop rollouts). Returns the next (theta, thetadot); theta is
/// wrapped to [-pi, pi).
std::pair<double, double> pendulum_step(const PendulumParams& params, double theta,
                                        double thetadot, double torque);

/// Grid index of the cell whose center is nearest to (theta, thetadot).
std::size_t pendulum_state_index(const PendulumParams& params, double theta,
                                 double thetadot);

/// Torque of the given action level.
double pendulum_torque(const PendulumParams& params, std::size_t action);

/// Center coordinates (theta, thetadot) of a grid state.
std::pair<double, double> pendulum_state_coords(const PendulumParams& params,
                                                std::size_t state);

} // namespace cac
