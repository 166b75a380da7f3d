#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace cac {

/** Deterministic random stream. Wraps std::mt19937_64 but performs all
 * variate transforms itself (the standard library's distributions are
 * implementation-defined), so the same seed yields the same stream on every
 * platform and toolchain. */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return double(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_below(std::uint64_t n) {
        // rejection sampling to avoid modulo bias
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = gen_();
        } while (v >= limit);
        return v % n;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller (pairs cached).
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

    /// Index drawn from an (unnormalized) nonnegative weight vector.
    std::size_t categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        if (!(total > 0.0)) throw std::invalid_argument("categorical: weights sum to zero");
        double u = uniform01() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return i;
        }
        return weights.size() - 1; // rounding fell off the end
    }

    /// Dirichlet(1,...,1) draw of the given length (normalized exponentials).
    std::vector<double> dirichlet_flat(std::size_t n) {
        std::vector<double> w(n);
        double sum = 0.0;
        for (auto& x : w) {
            double u;
            do {
                u = uniform01();
            } while (u <= 0.0);
            x = -std::log(u);
            sum += x;
        }
        for (auto& x : w) x /= sum;
        return w;
    }

    /// k distinct indices from [0, n), by partial Fisher-Yates. Order is
    /// deterministic given the seed.
    std::vector<std::size_t> sample_distinct(std::size_t k, std::size_t n) {
        if (k > n) throw std::invalid_argument("sample_distinct: k > n");
        std::vector<std::size_t> pool(n);
        for (std::size_t i = 0; i < n; ++i) pool[i] = i;
        for (std::size_t i = 0; i < k; ++i) {
            std::size_t j = i + std::size_t(uniform_below(n - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(k);
        return pool;
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace cac
