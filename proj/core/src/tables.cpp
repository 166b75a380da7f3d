#include "cac/tables.hpp"

#include <cmath>

namespace cac {

bool Grid2::all_finite() const noexcept {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

Policy::Policy(Grid2 p) : probs(std::move(p)) { validate(); }

void Policy::validate() const {
    require(probs.rows() > 0 && probs.cols() > 0, "policy must be non-empty");
    for (std::size_t s = 0; s < probs.rows(); ++s) {
        double sum = 0.0;
        for (std::size_t a = 0; a < probs.cols(); ++a) {
            double p = probs(s, a);
            require(std::isfinite(p) && p >= 0.0,
                    "policy row " + std::to_string(s) + " has a negative or non-finite entry");
            sum += p;
        }
        require(std::abs(sum - 1.0) <= kRowSumTol,
                "policy row " + std::to_string(s) + " sums to " + std::to_string(sum));
    }
}

Policy Policy::uniform(std::size_t num_states, std::size_t num_actions) {
    Policy pi;
    pi.probs = Grid2(num_states, num_actions, 1.0 / double(num_actions));
    return pi;
}

std::uint64_t hash_bytes(const void* data, std::size_t n) noexcept {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t hash_table(const Grid2& g) noexcept {
    return hash_bytes(g.data().data(), g.data().size() * sizeof(double));
}

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

} // namespace cac
