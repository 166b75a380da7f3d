#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cac {

using numvec = std::vector<double>;

/// Thrown by iterative solvers that fail to reach the requested tolerance.
/// Carries the last observed fixed-point residual.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual, std::size_t iterations)
        : std::runtime_error(what + " (residual=" + std::to_string(residual) +
                             " after " + std::to_string(iterations) + " iterations)"),
          residual_(residual), iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    std::size_t iterations() const noexcept { return iterations_; }

private:
    double residual_;
    std::size_t iterations_;
};

/// Thrown when a KL divergence is infinite: the left distribution puts mass
/// where the right one has none.
class InfiniteKlError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/** Dense row-major matrix of doubles. Used for Q/advantage tables (states x
 * actions) and for per-state action distributions. */
class Grid2 {
public:
    Grid2() = default;
    Grid2(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }

    numvec& data() noexcept { return data_; }
    const numvec& data() const noexcept { return data_; }

    const double* row(std::size_t r) const { return data_.data() + r * cols_; }
    double* row(std::size_t r) { return data_.data() + r * cols_; }

    bool same_shape(const Grid2& o) const noexcept {
        return rows_ == o.rows_ && cols_ == o.cols_;
    }

    bool all_finite() const noexcept;

    friend bool operator==(const Grid2&, const Grid2&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    numvec data_;
};

using QTable = Grid2;
using ATable = Grid2;
using VTable = numvec;

/** Per-state probability distribution over actions. Each row is validated to
 * be nonnegative and to sum to one within 1e-12. */
struct Policy {
    Grid2 probs;

    Policy() = default;
    explicit Policy(Grid2 p);

    std::size_t num_states() const noexcept { return probs.rows(); }
    std::size_t num_actions() const noexcept { return probs.cols(); }

    double operator()(std::size_t s, std::size_t a) const { return probs(s, a); }

    /// Row-sum / nonnegativity check; throws std::invalid_argument on failure.
    void validate() const;

    static Policy uniform(std::size_t num_states, std::size_t num_actions);

    friend bool operator==(const Policy&, const Policy&) = default;
};

/// Row-sum tolerance shared by Policy and transition-kernel validation.
inline constexpr double kRowSumTol = 1e-12;

/// Probability floor below which a mass is treated as zero (0*log 0 := 0).
inline constexpr double kProbFloor = 1e-300;

/// FNV-1a over the raw bytes of a table; used to fingerprint policies in
/// iteration records.
std::uint64_t hash_bytes(const void* data, std::size_t n) noexcept;
std::uint64_t hash_table(const Grid2& g) noexcept;

void require(bool cond, const std::string& msg);

} // namespace cac
