#pragma once

#include "cac/algorithms.hpp"
#include "cac/envs.hpp"
#include "cac/mdp.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace cac {

/// Raised on malformed configuration (maps to exit code 2 in the CLI).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitViolation = 3;

struct RandomMdpSpec {
    std::size_t num_states = 8;
    std::size_t num_actions = 4;
    std::size_t branching = 4;
    std::uint64_t seed = 0;
};
struct ChainSpec {
    std::size_t n = 5;
    double slip_prob = 0.0;
};
struct GridworldSpec {
    std::size_t width = 4;
    std::size_t height = 4;
    std::size_t goal_x = 3;
    std::size_t goal_y = 3;
    double step_cost = 1.0;
};

struct EnvSpec {
    std::variant<RandomMdpSpec, ChainSpec, GridworldSpec, PendulumParams> kind =
        RandomMdpSpec{};
    double gamma = 0.99;

    TabularMdp build() const;
};

enum class Algorithm { Cac, Cvi, SpiShannon, CpiClassic };

/// One named algorithm setup; `algo` drives the CAC family, `cpi` the classic
/// loop.
struct AlgoPreset {
    std::string name = "run";
    Algorithm algorithm = Algorithm::Cac;
    AlgoConfig algo;
    CpiConfig cpi;
};

enum class OscDivisor { Drops, Steps };
enum class EmitFormat { Csv, Json };

struct RunConfig {
    EnvSpec env;
    AlgoPreset preset;
    std::size_t repeats = 1;
    std::size_t eval_every = 1;
    std::string output_path;
    EmitFormat emit = EmitFormat::Csv;
    OscDivisor osc_divisor = OscDivisor::Drops;

    void validate() const;
};

struct CompareConfig {
    EnvSpec env;
    std::vector<AlgoPreset> presets;
    std::size_t repeats = 1;
    std::size_t eval_every = 1;
    std::string output_path;
    EmitFormat emit = EmitFormat::Csv;
    OscDivisor osc_divisor = OscDivisor::Drops;
};

struct SweepConfig {
    RunConfig base;
    std::vector<double> kappas;
    std::vector<double> taus;
    std::vector<std::string> zeta_modes; // "adaptive", "exact_lower_bound", or numbers
    std::vector<double> sigmas;
};

/** Performance-oscillation summary over a return sequence: the largest single
 * drop, the root-mean-square drop, and how many drops occurred. num_steps
 * records the sequence's step count so the alternative divisor remains
 * recomputable. */
struct OscillationReport {
    double sup_drop = 0.0;
    double rms_drop = 0.0;
    std::size_t num_drops = 0;
    std::size_t num_steps = 0;
};

/// Drop statistics of a return sequence (length >= 2). The rms divisor is the
/// number of drops by default, or the number of steps with OscDivisor::Steps.
OscillationReport oscillation_metrics(const std::vector<double>& returns,
                                      OscDivisor divisor = OscDivisor::Drops);

/// One emitted data row: a preset/sweep label, the repeat index, and the
/// record fields behind the canonical columns.
struct EmitRow {
    std::string label;
    std::size_t repeat = 0;
    IterationRecord rec;
};

struct SummaryEntry {
    std::string label;
    std::size_t repeat = 0;
    OscillationReport report;
};

struct ExperimentResult {
    std::vector<EmitRow> rows;
    std::string payload;        // the exact bytes written to the output file
    std::vector<SummaryEntry> summaries;
};

/** Runs `repeats` seeded repeats of the configured algorithm, emits one row
 * per recorded iteration (every eval_every-th) per repeat plus an oscillation
 * summary block, and writes the payload to output_path when set. Byte-identical
 * output for identical configs. */
ExperimentResult run_experiment(const RunConfig& config);

/// Same emission contract with one block of rows per preset, sharing the env.
ExperimentResult run_compare(const CompareConfig& config);

/// Cross product over the sweep lists, labels of the form
/// "kappa=..,tau=..,zeta=..,sigma=..".
ExperimentResult run_sweep(const SweepConfig& config);

struct BoundsCheckPoint {
    std::size_t k = 0;
    double measured_tv = 0.0;
    double bound = 0.0;
};

struct BoundsCheckResult {
    bool ok = true;
    std::size_t violation_k = 0;
    std::vector<BoundsCheckPoint> points;
};

/** Runs the configured (noise-free, entropy-regularized) algorithm and checks
 * measured consecutive max-TV against the theorem bound at every iteration.
 * The hook may corrupt the greedy policy mid-run; it exists for negative
 * tests. */
BoundsCheckResult check_bounds(const RunConfig& config, const GreedyHook& hook = {});

// -- serialization ----------------------------------------------------------

/// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

std::string emit_csv(const std::vector<EmitRow>& rows, bool with_label,
                     const std::vector<SummaryEntry>& summaries, OscDivisor divisor);
std::string emit_json(const std::vector<EmitRow>& rows, bool with_label,
                      const std::vector<SummaryEntry>& summaries, OscDivisor divisor);

struct ParsedRow {
    std::string label;
    std::size_t repeat = 0;
    std::size_t k = 0;
    double j = 0.0, zeta = 0.0, m = 0.0;
    double max_tv = 0.0, max_kl = 0.0, tv_bound = 0.0, dist_to_opt = 0.0;
};

/// Parses a CSV payload produced by emit_csv (summary lines are skipped).
std::vector<ParsedRow> parse_csv(const std::string& text);

/// Recomputes the oscillation report(s) from an emitted CSV; with no divisor
/// given, both interpretations are reported.
std::string recompute_metrics(const std::string& csv_text,
                              std::optional<OscDivisor> divisor);

// -- config files -----------------------------------------------------------

RunConfig parse_run_config(const std::string& json_text);
CompareConfig parse_compare_config(const std::string& json_text);
SweepConfig parse_sweep_config(const std::string& json_text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

} // namespace cac
