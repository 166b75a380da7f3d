// Command line front end: exact tabular runs of the cautious actor-critic
// family, bound checking, and oscillation metrics over emitted CSVs.

#include "cac/harness.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_override;
    std::string format_override;
    std::optional<std::int64_t> seed_override;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "Path to the JSON config file")
        ->required();
    cmd->add_option("--out", flags.out_override, "Override the config's output path");
    cmd->add_option("--format", flags.format_override, "Override the emit format")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--seed", flags.seed_override, "Override the algorithm seed");
}

void apply_overrides(cac::RunConfig& config, const CommonFlags& flags) {
    if (!flags.out_override.empty()) config.output_path = flags.out_override;
    if (!flags.format_override.empty())
        config.emit = flags.format_override == "csv" ? cac::EmitFormat::Csv
                                                     : cac::EmitFormat::Json;
    if (flags.seed_override) {
        config.preset.algo.seed = std::uint64_t(*flags.seed_override);
        config.preset.cpi.seed = std::uint64_t(*flags.seed_override);
    }
}

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const cac::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cac::kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cac::kExitConfig;
    } catch (const cac::ConvergenceError& e) {
        std::cerr << "algorithm failure: " << e.what() << "\n";
        return cac::kExitViolation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cac::kExitViolation;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact tabular cautious actor-critic toolkit"};
    app.require_subcommand(1);

    CommonFlags solve_flags, compare_flags, sweep_flags, bounds_flags;
    std::string metrics_input, metrics_out, metrics_divisor;

    auto* solve = app.add_subcommand("solve", "Run one configured algorithm");
    add_common(solve, solve_flags);

    auto* compare = app.add_subcommand("compare", "Run several presets on a shared env");
    add_common(compare, compare_flags);

    auto* sweep = app.add_subcommand("sweep", "Grid over kappa, tau, zeta mode and sigma");
    add_common(sweep, sweep_flags);

    auto* bounds = app.add_subcommand(
        "check-bounds", "Assert measured consecutive max-TV against the theorem bound");
    add_common(bounds, bounds_flags);

    auto* metrics = app.add_subcommand(
        "metrics", "Recompute oscillation metrics from an emitted CSV");
    metrics->add_option("input", metrics_input, "CSV file produced by solve/compare/sweep")
        ->required();
    metrics->add_option("--out", metrics_out, "Write the report here instead of stdout");
    metrics->add_option("--osc-divisor", metrics_divisor,
                        "Divisor for the rms drop (both reported when unset)")
        ->check(CLI::IsMember({"drops", "steps"}));

    CLI11_PARSE(app, argc, argv);

    if (solve->parsed())
        return guarded([&] {
            auto config = cac::parse_run_config(cac::read_text_file(solve_flags.config_path));
            apply_overrides(config, solve_flags);
            auto result = cac::run_experiment(config);
            if (config.output_path.empty()) std::cout << result.payload;
            return cac::kExitOk;
        });

    if (compare->parsed())
        return guarded([&] {
            auto config =
                cac::parse_compare_config(cac::read_text_file(compare_flags.config_path));
            if (!compare_flags.out_override.empty())
                config.output_path = compare_flags.out_override;
            if (!compare_flags.format_override.empty())
                config.emit = compare_flags.format_override == "csv"
                                  ? cac::EmitFormat::Csv
                                  : cac::EmitFormat::Json;
            if (compare_flags.seed_override)
                for (auto& preset : config.presets) {
                    preset.algo.seed = std::uint64_t(*compare_flags.seed_override);
                    preset.cpi.seed = std::uint64_t(*compare_flags.seed_override);
                }
            auto result = cac::run_compare(config);
            if (config.output_path.empty()) std::cout << result.payload;
            return cac::kExitOk;
        });

    if (sweep->parsed())
        return guarded([&] {
            auto config =
                cac::parse_sweep_config(cac::read_text_file(sweep_flags.config_path));
            apply_overrides(config.base, sweep_flags);
            auto result = cac::run_sweep(config);
            if (config.base.output_path.empty()) std::cout << result.payload;
            return cac::kExitOk;
        });

    if (bounds->parsed())
        return guarded([&] {
            auto config =
                cac::parse_run_config(cac::read_text_file(bounds_flags.config_path));
            apply_overrides(config, bounds_flags);
            const auto result = cac::check_bounds(config);
            for (const auto& pt : result.points)
                std::cout << "k=" << pt.k << " measured_tv=" << cac::format_double(pt.measured_tv)
                          << " bound=" << cac::format_double(pt.bound) << "\n";
            if (!result.ok) {
                std::cerr << "bound violated at k=" << result.violation_k << "\n";
                return cac::kExitViolation;
            }
            return cac::kExitOk;
        });

    // metrics
    return guarded([&] {
        std::optional<cac::OscDivisor> divisor;
        if (metrics_divisor == "drops") divisor = cac::OscDivisor::Drops;
        if (metrics_divisor == "steps") divisor = cac::OscDivisor::Steps;
        const auto report =
            cac::recompute_metrics(cac::read_text_file(metrics_input), divisor);
        if (metrics_out.empty())
            std::cout << report;
        else
            cac::write_text_file(metrics_out, report);
        return cac::kExitOk;
    });
}
