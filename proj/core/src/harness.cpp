#include "cac/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace cac {

using nlohmann::json;

// -- env --------------------------------------------------------------------

TabularMdp EnvSpec::build() const {
    require(gamma > 0.0 && gamma < 1.0, "env gamma must be in (0, 1)");
    if (const auto* r = std::get_if<RandomMdpSpec>(&kind))
        return make_random_mdp(r->num_states, r->num_actions, r->branching, r->seed, gamma);
    if (const auto* c = std::get_if<ChainSpec>(&kind))
        return make_chain(c->n, c->slip_prob, gamma);
    if (const auto* g = std::get_if<GridworldSpec>(&kind))
        return make_gridworld(g->width, g->height, g->goal_x, g->goal_y, g->step_cost,
                              gamma);
    PendulumParams p = std::get<PendulumParams>(kind);
    p.gamma = gamma;
    return make_discretized_pendulum(p);
}

void RunConfig::validate() const {
    require(repeats >= 1, "repeats must be >= 1");
    require(eval_every >= 1, "eval_every must be >= 1");
}

// -- oscillation metrics ------------------------------------------------------

OscillationReport oscillation_metrics(const std::vector<double>& returns,
                                      OscDivisor divisor) {
    require(returns.size() >= 2, "oscillation_metrics needs at least two returns");
    OscillationReport rep;
    rep.num_steps = returns.size() - 1;
    double sq_sum = 0.0;
    for (std::size_t k = 0; k + 1 < returns.size(); ++k) {
        const double diff = returns[k + 1] - returns[k];
        if (diff < 0.0) {
            rep.num_drops += 1;
            rep.sup_drop = std::max(rep.sup_drop, -diff);
            sq_sum += diff * diff;
        }
    }
    if (rep.num_drops > 0) {
        const double n = divisor == OscDivisor::Drops ? double(rep.num_drops)
                                                      : double(rep.num_steps);
        rep.rms_drop = std::sqrt(sq_sum / n);
    }
    return rep;
}

// -- number formatting --------------------------------------------------------

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

json json_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

double parse_double_field(const std::string& text, const char* what) {
    double v = 0.0;
    const char* b = text.data();
    const char* e = b + text.size();
    auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc{} || res.ptr != e)
        throw ConfigError("cannot parse " + std::string(what) + " value '" + text + "'");
    return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n == 0) return 0.0;
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

const char* divisor_name(OscDivisor d) {
    return d == OscDivisor::Drops ? "drops" : "steps";
}

} // namespace

// -- emission -----------------------------------------------------------------

std::string emit_csv(const std::vector<EmitRow>& rows, bool with_label,
                     const std::vector<SummaryEntry>& summaries, OscDivisor divisor) {
    std::string out;
    if (with_label) out += "label,";
    out += "repeat,k,J,zeta,M,max_tv,max_kl,tv_bound,dist_to_opt\n";
    for (const auto& row : rows) {
        if (with_label) {
            out += row.label;
            out += ',';
        }
        out += std::to_string(row.repeat);
        out += ',';
        out += std::to_string(row.rec.k);
        for (double v : {row.rec.return_J, row.rec.zeta, row.rec.m,
                         row.rec.max_tv_consecutive, row.rec.max_kl_consecutive,
                         row.rec.tv_bound_theorem2,
                         row.rec.dist_to_soft_optimal_policy}) {
            out += ',';
            out += format_double(v);
        }
        out += '\n';
    }
    if (!summaries.empty()) {
        out += '\n';
        for (const auto& s : summaries) {
            out += "# summary label=" + s.label + " repeat=" + std::to_string(s.repeat) +
                   " sup_drop=" + format_double(s.report.sup_drop) +
                   " rms_drop=" + format_double(s.report.rms_drop) +
                   " num_drops=" + std::to_string(s.report.num_drops) +
                   " num_steps=" + std::to_string(s.report.num_steps) +
                   " divisor=" + divisor_name(divisor) + "\n";
        }
        // medians across repeats, one line per label in first-appearance order
        std::vector<std::string> labels;
        for (const auto& s : summaries)
            if (std::find(labels.begin(), labels.end(), s.label) == labels.end())
                labels.push_back(s.label);
        for (const auto& label : labels) {
            std::vector<double> sups, rmss;
            for (const auto& s : summaries)
                if (s.label == label) {
                    sups.push_back(s.report.sup_drop);
                    rmss.push_back(s.report.rms_drop);
                }
            out += "# summary label=" + label +
                   " median sup_drop=" + format_double(median(sups)) +
                   " rms_drop=" + format_double(median(rmss)) + "\n";
        }
    }
    return out;
}

std::string emit_json(const std::vector<EmitRow>& rows, bool with_label,
                      const std::vector<SummaryEntry>& summaries, OscDivisor divisor) {
    json out;
    out["rows"] = json::array();
    for (const auto& row : rows) {
        json r;
        if (with_label) r["label"] = row.label;
        r["repeat"] = row.repeat;
        r["k"] = row.rec.k;
        r["J"] = json_double(row.rec.return_J);
        r["zeta"] = json_double(row.rec.zeta);
        r["M"] = json_double(row.rec.m);
        r["max_tv"] = json_double(row.rec.max_tv_consecutive);
        r["max_kl"] = json_double(row.rec.max_kl_consecutive);
        r["tv_bound"] = json_double(row.rec.tv_bound_theorem2);
        r["dist_to_opt"] = json_double(row.rec.dist_to_soft_optimal_policy);
        out["rows"].push_back(std::move(r));
    }
    out["summary"]["divisor"] = divisor_name(divisor);
    out["summary"]["per_repeat"] = json::array();
    for (const auto& s : summaries) {
        json r;
        r["label"] = s.label;
        r["repeat"] = s.repeat;
        r["sup_drop"] = json_double(s.report.sup_drop);
        r["rms_drop"] = json_double(s.report.rms_drop);
        r["num_drops"] = s.report.num_drops;
        r["num_steps"] = s.report.num_steps;
        out["summary"]["per_repeat"].push_back(std::move(r));
    }
    out["summary"]["median"] = json::array();
    std::vector<std::string> labels;
    for (const auto& s : summaries)
        if (std::find(labels.begin(), labels.end(), s.label) == labels.end())
            labels.push_back(s.label);
    for (const auto& label : labels) {
        std::vector<double> sups, rmss;
        for (const auto& s : summaries)
            if (s.label == label) {
                sups.push_back(s.report.sup_drop);
                rmss.push_back(s.report.rms_drop);
            }
        json r;
        r["label"] = label;
        r["sup_drop"] = json_double(median(sups));
        r["rms_drop"] = json_double(median(rmss));
        out["summary"]["median"].push_back(std::move(r));
    }
    return out.dump(2) + "\n";
}

std::vector<ParsedRow> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    bool have_header = false;
    std::map<std::string, std::size_t> col;
    bool with_label = false;
    std::vector<ParsedRow> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split(line, ',');
        if (!have_header) {
            for (std::size_t i = 0; i < fields.size(); ++i) col[fields[i]] = i;
            for (const char* required :
                 {"repeat", "k", "J", "zeta", "M", "max_tv", "max_kl", "tv_bound",
                  "dist_to_opt"})
                if (!col.count(required))
                    throw ConfigError("CSV is missing column '" + std::string(required) +
                                      "'");
            with_label = col.count("label") > 0;
            have_header = true;
            continue;
        }
        if (fields.size() != col.size())
            throw ConfigError("CSV row has " + std::to_string(fields.size()) +
                              " fields, header has " + std::to_string(col.size()));
        ParsedRow row;
        if (with_label) row.label = fields[col["label"]];
        row.repeat = std::size_t(parse_double_field(fields[col["repeat"]], "repeat"));
        row.k = std::size_t(parse_double_field(fields[col["k"]], "k"));
        row.j = parse_double_field(fields[col["J"]], "J");
        row.zeta = parse_double_field(fields[col["zeta"]], "zeta");
        row.m = parse_double_field(fields[col["M"]], "M");
        row.max_tv = parse_double_field(fields[col["max_tv"]], "max_tv");
        row.max_kl = parse_double_field(fields[col["max_kl"]], "max_kl");
        row.tv_bound = parse_double_field(fields[col["tv_bound"]], "tv_bound");
        row.dist_to_opt = parse_double_field(fields[col["dist_to_opt"]], "dist_to_opt");
        rows.push_back(std::move(row));
    }
    if (!have_header) throw ConfigError("CSV has no header row");
    return rows;
}

std::string recompute_metrics(const std::string& csv_text,
                              std::optional<OscDivisor> divisor) {
    const auto rows = parse_csv(csv_text);
    if (rows.empty()) throw ConfigError("CSV contains no data rows");

    // group by (label, repeat) in first-appearance order
    std::vector<std::pair<std::string, std::size_t>> keys;
    std::map<std::pair<std::string, std::size_t>, std::vector<double>> series;
    for (const auto& r : rows) {
        const auto key = std::make_pair(r.label, r.repeat);
        if (!series.count(key)) keys.push_back(key);
        series[key].push_back(r.j);
    }
    std::vector<OscDivisor> divisors;
    if (divisor)
        divisors.push_back(*divisor);
    else
        divisors = {OscDivisor::Drops, OscDivisor::Steps};

    std::string out;
    for (const auto d : divisors) {
        std::map<std::string, std::vector<std::pair<double, double>>> by_label;
        std::vector<std::string> labels;
        for (const auto& key : keys) {
            const auto rep = oscillation_metrics(series[key], d);
            out += "label=" + (key.first.empty() ? "run" : key.first) +
                   " repeat=" + std::to_string(key.second) +
                   " divisor=" + divisor_name(d) +
                   " sup_drop=" + format_double(rep.sup_drop) +
                   " rms_drop=" + format_double(rep.rms_drop) +
                   " num_drops=" + std::to_string(rep.num_drops) +
                   " num_steps=" + std::to_string(rep.num_steps) + "\n";
            if (!by_label.count(key.first)) labels.push_back(key.first);
            by_label[key.first].push_back({rep.sup_drop, rep.rms_drop});
        }
        for (const auto& label : labels) {
            std::vector<double> sups, rmss;
            for (auto [s, r] : by_label[label]) {
                sups.push_back(s);
                rmss.push_back(r);
            }
            out += "label=" + (label.empty() ? "run" : label) + " median divisor=" +
                   divisor_name(d) + " sup_drop=" + format_double(median(sups)) +
                   " rms_drop=" + format_double(median(rmss)) + "\n";
        }
    }
    return out;
}

// -- experiment drivers --------------------------------------------------------

namespace {

RunResult dispatch_run(const TabularMdp& mdp, const AlgoPreset& preset,
                       const GreedyHook& hook = {}) {
    switch (preset.algorithm) {
    case Algorithm::Cac:
        return run_cac(mdp, preset.algo, {}, hook);
    case Algorithm::Cvi: {
        AlgoConfig cfg = preset.algo;
        require(cfg.reg.tau > 0.0, "cvi requires tau > 0");
        cfg.zeta_mode = ZetaModeFixed{1.0};
        return run_cac(mdp, cfg, {}, hook);
    }
    case Algorithm::SpiShannon: {
        AlgoConfig cfg = preset.algo;
        require(cfg.reg.kappa > 0.0, "spi_shannon requires kappa > 0");
        cfg.reg = RegParams(cfg.reg.kappa, 0.0);
        cfg.zeta_mode = ZetaModeFixed{1.0};
        return run_cac(mdp, cfg, {}, hook);
    }
    case Algorithm::CpiClassic:
        return run_cpi_classic(mdp, preset.cpi, {}, hook);
    }
    throw std::logic_error("unknown algorithm");
}

void run_preset_repeats(const TabularMdp& mdp, const AlgoPreset& preset,
                        std::size_t repeats, std::size_t eval_every,
                        const std::string& label, std::vector<EmitRow>& rows,
                        std::vector<SummaryEntry>& summaries, OscDivisor divisor) {
    for (std::size_t r = 0; r < repeats; ++r) {
        AlgoPreset p = preset;
        p.algo.seed = preset.algo.seed + r;
        p.cpi.seed = preset.cpi.seed + r;
        const RunResult res = dispatch_run(mdp, p);
        std::vector<double> returns;
        for (const auto& rec : res.records)
            if (rec.k % eval_every == 0) {
                rows.push_back({label, r, rec});
                returns.push_back(rec.return_J);
            }
        OscillationReport rep;
        if (returns.size() >= 2) rep = oscillation_metrics(returns, divisor);
        summaries.push_back({label, r, rep});
    }
}

std::string render(const std::vector<EmitRow>& rows, bool with_label,
                   const std::vector<SummaryEntry>& summaries, EmitFormat emit,
                   OscDivisor divisor) {
    return emit == EmitFormat::Csv ? emit_csv(rows, with_label, summaries, divisor)
                                   : emit_json(rows, with_label, summaries, divisor);
}

} // namespace

ExperimentResult run_experiment(const RunConfig& config) {
    config.validate();
    const TabularMdp mdp = config.env.build();
    ExperimentResult out;
    run_preset_repeats(mdp, config.preset, config.repeats, config.eval_every,
                       config.preset.name, out.rows, out.summaries, config.osc_divisor);
    out.payload = render(out.rows, /*with_label=*/false, out.summaries, config.emit,
                         config.osc_divisor);
    if (!config.output_path.empty()) write_text_file(config.output_path, out.payload);
    return out;
}

ExperimentResult run_compare(const CompareConfig& config) {
    require(!config.presets.empty(), "compare needs at least one preset");
    require(config.repeats >= 1 && config.eval_every >= 1,
            "repeats and eval_every must be >= 1");
    const TabularMdp mdp = config.env.build();
    ExperimentResult out;
    for (const auto& preset : config.presets)
        run_preset_repeats(mdp, preset, config.repeats, config.eval_every, preset.name,
                           out.rows, out.summaries, config.osc_divisor);
    out.payload = render(out.rows, /*with_label=*/true, out.summaries, config.emit,
                         config.osc_divisor);
    if (!config.output_path.empty()) write_text_file(config.output_path, out.payload);
    return out;
}

namespace {

ZetaMode parse_zeta_token(const std::string& token, const AlgoConfig& base) {
    if (token == "adaptive") {
        ZetaModeAdaptive ad;
        if (const auto* prev = std::get_if<ZetaModeAdaptive>(&base.zeta_mode))
            ad = *prev;
        return ad;
    }
    if (token == "exact_lower_bound") return ZetaModeExactLowerBound{};
    return ZetaModeFixed{parse_double_field(token, "zeta")};
}

} // namespace

ExperimentResult run_sweep(const SweepConfig& config) {
    config.base.validate();
    require(config.base.preset.algorithm != Algorithm::CpiClassic,
            "sweep drives the entropy-regularized family");
    const TabularMdp mdp = config.base.env.build();

    auto kappas = config.kappas.empty() ? std::vector<double>{config.base.preset.algo.reg.kappa}
                                        : config.kappas;
    auto taus = config.taus.empty() ? std::vector<double>{config.base.preset.algo.reg.tau}
                                    : config.taus;
    auto sigmas = config.sigmas.empty()
                      ? std::vector<double>{config.base.preset.algo.noise_sigma}
                      : config.sigmas;
    std::vector<std::string> zetas = config.zeta_modes;
    if (zetas.empty()) zetas = {"1"};

    ExperimentResult out;
    for (double kappa : kappas)
        for (double tau : taus)
            for (const auto& ztoken : zetas)
                for (double sigma : sigmas) {
                    AlgoPreset preset = config.base.preset;
                    preset.algo.reg = RegParams(kappa, tau);
                    preset.algo.zeta_mode = parse_zeta_token(ztoken, preset.algo);
                    preset.algo.noise_sigma = sigma;
                    const std::string label = "kappa=" + format_double(kappa) +
                                              ";tau=" + format_double(tau) +
                                              ";zeta=" + ztoken +
                                              ";sigma=" + format_double(sigma);
                    run_preset_repeats(mdp, preset, config.base.repeats,
                                       config.base.eval_every, label, out.rows,
                                       out.summaries, config.base.osc_divisor);
                }
    out.payload = render(out.rows, /*with_label=*/true, out.summaries, config.base.emit,
                         config.base.osc_divisor);
    if (!config.base.output_path.empty())
        write_text_file(config.base.output_path, out.payload);
    return out;
}

BoundsCheckResult check_bounds(const RunConfig& config, const GreedyHook& hook) {
    config.validate();
    if (config.preset.algorithm == Algorithm::CpiClassic)
        throw ConfigError("check-bounds applies to the entropy-regularized algorithms");
    if (config.preset.algo.noise_sigma != 0.0)
        throw ConfigError("check-bounds requires noise_sigma = 0");
    const TabularMdp mdp = config.env.build();
    const RunResult res = dispatch_run(mdp, config.preset, hook);
    BoundsCheckResult out;
    for (const auto& rec : res.records) {
        out.points.push_back({rec.k + 1, rec.max_tv_consecutive, rec.tv_bound_theorem2});
        if (out.ok && rec.max_tv_consecutive > rec.tv_bound_theorem2 + 1e-9) {
            out.ok = false;
            out.violation_k = rec.k + 1;
        }
    }
    return out;
}

// -- config files ----------------------------------------------------------------

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const char* ctx) {
    if (!obj.is_object())
        throw ConfigError(std::string(ctx) + " must be a JSON object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key))
            throw ConfigError("unknown key '" + key + "' in " + ctx);
}

double get_num(const json& obj, const char* key, double def) {
    if (!obj.contains(key)) return def;
    if (!obj[key].is_number())
        throw ConfigError(std::string("key '") + key + "' must be a number");
    return obj[key].get<double>();
}

std::size_t get_size(const json& obj, const char* key, std::size_t def) {
    if (!obj.contains(key)) return def;
    if (!obj[key].is_number_unsigned())
        throw ConfigError(std::string("key '") + key + "' must be a nonnegative integer");
    return obj[key].get<std::size_t>();
}

bool get_bool(const json& obj, const char* key, bool def) {
    if (!obj.contains(key)) return def;
    if (!obj[key].is_boolean())
        throw ConfigError(std::string("key '") + key + "' must be a boolean");
    return obj[key].get<bool>();
}

std::string get_str(const json& obj, const char* key, const std::string& def) {
    if (!obj.contains(key)) return def;
    if (!obj[key].is_string())
        throw ConfigError(std::string("key '") + key + "' must be a string");
    return obj[key].get<std::string>();
}

EnvSpec parse_env(const json& j) {
    EnvSpec env;
    const std::string kind = get_str(j, "kind", "");
    if (kind == "random_mdp") {
        check_keys(j, {"kind", "num_states", "num_actions", "branching", "seed", "gamma"},
                   "env");
        RandomMdpSpec spec;
        spec.num_states = get_size(j, "num_states", spec.num_states);
        spec.num_actions = get_size(j, "num_actions", spec.num_actions);
        spec.branching = get_size(j, "branching", spec.branching);
        spec.seed = get_size(j, "seed", 0);
        env.kind = spec;
    } else if (kind == "chain") {
        check_keys(j, {"kind", "n", "slip_prob", "gamma"}, "env");
        ChainSpec spec;
        spec.n = get_size(j, "n", spec.n);
        spec.slip_prob = get_num(j, "slip_prob", spec.slip_prob);
        env.kind = spec;
    } else if (kind == "gridworld") {
        check_keys(j, {"kind", "width", "height", "goal_x", "goal_y", "step_cost", "gamma"},
                   "env");
        GridworldSpec spec;
        spec.width = get_size(j, "width", spec.width);
        spec.height = get_size(j, "height", spec.height);
        spec.goal_x = get_size(j, "goal_x", spec.goal_x);
        spec.goal_y = get_size(j, "goal_y", spec.goal_y);
        spec.step_cost = get_num(j, "step_cost", spec.step_cost);
        env.kind = spec;
    } else if (kind == "pendulum") {
        check_keys(j,
                   {"kind", "theta_bins", "thetadot_bins", "torque_levels", "dt",
                    "gravity", "mass", "length", "max_speed", "max_torque", "gamma"},
                   "env");
        PendulumParams spec;
        spec.theta_bins = get_size(j, "theta_bins", spec.theta_bins);
        spec.thetadot_bins = get_size(j, "thetadot_bins", spec.thetadot_bins);
        spec.torque_levels = get_size(j, "torque_levels", spec.torque_levels);
        spec.dt = get_num(j, "dt", spec.dt);
        spec.gravity = get_num(j, "gravity", spec.gravity);
        spec.mass = get_num(j, "mass", spec.mass);
        spec.length = get_num(j, "length", spec.length);
        spec.max_speed = get_num(j, "max_speed", spec.max_speed);
        spec.max_torque = get_num(j, "max_torque", spec.max_torque);
        env.kind = spec;
    } else {
        throw ConfigError("env kind must be one of random_mdp, chain, gridworld, pendulum");
    }
    env.gamma = get_num(j, "gamma", env.gamma);
    return env;
}

AlgoPreset parse_preset(const json& j, const char* ctx) {
    check_keys(j,
               {"name", "algorithm", "kappa", "tau", "iterations", "zeta_mode", "nu_a",
                "nu_maxdiff", "negative_rule", "negative_constant", "eval_tol",
                "noise_sigma", "seed", "epsilon", "evaluate_pre_interpolation",
                "kl_anchor", "sampled_m", "sample_window", "stop_dist_tol",
                "horizon_const"},
               ctx);
    AlgoPreset preset;
    preset.name = get_str(j, "name", "run");
    const std::string algo = get_str(j, "algorithm", "cac");
    if (algo == "cac")
        preset.algorithm = Algorithm::Cac;
    else if (algo == "cvi")
        preset.algorithm = Algorithm::Cvi;
    else if (algo == "spi_shannon")
        preset.algorithm = Algorithm::SpiShannon;
    else if (algo == "cpi_classic")
        preset.algorithm = Algorithm::CpiClassic;
    else if (algo == "dspi")
        preset.algorithm = Algorithm::Cac; // ablation preset, configured below
    else
        throw ConfigError("algorithm must be one of cac, cvi, spi_shannon, cpi_classic, "
                          "dspi");

    try {
        preset.algo.reg = RegParams(get_num(j, "kappa", 0.2), get_num(j, "tau", 0.1));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    preset.algo.iterations = get_size(j, "iterations", 100);
    preset.algo.eval_tol = get_num(j, "eval_tol", kDefaultEvalTol);
    preset.algo.noise_sigma = get_num(j, "noise_sigma", 0.0);
    preset.algo.seed = get_size(j, "seed", 0);
    preset.algo.epsilon = get_num(j, "epsilon", 0.0);
    preset.algo.evaluate_pre_interpolation =
        get_bool(j, "evaluate_pre_interpolation", false);
    const std::string anchor = get_str(j, "kl_anchor", "previous");
    if (anchor == "previous")
        preset.algo.kl_anchor = KlAnchor::PreviousPolicy;
    else if (anchor == "self")
        preset.algo.kl_anchor = KlAnchor::SelfConsistent;
    else
        throw ConfigError("kl_anchor must be 'previous' or 'self'");
    preset.algo.sampled_m = get_bool(j, "sampled_m", false);
    preset.algo.sample_window = get_size(j, "sample_window", 1000);
    preset.algo.stop_dist_tol = get_num(j, "stop_dist_tol", 0.0);

    ZetaMovingState zstate;
    zstate.nu_a = get_num(j, "nu_a", 0.01);
    zstate.nu_maxdiff = get_num(j, "nu_maxdiff", 0.001);
    const std::string rule = get_str(j, "negative_rule", "set_to_m");
    if (rule == "set_to_m")
        zstate.negative_rule = NegativeRule::SetToM;
    else if (rule == "set_to_constant")
        zstate.negative_rule = NegativeRule::SetToConstant;
    else if (rule == "disabled")
        zstate.negative_rule = NegativeRule::Disabled;
    else
        throw ConfigError("negative_rule must be set_to_m, set_to_constant or disabled");
    zstate.negative_constant = get_num(j, "negative_constant", 0.0);

    ZetaMode mode = ZetaModeFixed{1.0};
    if (j.contains("zeta_mode")) {
        const auto& z = j["zeta_mode"];
        if (z.is_number()) {
            mode = ZetaModeFixed{z.get<double>()};
        } else if (z.is_string() && z.get<std::string>() == "adaptive") {
            mode = ZetaModeAdaptive{zstate};
        } else if (z.is_string() && z.get<std::string>() == "exact_lower_bound") {
            mode = ZetaModeExactLowerBound{get_num(j, "horizon_const", 1.0)};
        } else {
            throw ConfigError(
                "zeta_mode must be a number, 'adaptive' or 'exact_lower_bound'");
        }
    }
    if (algo == "dspi") {
        // the ablation of the adaptive rule: moving averages with the
        // nonpositive-M guard switched off
        zstate.negative_rule = NegativeRule::Disabled;
        mode = ZetaModeAdaptive{zstate};
    }
    preset.algo.zeta_mode = mode;

    preset.cpi.iterations = preset.algo.iterations;
    preset.cpi.zeta_rule =
        std::holds_alternative<ZetaModeAdaptive>(mode) ? ZetaMode(ZetaModeFixed{1.0}) : mode;
    preset.cpi.eval_tol = preset.algo.eval_tol;
    preset.cpi.noise_sigma = preset.algo.noise_sigma;
    preset.cpi.seed = preset.algo.seed;
    preset.cpi.stop_dist_tol = preset.algo.stop_dist_tol;
    return preset;
}

EmitFormat parse_emit(const json& j) {
    const std::string fmt = get_str(j, "emit", "csv");
    if (fmt == "csv") return EmitFormat::Csv;
    if (fmt == "json") return EmitFormat::Json;
    throw ConfigError("emit must be 'csv' or 'json'");
}

OscDivisor parse_divisor(const json& j) {
    const std::string d = get_str(j, "osc_divisor", "drops");
    if (d == "drops") return OscDivisor::Drops;
    if (d == "steps") return OscDivisor::Steps;
    throw ConfigError("osc_divisor must be 'drops' or 'steps'");
}

json parse_json_text(const std::string& text) {
    json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) throw ConfigError("config is not valid JSON");
    return j;
}

} // namespace

RunConfig parse_run_config(const std::string& json_text) {
    const json j = parse_json_text(json_text);
    check_keys(j, {"env", "algo", "repeats", "eval_every", "output_path", "emit",
                   "osc_divisor"},
               "config");
    if (!j.contains("env") || !j.contains("algo"))
        throw ConfigError("config requires 'env' and 'algo'");
    RunConfig config;
    config.env = parse_env(j["env"]);
    config.preset = parse_preset(j["algo"], "algo");
    config.repeats = get_size(j, "repeats", 1);
    config.eval_every = get_size(j, "eval_every", 1);
    config.output_path = get_str(j, "output_path", "");
    config.emit = parse_emit(j);
    config.osc_divisor = parse_divisor(j);
    config.validate();
    return config;
}

CompareConfig parse_compare_config(const std::string& json_text) {
    const json j = parse_json_text(json_text);
    check_keys(j, {"env", "presets", "repeats", "eval_every", "output_path", "emit",
                   "osc_divisor"},
               "config");
    if (!j.contains("env") || !j.contains("presets") || !j["presets"].is_array() ||
        j["presets"].empty())
        throw ConfigError("compare config requires 'env' and a non-empty 'presets' array");
    CompareConfig config;
    config.env = parse_env(j["env"]);
    for (const auto& p : j["presets"]) config.presets.push_back(parse_preset(p, "preset"));
    config.repeats = get_size(j, "repeats", 1);
    config.eval_every = get_size(j, "eval_every", 1);
    config.output_path = get_str(j, "output_path", "");
    config.emit = parse_emit(j);
    config.osc_divisor = parse_divisor(j);
    return config;
}

SweepConfig parse_sweep_config(const std::string& json_text) {
    const json j = parse_json_text(json_text);
    check_keys(j, {"env", "algo", "sweep", "repeats", "eval_every", "output_path", "emit",
                   "osc_divisor"},
               "config");
    if (!j.contains("env") || !j.contains("algo") || !j.contains("sweep"))
        throw ConfigError("sweep config requires 'env', 'algo' and 'sweep'");
    SweepConfig config;
    config.base.env = parse_env(j["env"]);
    config.base.preset = parse_preset(j["algo"], "algo");
    config.base.repeats = get_size(j, "repeats", 1);
    config.base.eval_every = get_size(j, "eval_every", 1);
    config.base.output_path = get_str(j, "output_path", "");
    config.base.emit = parse_emit(j);
    config.base.osc_divisor = parse_divisor(j);

    const json& sweep = j["sweep"];
    check_keys(sweep, {"kappa", "tau", "zeta_mode", "noise_sigma"}, "sweep");
    auto num_list = [](const json& arr, const char* what) {
        if (!arr.is_array()) throw ConfigError(std::string(what) + " must be an array");
        std::vector<double> out;
        for (const auto& v : arr) {
            if (!v.is_number())
                throw ConfigError(std::string(what) + " entries must be numbers");
            out.push_back(v.get<double>());
        }
        return out;
    };
    if (sweep.contains("kappa")) config.kappas = num_list(sweep["kappa"], "sweep.kappa");
    if (sweep.contains("tau")) config.taus = num_list(sweep["tau"], "sweep.tau");
    if (sweep.contains("noise_sigma"))
        config.sigmas = num_list(sweep["noise_sigma"], "sweep.noise_sigma");
    if (sweep.contains("zeta_mode")) {
        if (!sweep["zeta_mode"].is_array())
            throw ConfigError("sweep.zeta_mode must be an array");
        for (const auto& z : sweep["zeta_mode"]) {
            if (z.is_number())
                config.zeta_modes.push_back(format_double(z.get<double>()));
            else if (z.is_string())
                config.zeta_modes.push_back(z.get<std::string>());
            else
                throw ConfigError("sweep.zeta_mode entries must be numbers or strings");
        }
    }
    config.base.validate();
    return config;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write file '" + path + "'");
    out << content;
    if (!out) throw ConfigError("write to '" + path + "' failed");
}

} // namespace cac
