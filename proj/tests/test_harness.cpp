#include "cac/harness.hpp"

#include "test_helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace cac;
using namespace cactest;

namespace {

RunConfig small_run_config() {
    RunConfig config;
    RandomMdpSpec env;
    env.num_states = 4;
    env.num_actions = 2;
    env.branching = 2;
    env.seed = 3;
    config.env.kind = env;
    config.env.gamma = 0.9;
    config.preset.algo.reg = RegParams(0.2, 0.1);
    config.preset.algo.iterations = 10;
    return config;
}

} // namespace

TEST_CASE("oscillation metrics: hand-worked sequences") {
    const auto flat = oscillation_metrics({1.0, 1.0, 2.0, 3.5});
    CHECK(flat.sup_drop == 0.0);
    CHECK(flat.rms_drop == 0.0);
    CHECK(flat.num_drops == 0);
    CHECK(flat.num_steps == 3);

    const auto one = oscillation_metrics({0.0, 3.0, 1.0, 2.0});
    CHECK(one.sup_drop == doctest::Approx(2.0));
    CHECK(one.rms_drop == doctest::Approx(2.0));
    CHECK(one.num_drops == 1);

    const auto two = oscillation_metrics({5.0, 4.0, 6.0, 3.0});
    CHECK(two.sup_drop == doctest::Approx(3.0));
    CHECK(two.rms_drop == doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));
    CHECK(two.num_drops == 2);

    const auto steps = oscillation_metrics({5.0, 4.0, 6.0, 3.0}, OscDivisor::Steps);
    CHECK(steps.rms_drop == doctest::Approx(std::sqrt(10.0 / 3.0)).epsilon(1e-12));

    CHECK_THROWS_AS(oscillation_metrics({1.0}), std::invalid_argument);
}

TEST_CASE("oscillation metrics: rms never exceeds sup") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> seq(2 + trial % 30);
        for (auto& x : seq) x = rng.uniform(-3.0, 3.0);
        for (auto divisor : {OscDivisor::Drops, OscDivisor::Steps}) {
            const auto rep = oscillation_metrics(seq, divisor);
            CHECK(rep.rms_drop <= rep.sup_drop + 1e-15);
            CHECK(rep.sup_drop >= 0.0);
        }
    }
}

TEST_CASE("experiment: counting contract and emitted columns") {
    auto config = small_run_config();
    const auto result = run_experiment(config);
    CHECK(result.rows.size() == 10);
    CHECK(result.summaries.size() == 1);
    const auto parsed = parse_csv(result.payload);
    REQUIRE(parsed.size() == 10);
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        CHECK(parsed[i].repeat == 0);
        CHECK(parsed[i].k == i);
    }
    CHECK(result.payload.find("# summary") != std::string::npos);
}

TEST_CASE("experiment: eval_every thins the records") {
    auto config = small_run_config();
    config.eval_every = 3;
    const auto result = run_experiment(config);
    REQUIRE(result.rows.size() == 4); // k = 0, 3, 6, 9
    CHECK(result.rows[1].rec.k == 3);
    CHECK(result.rows[3].rec.k == 9);
}

TEST_CASE("experiment: identical configs emit identical bytes") {
    auto config = small_run_config();
    config.repeats = 3;
    config.preset.algo.noise_sigma = 0.3;
    const auto a = run_experiment(config);
    const auto b = run_experiment(config);
    CHECK(a.payload == b.payload);

    config.emit = EmitFormat::Json;
    const auto c = run_experiment(config);
    const auto d = run_experiment(config);
    CHECK(c.payload == d.payload);
    CHECK(c.payload != a.payload);
}

TEST_CASE("CSV round-trip reproduces the records exactly") {
    auto config = small_run_config();
    config.repeats = 2;
    config.preset.algo.noise_sigma = 0.2; // irrational-looking doubles
    const auto result = run_experiment(config);
    const auto parsed = parse_csv(result.payload);
    REQUIRE(parsed.size() == result.rows.size());
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        const auto& row = result.rows[i];
        CHECK(parsed[i].repeat == row.repeat);
        CHECK(parsed[i].k == row.rec.k);
        CHECK(parsed[i].j == row.rec.return_J);
        CHECK(parsed[i].zeta == row.rec.zeta);
        CHECK(parsed[i].m == row.rec.m);
        CHECK(parsed[i].max_tv == row.rec.max_tv_consecutive);
        CHECK(parsed[i].max_kl == row.rec.max_kl_consecutive);
        CHECK(parsed[i].tv_bound == row.rec.tv_bound_theorem2);
        CHECK(parsed[i].dist_to_opt == row.rec.dist_to_soft_optimal_policy);
    }
}

TEST_CASE("CSV handles infinite KL entries") {
    EmitRow row;
    row.repeat = 0;
    row.rec.k = 0;
    row.rec.max_kl_consecutive = std::numeric_limits<double>::infinity();
    const auto text = emit_csv({row}, false, {}, OscDivisor::Drops);
    CHECK(text.find("inf") != std::string::npos);
    const auto parsed = parse_csv(text);
    REQUIRE(parsed.size() == 1);
    CHECK(std::isinf(parsed[0].max_kl));
}

TEST_CASE("metrics recomputation matches the direct report") {
    auto config = small_run_config();
    config.repeats = 2;
    config.preset.algo.noise_sigma = 0.4;
    config.preset.algo.zeta_mode = ZetaModeAdaptive{};
    const auto result = run_experiment(config);

    const auto report = recompute_metrics(result.payload, OscDivisor::Drops);
    for (const auto& s : result.summaries) {
        const std::string expect = "repeat=" + std::to_string(s.repeat) +
                                   " divisor=drops sup_drop=" +
                                   format_double(s.report.sup_drop) +
                                   " rms_drop=" + format_double(s.report.rms_drop);
        CHECK(report.find(expect) != std::string::npos);
    }
    // with the divisor unset both readings appear
    const auto both = recompute_metrics(result.payload, std::nullopt);
    CHECK(both.find("divisor=drops") != std::string::npos);
    CHECK(both.find("divisor=steps") != std::string::npos);
}

TEST_CASE("config parsing: strict keys and value checks") {
    CHECK_THROWS_AS(parse_run_config("not json"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"algo": {}})"), ConfigError);
    CHECK_THROWS_AS(
        parse_run_config(
            R"({"env": {"kind": "chain"}, "algo": {}, "surprise": 1})"),
        ConfigError);
    CHECK_THROWS_AS(
        parse_run_config(
            R"({"env": {"kind": "chain", "slip": 0.1}, "algo": {}})"),
        ConfigError); // unknown env key
    CHECK_THROWS_AS(
        parse_run_config(
            R"({"env": {"kind": "chain"}, "algo": {"zeta_mode": "sometimes"}})"),
        ConfigError);
    CHECK_THROWS_AS(
        parse_run_config(
            R"({"env": {"kind": "chain"}, "algo": {"kappa": 0, "tau": 0}})"),
        ConfigError);

    const auto config = parse_run_config(R"({
        "env": {"kind": "gridworld", "width": 3, "height": 2, "goal_x": 2, "goal_y": 1,
                "step_cost": 0.5, "gamma": 0.9},
        "algo": {"algorithm": "cac", "kappa": 0.3, "tau": 0.2, "iterations": 7,
                 "zeta_mode": "adaptive", "nu_a": 0.02, "seed": 5},
        "repeats": 2, "eval_every": 1, "emit": "json", "osc_divisor": "steps"})");
    CHECK(config.repeats == 2);
    CHECK(config.emit == EmitFormat::Json);
    CHECK(config.osc_divisor == OscDivisor::Steps);
    CHECK(config.preset.algo.iterations == 7);
    CHECK(config.preset.algo.reg.kappa == doctest::Approx(0.3));
    CHECK(std::holds_alternative<ZetaModeAdaptive>(config.preset.algo.zeta_mode));
    const auto mdp = config.env.build();
    CHECK(mdp.num_states == 6);
}

TEST_CASE("compare and sweep configs parse and run") {
    const auto compare_cfg = parse_compare_config(R"({
        "env": {"kind": "random_mdp", "num_states": 4, "num_actions": 2,
                "branching": 2, "seed": 1, "gamma": 0.9},
        "presets": [
            {"name": "adaptive", "algorithm": "cac", "iterations": 6,
             "zeta_mode": "adaptive"},
            {"name": "greedy", "algorithm": "cvi", "iterations": 6}
        ],
        "repeats": 2})");
    const auto cmp = run_compare(compare_cfg);
    CHECK(cmp.rows.size() == 24);
    CHECK(cmp.rows.front().label == "adaptive");
    CHECK(cmp.rows.back().label == "greedy");
    CHECK(cmp.payload.find("label,repeat,k") == 0);

    const auto sweep_cfg = parse_sweep_config(R"({
        "env": {"kind": "random_mdp", "num_states": 4, "num_actions": 2,
                "branching": 2, "seed": 1, "gamma": 0.9},
        "algo": {"iterations": 5},
        "sweep": {"tau": [0.0, 0.1], "zeta_mode": ["adaptive", 1.0]}})");
    const auto swept = run_sweep(sweep_cfg);
    CHECK(swept.rows.size() == 4 * 5);
    CHECK(swept.rows.front().label.find("tau=0") != std::string::npos);
}

TEST_CASE("check_bounds accepts clean runs and rejects corrupted ones") {
    RunConfig config;
    RandomMdpSpec env;
    env.num_states = 6;
    env.num_actions = 3;
    env.branching = 3;
    env.seed = 9;
    config.env.kind = env;
    config.env.gamma = 0.5; // the bound tightens quickly at small gamma
    config.preset.algorithm = Algorithm::Cvi;
    config.preset.algo.reg = RegParams(0.2, 0.1);
    config.preset.algo.iterations = 30;

    const auto clean = check_bounds(config);
    CHECK(clean.ok);
    REQUIRE(!clean.points.empty());
    CHECK(clean.points[0].k == 1);
    // k = 1 bound: sqrt(2 beta) with epsilon = 0, r_max = 1
    CHECK(clean.points[0].bound == doctest::Approx(2.581988897471611).epsilon(1e-12));

    GreedyHook corrupt = [](std::size_t k, Policy& greedy) {
        if (k != 20) return;
        Grid2 probs(greedy.num_states(), greedy.num_actions(), 0.0);
        for (std::size_t s = 0; s < greedy.num_states(); ++s)
            probs(s, greedy(s, 0) > 0.5 ? 1 : 0) = 1.0;
        greedy = Policy(std::move(probs));
    };
    const auto broken = check_bounds(config, corrupt);
    CHECK(!broken.ok);
    CHECK(broken.violation_k == 21);

    config.preset.algo.noise_sigma = 0.1;
    CHECK_THROWS_AS(check_bounds(config), ConfigError);
}

TEST_CASE("experiment failures map to the documented exit paths") {
    auto config = small_run_config();
    config.output_path = "/nonexistent-dir/out.csv";
    CHECK_THROWS_AS(run_experiment(config), ConfigError);

    config = small_run_config();
    config.preset.algo.eval_max_iter = 2; // forces a convergence failure
    CHECK_THROWS_AS(run_experiment(config), ConvergenceError);
}
