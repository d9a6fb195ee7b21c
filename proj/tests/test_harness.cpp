#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "iflow/harness.hpp"

using namespace iflow;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

// Small, fast experiment: quadratic objective under 1/t damping.
ExperimentConfig small_config(const std::string& name) {
    ExperimentConfig cfg;
    cfg.name = name;
    cfg.objective.kind = "power";
    cfg.objective.gamma = 2.0;
    cfg.objective.scale = 0.5;
    cfg.objective.dim = 2;
    cfg.objective.radius = 2.0;
    cfg.damping = DampingSpec{4.0, 1.0, 1.0};
    cfg.horizon = 100.0;
    cfg.solver.rel_tol = 1e-9;
    cfg.solver.abs_tol = 1e-12;
    cfg.solver.grid.points_per_decade = 100.0;
    cfg.fit.t_lo = 1.0;
    cfg.fit.t_hi = 100.0;
    cfg.cases = {RateCase::SharpNesterov};
    cfg.write_outputs = false;
    return cfg;
}

struct EnvGuard {
    std::string name;
    std::string saved;
    bool had = false;
    explicit EnvGuard(const std::string& n) : name(n) {
        if (const char* v = std::getenv(n.c_str())) {
            saved = v;
            had = true;
        }
    }
    ~EnvGuard() {
        if (had)
            ::setenv(name.c_str(), saved.c_str(), 1);
        else
            ::unsetenv(name.c_str());
    }
};

}  // namespace

TEST_CASE("config JSON parsing accepts the documented schema") {
    const std::string text = R"({
        "name": "parse-check",
        "objective": {"kind": "power", "gamma": 4.0, "dim": 2, "scale": 1.0,
                      "minimizer": [0, 0]},
        "damping": {"alpha": 3.0, "theta": 1.0, "t0": 1.0},
        "schedule": {"kind": "powerlaw", "c": 0.05, "q": 3.5,
                     "direction": "fixed", "seed": 7},
        "horizon": 1000.0,
        "fit": {"t_lo": 10.0, "t_hi": 1000.0},
        "cases": ["flat-perturbed", "flat-velocity"]
    })";
    ExperimentConfig cfg = config_from_json(text);
    CHECK(cfg.name == "parse-check");
    CHECK(cfg.objective.gamma == 4.0);
    CHECK(cfg.objective.dim == 2);
    REQUIRE(cfg.objective.minimizer.size() == 2);
    CHECK(cfg.damping.alpha == 3.0);
    CHECK(cfg.schedule.kind == PerturbationSchedule::Kind::PowerLaw);
    CHECK(cfg.schedule.c == 0.05);
    CHECK(cfg.schedule.q == 3.5);
    CHECK(cfg.schedule.dim == 2);  // resolved from the objective
    CHECK(cfg.horizon == 1000.0);
    CHECK(cfg.fit.t_lo == 10.0);
    CHECK(cfg.fit.t_hi == 1000.0);
    REQUIRE(cfg.cases.size() == 2);
    CHECK(cfg.cases[0] == RateCase::FlatPerturbed);
    CHECK(cfg.cases[1] == RateCase::FlatVelocity);
    // Defaults: start one unit from the minimizer, at rest.
    REQUIRE(cfg.x0.size() == 2);
    CHECK(cfg.x0[0] == 1.0);
    CHECK(cfg.x0[1] == 0.0);
    CHECK(cfg.v0 == Vec{0.0, 0.0});
}

TEST_CASE("config JSON parsing rejects malformed input") {
    // Not JSON at all.
    CHECK_THROWS_AS(config_from_json("{not json"), std::invalid_argument);
    // Unknown top-level key (typo protection).
    CHECK_THROWS_AS(config_from_json(R"({"nam": "x"})"), std::invalid_argument);
    // Unknown nested key.
    CHECK_THROWS_AS(config_from_json(R"({"objective": {"kind": "power", "gama": 4}})"),
                    std::invalid_argument);
    // Wrong type.
    CHECK_THROWS_AS(config_from_json(R"({"horizon": "long"})"), std::invalid_argument);
    CHECK_THROWS_AS(config_from_json(R"({"cases": ["no-such-case"]})"),
                    std::invalid_argument);
    // Unknown schedule kind.
    CHECK_THROWS_AS(config_from_json(R"({"schedule": {"kind": "ramp"}})"),
                    std::invalid_argument);
    // Fit window inverted.
    CHECK_THROWS_AS(
        config_from_json(R"({"fit": {"t_lo": 100.0, "t_hi": 10.0}})"),
        std::invalid_argument);
    // Geometry overrides no objective can satisfy: gamma2 below gamma1.
    CHECK_THROWS_AS(
        config_from_json(R"({"objective": {"kind": "power", "gamma": 4.0, "gamma2": 3.0}})"),
        std::invalid_argument);
    // Missing file.
    CHECK_THROWS_AS(config_from_json_file("/nonexistent/missing.json"),
                    std::invalid_argument);
}

TEST_CASE("config round-trips through its JSON serialization") {
    for (const ExperimentConfig& cfg : presets()) {
        ExperimentConfig back = config_from_json(config_to_json(cfg));
        CHECK(back.name == cfg.name);
        CHECK(back.objective.kind == cfg.objective.kind);
        CHECK(back.damping.alpha == cfg.damping.alpha);
        CHECK(back.damping.theta == cfg.damping.theta);
        CHECK(back.schedule.kind == cfg.schedule.kind);
        CHECK(back.horizon == cfg.horizon);
        CHECK(back.fit.t_lo == cfg.fit.t_lo);
        CHECK(back.fit.t_hi == cfg.fit.t_hi);
        CHECK(back.cases == cfg.cases);
        CHECK(back.x0 == cfg.x0);
    }
}

TEST_CASE("shipped presets cover every convergence regime") {
    const std::vector<ExperimentConfig>& all = presets();
    CHECK(all.size() >= 8);

    std::set<std::string> names;
    std::set<RateCase> covered;
    for (const ExperimentConfig& cfg : all) {
        CHECK(names.insert(cfg.name).second);  // unique names
        CHECK(cfg.horizon > cfg.damping.t0);
        CHECK(!cfg.x0.empty());
        for (RateCase c : cfg.cases) covered.insert(c);
        // Each preset is retrievable by name.
        CHECK(preset(cfg.name).name == cfg.name);
    }
    for (RateCase c : {RateCase::SharpNesterovSubcritical, RateCase::SharpNesterov,
                       RateCase::SharpHeavyBall, RateCase::FlatUnperturbed,
                       RateCase::FlatPerturbed, RateCase::FlatVelocity})
        CHECK(covered.count(c) == 1);

    CHECK_THROWS_AS(preset("no-such-preset"), std::invalid_argument);
}

TEST_CASE("a small experiment runs, certifies and verifies end to end") {
    ExperimentConfig cfg = small_config("smoke");
    cfg.horizon = 1000.0;
    cfg.solver.rel_tol = 1e-10;
    cfg.solver.abs_tol = 1e-13;
    cfg.solver.grid.points_per_decade = 200.0;
    cfg.fit.t_lo = 10.0;
    cfg.fit.t_hi = 1000.0;

    ExperimentReport rep = run_experiment(cfg);
    REQUIRE(rep.status == "ok");
    CHECK(rep.error.empty());
    CHECK(rep.energy_variant == "NesterovSharp");
    CHECK(rep.flatness.pass);
    CHECK(rep.sharpness.pass);
    CHECK(rep.within_radius);
    CHECK(rep.stats.n_accepted > 0);
    CHECK(rep.duration_seconds > 0.0);

    REQUIRE(!rep.certifications.empty());
    for (const CertificationReport& c : rep.certifications) {
        CHECK(c.pass);
        CHECK(c.violating_times.empty());
    }

    // Requested case first, then the remaining dispatched statements.
    REQUIRE(!rep.cases.empty());
    CHECK(rep.cases[0].kase == RateCase::SharpNesterov);
    for (const CaseOutcome& c : rep.cases) {
        CHECK(c.hypotheses_hold);
        CHECK(c.fitted);
        CHECK(c.verdict.pass);
    }
    CHECK(report_passed(rep));

    // The JSON export carries the documented fields.
    nlohmann::json j = nlohmann::json::parse(report_to_json(rep));
    CHECK(j.contains("config"));
    CHECK(j["status"] == "ok");
    CHECK(j.contains("certifications"));
    CHECK(j.contains("monotonicity"));
    CHECK(j["energy_variant"] == "NesterovSharp");
    REQUIRE(j.contains("cases"));
    const nlohmann::json& c0 = j["cases"][0];
    CHECK(c0["case"] == "sharp-nesterov");
    CHECK(c0["kind"] == "poly");
    CHECK(c0.contains("predicted"));
    CHECK(c0.contains("fitted"));
    CHECK(c0.contains("window"));
    CHECK(c0.contains("residual_rms"));
    CHECK(c0.contains("envelope_used"));
    CHECK(c0["verdict"] == "pass");
}

TEST_CASE("a failed geometry audit aborts the run with an error report") {
    ExperimentConfig cfg = small_config("bad-modulus");
    cfg.objective.K_override = 4.0;  // claims 8x the true sharpness constant
    ExperimentReport rep = run_experiment(cfg);
    CHECK(rep.status == "error");
    CHECK(!rep.error.empty());
    CHECK_FALSE(report_passed(rep));
}

TEST_CASE("requested cases whose hypotheses fail are reported, not dropped") {
    ExperimentConfig cfg = small_config("wrong-case");
    cfg.cases = {RateCase::FlatUnperturbed};  // quadratic geometry is not flat
    ExperimentReport rep = run_experiment(cfg);
    REQUIRE(rep.status == "ok");
    REQUIRE(!rep.cases.empty());
    CHECK(rep.cases[0].kase == RateCase::FlatUnperturbed);
    CHECK_FALSE(rep.cases[0].hypotheses_hold);
    CHECK_FALSE(rep.cases[0].note.empty());
    CHECK_FALSE(report_passed(rep));
}

TEST_CASE("output directory honors the environment override and is reproducible") {
    EnvGuard guard("INERTIAL_FLOW_OUT");
    const fs::path base1 = fs::temp_directory_path() / "iflow-test-out-1";
    const fs::path base2 = fs::temp_directory_path() / "iflow-test-out-2";
    fs::remove_all(base1);
    fs::remove_all(base2);

    ExperimentConfig cfg = small_config("env-out");
    cfg.write_outputs = true;

    ::setenv("INERTIAL_FLOW_OUT", base1.string().c_str(), 1);
    ExperimentReport r1 = run_experiment(cfg);
    ::setenv("INERTIAL_FLOW_OUT", base2.string().c_str(), 1);
    ExperimentReport r2 = run_experiment(cfg);

    REQUIRE(r1.status == "ok");
    REQUIRE(r2.status == "ok");
    CHECK(r1.output_dir == (base1 / "env-out").string());
    CHECK(r2.output_dir == (base2 / "env-out").string());

    for (const fs::path& base : {base1, base2}) {
        CHECK(fs::exists(base / "env-out" / "trajectory.csv"));
        CHECK(fs::exists(base / "env-out" / "energy.csv"));
        CHECK(fs::exists(base / "env-out" / "energy_params.json"));
        CHECK(fs::exists(base / "env-out" / "report.json"));
    }

    // Bit-for-bit deterministic artifacts.
    CHECK(read_file(base1 / "env-out" / "trajectory.csv") ==
          read_file(base2 / "env-out" / "trajectory.csv"));
    CHECK(read_file(base1 / "env-out" / "energy.csv") ==
          read_file(base2 / "env-out" / "energy.csv"));

    // The on-disk report is valid JSON naming the same experiment.
    nlohmann::json j = nlohmann::json::parse(read_file(base1 / "env-out" / "report.json"));
    CHECK(j["config"]["name"] == "env-out");

    fs::remove_all(base1);
    fs::remove_all(base2);
}

TEST_CASE("batch execution matches sequential execution field by field") {
    std::vector<ExperimentConfig> cfgs;
    cfgs.push_back(small_config("batch-a"));
    cfgs.push_back(small_config("batch-b"));
    cfgs.back().damping.alpha = 5.0;
    cfgs.push_back(small_config("batch-c"));
    cfgs.back().schedule = powerlaw_schedule(2, 0.05, 3.5);

    std::vector<ExperimentReport> seq = run_batch(cfgs, 1);
    std::vector<ExperimentReport> par = run_batch(cfgs, 4);
    REQUIRE(seq.size() == 3);
    REQUIRE(par.size() == 3);
    for (std::size_t i = 0; i < seq.size(); ++i) {
        CHECK(par[i].config.name == cfgs[i].name);  // input order preserved
        CHECK(seq[i].status == par[i].status);
        REQUIRE(seq[i].cases.size() == par[i].cases.size());
        for (std::size_t k = 0; k < seq[i].cases.size(); ++k) {
            CHECK(seq[i].cases[k].fitted == par[i].cases[k].fitted);
            CHECK(seq[i].cases[k].fit.fitted == par[i].cases[k].fit.fitted);
            CHECK(seq[i].cases[k].verdict.pass == par[i].cases[k].verdict.pass);
        }
        REQUIRE(seq[i].certifications.size() == par[i].certifications.size());
        for (std::size_t k = 0; k < seq[i].certifications.size(); ++k)
            CHECK(seq[i].certifications[k].max_excess ==
                  par[i].certifications[k].max_excess);
    }

    // A batch of one is the same as a direct run.
    ExperimentReport direct = run_experiment(cfgs[0]);
    std::vector<ExperimentReport> one = run_batch({cfgs[0]}, 2);
    REQUIRE(one.size() == 1);
    CHECK(one[0].cases[0].fit.fitted == direct.cases[0].fit.fitted);

    CHECK(run_batch({}, 2).empty());

    std::vector<ExperimentConfig> dup = {small_config("same"), small_config("same")};
    CHECK_THROWS_AS(run_batch(dup, 2), std::invalid_argument);
    CHECK_THROWS_AS(run_batch(cfgs, 0), std::invalid_argument);
}
