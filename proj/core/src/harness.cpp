#include "iflow/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace iflow {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// enum <-> string helpers for the config vocabulary

const char* schedule_kind_name(PerturbationSchedule::Kind k) {
    switch (k) {
        case PerturbationSchedule::Kind::Zero: return "zero";
        case PerturbationSchedule::Kind::PowerLaw: return "powerlaw";
        case PerturbationSchedule::Kind::ExpGamma: return "expgamma";
    }
    return "zero";
}

PerturbationSchedule::Kind schedule_kind_from(const std::string& s) {
    if (s == "zero") return PerturbationSchedule::Kind::Zero;
    if (s == "powerlaw") return PerturbationSchedule::Kind::PowerLaw;
    if (s == "expgamma") return PerturbationSchedule::Kind::ExpGamma;
    throw std::invalid_argument(fmt::format(
        "config: unknown schedule kind \"{}\" (expected zero|powerlaw|expgamma)", s));
}

const char* direction_name(DirectionMode m) {
    return m == DirectionMode::Fixed ? "fixed" : "random";
}

DirectionMode direction_from(const std::string& s) {
    if (s == "fixed") return DirectionMode::Fixed;
    if (s == "random") return DirectionMode::SeededRandom;
    throw std::invalid_argument(fmt::format(
        "config: unknown direction mode \"{}\" (expected fixed|random)", s));
}

const char* grid_kind_name(GridSpec::Kind k) {
    return k == GridSpec::Kind::LogUniform ? "log" : "uniform";
}

GridSpec::Kind grid_kind_from(const std::string& s) {
    if (s == "log") return GridSpec::Kind::LogUniform;
    if (s == "uniform") return GridSpec::Kind::Uniform;
    throw std::invalid_argument(
        fmt::format("config: unknown grid kind \"{}\" (expected log|uniform)", s));
}

const char* weight_kind_name(IntegralWeight::Kind k) {
    switch (k) {
        case IntegralWeight::Kind::None: return "none";
        case IntegralWeight::Kind::Poly: return "poly";
        case IntegralWeight::Kind::Exp: return "exp";
    }
    return "none";
}

// ---------------------------------------------------------------------------
// JSON parsing helpers (strict: unknown keys and wrong types are errors)

void require_keys(const json& j, const char* where,
                  std::initializer_list<const char*> allowed) {
    if (!j.is_object())
        throw std::invalid_argument(fmt::format("config: {} must be a JSON object", where));
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known)
            throw std::invalid_argument(
                fmt::format("config: unknown key \"{}\" in {}", it.key(), where));
    }
}

double get_num(const json& j, const char* key, double dflt) {
    if (!j.contains(key)) return dflt;
    const json& v = j.at(key);
    if (!v.is_number())
        throw std::invalid_argument(fmt::format("config: \"{}\" must be a number", key));
    return v.get<double>();
}

long get_int(const json& j, const char* key, long dflt) {
    if (!j.contains(key)) return dflt;
    const json& v = j.at(key);
    if (!v.is_number_integer())
        throw std::invalid_argument(fmt::format("config: \"{}\" must be an integer", key));
    return v.get<long>();
}

bool get_bool(const json& j, const char* key, bool dflt) {
    if (!j.contains(key)) return dflt;
    const json& v = j.at(key);
    if (!v.is_boolean())
        throw std::invalid_argument(fmt::format("config: \"{}\" must be a boolean", key));
    return v.get<bool>();
}

std::string get_str(const json& j, const char* key, const std::string& dflt) {
    if (!j.contains(key)) return dflt;
    const json& v = j.at(key);
    if (!v.is_string())
        throw std::invalid_argument(fmt::format("config: \"{}\" must be a string", key));
    return v.get<std::string>();
}

Vec get_vec(const json& j, const char* key) {
    Vec out;
    if (!j.contains(key)) return out;
    const json& v = j.at(key);
    if (!v.is_array())
        throw std::invalid_argument(fmt::format("config: \"{}\" must be an array", key));
    out.reserve(v.size());
    for (const json& e : v) {
        if (!e.is_number())
            throw std::invalid_argument(
                fmt::format("config: \"{}\" must contain only numbers", key));
        out.push_back(e.get<double>());
    }
    return out;
}

ObjectiveSpec objective_from(const json& j) {
    require_keys(j, "objective",
                 {"kind", "gamma", "exponents", "scale", "radius", "dim", "minimizer",
                  "gamma2", "K"});
    ObjectiveSpec s;
    s.kind = get_str(j, "kind", "power");
    s.gamma = get_num(j, "gamma", 2.0);
    s.exponents = get_vec(j, "exponents");
    s.scale = get_num(j, "scale", 1.0);
    s.radius = get_num(j, "radius", 2.0);
    s.dim = static_cast<int>(get_int(j, "dim", 2));
    s.minimizer = get_vec(j, "minimizer");
    s.gamma2_override = get_num(j, "gamma2", 0.0);
    s.K_override = get_num(j, "K", 0.0);
    return s;
}

DampingSpec damping_from(const json& j) {
    require_keys(j, "damping", {"alpha", "theta", "t0"});
    DampingSpec d;
    d.alpha = get_num(j, "alpha", d.alpha);
    d.theta = get_num(j, "theta", d.theta);
    d.t0 = get_num(j, "t0", d.t0);
    return d;
}

PerturbationSchedule schedule_from(const json& j) {
    require_keys(j, "schedule",
                 {"kind", "c", "q", "mprime", "direction", "fixed_direction", "seed",
                  "delta_dir"});
    PerturbationSchedule g;
    g.kind = schedule_kind_from(get_str(j, "kind", "zero"));
    g.c = get_num(j, "c", 0.0);
    g.q = get_num(j, "q", 0.0);
    g.mprime = get_num(j, "mprime", 0.0);
    g.direction = direction_from(get_str(j, "direction", "fixed"));
    g.fixed_direction = get_vec(j, "fixed_direction");
    g.seed = static_cast<std::uint64_t>(get_int(j, "seed", 0));
    g.delta_dir = get_num(j, "delta_dir", g.delta_dir);
    return g;
}

SolverConfig solver_from(const json& j) {
    require_keys(j, "solver",
                 {"rel_tol", "abs_tol", "max_step", "initial_step", "max_steps", "grid"});
    SolverConfig c;
    c.rel_tol = get_num(j, "rel_tol", c.rel_tol);
    c.abs_tol = get_num(j, "abs_tol", c.abs_tol);
    c.max_step = get_num(j, "max_step", c.max_step);
    c.initial_step = get_num(j, "initial_step", c.initial_step);
    c.max_steps = get_int(j, "max_steps", c.max_steps);
    if (j.contains("grid")) {
        const json& gj = j.at("grid");
        require_keys(gj, "solver.grid", {"kind", "points_per_decade", "dt"});
        c.grid.kind = grid_kind_from(get_str(gj, "kind", "log"));
        c.grid.points_per_decade = get_num(gj, "points_per_decade", c.grid.points_per_decade);
        c.grid.dt = get_num(gj, "dt", c.grid.dt);
    }
    return c;
}

FitSpec fit_from(const json& j) {
    require_keys(j, "fit", {"t_lo", "t_hi", "envelope", "slack"});
    FitSpec f;
    f.t_lo = get_num(j, "t_lo", 0.0);
    f.t_hi = get_num(j, "t_hi", 0.0);
    f.envelope = get_bool(j, "envelope", true);
    f.slack = get_num(j, "slack", -1.0);
    return f;
}

json vec_json(const Vec& v) {
    json a = json::array();
    for (double x : v) a.push_back(x);
    return a;
}

// Infinite margins are legal (zero schedule, regime mismatches); JSON has no
// literal for them, so they travel as strings.
json finite_or_str(double x) {
    if (std::isfinite(x)) return json(x);
    return json(x > 0 ? "inf" : "-inf");
}

json objective_json(const ObjectiveSpec& s) {
    json j;
    j["kind"] = s.kind;
    if (s.kind == "anisotropic") {
        j["exponents"] = vec_json(s.exponents);
    } else {
        j["gamma"] = s.gamma;
        j["scale"] = s.scale;
    }
    j["dim"] = s.dim;
    j["radius"] = s.radius;
    j["minimizer"] = vec_json(s.minimizer);
    if (s.gamma2_override > 0.0) j["gamma2"] = s.gamma2_override;
    if (s.K_override > 0.0) j["K"] = s.K_override;
    return j;
}

json schedule_json(const PerturbationSchedule& g) {
    json j;
    j["kind"] = schedule_kind_name(g.kind);
    if (g.kind == PerturbationSchedule::Kind::Zero) return j;
    j["c"] = g.c;
    if (g.kind == PerturbationSchedule::Kind::PowerLaw) j["q"] = g.q;
    if (g.kind == PerturbationSchedule::Kind::ExpGamma) j["mprime"] = g.mprime;
    j["direction"] = direction_name(g.direction);
    if (g.direction == DirectionMode::Fixed) {
        if (!g.fixed_direction.empty()) j["fixed_direction"] = vec_json(g.fixed_direction);
    } else {
        j["seed"] = g.seed;
        j["delta_dir"] = g.delta_dir;
    }
    return j;
}

json config_json(const ExperimentConfig& cfg) {
    json j;
    j["name"] = cfg.name;
    j["objective"] = objective_json(cfg.objective);
    j["damping"] = {{"alpha", cfg.damping.alpha},
                    {"theta", cfg.damping.theta},
                    {"t0", cfg.damping.t0}};
    j["schedule"] = schedule_json(cfg.schedule);
    j["x0"] = vec_json(cfg.x0);
    j["v0"] = vec_json(cfg.v0);
    j["solver"] = {{"rel_tol", cfg.solver.rel_tol},
                   {"abs_tol", cfg.solver.abs_tol},
                   {"max_step", cfg.solver.max_step},
                   {"initial_step", cfg.solver.initial_step},
                   {"max_steps", cfg.solver.max_steps},
                   {"grid",
                    {{"kind", grid_kind_name(cfg.solver.grid.kind)},
                     {"points_per_decade", cfg.solver.grid.points_per_decade},
                     {"dt", cfg.solver.grid.dt}}}};
    j["horizon"] = cfg.horizon;
    j["fit"] = {{"t_lo", cfg.fit.t_lo},
                {"t_hi", cfg.fit.t_hi},
                {"envelope", cfg.fit.envelope},
                {"slack", cfg.fit.slack}};
    if (cfg.t3_m > 0.0) j["t3_m"] = cfg.t3_m;
    json cases = json::array();
    for (RateCase c : cfg.cases) cases.push_back(to_string(c));
    j["cases"] = cases;
    j["out_dir"] = cfg.out_dir;
    return j;
}

// Fills derived defaults and validates everything that does not need a
// simulation. Called both by the JSON parser and by run_experiment, so
// programmatic configs get the same treatment as file-based ones.
void normalize(ExperimentConfig& cfg) {
    if (cfg.name.empty()) throw std::invalid_argument("config: name must be non-empty");
    validate(cfg.damping);

    ObjectiveSpec& os = cfg.objective;
    if (os.kind == "anisotropic" && !os.exponents.empty())
        os.dim = static_cast<int>(os.exponents.size());
    if (os.dim < 1) throw std::invalid_argument("config: objective dim must be >= 1");
    if (os.minimizer.empty()) os.minimizer.assign(static_cast<std::size_t>(os.dim), 0.0);
    if (static_cast<int>(os.minimizer.size()) != os.dim)
        throw std::invalid_argument("config: minimizer length must match objective dim");

    // Build the objective once to surface bad parameters now, and check the
    // declared geometry (with overrides) is one some objective can have.
    ObjectivePtr f = make_objective(os);
    GeometryClass geom = f->geometry();
    if (os.gamma2_override > 0.0) geom.gamma2 = os.gamma2_override;
    if (os.K_override > 0.0) geom.K = os.K_override;
    validate(geom);

    if (cfg.horizon <= 0.0) cfg.horizon = 1e4 * cfg.damping.t0;
    if (cfg.horizon <= cfg.damping.t0)
        throw std::invalid_argument("config: horizon must exceed damping t0");

    cfg.schedule.dim = os.dim;
    cfg.schedule.t0 = cfg.damping.t0;
    cfg.schedule.damping = cfg.damping;
    validate(cfg.schedule);

    if (cfg.x0.empty()) {
        cfg.x0 = os.minimizer;
        cfg.x0[0] += 1.0;
    }
    if (cfg.v0.empty()) cfg.v0.assign(static_cast<std::size_t>(os.dim), 0.0);
    if (static_cast<int>(cfg.x0.size()) != os.dim ||
        static_cast<int>(cfg.v0.size()) != os.dim)
        throw std::invalid_argument("config: x0/v0 length must match objective dim");

    if (cfg.fit.t_lo <= 0.0) cfg.fit.t_lo = std::max(cfg.damping.t0, cfg.horizon / 100.0);
    if (cfg.fit.t_hi <= 0.0) cfg.fit.t_hi = cfg.horizon;
    if (!(cfg.fit.t_lo < cfg.fit.t_hi))
        throw std::invalid_argument("config: fit window must satisfy t_lo < t_hi");
}

json sampled_check_json(const SampledCheck& c) {
    return {{"pass", c.pass}, {"max_violation", c.max_violation}, {"samples", c.samples}};
}

json certification_json(const CertificationReport& c) {
    json j;
    j["name"] = c.name;
    j["pass"] = c.pass;
    j["n_checked"] = c.n_checked;
    j["max_excess"] = c.max_excess;
    j["tol_at_worst"] = c.tol_at_worst;
    j["worst_time"] = c.worst_time;
    j["n_violations"] = c.violating_times.size();
    json vt = json::array();
    std::size_t n_listed = std::min<std::size_t>(c.violating_times.size(), 16);
    for (std::size_t i = 0; i < n_listed; ++i) vt.push_back(c.violating_times[i]);
    j["violating_times"] = vt;
    return j;
}

json monotonicity_json(const LabeledMonotonicity& m) {
    return {{"series", m.series},
            {"informational", m.informational},
            {"tol", m.report.tol},
            {"onset_hint", m.report.onset_hint},
            {"first_monotone_time", m.report.first_monotone_time},
            {"n_rises_after_hint", m.report.n_rises_after_hint},
            {"fraction_rises_after_hint", m.report.fraction_rises_after_hint},
            {"max_rise", m.report.max_rise},
            {"pass", m.report.pass}};
}

json case_json(const CaseOutcome& c) {
    json j;
    j["case"] = to_string(c.kase);
    j["hypotheses_hold"] = c.hypotheses_hold;
    if (!c.note.empty()) j["note"] = c.note;
    if (c.hypotheses_hold) {
        const RatePrediction& p = c.prediction;
        j["kind"] = to_string(p.kind);
        j["predicted"] = p.kind == FitKind::ExpGamma ? p.m : p.exponent;
        j["velocity"] = p.velocity;
        j["weight"] = {{"kind", weight_kind_name(p.weight.kind)},
                       {"p", p.weight.p},
                       {"m", p.weight.m}};
        j["margin"] = finite_or_str(p.margin);
    }
    if (c.fitted) {
        j["fitted"] = c.fit.fitted;
        j["window"] = {c.fit.window.t_lo, c.fit.window.t_hi};
        j["residual_rms"] = c.fit.residual_rms;
        j["envelope_used"] = c.fit.envelope_used;
        j["n_used"] = c.fit.n_used;
        j["n_excluded_floor"] = c.fit.n_excluded_floor;
        j["floor"] = c.fit.floor;
        j["verdict"] = c.verdict.pass ? "pass" : "fail";
        j["required"] = c.verdict.required;
        j["slack"] = c.verdict.slack;
        j["detail"] = c.verdict.detail;
    } else {
        j["verdict"] = "not-fitted";
    }
    return j;
}

json terminal_json(const TerminalDecayCheck& t) {
    return {{"quantity", t.quantity},
            {"m", t.m},
            {"calibration_time", t.calibration_time},
            {"C", t.C},
            {"bound_at_horizon", t.bound_at_horizon},
            {"value_at_horizon", t.value_at_horizon},
            {"pass", t.pass}};
}

json params_json(const LyapunovParams& p) {
    return {{"variant", to_string(p.variant)},
            {"gamma", p.gamma},
            {"gamma2", p.gamma2},
            {"K", p.K},
            {"alpha", p.alpha},
            {"theta", p.theta},
            {"t0", p.t0},
            {"r", p.r},
            {"p", p.p},
            {"lambda0", p.lambda0},
            {"xi0", p.xi0}};
}

json report_json_obj(const ExperimentReport& r) {
    json j;
    j["config"] = config_json(r.config);
    j["status"] = r.status;
    if (!r.error.empty()) j["error"] = r.error;
    j["geometry"] = {{"gamma1", r.geometry.gamma1},
                     {"gamma2", r.geometry.gamma2},
                     {"K", r.geometry.K},
                     {"radius", r.geometry.radius}};
    j["flatness_check"] = sampled_check_json(r.flatness);
    j["sharpness_check"] = sampled_check_json(r.sharpness);
    j["stats"] = {{"n_attempted", r.stats.n_attempted},
                  {"n_accepted", r.stats.n_accepted},
                  {"n_rejected", r.stats.n_rejected},
                  {"n_rhs_evals", r.stats.n_rhs_evals},
                  {"min_step", r.stats.min_step},
                  {"max_step", r.stats.max_step}};
    j["max_excursion"] = r.max_excursion;
    j["within_radius"] = r.within_radius;
    j["energy_variant"] = r.energy_variant;
    if (!r.energy_note.empty()) j["energy_note"] = r.energy_note;
    json certs = json::array();
    for (const auto& c : r.certifications) certs.push_back(certification_json(c));
    j["certifications"] = certs;
    json mono = json::array();
    for (const auto& m : r.monotonicity) mono.push_back(monotonicity_json(m));
    j["monotonicity"] = mono;
    json term = json::array();
    for (const auto& t : r.terminal_checks) term.push_back(terminal_json(t));
    j["terminal_checks"] = term;
    json cases = json::array();
    for (const auto& c : r.cases) cases.push_back(case_json(c));
    j["cases"] = cases;
    j["duration_seconds"] = r.duration_seconds;
    j["output_dir"] = r.output_dir;
    return j;
}

double dist_sq(const Vec& x, const Vec& xstar) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double d = x[i] - xstar[i];
        s += d * d;
    }
    return s;
}

TerminalDecayCheck terminal_check(const Trajectory& traj, const Objective& f,
                                  const DampingSpec& d, double m, bool speed) {
    TerminalDecayCheck tc;
    tc.quantity = speed ? "speed_sq" : "dist_sq";
    tc.m = m;
    tc.calibration_time = std::min(10.0 * d.t0, traj.t.back());
    const Vec& xstar = f.minimizer();
    double C = 0.0;
    for (std::size_t i = 0; i < traj.t.size(); ++i) {
        if (traj.t[i] > tc.calibration_time) break;
        double q = speed ? norm_sq(traj.v[i]) : dist_sq(traj.x[i], xstar);
        C = std::max(C, q * std::exp(m * gamma_integral(d, traj.t[i])));
    }
    tc.C = C;
    std::size_t last = traj.t.size() - 1;
    tc.bound_at_horizon = C * std::exp(-m * gamma_integral(d, traj.t[last]));
    tc.value_at_horizon =
        speed ? norm_sq(traj.v[last]) : dist_sq(traj.x[last], xstar);
    tc.pass = tc.value_at_horizon <= tc.bound_at_horizon * (1.0 + 1e-9);
    return tc;
}

// The energy variant whose hypotheses the (damping, geometry) pair satisfies,
// or nullopt plus an explanation.
struct VariantChoice {
    bool has = false;
    EnergyForm form = EnergyForm::NesterovSharp;
    std::string note;
};

VariantChoice choose_variant(const DampingSpec& d, const GeometryClass& geom) {
    VariantChoice vc;
    const double g1 = geom.gamma1;
    const bool sharp =
        g1 >= 1.0 && g1 <= 2.0 && std::abs(geom.gamma2 - 2.0) <= 1e-9 && geom.K > 0.0;
    const bool flat = g1 > 2.0 && geom.gamma2 >= g1;
    if (sharp) {
        if (d.theta == 1.0) {
            if (d.alpha >= 1.0 + 2.0 / g1) {
                vc.has = true;
                vc.form = EnergyForm::NesterovSharp;
            } else {
                vc.note = "no energy certificate: theta = 1 with alpha below 1 + 2/gamma1 "
                          "(subcritical damping)";
            }
        } else if (d.theta == 0.0) {
            vc.has = true;
            vc.form = EnergyForm::HeavyBallSharp0;
        } else {
            vc.has = true;
            vc.form = EnergyForm::HeavyBallSharpTheta;
        }
    } else if (flat) {
        if (d.theta < 1.0 || d.alpha >= (g1 + 2.0) / (g1 - 2.0)) {
            vc.has = true;
            vc.form = EnergyForm::Flat;
        } else {
            vc.note = "no energy certificate: theta = 1 in the flat regime requires "
                      "alpha >= (gamma1+2)/(gamma1-2)";
        }
    } else {
        vc.note = "no energy certificate: geometry is neither sharp (gamma1 <= 2 = gamma2, "
                  "K > 0) nor flat (gamma1 > 2)";
    }
    return vc;
}

}  // namespace

ObjectivePtr make_objective(const ObjectiveSpec& spec) {
    Vec minimizer = spec.minimizer;
    if (minimizer.empty()) minimizer.assign(static_cast<std::size_t>(spec.dim), 0.0);
    if (spec.kind == "power")
        return make_power_objective(spec.gamma, std::move(minimizer), spec.scale,
                                    spec.radius);
    if (spec.kind == "anisotropic")
        return make_anisotropic_objective(spec.exponents, std::move(minimizer),
                                          spec.radius);
    throw std::invalid_argument(fmt::format(
        "objective: unknown kind \"{}\" (expected power|anisotropic)", spec.kind));
}

ExperimentConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
    }
    require_keys(j, "config",
                 {"name", "objective", "damping", "schedule", "x0", "v0", "solver",
                  "horizon", "fit", "t3_m", "cases", "out_dir"});
    ExperimentConfig cfg;
    cfg.name = get_str(j, "name", cfg.name);
    if (j.contains("objective")) cfg.objective = objective_from(j.at("objective"));
    if (j.contains("damping")) cfg.damping = damping_from(j.at("damping"));
    if (j.contains("schedule")) cfg.schedule = schedule_from(j.at("schedule"));
    cfg.x0 = get_vec(j, "x0");
    cfg.v0 = get_vec(j, "v0");
    if (j.contains("solver")) cfg.solver = solver_from(j.at("solver"));
    cfg.horizon = get_num(j, "horizon", 0.0);
    if (j.contains("fit")) cfg.fit = fit_from(j.at("fit"));
    cfg.t3_m = get_num(j, "t3_m", -1.0);
    if (j.contains("cases")) {
        const json& cs = j.at("cases");
        if (!cs.is_array())
            throw std::invalid_argument("config: \"cases\" must be an array of strings");
        for (const json& e : cs) {
            if (!e.is_string())
                throw std::invalid_argument("config: \"cases\" must contain only strings");
            cfg.cases.push_back(rate_case_from_string(e.get<std::string>()));
        }
    }
    cfg.out_dir = get_str(j, "out_dir", "");
    normalize(cfg);
    return cfg;
}

ExperimentConfig config_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument(fmt::format("config: cannot open \"{}\"", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
    return config_json(cfg).dump(2);
}

std::string report_to_json(const ExperimentReport& rep) {
    return report_json_obj(rep).dump(2);
}

std::string resolve_output_base(const ExperimentConfig& cfg) {
    if (const char* env = std::getenv("INERTIAL_FLOW_OUT"); env && *env) return env;
    return cfg.out_dir.empty() ? std::string("out") : cfg.out_dir;
}

ExperimentReport run_experiment(const ExperimentConfig& raw) {
    const auto t_begin = std::chrono::steady_clock::now();
    ExperimentReport rep;
    rep.config = raw;
    try {
        ExperimentConfig cfg = raw;
        normalize(cfg);
        rep.config = cfg;

        ObjectivePtr f = make_objective(cfg.objective);
        GeometryClass geom = f->geometry();
        if (cfg.objective.gamma2_override > 0.0) geom.gamma2 = cfg.objective.gamma2_override;
        if (cfg.objective.K_override > 0.0) geom.K = cfg.objective.K_override;
        validate(geom);
        rep.geometry = geom;

        // Re-verify the declared hypotheses by sampling before trusting them.
        rep.flatness = check_flatness(*f, geom.gamma1);
        if (!rep.flatness.pass)
            throw std::runtime_error(fmt::format(
                "flatness hypothesis (gamma1 = {}) fails on sampled points, "
                "max violation {:.3e}",
                geom.gamma1, rep.flatness.max_violation));
        rep.sharpness = check_sharpness(*f, geom.gamma2, geom.K);
        if (!rep.sharpness.pass)
            throw std::runtime_error(fmt::format(
                "sharpness hypothesis (gamma2 = {}, K = {}) fails on sampled points, "
                "max violation {:.3e}",
                geom.gamma2, geom.K, rep.sharpness.max_violation));

        std::vector<RatePrediction> predictions =
            dispatch(cfg.damping, geom, cfg.schedule, cfg.t3_m);

        Trajectory traj =
            integrate(*f, cfg.damping, cfg.schedule, cfg.x0, cfg.v0, cfg.horizon, cfg.solver);
        rep.stats = traj.stats;
        for (std::size_t i = 0; i < traj.t.size(); ++i)
            rep.max_excursion =
                std::max(rep.max_excursion, std::sqrt(dist_sq(traj.x[i], f->minimizer())));
        rep.within_radius = rep.max_excursion <= geom.radius;

        const bool zero_g = cfg.schedule.kind == PerturbationSchedule::Kind::Zero;

        EnergySeries series;
        bool have_series = false;
        VariantChoice vc = choose_variant(cfg.damping, geom);
        if (vc.has) {
            LyapunovParams params = select_params(vc.form, cfg.damping, geom);
            series = eval_G_series(params, traj, *f, cfg.schedule);
            have_series = true;
            rep.energy_variant = to_string(vc.form);
            rep.certifications.push_back(
                certify_derivative_bound(series, traj, *f, cfg.schedule));
            if (vc.form == EnergyForm::Flat) {
                rep.certifications.push_back(certify_distance_bound(series));
                rep.certifications.push_back(
                    certify_xi_bound(params, std::max(1e6, cfg.horizon)));
                // H (zero forcing: G == H) is non-increasing from the analytic
                // onset; with forcing the guarantee transfers to G.
                double onset = flat_monotone_onset(params);
                rep.monotonicity.push_back(
                    {zero_g ? "H" : "G", false, monotonicity_report(series, onset)});
            } else if (!zero_g) {
                // For constant friction, G is non-increasing from t0 (the
                // positive c-term in the derivative bound is dominated via
                // sharpness). The other sharp variants carry no such
                // guarantee, so their entry only records the observed
                // settling time.
                bool observed_only = vc.form != EnergyForm::HeavyBallSharp0;
                rep.monotonicity.push_back(
                    {"G", observed_only, monotonicity_report(series, cfg.damping.t0)});
            }
        } else {
            rep.energy_note = vc.note;
        }

        if (zero_g) {
            std::vector<double> em(traj.t.size());
            for (std::size_t i = 0; i < traj.t.size(); ++i)
                em[i] = mechanical_energy(*f, traj.x[i], traj.v[i]);
            rep.monotonicity.push_back(
                {"mechanical_energy", false,
                 monotonicity_report(traj.t, em, cfg.damping.t0)});
        }

        for (const RatePrediction& p : predictions)
            if (p.kase == RateCase::SharpHeavyBall && cfg.damping.theta < 1.0) {
                rep.terminal_checks.push_back(terminal_check(traj, *f, cfg.damping, p.m, false));
                rep.terminal_checks.push_back(terminal_check(traj, *f, cfg.damping, p.m, true));
            }

        // Requested cases first (each must show up), then whatever else fired.
        std::vector<RateCase> order = cfg.cases;
        for (const RatePrediction& p : predictions)
            if (std::find(order.begin(), order.end(), p.kase) == order.end())
                order.push_back(p.kase);

        for (RateCase kase : order) {
            CaseOutcome out;
            out.kase = kase;
            auto it = std::find_if(predictions.begin(), predictions.end(),
                                   [&](const RatePrediction& p) { return p.kase == kase; });
            if (it == predictions.end()) {
                out.note = "hypotheses not met";
            } else {
                out.hypotheses_hold = true;
                out.prediction = *it;
                out.note = it->note;
                try {
                    FitWindow w{cfg.fit.t_lo, cfg.fit.t_hi};
                    out.fit = it->velocity
                                  ? fit_velocity_rate(traj, w, cfg.fit.envelope)
                                  : fit_rate(traj, *f, it->kind, w, cfg.fit.envelope);
                    out.fitted = true;
                    out.verdict = rate_verdict(*it, out.fit, cfg.fit.slack);
                } catch (const std::exception& e) {
                    out.note = std::string("fit failed: ") + e.what();
                }
            }
            rep.cases.push_back(out);
        }

        if (cfg.write_outputs) {
            fs::path dir = fs::path(resolve_output_base(cfg)) / cfg.name;
            fs::create_directories(dir);
            write_trajectory_csv((dir / "trajectory.csv").string(), *f, traj);
            if (have_series) {
                write_energy_csv((dir / "energy.csv").string(), series);
                std::ofstream pj(dir / "energy_params.json");
                pj << params_json(series.params).dump(2) << '\n';
            }
            rep.output_dir = dir.string();
        }
    } catch (const std::exception& e) {
        rep.status = "error";
        rep.error = e.what();
    } catch (...) {
        rep.status = "error";
        rep.error = "unknown error";
    }
    rep.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
    if (!rep.output_dir.empty()) {
        std::ofstream rj(fs::path(rep.output_dir) / "report.json");
        rj << report_to_json(rep) << '\n';
    }
    return rep;
}

bool report_passed(const ExperimentReport& rep) {
    if (rep.status != "ok") return false;
    for (const CertificationReport& c : rep.certifications)
        if (!c.pass) return false;
    for (const LabeledMonotonicity& m : rep.monotonicity)
        if (!m.informational && !m.report.pass) return false;
    for (const TerminalDecayCheck& t : rep.terminal_checks)
        if (!t.pass) return false;
    for (const CaseOutcome& c : rep.cases) {
        if (!c.hypotheses_hold) return false;  // a requested case did not apply
        if (!c.fitted || !c.verdict.pass) return false;
    }
    return true;
}

std::vector<ExperimentReport> run_batch(const std::vector<ExperimentConfig>& cfgs,
                                        int jobs) {
    if (jobs < 1) throw std::invalid_argument("run_batch: jobs must be >= 1");
    {
        std::vector<std::string> names;
        names.reserve(cfgs.size());
        for (const auto& c : cfgs) names.push_back(c.name);
        std::sort(names.begin(), names.end());
        auto dup = std::adjacent_find(names.begin(), names.end());
        if (dup != names.end())
            throw std::invalid_argument(
                fmt::format("run_batch: duplicate experiment name \"{}\"", *dup));
    }
    std::vector<ExperimentReport> out(cfgs.size());
    if (cfgs.empty()) return out;
    const std::size_t n_workers =
        std::min<std::size_t>(static_cast<std::size_t>(jobs), cfgs.size());
    if (n_workers == 1) {
        for (std::size_t i = 0; i < cfgs.size(); ++i) out[i] = run_experiment(cfgs[i]);
        return out;
    }
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= cfgs.size()) return;
            out[i] = run_experiment(cfgs[i]);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    return out;
}

namespace {

ExperimentConfig preset_base(const char* name) {
    ExperimentConfig c;
    c.name = name;
    c.objective.kind = "power";
    c.objective.dim = 2;
    c.objective.radius = 2.0;
    c.solver.rel_tol = 1e-11;
    c.solver.abs_tol = 1e-13;
    c.solver.grid.kind = GridSpec::Kind::LogUniform;
    c.solver.grid.points_per_decade = 400.0;
    c.horizon = 1e4;
    return c;
}

}  // namespace

std::vector<ExperimentConfig> presets() {
    std::vector<ExperimentConfig> out;

    {
        // Vanishing damping above the critical level on a strongly convex
        // quadratic, with an integrable power-law forcing.
        ExperimentConfig c = preset_base("nesterov-sharp-quadratic");
        c.objective.gamma = 2.0;
        c.damping = {4.0, 1.0, 1.0};
        c.schedule.kind = PerturbationSchedule::Kind::PowerLaw;
        c.schedule.c = 0.05;
        c.schedule.q = 3.5;
        c.schedule.seed = 7;
        c.fit.t_lo = 1e2;
        c.fit.t_hi = 1e4;
        c.cases = {RateCase::SharpNesterov};
        out.push_back(std::move(c));
    }
    {
        // Same quadratic below the critical damping level, unperturbed.
        ExperimentConfig c = preset_base("nesterov-subcritical-quadratic");
        c.objective.gamma = 2.0;
        c.damping = {1.5, 1.0, 1.0};
        c.fit.t_lo = 1e2;
        c.fit.t_hi = 1e4;
        c.cases = {RateCase::SharpNesterovSubcritical};
        out.push_back(std::move(c));
    }
    {
        // Constant friction on the quadratic with an exponentially decaying
        // forcing slightly slower than the certified energy decay.
        ExperimentConfig c = preset_base("heavy-ball-sharp-quadratic");
        c.objective.gamma = 2.0;
        c.damping = {2.0, 0.0, 1.0};
        c.schedule.kind = PerturbationSchedule::Kind::ExpGamma;
        c.schedule.c = 0.1;
        c.schedule.mprime = 0.95;
        c.horizon = 20.0;
        c.fit.t_lo = 1.5;
        c.fit.t_hi = 20.0;
        c.cases = {RateCase::SharpHeavyBall};
        out.push_back(std::move(c));
    }
    {
        // Intermediate damping decay theta = 1/2, unperturbed quadratic.
        ExperimentConfig c = preset_base("heavy-ball-theta-half-quadratic");
        c.objective.gamma = 2.0;
        c.damping = {2.0, 0.5, 1.0};
        c.horizon = 100.0;
        c.fit.t_lo = 2.0;
        c.fit.t_hi = 100.0;
        c.cases = {RateCase::SharpHeavyBall};
        out.push_back(std::move(c));
    }
    {
        // Flat quartic with vanishing damping at the monotonicity threshold
        // alpha = (gamma+2)/(gamma-2); conserves the weighted energy exactly.
        ExperimentConfig c = preset_base("flat-quartic-nesterov");
        c.objective.gamma = 4.0;
        c.damping = {3.0, 1.0, 1.0};
        c.fit.t_lo = 1.0;
        c.fit.t_hi = 1e4;
        c.cases = {RateCase::FlatUnperturbed, RateCase::FlatPerturbed,
                   RateCase::FlatVelocity};
        out.push_back(std::move(c));
    }
    {
        // Flat quartic under constant friction: creeping decay, no oscillation
        // once the initial transient has died out.
        ExperimentConfig c = preset_base("flat-quartic-heavy-ball");
        c.objective.gamma = 4.0;
        c.damping = {1.0, 0.0, 1.0};
        c.fit.t_lo = 1e2;
        c.fit.t_hi = 1e4;
        c.cases = {RateCase::FlatUnperturbed, RateCase::FlatPerturbed,
                   RateCase::FlatVelocity};
        out.push_back(std::move(c));
    }
    {
        // Flat quartic with a power-law forcing whose weighted integral is
        // finite with margin 0.2.
        ExperimentConfig c = preset_base("flat-quartic-nesterov-perturbed");
        c.objective.gamma = 4.0;
        c.damping = {3.0, 1.0, 1.0};
        c.schedule.kind = PerturbationSchedule::Kind::PowerLaw;
        c.schedule.c = 0.05;
        c.schedule.q = 3.2;
        c.schedule.seed = 7;
        c.fit.t_lo = 1.0;
        c.fit.t_hi = 1e4;
        c.cases = {RateCase::FlatPerturbed, RateCase::FlatVelocity};
        out.push_back(std::move(c));
    }
    {
        // Flatter still (gamma = 6): slower decay, four clean decades above
        // the measurement floor.
        ExperimentConfig c = preset_base("flat-sextic-nesterov");
        c.objective.gamma = 6.0;
        c.damping = {2.0, 1.0, 1.0};
        c.fit.t_lo = 1.0;
        c.fit.t_hi = 1e4;
        c.cases = {RateCase::FlatUnperturbed, RateCase::FlatPerturbed,
                   RateCase::FlatVelocity};
        out.push_back(std::move(c));
    }
    {
        // Mixed exponents: the flattest direction sets gamma1 = 3, the
        // slowest-growing one gamma2 = 4, so the distance bound is a strict
        // inequality rather than the power-objective identity.
        ExperimentConfig c = preset_base("flat-anisotropic-nesterov");
        c.objective.kind = "anisotropic";
        c.objective.exponents = {3.0, 4.0};
        c.damping = {6.0, 1.0, 1.0};
        c.x0 = {1.0, 1.0};
        c.fit.t_lo = 1e2;
        c.fit.t_hi = 1e4;
        c.cases = {RateCase::FlatUnperturbed, RateCase::FlatPerturbed};
        out.push_back(std::move(c));
    }

    for (ExperimentConfig& c : out) normalize(c);
    return out;
}

ExperimentConfig preset(const std::string& name) {
    std::vector<ExperimentConfig> all = presets();
    for (ExperimentConfig& c : all)
        if (c.name == name) return std::move(c);
    std::string known;
    for (const ExperimentConfig& c : all) {
        if (!known.empty()) known += ", ";
        known += c.name;
    }
    throw std::invalid_argument(
        fmt::format("unknown preset \"{}\" (known: {})", name, known));
}

}  // namespace iflow
