#pragma once

#include <string>
#include <vector>

#include "iflow/dynamics.hpp"
#include "iflow/geometry.hpp"
#include "iflow/lyapunov.hpp"
#include "iflow/perturbation.hpp"
#include "iflow/rates.hpp"

namespace iflow {

// Objective description as it appears in config files.
struct ObjectiveSpec {
    std::string kind = "power";     // "power" | "anisotropic"
    double gamma = 2.0;             // power exponent
    std::vector<double> exponents;  // anisotropic per-coordinate exponents
    double scale = 1.0;             // power prefactor
    double radius = 2.0;            // neighborhood the geometry is claimed on
    int dim = 2;                    // power dimension (anisotropic: exponents.size())
    Vec minimizer;                  // empty = origin
    // Optional overrides of the declared geometry (<= 0 keeps the declared
    // value). Overrides are re-verified by sampling like everything else, so
    // an unsatisfiable claim turns into a config error, not a silent skip.
    double gamma2_override = 0.0;
    double K_override = 0.0;
};

ObjectivePtr make_objective(const ObjectiveSpec& spec);

struct FitSpec {
    double t_lo = 0.0;    // <= 0 selects max(t0, horizon/100)
    double t_hi = 0.0;    // <= 0 selects the horizon
    bool envelope = true;
    double slack = -1.0;  // < 0 selects the per-case default
};

struct ExperimentConfig {
    std::string name = "experiment";
    ObjectiveSpec objective;
    DampingSpec damping;
    PerturbationSchedule schedule;  // dim/t0/damping resolved from the rest
    Vec x0;                         // empty = minimizer + e1
    Vec v0;                         // empty = zero
    SolverConfig solver;
    double horizon = 0.0;           // <= 0 selects 1e4 * t0
    FitSpec fit;
    double t3_m = -1.0;             // requested exponential rate; < 0 = default
    std::vector<RateCase> cases;    // empty = everything dispatch returns
    std::string out_dir;            // "" = "out"; INERTIAL_FLOW_OUT overrides
    bool write_outputs = true;
};

// JSON round trip. Parsing rejects unknown keys, wrong types, and values that
// violate the documented invariants (throws std::invalid_argument).
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig config_from_json_file(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);

// One requested convergence statement and what happened to it. When the
// hypotheses do not hold, note says so and no fit is attempted.
struct CaseOutcome {
    RateCase kase = RateCase::SharpNesterov;
    bool hypotheses_hold = false;
    RatePrediction prediction;  // valid when hypotheses_hold
    bool fitted = false;
    RateFit fit;        // valid when fitted
    Verdict verdict;    // valid when fitted
    std::string note;   // "hypotheses not met", fit errors, regime notes
};

// Decay-at-horizon checks for the exponential regime: quantity(T) must sit
// below C * exp(-m Gamma(T)) with C calibrated on the early window
// [t0, calibration_time].
struct TerminalDecayCheck {
    std::string quantity;  // "dist_sq" | "speed_sq"
    double m = 0.0;
    double calibration_time = 0.0;
    double C = 0.0;
    double bound_at_horizon = 0.0;
    double value_at_horizon = 0.0;
    bool pass = false;
};

struct LabeledMonotonicity {
    std::string series;  // "H", "G", "mechanical_energy"
    // True when no monotonicity guarantee covers this series for the run's
    // regime; the report then records the observed settling time only and
    // does not count toward pass/fail.
    bool informational = false;
    MonotonicityReport report;
};

struct ExperimentReport {
    ExperimentConfig config;  // echo, with defaults resolved
    std::string status = "ok";
    std::string error;

    GeometryClass geometry;  // declared (plus overrides)
    SampledCheck flatness;
    SampledCheck sharpness;

    SolveStats stats;
    double max_excursion = 0.0;  // max |x(t) - x*| over samples
    bool within_radius = false;

    std::string energy_variant = "none";  // EnergyForm name, or "none"
    std::string energy_note;              // why no variant applies, if none
    std::vector<CertificationReport> certifications;
    std::vector<LabeledMonotonicity> monotonicity;
    std::vector<TerminalDecayCheck> terminal_checks;
    std::vector<CaseOutcome> cases;

    double duration_seconds = 0.0;
    std::string output_dir;  // directory written, "" when writing disabled
};

std::string report_to_json(const ExperimentReport& rep);

// True when the run succeeded and every checked claim held: all requested
// cases fired and passed their verdicts, all certifications passed, all
// guaranteed monotonicity reports passed, all terminal checks passed.
bool report_passed(const ExperimentReport& rep);

// Output base directory: the INERTIAL_FLOW_OUT environment variable wins,
// then cfg.out_dir, then "out". Experiment files land in <base>/<name>/.
std::string resolve_output_base(const ExperimentConfig& cfg);

// Full pipeline: validate config and geometry hypotheses, integrate, evaluate
// the energy series, certify the energy inequalities, fit rates, compare with
// predictions. Writes trajectory.csv, energy.csv, energy_params.json and
// report.json unless write_outputs is off. Failures of any stage are caught
// and recorded (status = "error"); the function itself does not throw.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

// Runs configs on `jobs` worker threads. Reports come back in input order
// regardless of completion order; failures stay isolated in their report.
std::vector<ExperimentReport> run_batch(const std::vector<ExperimentConfig>& cfgs,
                                        int jobs = 1);

// Shipped experiment configurations covering every convergence regime the
// verifier knows (pinned seeds and horizons, reproducible outputs).
std::vector<ExperimentConfig> presets();
ExperimentConfig preset(const std::string& name);  // throws on unknown name

}  // namespace iflow
