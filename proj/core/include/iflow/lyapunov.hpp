#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "iflow/dynamics.hpp"
#include "iflow/geometry.hpp"
#include "iflow/perturbation.hpp"
#include "iflow/vec.hpp"

namespace iflow {

// Energy variants, one per damping/geometry regime:
//   NesterovSharp       theta = 1, gamma <= 2, t-weighted a,b,c
//   HeavyBallSharp0     theta = 0, constant lambda, unweighted a,b,c
//   HeavyBallSharpTheta theta in (0,1), lambda(t) = 2 beta(t)/(gamma+2)
//   Flat                gamma1 > 2, any theta, t-weighted with rescaling r
enum class EnergyForm { NesterovSharp, HeavyBallSharp0, HeavyBallSharpTheta, Flat };

std::string to_string(EnergyForm form);
EnergyForm energy_form_from_string(const std::string& s);

struct LyapunovParams {
    EnergyForm variant = EnergyForm::NesterovSharp;
    double gamma = 2.0;   // flatness exponent the inequality uses
    double gamma2 = 2.0;  // sharpness exponent (distance bound, HeavyBallSharp0)
    double K = 1.0;       // sharpness constant
    double alpha = 1.0;
    double theta = 1.0;
    double t0 = 1.0;
    double r = 1.0;       // time rescaling exponent, (1+theta)/2 for Flat
    double p = 0.0;       // H = t^p E
    double lambda0 = 0.0; // constant lambda (unused by HeavyBallSharpTheta)
    double xi0 = 0.0;     // constant xi (unused by time-dependent variants)

    double lambda(double t) const;
    double xi(double t) const;
    // True when a,b,c carry the 1/t resp. t weights (NesterovSharp, Flat).
    bool time_weighted() const;
};

// Fills the parameter block for the requested variant, checking its
// hypotheses. K2 < 0 means "use geometry.K". Throws std::invalid_argument
// naming the violated condition.
LyapunovParams select_params(EnergyForm variant, const DampingSpec& damping,
                             const GeometryClass& geometry, double K2 = -1.0);

// Per-sample energies along a trajectory.
//   a,b,c   decomposition terms (weighted or not per variant)
//   E       a + b + xi c, times t for the weighted forms
//   H       t^p E
//   G       H plus the backward tail integral of the forcing term
struct EnergySeries {
    LyapunovParams params;
    std::vector<double> t, a, b, c, E, H, G;
};

double eval_E(const LyapunovParams& params, const Objective& f, double t, const Vec& x,
              const Vec& v);

EnergySeries eval_G_series(const LyapunovParams& params, const Trajectory& traj,
                           const Objective& f, const PerturbationSchedule& g);

struct CertificationReport {
    std::string name;
    bool pass = true;
    int n_checked = 0;
    double max_excess = 0.0;   // max over samples of LHS - RHS
    double tol_at_worst = 0.0; // tolerance at the maximizing sample
    double worst_time = 0.0;
    std::vector<double> violating_times;
};

// Checks the variant's differential inequality along the trajectory. The
// left-hand derivative is a finite-difference estimate of G (weighted forms)
// or E (heavy-ball forms) on the sample grid; the right-hand side is evaluated
// analytically per sample. Tolerance per sample:
// 1e-4 * (1 + |H|) * local grid spacing.
CertificationReport certify_derivative_bound(const EnergySeries& series,
                                             const Trajectory& traj, const Objective& f,
                                             const PerturbationSchedule& g);

// Distance-from-minimizer bound for the flat variant: with p2 = 4r/(gamma2-2),
//   t^{p2+1} c(t) <= (K^{-2/gamma2}/2) (t^{p2+2r-1} a(t))^{2/gamma2}.
// Pointwise algebraic check, tolerance 1e-9 * (1 + |LHS|).
CertificationReport certify_distance_bound(const EnergySeries& series);

// Flat-variant coefficient bound |xi(t)| t^{2(r-1)} <= 2 r alpha / (gamma-2),
// checked on a dense log grid [t0, t_max]. For theta = 1 the hypothesis
// alpha >= (gamma+2)/(gamma-2) is required.
CertificationReport certify_xi_bound(const LyapunovParams& params, double t_max = 1e6);

struct MonotonicityReport {
    double tol = 0.0;                // absolute increase tolerated per step
    double onset_hint = 0.0;         // analytic onset passed by the caller
    double first_monotone_time = 0.0;// earliest sample after which no rise > tol
    int n_rises_after_hint = 0;
    double fraction_rises_after_hint = 0.0;
    double max_rise = 0.0;           // largest single-step increase anywhere
    bool pass = false;               // first_monotone_time within one grid step of the hint
};

// Scans successive differences of y over t. tol = tol_scale * (1 + |y[0]|).
MonotonicityReport monotonicity_report(const std::vector<double>& t,
                                       const std::vector<double>& y, double onset_hint,
                                       double tol_scale = 1e-7);
// Convenience: applies to the G column (equals H when the forcing is zero).
MonotonicityReport monotonicity_report(const EnergySeries& series, double onset_hint,
                                       double tol_scale = 1e-7);

// Time from which the flat-variant H is guaranteed non-increasing:
// t0 when theta = 1 (requires alpha >= (gamma+2)/(gamma-2)), otherwise
// max(t0, [r(gamma+2) / (alpha(gamma-2))]^{1/(1-theta)}).
double flat_monotone_onset(const LyapunovParams& params);

// Columns: t,a,b,c,E,H,G with 17 significant digits.
void write_energy_csv(std::ostream& os, const EnergySeries& series);
void write_energy_csv(const std::string& path, const EnergySeries& series);

}  // namespace iflow
