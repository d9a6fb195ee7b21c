#pragma once

#include <string>
#include <vector>

#include "iflow/dynamics.hpp"
#include "iflow/geometry.hpp"
#include "iflow/perturbation.hpp"

namespace iflow {

enum class FitKind { PolyLogLog, ExpGamma };

std::string to_string(FitKind kind);
FitKind fit_kind_from_string(const std::string& s);

struct FitWindow {
    double t_lo = 0.0;
    double t_hi = 0.0;
};

struct RateFit {
    FitKind kind = FitKind::PolyLogLog;
    double fitted = 0.0;       // slope of log(value) vs log t, or vs Gamma(t)
    FitWindow window;          // the requested window
    double residual_rms = 0.0; // log-space regression residual
    bool envelope_used = false;
    int n_used = 0;
    int n_excluded_floor = 0;  // samples at or below the value floor
    double floor = 0.0;
};

// Least-squares slope of log(val) against log t (PolyLogLog) or against
// Gamma(t) (ExpGamma; damping required). Samples outside the window or at or
// below floor_scale*(1+val at the first series sample) are excluded. With
// envelope, the regression runs on the backward running maximum of the
// filtered values (upper envelope of oscillations). Throws when the requested
// window spans less than 2 decades (poly) / 5 Gamma-units (exp) or fewer than
// 20 usable samples remain.
RateFit fit_series_rate(const std::vector<double>& t, const std::vector<double>& val,
                        FitKind kind, FitWindow window, bool envelope,
                        const DampingSpec* damping = nullptr,
                        double floor_scale = 1e-14);

// fit_series_rate over F(x(t)) - F*.
RateFit fit_rate(const Trajectory& traj, const Objective& f, FitKind kind,
                 FitWindow window, bool envelope = true);

// fit_series_rate over |v(t)|, polynomial kind.
RateFit fit_velocity_rate(const Trajectory& traj, FitWindow window,
                          bool envelope = true);

// One applicable convergence statement: the regime, the predicted decay, the
// integrability weight its perturbation hypothesis needs, and the schedule's
// margin against that weight.
struct RatePrediction {
    RateCase kase = RateCase::SharpNesterov;
    FitKind kind = FitKind::PolyLogLog;
    double exponent = 0.0;  // polynomial decay exponent (poly predictions;
                            // equals m*alpha for the exp note at theta = 1)
    double m = 0.0;         // exponential rate in Gamma-units (ExpGamma only)
    bool velocity = false;  // prediction concerns |v| instead of F(x) - F*
    IntegralWeight weight;
    double margin = 0.0;
    std::string note;
};

// All convergence statements whose hypotheses hold for this damping, geometry
// and schedule; empty when none apply. t3_m < 0 selects the default
// exponential rate m = gamma/(gamma+2), half its supremum 2*gamma/(gamma+2);
// an explicit value outside (0, 2*gamma/(gamma+2)) is rejected.
std::vector<RatePrediction> dispatch(const DampingSpec& damping,
                                     const GeometryClass& geometry,
                                     const PerturbationSchedule& schedule,
                                     double t3_m = -1.0);

// Closed-form polynomial exponent for the polynomial regimes; throws for
// SharpHeavyBall (exponential, no single exponent).
double predicted_exponent(RateCase kase, const DampingSpec& damping,
                          const GeometryClass& geometry);

struct Verdict {
    bool pass = false;
    double slack = 0.0;
    double required = 0.0;  // fit must be <= -required
    std::string detail;
};

// One-sided comparison: pass iff fitted <= -(predicted - slack). Faster decay
// than predicted is never a failure. slack < 0 selects the default
// (0.25 for polynomial exponents, 0.1*m for exponential rates).
Verdict rate_verdict(const RatePrediction& prediction, const RateFit& fit,
                     double slack = -1.0);

double default_slack(const RatePrediction& prediction);

}  // namespace iflow
