#pragma once

#include <cstdint>
#include <string>

#include "iflow/geometry.hpp"
#include "iflow/vec.hpp"

namespace iflow {

// Viscosity profile beta(t) = alpha / t^theta on [t0, inf), t0 > 0.
// theta = 0 is constant friction, theta = 1 the classical 1/t decay.
struct DampingSpec {
    double alpha = 1.0;
    double theta = 1.0;
    double t0 = 1.0;

    double beta(double t) const;
    double beta_dot(double t) const;
};

void validate(const DampingSpec& d);  // throws std::invalid_argument

// Gamma(t) = integral over [t0, t] of beta. Closed form:
//   theta = 1:  alpha * log(t / t0)
//   theta < 1:  alpha * (t^(1-theta) - t0^(1-theta)) / (1 - theta)
double gamma_integral(const DampingSpec& d, double t);

enum class DirectionMode { Fixed, SeededRandom };

// Forcing term g(t) with a prescribed magnitude profile and a direction that
// is either a fixed unit vector or a seeded random unit vector held constant
// on each window [k*delta_dir, (k+1)*delta_dir). The random direction depends
// only on (seed, floor(t / delta_dir)), so evaluation is a pure function.
struct PerturbationSchedule {
    enum class Kind { Zero, PowerLaw, ExpGamma };

    Kind kind = Kind::Zero;
    int dim = 1;
    double t0 = 1.0;

    double c = 0.0;       // magnitude scale (PowerLaw, ExpGamma)
    double q = 0.0;       // PowerLaw:  ||g(t)|| = c * t^-q
    double mprime = 0.0;  // ExpGamma:  ||g(t)|| = c * exp(-mprime * Gamma(t))
    DampingSpec damping;  // supplies Gamma for ExpGamma

    DirectionMode direction = DirectionMode::Fixed;
    Vec fixed_direction;  // unit vector; empty means e1
    std::uint64_t seed = 0;
    double delta_dir = 0.1;
};

PerturbationSchedule zero_schedule(int dim, double t0 = 1.0);
PerturbationSchedule powerlaw_schedule(int dim, double c, double q, double t0 = 1.0);
PerturbationSchedule expgamma_schedule(int dim, double c, double mprime,
                                       const DampingSpec& damping);

void validate(const PerturbationSchedule& g);  // throws std::invalid_argument

double g_norm(const PerturbationSchedule& g, double t);    // analytic magnitude
Vec direction_at(const PerturbationSchedule& g, double t); // unit vector (zero for Zero kind)
Vec eval_g(const PerturbationSchedule& g, double t);       // magnitude * direction; t >= t0

// Weight w(t) multiplying ||g(t)|| inside the tail integral:
//   Poly: w(t) = t^p      Exp: w(t) = exp(m * Gamma(t))      None: no forcing allowed
struct IntegralWeight {
    enum class Kind { None, Poly, Exp };
    Kind kind = Kind::None;
    double p = 0.0;
    double m = 0.0;
    DampingSpec damping;  // supplies Gamma for Exp
};

// Convergence margin of integral over [t0, inf) of w(t)*||g(t)|| dt.
// Positive margin means finite, margin <= 0 means divergent (borderline
// integrals are classified as divergent). Returns +inf or -inf when the
// answer does not depend on a finite comparison:
//   * any weight against the zero schedule is finite
//   * the None weight is finite only against the zero schedule
//   * a poly weight against an ExpGamma tail with theta < 1 is always finite
//   * an exp weight against a PowerLaw tail with theta < 1 always diverges
// At theta = 1 exponential factors reduce to powers of t: exp(m*Gamma(t)) =
// (t/t0)^(m*alpha), and the poly comparison (margin q - p - 1) applies.
double integrability_margin(const PerturbationSchedule& g, const IntegralWeight& w);

inline bool weighted_norm_integrable(const PerturbationSchedule& g, const IntegralWeight& w) {
    return integrability_margin(g, w) > 0.0;
}

// Convergence-rate regimes covered by the verifier. Named by their hypothesis
// set rather than by number so reports are self-describing.
enum class RateCase {
    SharpNesterovSubcritical,  // theta=1, flatness only, alpha <= 1 + 2/gamma1
    SharpNesterov,             // theta=1, flat + quadratically sharp, alpha > 1 + 2/gamma1
    SharpHeavyBall,            // theta in [0,1), flat + quadratically sharp, exp(-m*Gamma) decay
    FlatUnperturbed,           // gamma1 > 2, g = 0
    FlatPerturbed,             // gamma1 > 2, weighted-integrable g
    FlatVelocity,              // velocity decay companion of the flat cases, gamma1 = gamma2
};

std::string to_string(RateCase c);
RateCase rate_case_from_string(const std::string& s);

// The weight the given rate regime needs on ||g||. For SharpHeavyBall, m is
// the requested decay rate in Gamma-units; m <= 0 selects the default
// gamma1/(gamma1+2), half of the supremum 2*gamma1/(gamma1+2). Throws when
// the damping/geometry pair is outside the regime's hypotheses.
IntegralWeight required_weight(RateCase c, const DampingSpec& d, const GeometryClass& geom,
                               double m = -1.0);

}  // namespace iflow
