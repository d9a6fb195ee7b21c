#include "iflow/perturbation.hpp"

#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <stdexcept>

#include "iflow/rng.hpp"

namespace iflow {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double DampingSpec::beta(double t) const {
    if (theta == 0.0) return alpha;
    if (theta == 1.0) return alpha / t;
    return alpha * std::pow(t, -theta);
}

double DampingSpec::beta_dot(double t) const {
    if (theta == 0.0) return 0.0;
    return -theta * alpha * std::pow(t, -theta - 1.0);
}

void validate(const DampingSpec& d) {
    if (!(d.alpha > 0.0))
        throw std::invalid_argument(fmt::format("damping: alpha must be > 0, got {}", d.alpha));
    if (!(d.theta >= 0.0 && d.theta <= 1.0))
        throw std::invalid_argument(
            fmt::format("damping: theta must lie in [0, 1], got {}", d.theta));
    if (!(d.t0 > 0.0))
        throw std::invalid_argument(fmt::format("damping: t0 must be > 0, got {}", d.t0));
}

double gamma_integral(const DampingSpec& d, double t) {
    if (t < d.t0)
        throw std::invalid_argument(
            fmt::format("gamma_integral: t={} is below t0={}", t, d.t0));
    if (d.theta == 1.0) return d.alpha * std::log(t / d.t0);
    const double e = 1.0 - d.theta;
    return d.alpha * (std::pow(t, e) - std::pow(d.t0, e)) / e;
}

PerturbationSchedule zero_schedule(int dim, double t0) {
    PerturbationSchedule g;
    g.kind = PerturbationSchedule::Kind::Zero;
    g.dim = dim;
    g.t0 = t0;
    return g;
}

PerturbationSchedule powerlaw_schedule(int dim, double c, double q, double t0) {
    PerturbationSchedule g;
    g.kind = PerturbationSchedule::Kind::PowerLaw;
    g.dim = dim;
    g.t0 = t0;
    g.c = c;
    g.q = q;
    return g;
}

PerturbationSchedule expgamma_schedule(int dim, double c, double mprime,
                                       const DampingSpec& damping) {
    PerturbationSchedule g;
    g.kind = PerturbationSchedule::Kind::ExpGamma;
    g.dim = dim;
    g.t0 = damping.t0;
    g.c = c;
    g.mprime = mprime;
    g.damping = damping;
    return g;
}

void validate(const PerturbationSchedule& g) {
    if (g.dim < 1) throw std::invalid_argument("schedule: dim must be >= 1");
    if (!(g.t0 > 0.0)) throw std::invalid_argument("schedule: t0 must be > 0");
    switch (g.kind) {
        case PerturbationSchedule::Kind::Zero:
            break;
        case PerturbationSchedule::Kind::PowerLaw:
            if (!(g.c >= 0.0)) throw std::invalid_argument("schedule: c must be >= 0");
            break;
        case PerturbationSchedule::Kind::ExpGamma:
            if (!(g.c >= 0.0)) throw std::invalid_argument("schedule: c must be >= 0");
            if (!(g.mprime > 0.0))
                throw std::invalid_argument("schedule: mprime must be > 0");
            validate(g.damping);
            break;
    }
    if (g.direction == DirectionMode::Fixed && !g.fixed_direction.empty()) {
        if (static_cast<int>(g.fixed_direction.size()) != g.dim)
            throw std::invalid_argument("schedule: fixed direction has wrong dimension");
        if (std::abs(norm(g.fixed_direction) - 1.0) > 1e-9)
            throw std::invalid_argument("schedule: fixed direction must be a unit vector");
    }
    if (g.direction == DirectionMode::SeededRandom && !(g.delta_dir > 0.0))
        throw std::invalid_argument("schedule: delta_dir must be > 0");
}

double g_norm(const PerturbationSchedule& g, double t) {
    if (t < g.t0)
        throw std::invalid_argument(fmt::format("eval_g: t={} is below t0={}", t, g.t0));
    switch (g.kind) {
        case PerturbationSchedule::Kind::Zero:
            return 0.0;
        case PerturbationSchedule::Kind::PowerLaw:
            return g.c * std::pow(t, -g.q);
        case PerturbationSchedule::Kind::ExpGamma:
            return g.c * std::exp(-g.mprime * gamma_integral(g.damping, t));
    }
    return 0.0;
}

Vec direction_at(const PerturbationSchedule& g, double t) {
    Vec u(static_cast<std::size_t>(g.dim), 0.0);
    if (g.kind == PerturbationSchedule::Kind::Zero) return u;
    if (g.direction == DirectionMode::Fixed) {
        if (g.fixed_direction.empty())
            u[0] = 1.0;
        else
            u = g.fixed_direction;
        return u;
    }
    // one direction per window, keyed by (seed, window index)
    const auto window = static_cast<std::uint64_t>(
        static_cast<std::int64_t>(std::floor(t / g.delta_dir)));
    SplitMix64 rng(g.seed ^ (window * 0x9E3779B97F4A7C15ull + 0x1234567ull));
    return random_unit_vector(rng, g.dim);
}

Vec eval_g(const PerturbationSchedule& g, double t) {
    const double mag = g_norm(g, t);  // also enforces t >= t0
    if (mag == 0.0) return Vec(static_cast<std::size_t>(g.dim), 0.0);
    Vec u = direction_at(g, t);
    for (auto& c : u) c *= mag;
    return u;
}

double integrability_margin(const PerturbationSchedule& g, const IntegralWeight& w) {
    if (g.kind == PerturbationSchedule::Kind::Zero || g.c == 0.0) return kInf;
    if (w.kind == IntegralWeight::Kind::None) return -kInf;

    // Reduce every factor to either a power of t or a genuine exponential in
    // Gamma(t); at theta = 1, exp(m*Gamma) is itself the power (t/t0)^(m*alpha).
    const bool tail_exp = g.kind == PerturbationSchedule::Kind::ExpGamma;
    const bool tail_is_power = !tail_exp || g.damping.theta == 1.0;
    const double tail_q =
        tail_exp ? (tail_is_power ? g.mprime * g.damping.alpha : 0.0) : g.q;

    const bool weight_exp = w.kind == IntegralWeight::Kind::Exp;
    const bool weight_is_power = !weight_exp || w.damping.theta == 1.0;
    const double weight_p =
        weight_exp ? (weight_is_power ? w.m * w.damping.alpha : 0.0) : w.p;

    if (tail_is_power && weight_is_power) return tail_q - weight_p - 1.0;
    if (tail_is_power && !weight_is_power) return -kInf;  // exp growth vs power decay
    if (!tail_is_power && weight_is_power) return kInf;   // exp decay beats any power
    // Both genuinely exponential. The margin mprime - m only makes sense on a
    // shared Gamma scale.
    if (g.damping.alpha != w.damping.alpha || g.damping.theta != w.damping.theta ||
        g.damping.t0 != w.damping.t0)
        throw std::invalid_argument(
            "integrability_margin: exponential weight and tail must share one damping profile");
    return g.mprime - w.m;
}

std::string to_string(RateCase c) {
    switch (c) {
        case RateCase::SharpNesterovSubcritical: return "sharp-nesterov-subcritical";
        case RateCase::SharpNesterov: return "sharp-nesterov";
        case RateCase::SharpHeavyBall: return "sharp-heavy-ball";
        case RateCase::FlatUnperturbed: return "flat-unperturbed";
        case RateCase::FlatPerturbed: return "flat-perturbed";
        case RateCase::FlatVelocity: return "flat-velocity";
    }
    return "?";
}

RateCase rate_case_from_string(const std::string& s) {
    if (s == "sharp-nesterov-subcritical") return RateCase::SharpNesterovSubcritical;
    if (s == "sharp-nesterov") return RateCase::SharpNesterov;
    if (s == "sharp-heavy-ball") return RateCase::SharpHeavyBall;
    if (s == "flat-unperturbed") return RateCase::FlatUnperturbed;
    if (s == "flat-perturbed") return RateCase::FlatPerturbed;
    if (s == "flat-velocity") return RateCase::FlatVelocity;
    throw std::invalid_argument(fmt::format("unknown rate case '{}'", s));
}

IntegralWeight required_weight(RateCase c, const DampingSpec& d, const GeometryClass& geom,
                               double m) {
    validate(d);
    const double g1 = geom.gamma1;
    IntegralWeight w;
    switch (c) {
        case RateCase::SharpNesterovSubcritical:
        case RateCase::SharpNesterov: {
            if (d.theta != 1.0)
                throw std::invalid_argument("sharp-nesterov cases need theta = 1");
            const bool subcritical = d.alpha <= 1.0 + 2.0 / g1;
            if (subcritical != (c == RateCase::SharpNesterovSubcritical))
                throw std::invalid_argument(fmt::format(
                    "alpha={} is on the wrong side of 1 + 2/gamma1 = {} for {}", d.alpha,
                    1.0 + 2.0 / g1, to_string(c)));
            w.kind = IntegralWeight::Kind::Poly;
            w.p = g1 * d.alpha / (g1 + 2.0);
            return w;
        }
        case RateCase::SharpHeavyBall: {
            if (d.theta >= 1.0)
                throw std::invalid_argument("sharp-heavy-ball needs theta in [0, 1)");
            if (!(g1 >= 1.0 && g1 <= 2.0))
                throw std::invalid_argument("sharp-heavy-ball needs gamma1 in [1, 2]");
            const double sup = 2.0 * g1 / (g1 + 2.0);
            if (m <= 0.0) m = 0.5 * sup;
            if (!(m < sup))
                throw std::invalid_argument(fmt::format(
                    "sharp-heavy-ball rate m={} must lie in (0, {})", m, sup));
            w.kind = IntegralWeight::Kind::Exp;
            w.m = m;
            w.damping = d;
            return w;
        }
        case RateCase::FlatUnperturbed:
            if (!(g1 > 2.0)) throw std::invalid_argument("flat cases need gamma1 > 2");
            w.kind = IntegralWeight::Kind::None;
            return w;
        case RateCase::FlatPerturbed:
        case RateCase::FlatVelocity: {
            if (!(g1 > 2.0)) throw std::invalid_argument("flat cases need gamma1 > 2");
            if (!(geom.gamma2 >= g1))
                throw std::invalid_argument("flat cases need gamma2 >= gamma1");
            const double r = (1.0 + d.theta) / 2.0;
            w.kind = IntegralWeight::Kind::Poly;
            w.p = r * geom.gamma2 / (geom.gamma2 - 2.0);
            return w;
        }
    }
    throw std::invalid_argument("unknown rate case");
}

}  // namespace iflow
