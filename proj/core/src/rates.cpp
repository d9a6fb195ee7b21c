#include "iflow/rates.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace iflow {

std::string to_string(FitKind kind) {
    return kind == FitKind::PolyLogLog ? "poly" : "exp-gamma";
}

FitKind fit_kind_from_string(const std::string& s) {
    if (s == "poly") return FitKind::PolyLogLog;
    if (s == "exp-gamma") return FitKind::ExpGamma;
    throw std::invalid_argument("unknown fit kind: " + s);
}

RateFit fit_series_rate(const std::vector<double>& t, const std::vector<double>& val,
                        FitKind kind, FitWindow window, bool envelope,
                        const DampingSpec* damping, double floor_scale) {
    if (t.size() != val.size() || t.empty())
        throw std::invalid_argument("fit_series_rate: empty or misaligned series");
    if (!(window.t_lo > 0.0) || !(window.t_hi > window.t_lo))
        throw std::invalid_argument("fit_series_rate: window must satisfy 0 < t_lo < t_hi");
    if (kind == FitKind::ExpGamma && damping == nullptr)
        throw std::invalid_argument("fit_series_rate: exp-gamma fit needs a damping spec");

    // Span requirements apply to the requested window, not to what survives
    // the floor filter: a run that decayed into the floor early still asked
    // the right question.
    if (kind == FitKind::PolyLogLog) {
        if (std::log10(window.t_hi / window.t_lo) < 2.0 - 1e-12)
            throw std::invalid_argument(
                "fit_series_rate: polynomial fit window must span at least 2 decades");
    } else {
        const double span =
            gamma_integral(*damping, window.t_hi) - gamma_integral(*damping, window.t_lo);
        if (span < 5.0 - 1e-12)
            throw std::invalid_argument(
                "fit_series_rate: exp-gamma fit window must span at least 5 Gamma-units");
    }

    RateFit fit;
    fit.kind = kind;
    fit.window = window;
    fit.envelope_used = envelope;
    fit.floor = floor_scale * (1.0 + val[0]);

    const double lo = window.t_lo * (1.0 - 1e-12);
    const double hi = window.t_hi * (1.0 + 1e-12);
    std::vector<double> ts, vs;
    for (size_t i = 0; i < t.size(); ++i) {
        if (t[i] < lo || t[i] > hi) continue;
        if (val[i] <= fit.floor) {
            ++fit.n_excluded_floor;
            continue;
        }
        ts.push_back(t[i]);
        vs.push_back(val[i]);
    }
    if (ts.size() < 20)
        throw std::runtime_error("fit_series_rate: fewer than 20 usable samples (" +
                                 std::to_string(ts.size()) + ")");

    if (envelope)
        for (size_t i = vs.size() - 1; i-- > 0;) vs[i] = std::max(vs[i], vs[i + 1]);

    // Ordinary least squares of log(v) on the abscissa.
    const size_t n = ts.size();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::vector<double> xs(n), ys(n);
    for (size_t i = 0; i < n; ++i) {
        xs[i] = kind == FitKind::PolyLogLog ? std::log(ts[i])
                                            : gamma_integral(*damping, ts[i]);
        ys[i] = std::log(vs[i]);
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double dn = static_cast<double>(n);
    const double denom = dn * sxx - sx * sx;
    fit.fitted = (dn * sxy - sx * sy) / denom;
    const double intercept = (sy - fit.fitted * sx) / dn;
    double rss = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double res = ys[i] - (intercept + fit.fitted * xs[i]);
        rss += res * res;
    }
    fit.residual_rms = std::sqrt(rss / dn);
    fit.n_used = static_cast<int>(n);
    return fit;
}

RateFit fit_rate(const Trajectory& traj, const Objective& f, FitKind kind,
                 FitWindow window, bool envelope) {
    std::vector<double> gap(traj.t.size());
    for (size_t i = 0; i < traj.t.size(); ++i) gap[i] = f.gap(traj.x[i]);
    return fit_series_rate(traj.t, gap, kind, window, envelope, &traj.damping);
}

RateFit fit_velocity_rate(const Trajectory& traj, FitWindow window, bool envelope) {
    std::vector<double> speed(traj.t.size());
    for (size_t i = 0; i < traj.t.size(); ++i) speed[i] = norm(traj.v[i]);
    return fit_series_rate(traj.t, speed, FitKind::PolyLogLog, window, envelope,
                           &traj.damping);
}

double predicted_exponent(RateCase kase, const DampingSpec& damping,
                          const GeometryClass& geometry) {
    const double r = (1.0 + damping.theta) / 2.0;
    switch (kase) {
        case RateCase::SharpNesterovSubcritical:
        case RateCase::SharpNesterov:
            return 2.0 * geometry.gamma1 * damping.alpha / (geometry.gamma1 + 2.0);
        case RateCase::SharpHeavyBall:
            throw std::invalid_argument(
                "predicted_exponent: exponential regime has no single polynomial exponent");
        case RateCase::FlatUnperturbed:
        case RateCase::FlatPerturbed:
            return 2.0 * r * geometry.gamma2 / (geometry.gamma2 - 2.0);
        case RateCase::FlatVelocity:
            return r * geometry.gamma2 / (geometry.gamma2 - 2.0);
    }
    throw std::invalid_argument("predicted_exponent: unknown case");
}

namespace {

bool sharp_geometry(const GeometryClass& g) {
    return g.gamma1 >= 1.0 && g.gamma1 <= 2.0 && std::fabs(g.gamma2 - 2.0) <= 1e-9 &&
           g.K > 0.0;
}

bool flat_geometry(const GeometryClass& g) {
    return g.gamma1 > 2.0 && g.gamma2 >= g.gamma1;
}

RatePrediction make_poly(RateCase kase, const DampingSpec& d, const GeometryClass& g,
                         const PerturbationSchedule& s) {
    RatePrediction p;
    p.kase = kase;
    p.kind = FitKind::PolyLogLog;
    p.exponent = predicted_exponent(kase, d, g);
    p.velocity = kase == RateCase::FlatVelocity;
    p.weight = required_weight(kase, d, g);
    p.margin = integrability_margin(s, p.weight);
    return p;
}

}  // namespace

std::vector<RatePrediction> dispatch(const DampingSpec& damping,
                                     const GeometryClass& geometry,
                                     const PerturbationSchedule& schedule,
                                     double t3_m) {
    validate(damping);
    std::vector<RatePrediction> out;
    const bool zero = schedule.kind == PerturbationSchedule::Kind::Zero;

    if (sharp_geometry(geometry)) {
        const double ga = geometry.gamma1;
        if (damping.theta == 1.0) {
            const RateCase kase = damping.alpha > 1.0 + 2.0 / ga
                                      ? RateCase::SharpNesterov
                                      : RateCase::SharpNesterovSubcritical;
            RatePrediction p = make_poly(kase, damping, geometry, schedule);
            if (p.margin > 0.0) out.push_back(std::move(p));
        }
        // Exponential regime: genuine for theta < 1; at theta = 1 it applies
        // in a limit sense with exp(-m Gamma(t)) = (t/t0)^{-m alpha} and is
        // reported as a note alongside the polynomial statement.
        const double sup_m = 2.0 * ga / (ga + 2.0);
        const double m = t3_m < 0.0 ? 0.5 * sup_m : t3_m;
        if (!(m > 0.0) || !(m < sup_m))
            throw std::invalid_argument(
                "dispatch: exponential rate m must lie in (0, 2*gamma/(gamma+2))");
        RatePrediction p;
        p.kase = RateCase::SharpHeavyBall;
        p.kind = FitKind::ExpGamma;
        p.m = m;
        // required_weight insists on theta < 1, so build the exp weight here;
        // integrability_margin already folds the theta = 1 limit into a power.
        p.weight.kind = IntegralWeight::Kind::Exp;
        p.weight.m = m;
        p.weight.damping = damping;
        p.margin = integrability_margin(schedule, p.weight);
        if (damping.theta == 1.0) {
            p.exponent = m * damping.alpha;
            char buf[160];
            std::snprintf(buf, sizeof(buf),
                          "limit regime at theta = 1: exp(-m Gamma(t)) = (t/t0)^{-%g}; "
                          "slower than the polynomial statement for every admissible m",
                          p.exponent);
            p.note = buf;
        }
        if (p.margin > 0.0) out.push_back(std::move(p));
    }

    if (flat_geometry(geometry)) {
        const double g1 = geometry.gamma1;
        const bool damping_ok =
            damping.theta < 1.0 ||
            damping.alpha >= (g1 + 2.0) / (g1 - 2.0);
        if (damping_ok) {
            if (zero)
                out.push_back(
                    make_poly(RateCase::FlatUnperturbed, damping, geometry, schedule));
            RatePrediction p5 =
                make_poly(RateCase::FlatPerturbed, damping, geometry, schedule);
            if (p5.margin > 0.0) {
                out.push_back(std::move(p5));
                if (std::fabs(geometry.gamma2 - g1) <= 1e-12)
                    out.push_back(
                        make_poly(RateCase::FlatVelocity, damping, geometry, schedule));
            }
        }
    }
    return out;
}

double default_slack(const RatePrediction& prediction) {
    return prediction.kind == FitKind::PolyLogLog ? 0.25 : 0.1 * prediction.m;
}

Verdict rate_verdict(const RatePrediction& prediction, const RateFit& fit, double slack) {
    if (prediction.kind != fit.kind)
        throw std::invalid_argument("rate_verdict: prediction and fit kinds differ");
    Verdict v;
    v.slack = slack < 0.0 ? default_slack(prediction) : slack;
    const double predicted =
        prediction.kind == FitKind::PolyLogLog ? prediction.exponent : prediction.m;
    v.required = predicted - v.slack;
    v.pass = fit.fitted <= -v.required;
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "%s: fitted %.4f vs required <= %.4f (predicted %.4f, slack %.3f)",
                  to_string(prediction.kase).c_str(), fit.fitted, -v.required, predicted,
                  v.slack);
    v.detail = buf;
    return v;
}

}  // namespace iflow
