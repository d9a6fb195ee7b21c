#include "iflow/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace iflow {

namespace {

const double kInf = std::numeric_limits<double>::infinity();

// Fornberg's algorithm: weights of the first derivative at z over the n nodes
// x[0..n-1] (exact for polynomials of degree n-1).
void fd_weights_first(const double* x, int n, double z, double* w) {
    std::vector<double> c0(n, 0.0), c1(n, 0.0);
    double prod_prev = 1.0;
    double c4 = x[0] - z;
    c0[0] = 1.0;
    for (int i = 1; i < n; ++i) {
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - z;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                c1[i] = prod_prev * (c0[i - 1] - c5 * c1[i - 1]) / c2;
                c0[i] = -prod_prev * c5 * c0[i - 1] / c2;
            }
            c1[j] = (c4 * c1[j] - c0[j]) / c3;
            c0[j] = c4 * c0[j] / c3;
        }
        prod_prev = c2;
    }
    for (int i = 0; i < n; ++i) w[i] = c1[i];
}

// First derivative of y(t) at every sample, 5-node sliding stencils (3-node
// when the series is too short). Handles non-uniform grids.
std::vector<double> fd_derivative(const std::vector<double>& t,
                                  const std::vector<double>& y) {
    const int n = static_cast<int>(t.size());
    std::vector<double> d(n, 0.0);
    const int w = n >= 5 ? 5 : 3;
    double wt[5];
    for (int i = 0; i < n; ++i) {
        const int j0 = std::clamp(i - w / 2, 0, n - w);
        fd_weights_first(&t[j0], w, t[i], wt);
        double s = 0.0;
        for (int k = 0; k < w; ++k) s += wt[k] * y[j0 + k];
        d[i] = s;
    }
    return d;
}

void require(bool ok, const char* condition) {
    if (!ok) throw std::invalid_argument(std::string("select_params: requires ") + condition);
}

}  // namespace

std::string to_string(EnergyForm form) {
    switch (form) {
        case EnergyForm::NesterovSharp: return "NesterovSharp";
        case EnergyForm::HeavyBallSharp0: return "HeavyBallSharp0";
        case EnergyForm::HeavyBallSharpTheta: return "HeavyBallSharpTheta";
        case EnergyForm::Flat: return "Flat";
    }
    return "?";
}

EnergyForm energy_form_from_string(const std::string& s) {
    if (s == "NesterovSharp") return EnergyForm::NesterovSharp;
    if (s == "HeavyBallSharp0") return EnergyForm::HeavyBallSharp0;
    if (s == "HeavyBallSharpTheta") return EnergyForm::HeavyBallSharpTheta;
    if (s == "Flat") return EnergyForm::Flat;
    throw std::invalid_argument("unknown energy form: " + s);
}

double LyapunovParams::lambda(double t) const {
    if (variant == EnergyForm::HeavyBallSharpTheta)
        return 2.0 * alpha / (std::pow(t, theta) * (gamma + 2.0));
    return lambda0;
}

double LyapunovParams::xi(double t) const {
    switch (variant) {
        case EnergyForm::HeavyBallSharpTheta: {
            const double l = lambda(t);
            return -l * l;
        }
        case EnergyForm::Flat: {
            const double l = lambda0;
            return l * (l + 1.0 - alpha * std::pow(t, 1.0 - theta));
        }
        default: return xi0;
    }
}

bool LyapunovParams::time_weighted() const {
    return variant == EnergyForm::NesterovSharp || variant == EnergyForm::Flat;
}

LyapunovParams select_params(EnergyForm variant, const DampingSpec& damping,
                             const GeometryClass& geometry, double K2) {
    validate(damping);
    LyapunovParams prm;
    prm.variant = variant;
    prm.alpha = damping.alpha;
    prm.theta = damping.theta;
    prm.t0 = damping.t0;
    prm.gamma2 = geometry.gamma2;
    prm.K = K2 < 0.0 ? geometry.K : K2;
    const double al = damping.alpha;

    switch (variant) {
        case EnergyForm::NesterovSharp: {
            const double ga = geometry.gamma1;
            require(damping.theta == 1.0, "theta = 1");
            require(ga >= 1.0 && ga <= 2.0, "gamma in [1, 2]");
            require(al >= 1.0 + 2.0 / ga, "alpha >= 1 + 2/gamma");
            prm.gamma = ga;
            prm.p = 2.0 * ga * al / (ga + 2.0) - 2.0;
            prm.lambda0 = 2.0 * al / (ga + 2.0);
            prm.xi0 = prm.lambda0 * (prm.lambda0 + 1.0 - al);
            prm.r = 1.0;
            break;
        }
        case EnergyForm::HeavyBallSharp0: {
            const double ga = geometry.gamma1;
            require(damping.theta == 0.0, "theta = 0");
            require(ga >= 1.0 && ga <= 2.0, "gamma in [1, 2]");
            require(std::fabs(geometry.gamma2 - 2.0) <= 1e-9,
                    "quadratic sharpness (gamma2 = 2)");
            require(prm.K > 0.0, "a positive sharpness constant K2");
            prm.gamma = ga;
            prm.p = 0.0;
            prm.lambda0 = std::min(ga * prm.K / (2.0 * al), 2.0 * al / (ga + 2.0));
            prm.xi0 = prm.lambda0 * (prm.lambda0 - al);
            prm.r = 0.5;
            break;
        }
        case EnergyForm::HeavyBallSharpTheta: {
            const double ga = geometry.gamma1;
            require(damping.theta > 0.0 && damping.theta < 1.0, "theta in (0, 1)");
            require(ga >= 1.0 && ga <= 2.0, "gamma in [1, 2]");
            prm.gamma = ga;
            prm.p = 0.0;
            prm.lambda0 = 0.0;
            prm.xi0 = 0.0;
            prm.r = (1.0 + damping.theta) / 2.0;
            break;
        }
        case EnergyForm::Flat: {
            const double g1 = geometry.gamma1;
            require(g1 > 2.0, "gamma1 > 2");
            require(geometry.gamma2 >= g1, "gamma2 >= gamma1");
            prm.gamma = g1;
            prm.r = (1.0 + damping.theta) / 2.0;
            prm.lambda0 = 2.0 * prm.r / (g1 - 2.0);
            prm.p = 4.0 * prm.r / (g1 - 2.0) + 2.0 * (prm.r - 1.0);
            prm.xi0 = prm.lambda0 * (prm.lambda0 + 1.0 - al);  // value at t = 1
            break;
        }
    }
    return prm;
}

double eval_E(const LyapunovParams& params, const Objective& f, double t, const Vec& x,
              const Vec& v) {
    const Vec& xs = f.minimizer();
    const int n = f.dim();
    const double lam = params.lambda(t);
    const double xiv = params.xi(t);
    const double gap = f.gap(x);
    double nb = 0.0, nc = 0.0;
    if (params.time_weighted()) {
        for (int i = 0; i < n; ++i) {
            const double di = x[i] - xs[i];
            const double wi = lam * di + t * v[i];
            nb += wi * wi;
            nc += di * di;
        }
        return t * t * gap + 0.5 * nb + 0.5 * xiv * nc;
    }
    for (int i = 0; i < n; ++i) {
        const double di = x[i] - xs[i];
        const double wi = lam * di + v[i];
        nb += wi * wi;
        nc += di * di;
    }
    return gap + 0.5 * nb + 0.5 * xiv * nc;
}

EnergySeries eval_G_series(const LyapunovParams& params, const Trajectory& traj,
                           const Objective& f, const PerturbationSchedule& g) {
    const size_t n = traj.t.size();
    if (n == 0) throw std::invalid_argument("eval_G_series: empty trajectory");
    const int dim = f.dim();
    if (traj.dim != dim) throw std::invalid_argument("eval_G_series: dimension mismatch");
    const Vec& xs = f.minimizer();
    const bool weighted = params.time_weighted();
    const bool forced = g.kind != PerturbationSchedule::Kind::Zero;

    EnergySeries s;
    s.params = params;
    s.t = traj.t;
    s.a.resize(n);
    s.b.resize(n);
    s.c.resize(n);
    s.E.resize(n);
    s.H.resize(n);
    s.G.resize(n);

    std::vector<double> integrand(forced ? n : 0, 0.0);
    for (size_t k = 0; k < n; ++k) {
        const double t = traj.t[k];
        const Vec& x = traj.x[k];
        const Vec& v = traj.v[k];
        const double lam = params.lambda(t);
        const double gap = f.gap(x);
        double nb = 0.0, nc = 0.0;
        if (weighted) {
            for (int i = 0; i < dim; ++i) {
                const double di = x[i] - xs[i];
                const double wi = lam * di + t * v[i];
                nb += wi * wi;
                nc += di * di;
            }
            s.a[k] = t * gap;
            s.b[k] = nb / (2.0 * t);
            s.c[k] = nc / (2.0 * t);
            s.E[k] = t * (s.a[k] + s.b[k] + params.xi(t) * s.c[k]);
        } else {
            for (int i = 0; i < dim; ++i) {
                const double di = x[i] - xs[i];
                const double wi = lam * di + v[i];
                nb += wi * wi;
                nc += di * di;
            }
            s.a[k] = gap;
            s.b[k] = 0.5 * nb;
            s.c[k] = 0.5 * nc;
            s.E[k] = s.a[k] + s.b[k] + params.xi(t) * s.c[k];
        }
        s.H[k] = params.p == 0.0 ? s.E[k] : std::pow(t, params.p) * s.E[k];
        if (forced) {
            const Vec gv = eval_g(g, t);
            double ip = 0.0;
            for (int i = 0; i < dim; ++i) {
                const double di = x[i] - xs[i];
                const double wi = weighted ? lam * di + t * v[i] : lam * di + v[i];
                ip += wi * gv[i];
            }
            integrand[k] = weighted ? std::pow(t, params.p + 1.0) * ip : ip;
        }
    }

    // Tail integral accumulated backward by composite trapezoid, so G(T)=H(T).
    double tail = 0.0;
    s.G[n - 1] = s.H[n - 1];
    for (size_t k = n - 1; k-- > 0;) {
        if (forced)
            tail += 0.5 * (s.t[k + 1] - s.t[k]) * (integrand[k] + integrand[k + 1]);
        s.G[k] = s.H[k] + tail;
    }
    return s;
}

CertificationReport certify_derivative_bound(const EnergySeries& series,
                                             const Trajectory& traj, const Objective& f,
                                             const PerturbationSchedule& g) {
    const size_t n = series.t.size();
    if (n < 3)
        throw std::invalid_argument(
            "certify_derivative_bound: grid too coarse (need at least 3 samples)");
    if (traj.t.size() != n)
        throw std::invalid_argument("certify_derivative_bound: series/trajectory mismatch");
    const LyapunovParams& prm = series.params;
    const bool forced = g.kind != PerturbationSchedule::Kind::Zero;
    const Vec& xs = f.minimizer();
    const int dim = f.dim();

    const std::vector<double>& Y = prm.time_weighted() ? series.G : series.E;
    const std::vector<double> dY = fd_derivative(series.t, Y);

    CertificationReport rep;
    rep.name = "derivative-bound/" + to_string(prm.variant);
    rep.max_excess = -kInf;
    for (size_t i = 1; i + 1 < n; ++i) {
        const double t = series.t[i];
        double lhs = dY[i], rhs = 0.0;
        switch (prm.variant) {
            case EnergyForm::NesterovSharp: {
                const double lam = prm.lambda0, p = prm.p;
                rhs = std::pow(t, p) *
                      ((2.0 + p - prm.gamma * lam) * series.a[i] +
                       (p + 2.0 * lam + 2.0 - 2.0 * prm.alpha) * series.b[i] +
                       prm.xi0 * (p - 2.0 * lam) * series.c[i]);
                break;
            }
            case EnergyForm::Flat: {
                const double lam = prm.lambda0, p = prm.p;
                const double tp1 = std::pow(t, 1.0 - prm.theta);
                const double ca = 2.0 + p - prm.gamma * lam;
                const double cb = 2.0 * lam + 2.0 + p - 2.0 * prm.alpha * tp1;
                const double cc =
                    lam * ((lam + 1.0) * (p - 2.0 * lam) -
                           prm.alpha * (p + 1.0 - prm.theta - 2.0 * lam) * tp1);
                rhs = std::pow(t, p) *
                      (ca * series.a[i] + cb * series.b[i] + cc * series.c[i]);
                break;
            }
            case EnergyForm::HeavyBallSharp0: {
                const double lam = prm.lambda0;
                rhs = -lam * prm.gamma * series.a[i] +
                      2.0 * (lam - prm.alpha) * series.b[i] -
                      2.0 * lam * prm.xi0 * series.c[i];
                if (forced) {
                    const Vec gv = eval_g(g, t);
                    for (int j = 0; j < dim; ++j)
                        rhs += gv[j] * (traj.v[i][j] + lam * (traj.x[i][j] - xs[j]));
                }
                break;
            }
            case EnergyForm::HeavyBallSharpTheta: {
                const double be = traj.damping.beta(t);
                const double bd = traj.damping.beta_dot(t);
                const double ga = prm.gamma;
                lhs += 2.0 * ga / (ga + 2.0) * be * series.E[i];
                const double coef =
                    2.0 / (ga + 2.0) * (bd + (ga - 2.0) / (ga + 2.0) * be * be);
                const double lam = 2.0 * be / (ga + 2.0);
                double ip = 0.0;
                for (int j = 0; j < dim; ++j)
                    ip += (traj.x[i][j] - xs[j]) * traj.v[i][j];
                rhs = coef * ip;
                if (forced) {
                    const Vec gv = eval_g(g, t);
                    for (int j = 0; j < dim; ++j)
                        rhs += gv[j] * (traj.v[i][j] + lam * (traj.x[i][j] - xs[j]));
                }
                break;
            }
        }
        const double spacing = 0.5 * (series.t[i + 1] - series.t[i - 1]);
        const double tol = 1e-4 * (1.0 + std::fabs(series.H[i])) * spacing;
        const double excess = lhs - rhs;
        ++rep.n_checked;
        if (excess > rep.max_excess) {
            rep.max_excess = excess;
            rep.tol_at_worst = tol;
            rep.worst_time = t;
        }
        if (excess > tol) rep.violating_times.push_back(t);
    }
    rep.pass = rep.violating_times.empty();
    return rep;
}

CertificationReport certify_distance_bound(const EnergySeries& series) {
    const LyapunovParams& prm = series.params;
    if (prm.variant != EnergyForm::Flat)
        throw std::invalid_argument("certify_distance_bound: requires the Flat variant");
    if (!(prm.gamma2 > 2.0))
        throw std::invalid_argument("certify_distance_bound: requires gamma2 > 2");
    if (!(prm.K > 0.0))
        throw std::invalid_argument("certify_distance_bound: requires K > 0");
    const double g2 = prm.gamma2;
    const double p2 = 4.0 * prm.r / (g2 - 2.0);
    const double scale = 0.5 * std::pow(prm.K, -2.0 / g2);

    CertificationReport rep;
    rep.name = "distance-bound";
    rep.max_excess = -kInf;
    for (size_t i = 0; i < series.t.size(); ++i) {
        const double t = series.t[i];
        const double lhs = std::pow(t, p2 + 1.0) * series.c[i];
        const double rhs =
            scale * std::pow(std::pow(t, p2 + 2.0 * prm.r - 1.0) * series.a[i], 2.0 / g2);
        const double tol = 1e-9 * (1.0 + std::fabs(lhs));
        const double excess = lhs - rhs;
        ++rep.n_checked;
        if (excess > rep.max_excess) {
            rep.max_excess = excess;
            rep.tol_at_worst = tol;
            rep.worst_time = t;
        }
        if (excess > tol) rep.violating_times.push_back(t);
    }
    rep.pass = rep.violating_times.empty();
    return rep;
}

CertificationReport certify_xi_bound(const LyapunovParams& params, double t_max) {
    if (params.variant != EnergyForm::Flat)
        throw std::invalid_argument("certify_xi_bound: requires the Flat variant");
    if (params.theta == 1.0 &&
        params.alpha < (params.gamma + 2.0) / (params.gamma - 2.0))
        throw std::invalid_argument(
            "certify_xi_bound: requires alpha >= (gamma1+2)/(gamma1-2) when theta = 1");
    const double bound = 2.0 * params.r * params.alpha / (params.gamma - 2.0);

    CertificationReport rep;
    rep.name = "xi-bound";
    rep.max_excess = -kInf;
    const double ppd = 200.0;
    const long n_pts =
        static_cast<long>(std::ceil(ppd * std::log10(t_max / params.t0))) + 1;
    for (long k = 0; k <= n_pts; ++k) {
        const double t =
            std::min(t_max, params.t0 * std::pow(10.0, static_cast<double>(k) / ppd));
        const double lhs = std::fabs(params.xi(t)) * std::pow(t, 2.0 * (params.r - 1.0));
        const double tol = 1e-12 * (1.0 + bound);
        const double excess = lhs - bound;
        ++rep.n_checked;
        if (excess > rep.max_excess) {
            rep.max_excess = excess;
            rep.tol_at_worst = tol;
            rep.worst_time = t;
        }
        if (excess > tol) rep.violating_times.push_back(t);
        if (t >= t_max) break;
    }
    rep.pass = rep.violating_times.empty();
    return rep;
}

MonotonicityReport monotonicity_report(const std::vector<double>& t,
                                       const std::vector<double>& y, double onset_hint,
                                       double tol_scale) {
    const size_t n = t.size();
    if (n < 2 || y.size() != n)
        throw std::invalid_argument("monotonicity_report: need two aligned samples");
    MonotonicityReport rep;
    rep.onset_hint = onset_hint;
    rep.tol = tol_scale * (1.0 + std::fabs(y[0]));

    long last_rise = -1;
    rep.max_rise = -kInf;
    const double limit = std::max(onset_hint, t[0]);
    long n_after = 0;
    for (size_t i = 0; i + 1 < n; ++i) {
        const double rise = y[i + 1] - y[i];
        rep.max_rise = std::max(rep.max_rise, rise);
        const bool violates = rise > rep.tol;
        if (violates) last_rise = static_cast<long>(i);
        if (t[i] > limit) {
            ++n_after;
            if (violates) ++rep.n_rises_after_hint;
        }
    }
    rep.first_monotone_time = last_rise < 0 ? t[0] : t[last_rise + 1];
    rep.fraction_rises_after_hint =
        n_after == 0 ? 0.0 : static_cast<double>(rep.n_rises_after_hint) /
                                 static_cast<double>(n_after);
    // Allowed slack: one grid step past the hint.
    size_t k = 0;
    while (k + 1 < n && t[k] <= limit) ++k;
    rep.pass = rep.first_monotone_time <= t[k];
    return rep;
}

MonotonicityReport monotonicity_report(const EnergySeries& series, double onset_hint,
                                       double tol_scale) {
    return monotonicity_report(series.t, series.G, onset_hint, tol_scale);
}

double flat_monotone_onset(const LyapunovParams& params) {
    if (params.variant != EnergyForm::Flat)
        throw std::invalid_argument("flat_monotone_onset: requires the Flat variant");
    if (params.theta == 1.0) {
        if (params.alpha < (params.gamma + 2.0) / (params.gamma - 2.0)) return kInf;
        return params.t0;
    }
    const double t1 = std::pow(
        params.r * (params.gamma + 2.0) / (params.alpha * (params.gamma - 2.0)),
        1.0 / (1.0 - params.theta));
    return std::max(params.t0, t1);
}

void write_energy_csv(std::ostream& os, const EnergySeries& series) {
    os << "t,a,b,c,E,H,G\n";
    char buf[32];
    auto put = [&](double val, bool lead) {
        std::snprintf(buf, sizeof(buf), "%.16e", val);
        if (lead) os << ',';
        os << buf;
    };
    for (size_t k = 0; k < series.t.size(); ++k) {
        put(series.t[k], false);
        put(series.a[k], true);
        put(series.b[k], true);
        put(series.c[k], true);
        put(series.E[k], true);
        put(series.H[k], true);
        put(series.G[k], true);
        os << '\n';
    }
}

void write_energy_csv(const std::string& path, const EnergySeries& series) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    write_energy_csv(os, series);
}

}  // namespace iflow
