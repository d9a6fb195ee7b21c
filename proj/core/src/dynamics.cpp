#include "iflow/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace iflow {

namespace {

// Dormand-Prince 5(4) tableau, error weights e* and dense-output weights d*
// (Hairer, Norsett & Wanner, Solving Ordinary Differential Equations I).
const double c2 = 0.2, c3 = 0.3, c4 = 0.8, c5 = 8.0 / 9.0;

const double a21 = 0.2, a31 = 3.0 / 40.0, a32 = 9.0 / 40.0, a41 = 44.0 / 45.0,
             a42 = -56.0 / 15.0, a43 = 32.0 / 9.0, a51 = 19372.0 / 6561.0,
             a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0,
             a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
             a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0, a71 = 35.0 / 384.0,
             a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
             a76 = 11.0 / 84.0;

const double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
             e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

const double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
             d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
             d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

// Step-size controller constants (Lund stabilization).
const double safe = 0.9, facl = 0.2, facr = 10.0, beta_stab = 0.04;

std::vector<double> build_grid(double t0, double horizon, const GridSpec& grid) {
    if (!(horizon > t0)) throw std::invalid_argument("integrate: horizon must exceed t0");
    std::vector<double> out;
    if (grid.kind == GridSpec::Kind::LogUniform) {
        if (!(grid.points_per_decade >= 4.0))
            throw std::invalid_argument("GridSpec: points_per_decade must be >= 4");
        const double ppd = grid.points_per_decade;
        for (long k = 0;; ++k) {
            const double tk = t0 * std::pow(10.0, static_cast<double>(k) / ppd);
            if (tk >= horizon * (1.0 - 1e-12)) break;
            out.push_back(tk);
        }
    } else {
        if (!(grid.dt > 0.0)) throw std::invalid_argument("GridSpec: dt must be > 0");
        for (long k = 0;; ++k) {
            const double tk = t0 + static_cast<double>(k) * grid.dt;
            if (tk >= horizon * (1.0 - 1e-12)) break;
            out.push_back(tk);
        }
    }
    out.push_back(horizon);
    return out;
}

// Right-hand side of the first-order system y = [x, v]:
//   x' = v,  v' = g(t) - beta(t) v - grad F(x).
// For seeded random forcing directions the unit vector is frozen per step
// (the step never straddles a direction window), so `dir` is set externally.
struct FlowRhs {
    const Objective& f;
    const DampingSpec& damping;
    const PerturbationSchedule& g;
    bool forced;
    int n;
    Vec dir;   // current forcing direction, unit norm (empty when !forced)
    Vec xbuf;
    Vec grad;
    long evals = 0;

    FlowRhs(const Objective& f_, const DampingSpec& d_, const PerturbationSchedule& g_)
        : f(f_), damping(d_), g(g_), forced(g_.kind != PerturbationSchedule::Kind::Zero),
          n(f_.dim()), xbuf(f_.dim(), 0.0), grad(f_.dim(), 0.0) {
        if (forced) dir = direction_at(g, g.t0);
    }

    void operator()(double t, const Vec& y, Vec& dy) {
        ++evals;
        std::copy(y.begin(), y.begin() + n, xbuf.begin());
        f.gradient(xbuf, grad);
        const double b = damping.beta(t);
        const double mag = forced ? g_norm(g, t) : 0.0;
        for (int i = 0; i < n; ++i) {
            dy[i] = y[n + i];
            dy[n + i] = -b * y[n + i] - grad[i];
            if (forced) dy[n + i] += mag * dir[i];
        }
    }
};

double error_norm(const Vec& y, const Vec& ynew, const Vec& ee, double abs_tol,
                  double rel_tol) {
    double err = 0.0;
    const size_t m = y.size();
    for (size_t i = 0; i < m; ++i) {
        const double sc = abs_tol + rel_tol * std::max(std::fabs(y[i]), std::fabs(ynew[i]));
        const double q = ee[i] / sc;
        err += q * q;
    }
    return std::sqrt(err / static_cast<double>(m));
}

// Initial step heuristic (Hairer's hinit): balance first and estimated second
// derivatives against the tolerance scale.
double initial_step_size(FlowRhs& rhs, double t, const Vec& y, const Vec& k1,
                         double t_end, double abs_tol, double rel_tol, double max_step) {
    const size_t m = y.size();
    double dnf = 0.0, dny = 0.0;
    for (size_t i = 0; i < m; ++i) {
        const double sc = abs_tol + rel_tol * std::fabs(y[i]);
        double q = k1[i] / sc;
        dnf += q * q;
        q = y[i] / sc;
        dny += q * q;
    }
    double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
    double hmax = t_end - t;
    if (max_step > 0.0) hmax = std::min(hmax, max_step);
    h = std::min(h, hmax);

    Vec y1(m), k2(m);
    for (size_t i = 0; i < m; ++i) y1[i] = y[i] + h * k1[i];
    rhs(t + h, y1, k2);

    double der2 = 0.0;
    for (size_t i = 0; i < m; ++i) {
        const double sc = abs_tol + rel_tol * std::fabs(y[i]);
        const double q = (k2[i] - k1[i]) / sc;
        der2 += q * q;
    }
    der2 = std::sqrt(der2) / h;

    const double der12 = std::max(der2, std::sqrt(dnf));
    double h1;
    if (der12 <= 1e-15)
        h1 = std::max(1e-6, h * 1e-3);
    else
        h1 = std::pow(0.01 / der12, 0.2);
    return std::min({100.0 * h, h1, hmax});
}

}  // namespace

Trajectory integrate(const Objective& f, const DampingSpec& damping,
                     const PerturbationSchedule& g, const Vec& x0, const Vec& v0,
                     double horizon, const SolverConfig& cfg) {
    validate(damping);
    const int n = f.dim();
    if (static_cast<int>(x0.size()) != n || static_cast<int>(v0.size()) != n)
        throw std::invalid_argument("integrate: x0/v0 dimension mismatch");
    const bool forced = g.kind != PerturbationSchedule::Kind::Zero;
    if (forced) {
        validate(g);
        if (g.dim != n) throw std::invalid_argument("integrate: forcing dimension mismatch");
    }
    if (!(cfg.rel_tol > 0.0) || !(cfg.abs_tol > 0.0) || cfg.rel_tol > 1e-2 ||
        cfg.abs_tol > 1e-2)
        throw std::invalid_argument("integrate: tolerances must lie in (0, 1e-2]");

    const double t0 = damping.t0;
    const std::vector<double> grid = build_grid(t0, horizon, cfg.grid);

    const size_t m = 2 * static_cast<size_t>(n);
    Vec y(m), ynew(m), ystage(m), ee(m);
    Vec k1(m), k2(m), k3(m), k4(m), k5(m), k6(m), k7(m);
    Vec rc1(m), rc2(m), rc3(m), rc4(m), rc5(m);
    std::copy(x0.begin(), x0.end(), y.begin());
    std::copy(v0.begin(), v0.end(), y.begin() + n);
    if (!all_finite(y)) throw SolveError("non-finite initial state", t0);

    FlowRhs rhs(f, damping, g);
    const bool random_dir = forced && g.direction == DirectionMode::SeededRandom;
    const double delta = g.delta_dir;
    long long cur_window = std::numeric_limits<long long>::min();

    Trajectory traj;
    traj.dim = n;
    traj.damping = damping;
    traj.t.reserve(grid.size());
    traj.x.reserve(grid.size());
    traj.v.reserve(grid.size());
    traj.t.push_back(grid[0]);
    traj.x.push_back(x0);
    traj.v.push_back(v0);
    size_t next_sample = 1;

    double t = t0;
    rhs(t, y, k1);
    double h = cfg.initial_step > 0.0
                   ? cfg.initial_step
                   : initial_step_size(rhs, t, y, k1, horizon, cfg.abs_tol, cfg.rel_tol,
                                       cfg.max_step);

    SolveStats stats;
    double facold = 1e-4;
    bool rejected_last = false;

    while (t < horizon) {
        if (stats.n_attempted >= cfg.max_steps)
            throw SolveError("maximum step count exceeded", t);

        // Cap the step: horizon, user cap, and the next forcing-direction
        // window boundary, so the right-hand side stays smooth inside a step.
        double h_use = std::min(h, horizon - t);
        if (cfg.max_step > 0.0) h_use = std::min(h_use, cfg.max_step);
        bool last = (t + h_use >= horizon);
        if (last) h_use = horizon - t;
        if (random_dir) {
            double boundary = (std::floor(t / delta) + 1.0) * delta;
            if (boundary - t < delta * 1e-9) boundary += delta;
            if (boundary - t < h_use) {
                h_use = boundary - t;
                last = false;
            }
            const long long w =
                static_cast<long long>(std::floor((t + 0.5 * h_use) / delta));
            if (w != cur_window) {
                rhs.dir = direction_at(g, t + 0.5 * h_use);
                cur_window = w;
                rhs(t, y, k1);  // k1 from the previous window is stale
            }
        }
        if (h_use <= 16.0 * std::numeric_limits<double>::epsilon() * t)
            throw SolveError("step size underflow", t);

        ++stats.n_attempted;
        const double hu = h_use;

        for (size_t i = 0; i < m; ++i) ystage[i] = y[i] + hu * a21 * k1[i];
        rhs(t + c2 * hu, ystage, k2);
        for (size_t i = 0; i < m; ++i)
            ystage[i] = y[i] + hu * (a31 * k1[i] + a32 * k2[i]);
        rhs(t + c3 * hu, ystage, k3);
        for (size_t i = 0; i < m; ++i)
            ystage[i] = y[i] + hu * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(t + c4 * hu, ystage, k4);
        for (size_t i = 0; i < m; ++i)
            ystage[i] =
                y[i] + hu * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(t + c5 * hu, ystage, k5);
        for (size_t i = 0; i < m; ++i)
            ystage[i] = y[i] + hu * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] +
                                     a64 * k4[i] + a65 * k5[i]);
        rhs(t + hu, ystage, k6);
        for (size_t i = 0; i < m; ++i)
            ynew[i] = y[i] + hu * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] +
                                   a75 * k5[i] + a76 * k6[i]);
        rhs(t + hu, ynew, k7);

        for (size_t i = 0; i < m; ++i)
            ee[i] = hu * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                          e6 * k6[i] + e7 * k7[i]);

        if (!all_finite(ynew)) throw SolveError("non-finite state", t + hu);
        const double err = error_norm(y, ynew, ee, cfg.abs_tol, cfg.rel_tol);
        if (!std::isfinite(err)) throw SolveError("non-finite error estimate", t + hu);

        const double fac11 = std::pow(err, 0.2 - beta_stab * 0.75);
        double fac = fac11 / std::pow(facold, beta_stab);
        fac = std::max(1.0 / facr, std::min(1.0 / facl, fac / safe));
        double h_next = hu / fac;

        if (err > 1.0) {
            h = hu / std::min(1.0 / facl, fac11 / safe);
            rejected_last = true;
            if (stats.n_accepted >= 1) ++stats.n_rejected;
            continue;
        }

        // Accepted. Interpolate any sample times inside (t, t + hu].
        facold = std::max(err, 1e-4);
        if (rejected_last) {
            h_next = std::min(h_next, hu);
            rejected_last = false;
        }
        const double t_new = last ? horizon : t + hu;
        const double emit_guard = 1e-12 * std::max(1.0, std::fabs(t_new));
        if (next_sample < grid.size() && grid[next_sample] <= t_new + emit_guard) {
            for (size_t i = 0; i < m; ++i) {
                const double ydiff = ynew[i] - y[i];
                const double bspl = hu * k1[i] - ydiff;
                rc1[i] = y[i];
                rc2[i] = ydiff;
                rc3[i] = bspl;
                rc4[i] = ydiff - hu * k7[i] - bspl;
                rc5[i] = hu * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                               d6 * k6[i] + d7 * k7[i]);
            }
            while (next_sample < grid.size() && grid[next_sample] <= t_new + emit_guard) {
                const double ts = grid[next_sample];
                const double s = std::min(1.0, std::max(0.0, (ts - t) / hu));
                const double s1 = 1.0 - s;
                Vec xs(n), vs(n);
                for (size_t i = 0; i < m; ++i) {
                    const double val =
                        rc1[i] + s * (rc2[i] + s1 * (rc3[i] + s * (rc4[i] + s1 * rc5[i])));
                    if (i < static_cast<size_t>(n))
                        xs[i] = val;
                    else
                        vs[i - n] = val;
                }
                traj.t.push_back(ts);
                traj.x.push_back(std::move(xs));
                traj.v.push_back(std::move(vs));
                ++next_sample;
            }
        }

        std::swap(y, ynew);
        std::swap(k1, k7);  // FSAL
        t = t_new;
        h = h_next;
        if (stats.n_accepted == 0) {
            stats.min_step = stats.max_step = hu;
        } else {
            stats.min_step = std::min(stats.min_step, hu);
            stats.max_step = std::max(stats.max_step, hu);
        }
        ++stats.n_accepted;
        if (last) break;
    }

    stats.n_rhs_evals = rhs.evals;
    traj.stats = stats;
    return traj;
}

double mechanical_energy(const Objective& f, const Vec& x, const Vec& v) {
    return f.gap(x) + 0.5 * norm_sq(v);
}

void write_trajectory_csv(std::ostream& os, const Objective& f, const Trajectory& traj) {
    const int n = traj.dim;
    os << "t";
    for (int i = 0; i < n; ++i) os << ",x_" << i;
    for (int i = 0; i < n; ++i) os << ",v_" << i;
    os << ",F_gap\n";
    char buf[32];
    auto put = [&](double val, char lead) {
        std::snprintf(buf, sizeof(buf), "%.16e", val);
        if (lead) os << lead;
        os << buf;
    };
    for (size_t k = 0; k < traj.t.size(); ++k) {
        put(traj.t[k], 0);
        for (int i = 0; i < n; ++i) put(traj.x[k][i], ',');
        for (int i = 0; i < n; ++i) put(traj.v[k][i], ',');
        put(f.gap(traj.x[k]), ',');
        os << '\n';
    }
}

void write_trajectory_csv(const std::string& path, const Objective& f,
                          const Trajectory& traj) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    write_trajectory_csv(os, f, traj);
}

}  // namespace iflow
