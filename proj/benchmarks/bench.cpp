// Throughput benchmarks for the hot paths: the adaptive integrator, the
// energy-series evaluation with its derivative certification, and rate
// fitting on long series.

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "iflow/dynamics.hpp"
#include "iflow/geometry.hpp"
#include "iflow/lyapunov.hpp"
#include "iflow/perturbation.hpp"
#include "iflow/rates.hpp"

namespace {

iflow::SolverConfig solver_config() {
    iflow::SolverConfig cfg;
    cfg.rel_tol = 1e-9;
    cfg.abs_tol = 1e-12;
    cfg.grid.points_per_decade = 200.0;
    return cfg;
}

void BM_IntegrateQuadratic(benchmark::State& state) {
    auto f = iflow::make_power_objective(2.0, {0.0, 0.0}, 0.5, 2.0);
    iflow::DampingSpec d{4.0, 1.0, 1.0};
    auto z = iflow::zero_schedule(2);
    const double horizon = static_cast<double>(state.range(0));
    long evals = 0;
    for (auto _ : state) {
        iflow::Trajectory traj = iflow::integrate(*f, d, z, {1.0, 0.0}, {0.0, 0.0},
                                                  horizon, solver_config());
        evals += traj.stats.n_rhs_evals;
        benchmark::DoNotOptimize(traj.t.back());
    }
    state.SetItemsProcessed(evals);
}
BENCHMARK(BM_IntegrateQuadratic)->Arg(100)->Arg(1000);

void BM_IntegrateQuarticForced(benchmark::State& state) {
    auto f = iflow::make_power_objective(4.0, {0.0, 0.0}, 1.0, 2.0);
    iflow::DampingSpec d{3.0, 1.0, 1.0};
    auto g = iflow::powerlaw_schedule(2, 0.05, 3.2);
    const double horizon = static_cast<double>(state.range(0));
    long evals = 0;
    for (auto _ : state) {
        iflow::Trajectory traj = iflow::integrate(*f, d, g, {1.0, 0.0}, {0.0, 0.0},
                                                  horizon, solver_config());
        evals += traj.stats.n_rhs_evals;
        benchmark::DoNotOptimize(traj.t.back());
    }
    state.SetItemsProcessed(evals);
}
BENCHMARK(BM_IntegrateQuarticForced)->Arg(100)->Arg(1000);

void BM_EnergySeriesAndCertification(benchmark::State& state) {
    auto f = iflow::make_power_objective(4.0, {0.0, 0.0}, 1.0, 2.0);
    iflow::DampingSpec d{3.0, 1.0, 1.0};
    auto z = iflow::zero_schedule(2);
    iflow::SolverConfig cfg = solver_config();
    cfg.grid.points_per_decade = static_cast<double>(state.range(0));
    iflow::Trajectory traj = iflow::integrate(*f, d, z, {1.0, 0.0}, {0.0, 0.0}, 1000.0, cfg);
    iflow::LyapunovParams prm =
        iflow::select_params(iflow::EnergyForm::Flat, d, f->geometry());
    long samples = 0;
    for (auto _ : state) {
        iflow::EnergySeries s = iflow::eval_G_series(prm, traj, *f, z);
        iflow::CertificationReport rep = iflow::certify_derivative_bound(s, traj, *f, z);
        benchmark::DoNotOptimize(rep.max_excess);
        samples += static_cast<long>(s.t.size());
    }
    state.SetItemsProcessed(samples);
}
BENCHMARK(BM_EnergySeriesAndCertification)->Arg(100)->Arg(400);

void BM_FitSeriesRate(benchmark::State& state) {
    const long n = state.range(0);
    std::vector<double> t(n), val(n);
    for (long i = 0; i < n; ++i) {
        t[i] = std::pow(10.0, 4.0 * static_cast<double>(i) / static_cast<double>(n - 1));
        const double c = 0.5 * (1.0 + std::cos(t[i]));
        val[i] = std::pow(t[i], -3.0) * c * c;
    }
    long fitted = 0;
    for (auto _ : state) {
        iflow::RateFit fit = iflow::fit_series_rate(t, val, iflow::FitKind::PolyLogLog,
                                                    {1.0, 1e4}, true);
        benchmark::DoNotOptimize(fit.fitted);
        fitted += fit.n_used;
    }
    state.SetItemsProcessed(fitted);
}
BENCHMARK(BM_FitSeriesRate)->Arg(1000)->Arg(10000);

void BM_EvalForcing(benchmark::State& state) {
    iflow::PerturbationSchedule g = iflow::powerlaw_schedule(4, 0.05, 3.5);
    g.direction = iflow::DirectionMode::SeededRandom;
    g.seed = 7;
    long evals = 0;
    for (auto _ : state) {
        double acc = 0.0;
        for (double t = 1.0; t < 101.0; t += 0.01) {
            iflow::Vec v = iflow::eval_g(g, t);
            acc += v[0];
        }
        benchmark::DoNotOptimize(acc);
        evals += 10000;
    }
    state.SetItemsProcessed(evals);
}
BENCHMARK(BM_EvalForcing);

}  // namespace

BENCHMARK_MAIN();
