#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "iflow/dynamics.hpp"
#include "iflow/geometry.hpp"
#include "iflow/perturbation.hpp"
#include "iflow/vec.hpp"

using namespace iflow;

namespace {

ObjectivePtr unit_quadratic(int dim) {
    // F = 0.5 |x|^2 has unit Hessian, so x'' + beta x' + x = forcing.
    return make_power_objective(2.0, Vec(static_cast<std::size_t>(dim), 0.0), 0.5, 10.0);
}

}  // namespace

TEST_CASE("damped oscillator matches its closed form") {
    // x'' + x' + x = 0, x(1) = 1, x'(1) = 0. With omega = sqrt(3)/2 and
    // s = t - 1:  x = e^{-s/2} (cos(omega s) + sin(omega s)/(2 omega)),
    //             v = -e^{-s/2} sin(omega s) / omega.
    auto f = unit_quadratic(1);
    DampingSpec d{1.0, 0.0, 1.0};
    SolverConfig cfg;
    cfg.rel_tol = 1e-9;
    cfg.abs_tol = 1e-12;
    cfg.grid.kind = GridSpec::Kind::Uniform;
    cfg.grid.dt = 0.05;

    Trajectory traj = integrate(*f, d, zero_schedule(1), {1.0}, {0.0}, 10.0, cfg);
    REQUIRE(traj.t.front() == 1.0);
    REQUIRE(traj.t.back() == 10.0);

    const double omega = std::sqrt(3.0) / 2.0;
    double max_err_x = 0.0, max_err_v = 0.0;
    for (std::size_t i = 0; i < traj.t.size(); ++i) {
        const double s = traj.t[i] - 1.0;
        const double decay = std::exp(-0.5 * s);
        const double x_ref = decay * (std::cos(omega * s) + std::sin(omega * s) / (2.0 * omega));
        const double v_ref = -decay * std::sin(omega * s) / omega;
        max_err_x = std::max(max_err_x, std::abs(traj.x[i][0] - x_ref));
        max_err_v = std::max(max_err_v, std::abs(traj.v[i][0] - v_ref));
    }
    CHECK(max_err_x < 1e-6);
    CHECK(max_err_v < 1e-6);
}

TEST_CASE("mechanical energy is conserved when damping is negligible") {
    auto f = unit_quadratic(2);
    DampingSpec d{1e-12, 0.0, 1.0};
    SolverConfig cfg;
    cfg.rel_tol = 1e-11;
    cfg.abs_tol = 1e-13;

    Trajectory traj = integrate(*f, d, zero_schedule(2), {1.0, 0.0}, {0.0, 0.3}, 100.0, cfg);
    const double e0 = mechanical_energy(*f, traj.x.front(), traj.v.front());
    double max_drift = 0.0;
    for (std::size_t i = 0; i < traj.t.size(); ++i)
        max_drift = std::max(
            max_drift, std::abs(mechanical_energy(*f, traj.x[i], traj.v[i]) - e0));
    CHECK(max_drift < 1e-6);
}

TEST_CASE("mechanical energy dissipates along unperturbed flows") {
    auto f = make_power_objective(4.0, {0.0, 0.0}, 1.0, 2.0);
    DampingSpec d{3.0, 1.0, 1.0};
    Trajectory traj = integrate(*f, d, zero_schedule(2), {1.0, 0.0}, {0.0, 0.0}, 1000.0);

    const double e0 = mechanical_energy(*f, traj.x.front(), traj.v.front());
    const double tol = 1e-7 * (1.0 + e0);
    int rises = 0;
    double prev = e0;
    for (std::size_t i = 1; i < traj.t.size(); ++i) {
        const double e = mechanical_energy(*f, traj.x[i], traj.v[i]);
        if (e > prev + tol) ++rises;
        prev = e;
    }
    CHECK(rises == 0);
}

TEST_CASE("a trajectory started at the minimizer stays there exactly") {
    auto f = make_power_objective(4.0, {0.25, -0.5}, 1.0, 1.0);
    DampingSpec d{3.0, 1.0, 1.0};
    Trajectory traj =
        integrate(*f, d, zero_schedule(2), {0.25, -0.5}, {0.0, 0.0}, 1000.0);
    for (std::size_t i = 0; i < traj.t.size(); ++i) {
        CHECK(traj.x[i][0] == 0.25);
        CHECK(traj.x[i][1] == -0.5);
        CHECK(traj.v[i][0] == 0.0);
        CHECK(traj.v[i][1] == 0.0);
    }
}

TEST_CASE("integration is bit-reproducible, including seeded random forcing") {
    auto f = unit_quadratic(2);
    DampingSpec d{4.0, 1.0, 1.0};
    PerturbationSchedule g = powerlaw_schedule(2, 0.05, 3.5);
    g.direction = DirectionMode::SeededRandom;
    g.seed = 42;
    validate(g);

    Trajectory a = integrate(*f, d, g, {1.0, 0.0}, {0.0, 0.0}, 100.0);
    Trajectory b = integrate(*f, d, g, {1.0, 0.0}, {0.0, 0.0}, 100.0);
    REQUIRE(a.t.size() == b.t.size());
    for (std::size_t i = 0; i < a.t.size(); ++i) {
        CHECK(a.t[i] == b.t[i]);
        for (int j = 0; j < a.dim; ++j) {
            CHECK(a.x[i][j] == b.x[i][j]);
            CHECK(a.v[i][j] == b.v[i][j]);
        }
    }
    CHECK(a.stats.n_accepted == b.stats.n_accepted);
    CHECK(a.stats.n_rhs_evals == b.stats.n_rhs_evals);

    PerturbationSchedule g2 = g;
    g2.seed = 43;
    Trajectory c = integrate(*f, d, g2, {1.0, 0.0}, {0.0, 0.0}, 100.0);
    double max_diff = 0.0;
    for (std::size_t i = 0; i < std::min(a.t.size(), c.t.size()); ++i)
        max_diff = std::max(max_diff, std::abs(a.x[i][0] - c.x[i][0]));
    CHECK(max_diff > 1e-12);
}

TEST_CASE("sample grid density does not influence the computed solution") {
    // The step sequence is chosen independently of the output grid, and
    // doubling points_per_decade keeps every coarse sample time (the grid is
    // t0 * 10^{k/ppd}), so shared samples must agree bit for bit.
    auto f = unit_quadratic(2);
    DampingSpec d{3.0, 1.0, 1.0};
    SolverConfig coarse, fine;
    coarse.grid.points_per_decade = 100.0;
    fine.grid.points_per_decade = 200.0;

    Trajectory tc = integrate(*f, d, zero_schedule(2), {1.0, 0.0}, {0.0, 0.0}, 100.0, coarse);
    Trajectory tf = integrate(*f, d, zero_schedule(2), {1.0, 0.0}, {0.0, 0.0}, 100.0, fine);

    CHECK(tc.stats.n_accepted == tf.stats.n_accepted);
    REQUIRE(tf.t.size() > tc.t.size());
    std::size_t hits = 0;
    for (std::size_t i = 0, j = 0; i < tc.t.size(); ++i) {
        while (j < tf.t.size() && tf.t[j] < tc.t[i]) ++j;
        if (j < tf.t.size() && tf.t[j] == tc.t[i]) {
            ++hits;
            for (int k = 0; k < 2; ++k) {
                CHECK(tc.x[i][k] == tf.x[j][k]);
                CHECK(tc.v[i][k] == tf.v[j][k]);
            }
        }
    }
    // Every coarse sample has an exact twin in the fine grid.
    CHECK(hits == tc.t.size());
}

TEST_CASE("trajectory CSV layout") {
    auto f = unit_quadratic(2);
    DampingSpec d{3.0, 1.0, 1.0};
    SolverConfig cfg;
    cfg.grid.points_per_decade = 10.0;
    Trajectory traj = integrate(*f, d, zero_schedule(2), {1.0, 0.0}, {0.0, 0.0}, 10.0, cfg);

    std::ostringstream os;
    write_trajectory_csv(os, *f, traj);
    std::istringstream is(os.str());
    std::string header;
    REQUIRE(std::getline(is, header));
    CHECK(header == "t,x_0,x_1,v_0,v_1,F_gap");

    std::string line;
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (rows == 0) {
            // 17 significant digits round-trip the exact double.
            const double t_back = std::stod(line.substr(0, line.find(',')));
            CHECK(t_back == traj.t[0]);
            CHECK(std::count(line.begin(), line.end(), ',') == 5);
        }
        ++rows;
    }
    CHECK(rows == traj.t.size());
}

TEST_CASE("solver input validation") {
    auto f = unit_quadratic(1);
    DampingSpec d{1.0, 0.0, 1.0};
    PerturbationSchedule z = zero_schedule(1);

    SolverConfig bad;
    bad.rel_tol = 0.0;
    CHECK_THROWS_AS(integrate(*f, d, z, {1.0}, {0.0}, 10.0, bad), std::invalid_argument);
    bad.rel_tol = 0.5;  // looser than 1e-2
    CHECK_THROWS_AS(integrate(*f, d, z, {1.0}, {0.0}, 10.0, bad), std::invalid_argument);

    SolverConfig sparse;
    sparse.grid.points_per_decade = 2.0;
    CHECK_THROWS_AS(integrate(*f, d, z, {1.0}, {0.0}, 10.0, sparse), std::invalid_argument);

    SolverConfig flat_dt;
    flat_dt.grid.kind = GridSpec::Kind::Uniform;
    flat_dt.grid.dt = 0.0;
    CHECK_THROWS_AS(integrate(*f, d, z, {1.0}, {0.0}, 10.0, flat_dt), std::invalid_argument);

    // horizon at or below t0
    CHECK_THROWS_AS(integrate(*f, d, z, {1.0}, {0.0}, 1.0, {}), std::invalid_argument);

    // dimension mismatches
    CHECK_THROWS_AS(integrate(*f, d, z, {1.0, 2.0}, {0.0, 0.0}, 10.0, {}),
                    std::invalid_argument);
    PerturbationSchedule wide = powerlaw_schedule(3, 1.0, 2.0);
    CHECK_THROWS_AS(integrate(*f, d, wide, {1.0}, {0.0}, 10.0, {}), std::invalid_argument);

    // step budget
    SolverConfig tiny;
    tiny.max_steps = 5;
    CHECK_THROWS_AS(integrate(*f, d, z, {1.0}, {0.0}, 1000.0, tiny), SolveError);
}

TEST_CASE("solver statistics are populated") {
    auto f = unit_quadratic(1);
    DampingSpec d{1.0, 0.0, 1.0};
    Trajectory traj = integrate(*f, d, zero_schedule(1), {1.0}, {0.0}, 100.0);
    CHECK(traj.stats.n_accepted > 0);
    CHECK(traj.stats.n_attempted >= traj.stats.n_accepted);
    CHECK(traj.stats.n_rhs_evals >= 6 * traj.stats.n_accepted);
    CHECK(traj.stats.min_step > 0.0);
    CHECK(traj.stats.max_step >= traj.stats.min_step);
    CHECK(traj.dim == 1);
    CHECK(traj.damping.alpha == 1.0);
}
