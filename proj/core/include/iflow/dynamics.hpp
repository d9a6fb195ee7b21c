#pragma once

#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "iflow/geometry.hpp"
#include "iflow/perturbation.hpp"
#include "iflow/vec.hpp"

namespace iflow {

// Output sample times. LogUniform places points_per_decade samples per factor
// of ten starting at t0; Uniform spaces them dt apart. The horizon is always
// included as the final sample. Sampling never influences the step sequence:
// samples are reconstructed by dense-output interpolation inside accepted
// steps.
struct GridSpec {
    enum class Kind { LogUniform, Uniform };
    Kind kind = Kind::LogUniform;
    double points_per_decade = 400.0;  // LogUniform, must be >= 4
    double dt = 0.01;                  // Uniform, must be > 0
};

struct SolverConfig {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double max_step = 0.0;      // 0 = no cap
    double initial_step = 0.0;  // 0 = choose automatically
    long max_steps = 20000000;  // attempted steps before giving up
    GridSpec grid;
};

struct SolveStats {
    long n_attempted = 0;
    long n_accepted = 0;
    long n_rejected = 0;
    long n_rhs_evals = 0;
    double min_step = 0.0;  // smallest accepted step
    double max_step = 0.0;  // largest accepted step
};

// Sampled solution of  x'' + beta(t) x' + grad F(x) = g(t).
struct Trajectory {
    std::vector<double> t;
    std::vector<Vec> x;
    std::vector<Vec> v;
    int dim = 0;
    DampingSpec damping;
    SolveStats stats;
};

class SolveError : public std::runtime_error {
  public:
    SolveError(const std::string& what, double time)
        : std::runtime_error(what + " at t=" + std::to_string(time)), time_(time) {}
    double time() const noexcept { return time_; }

  private:
    double time_;
};

// Integrates from (x0, v0) at damping.t0 up to horizon with an adaptive
// Dormand-Prince 5(4) pair. Deterministic: identical inputs give bit-identical
// trajectories, and the step sequence does not depend on the sample grid.
Trajectory integrate(const Objective& f, const DampingSpec& damping,
                     const PerturbationSchedule& g, const Vec& x0, const Vec& v0,
                     double horizon, const SolverConfig& cfg = {});

// F(x) - F* + |v|^2 / 2. Non-increasing along unperturbed flows.
double mechanical_energy(const Objective& f, const Vec& x, const Vec& v);

// Columns: t,x_0..x_{n-1},v_0..v_{n-1},F_gap with 17 significant digits.
void write_trajectory_csv(std::ostream& os, const Objective& f, const Trajectory& traj);
void write_trajectory_csv(const std::string& path, const Objective& f, const Trajectory& traj);

}  // namespace iflow
