#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "iflow/vec.hpp"

namespace iflow {

// Local geometry of an objective around its minimizer x*:
//
//   flatness (exponent gamma1):   F(x) - F* <= (1/gamma1) <grad F(x), x - x*>
//   sharpness (exponent gamma2):  K * ||x - x*||^gamma2   <= F(x) - F*
//
// both claimed on the ball B(x*, radius). Every differentiable convex
// function is flat with gamma1 = 1; a pair that satisfies both inequalities
// on the same neighborhood necessarily has gamma2 >= gamma1.
struct GeometryClass {
    double gamma1 = 1.0;
    double gamma2 = 2.0;
    double K = 0.0;       // modulus in the sharpness lower bound
    double radius = 1.0;  // neighborhood radius the claims are made on
};

// Rejects parameter combinations no objective can satisfy: gamma1 < 1,
// gamma2 < gamma1 (flatness at gamma1 plus sharpness forces gamma2 >= gamma1
// on any neighborhood of x*), K < 0, or a non-positive radius.
void validate(const GeometryClass& g);

class Objective {
public:
    virtual ~Objective() = default;

    virtual double value(const Vec& x) const = 0;
    virtual void gradient(const Vec& x, Vec& out) const = 0;
    virtual int dim() const = 0;
    virtual const Vec& minimizer() const = 0;
    virtual double min_value() const = 0;
    virtual const GeometryClass& geometry() const = 0;
    virtual std::string describe() const = 0;

    Vec gradient(const Vec& x) const {
        Vec g(static_cast<std::size_t>(dim()));
        gradient(x, g);
        return g;
    }
    double gap(const Vec& x) const { return value(x) - min_value(); }
};

using ObjectivePtr = std::shared_ptr<const Objective>;

// F(x) = scale * ||x - minimizer||^gamma with gamma >= 2. Exponents below 2
// are rejected: their gradient is not locally Lipschitz at the minimizer, so
// trajectories through it lose uniqueness. Declared geometry is
// (gamma1, gamma2) = (gamma, gamma) with sharpness modulus K = scale.
ObjectivePtr make_power_objective(double gamma, Vec minimizer, double scale = 1.0,
                                  double radius = 1.0);

// F(x) = sum_i |x_i - m_i|^{p_i} with every p_i >= 2. The flattest direction
// controls the flatness exponent (gamma1 = min p_i) and the slowest-growing
// direction controls sharpness near x* (gamma2 = max p_i). The sharpness
// modulus is the minimum of (F - F*) / ||x - x*||^gamma2 over a deterministic
// sample of B(x*, radius), halved for safety.
ObjectivePtr make_anisotropic_objective(std::vector<double> exponents, Vec minimizer,
                                        double radius = 1.0);

struct SampledCheck {
    bool pass = false;
    double max_violation = 0.0;  // worst LHS - RHS seen (negative = satisfied with room)
    Vec worst_point;
    int samples = 0;
};

// absolute slack for the sampled inequalities
inline constexpr double kGeometryTol = 1e-9;

// Sample B(x*, radius) and test the flatness inequality at the given exponent.
SampledCheck check_flatness(const Objective& f, double gamma, int samples = 2000,
                            std::uint64_t seed = 0, double tol = kGeometryTol);

// Sample B(x*, radius) and test the sharpness lower bound with modulus K.
SampledCheck check_sharpness(const Objective& f, double r, double K, int samples = 2000,
                             std::uint64_t seed = 0, double tol = kGeometryTol);

struct GradientCheck {
    double max_rel_error = 0.0;
    Vec worst_point;
    int samples = 0;
};

// Central differences against the analytic gradient. Probes are kept in the
// annulus 0.1*radius <= ||x - x*|| <= radius, away from the reduced
// smoothness fractional exponents have at the minimizer.
GradientCheck finite_difference_gradient_check(const Objective& f, int samples = 200,
                                               std::uint64_t seed = 0, double h = 1e-5);

}  // namespace iflow
