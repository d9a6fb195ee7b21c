#include "iflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <stdexcept>

#include "iflow/rng.hpp"

namespace iflow {

namespace {

// ||d||^e factored as (||d||^2)^(e/2); the common half-integer exponents get
// exact fast paths so the hot gradient loop avoids pow().
double pow_half(double r2, double half_exponent) {
    if (half_exponent == 0.0) return 1.0;
    if (half_exponent == 0.5) return std::sqrt(r2);
    if (half_exponent == 1.0) return r2;
    if (half_exponent == 1.5) return r2 * std::sqrt(r2);
    if (half_exponent == 2.0) return r2 * r2;
    if (r2 == 0.0) return 0.0;
    return std::pow(r2, half_exponent);
}

class PowerObjective final : public Objective {
public:
    PowerObjective(double gamma, Vec minimizer, double scale, double radius)
        : gamma_(gamma), scale_(scale), minimizer_(std::move(minimizer)) {
        geom_.gamma1 = gamma;
        geom_.gamma2 = gamma;
        geom_.K = scale;
        geom_.radius = radius;
    }

    double value(const Vec& x) const override {
        double r2 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = x[i] - minimizer_[i];
            r2 += d * d;
        }
        return scale_ * pow_half(r2, gamma_ / 2.0);
    }

    void gradient(const Vec& x, Vec& out) const override {
        double r2 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = x[i] - minimizer_[i];
            r2 += d * d;
        }
        const double f = gamma_ * scale_ * pow_half(r2, gamma_ / 2.0 - 1.0);
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = f * (x[i] - minimizer_[i]);
    }

    int dim() const override { return static_cast<int>(minimizer_.size()); }
    const Vec& minimizer() const override { return minimizer_; }
    double min_value() const override { return 0.0; }
    const GeometryClass& geometry() const override { return geom_; }
    std::string describe() const override {
        return fmt::format("power(gamma={}, dim={}, scale={})", gamma_, dim(), scale_);
    }

private:
    double gamma_;
    double scale_;
    Vec minimizer_;
    GeometryClass geom_;
};

class AnisotropicObjective final : public Objective {
public:
    AnisotropicObjective(std::vector<double> exponents, Vec minimizer, double radius)
        : exponents_(std::move(exponents)), minimizer_(std::move(minimizer)) {
        geom_.gamma1 = *std::min_element(exponents_.begin(), exponents_.end());
        geom_.gamma2 = *std::max_element(exponents_.begin(), exponents_.end());
        geom_.radius = radius;
        geom_.K = 0.5 * estimate_sharpness_modulus();
    }

    double value(const Vec& x) const override {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = std::abs(x[i] - minimizer_[i]);
            s += std::pow(d, exponents_[i]);
        }
        return s;
    }

    void gradient(const Vec& x, Vec& out) const override {
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = x[i] - minimizer_[i];
            const double ad = std::abs(d);
            out[i] = ad == 0.0 ? 0.0
                               : exponents_[i] * std::pow(ad, exponents_[i] - 1.0) *
                                     (d > 0.0 ? 1.0 : -1.0);
        }
    }

    int dim() const override { return static_cast<int>(minimizer_.size()); }
    const Vec& minimizer() const override { return minimizer_; }
    double min_value() const override { return 0.0; }
    const GeometryClass& geometry() const override { return geom_; }
    std::string describe() const override {
        std::string exps;
        for (double e : exponents_) exps += (exps.empty() ? "" : ",") + fmt::format("{}", e);
        return fmt::format("anisotropic(exponents=[{}])", exps);
    }

private:
    double estimate_sharpness_modulus() const {
        // min over a fixed sample of B(x*, radius) of (F - F*) / ||x - x*||^gamma2
        SplitMix64 rng(0x5eedULL);
        double worst = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 512; ++k) {
            const Vec x = sample_in_ball(rng, minimizer_, geom_.radius);
            const double dist = norm(sub(x, minimizer_));
            if (dist < 1e-8) continue;
            worst = std::min(worst, value(x) / std::pow(dist, geom_.gamma2));
        }
        return worst;
    }

    std::vector<double> exponents_;
    Vec minimizer_;
    GeometryClass geom_;
};

}  // namespace

void validate(const GeometryClass& g) {
    if (!(g.gamma1 >= 1.0))
        throw std::invalid_argument(
            fmt::format("geometry: flatness exponent gamma1 must be >= 1, got {}", g.gamma1));
    if (!(g.gamma2 >= g.gamma1))
        throw std::invalid_argument(
            fmt::format("geometry: sharpness exponent gamma2 ({}) must be >= flatness "
                        "exponent gamma1 ({}); no objective satisfies both otherwise",
                        g.gamma2, g.gamma1));
    if (!(g.K >= 0.0))
        throw std::invalid_argument("geometry: sharpness modulus K must be >= 0");
    if (!(g.radius > 0.0))
        throw std::invalid_argument("geometry: radius must be positive");
}

ObjectivePtr make_power_objective(double gamma, Vec minimizer, double scale, double radius) {
    if (gamma < 2.0)
        throw std::invalid_argument(
            fmt::format("power objective: gamma must be >= 2, got {}", gamma));
    if (scale <= 0.0)
        throw std::invalid_argument("power objective: scale must be positive");
    if (minimizer.empty())
        throw std::invalid_argument("power objective: minimizer must be non-empty");
    if (radius <= 0.0)
        throw std::invalid_argument("power objective: radius must be positive");
    return std::make_shared<PowerObjective>(gamma, std::move(minimizer), scale, radius);
}

ObjectivePtr make_anisotropic_objective(std::vector<double> exponents, Vec minimizer,
                                        double radius) {
    if (exponents.size() != minimizer.size() || exponents.empty())
        throw std::invalid_argument("anisotropic objective: need one exponent per coordinate");
    for (double e : exponents)
        if (e < 2.0)
            throw std::invalid_argument(
                fmt::format("anisotropic objective: exponents must be >= 2, got {}", e));
    if (radius <= 0.0)
        throw std::invalid_argument("anisotropic objective: radius must be positive");
    return std::make_shared<AnisotropicObjective>(std::move(exponents), std::move(minimizer),
                                                  radius);
}

SampledCheck check_flatness(const Objective& f, double gamma, int samples, std::uint64_t seed,
                            double tol) {
    if (gamma < 1.0) throw std::invalid_argument("check_flatness: gamma must be >= 1");
    if (samples < 1) throw std::invalid_argument("check_flatness: need at least one sample");
    SplitMix64 rng(seed);
    SampledCheck out;
    out.samples = samples;
    out.max_violation = -std::numeric_limits<double>::infinity();
    Vec grad(static_cast<std::size_t>(f.dim()));
    for (int k = 0; k < samples; ++k) {
        const Vec x = sample_in_ball(rng, f.minimizer(), f.geometry().radius);
        f.gradient(x, grad);
        const double lhs = f.gap(x);
        const double rhs = dot(grad, sub(x, f.minimizer())) / gamma;
        const double violation = lhs - rhs;
        if (violation > out.max_violation) {
            out.max_violation = violation;
            out.worst_point = x;
        }
    }
    out.pass = out.max_violation <= tol;
    return out;
}

SampledCheck check_sharpness(const Objective& f, double r, double K, int samples,
                             std::uint64_t seed, double tol) {
    if (r < 1.0) throw std::invalid_argument("check_sharpness: exponent must be >= 1");
    if (K <= 0.0) throw std::invalid_argument("check_sharpness: modulus must be positive");
    if (samples < 1) throw std::invalid_argument("check_sharpness: need at least one sample");
    SplitMix64 rng(seed);
    SampledCheck out;
    out.samples = samples;
    out.max_violation = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < samples; ++k) {
        const Vec x = sample_in_ball(rng, f.minimizer(), f.geometry().radius);
        const double dist = norm(sub(x, f.minimizer()));
        const double violation = K * std::pow(dist, r) - f.gap(x);
        if (violation > out.max_violation) {
            out.max_violation = violation;
            out.worst_point = x;
        }
    }
    out.pass = out.max_violation <= tol;
    return out;
}

GradientCheck finite_difference_gradient_check(const Objective& f, int samples,
                                               std::uint64_t seed, double h) {
    if (samples < 1 || h <= 0.0)
        throw std::invalid_argument("gradient check: bad sample count or step");
    SplitMix64 rng(seed);
    GradientCheck out;
    out.samples = samples;
    const int n = f.dim();
    Vec grad(static_cast<std::size_t>(n));
    for (int k = 0; k < samples; ++k) {
        // annulus sample: radial fraction in [0.1, 1]
        Vec x = random_unit_vector(rng, n);
        const double rho = f.geometry().radius * (0.1 + 0.9 * rng.uniform01());
        for (int i = 0; i < n; ++i) x[i] = f.minimizer()[i] + rho * x[i];

        f.gradient(x, grad);
        for (int i = 0; i < n; ++i) {
            Vec xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            const double fd = (f.value(xp) - f.value(xm)) / (2.0 * h);
            const double rel = std::abs(fd - grad[i]) / (1.0 + std::abs(grad[i]));
            if (rel > out.max_rel_error) {
                out.max_rel_error = rel;
                out.worst_point = x;
            }
        }
    }
    return out;
}

}  // namespace iflow
