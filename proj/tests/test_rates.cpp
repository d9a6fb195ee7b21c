#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "iflow/dynamics.hpp"
#include "iflow/geometry.hpp"
#include "iflow/perturbation.hpp"
#include "iflow/rates.hpp"

using namespace iflow;

namespace {

std::vector<double> log_grid(double lo, double hi, double ppd) {
    std::vector<double> t;
    const long n = static_cast<long>(std::ceil(ppd * std::log10(hi / lo)));
    for (long k = 0; k <= n; ++k)
        t.push_back(std::min(hi, lo * std::pow(10.0, static_cast<double>(k) / ppd)));
    return t;
}

}  // namespace

TEST_CASE("fit recovers an exact power law to machine precision") {
    std::vector<double> t = log_grid(1.0, 1e4, 100.0);
    std::vector<double> val(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) val[i] = std::pow(t[i], -3.0);

    RateFit plain = fit_series_rate(t, val, FitKind::PolyLogLog, {1.0, 1e4}, false);
    CHECK(plain.fitted == doctest::Approx(-3.0).epsilon(1e-9));
    CHECK(plain.residual_rms < 1e-10);
    CHECK(plain.n_excluded_floor == 0);
    CHECK(plain.n_used == static_cast<int>(t.size()));

    // The envelope of a monotone series is the series itself.
    RateFit enveloped = fit_series_rate(t, val, FitKind::PolyLogLog, {1.0, 1e4}, true);
    CHECK(enveloped.fitted == doctest::Approx(plain.fitted).epsilon(1e-12));
    CHECK(enveloped.envelope_used);
}

TEST_CASE("fitted exponent is invariant under scaling the series") {
    std::vector<double> t = log_grid(1.0, 1e3, 80.0);
    std::vector<double> val(t.size()), scaled(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        val[i] = std::pow(t[i], -2.5);
        scaled[i] = 137.0 * val[i];
    }
    RateFit a = fit_series_rate(t, val, FitKind::PolyLogLog, {1.0, 1e3}, true);
    RateFit b = fit_series_rate(t, scaled, FitKind::PolyLogLog, {1.0, 1e3}, true);
    CHECK(std::abs(a.fitted - b.fitted) < 1e-12);
}

TEST_CASE("envelope regression tracks the peaks of an oscillating decay") {
    // t^-3 (1+cos t)^2/4 touches zero twice per period; the raw log-values
    // there are meaningless, the peak envelope still carries the exponent.
    std::vector<double> t = log_grid(1.0, 1e4, 200.0);
    std::vector<double> val(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double c = 0.5 * (1.0 + std::cos(t[i]));
        val[i] = std::pow(t[i], -3.0) * c * c;
    }
    RateFit fit = fit_series_rate(t, val, FitKind::PolyLogLog, {10.0, 1e4}, true);
    CHECK(fit.fitted == doctest::Approx(-3.0).epsilon(0.02));
    CHECK(fit.n_excluded_floor > 0);  // near-zero troughs fall below the floor
}

TEST_CASE("exponential fit against the damping integral") {
    DampingSpec d{2.0, 0.0, 1.0};  // Gamma(t) = 2(t-1)
    std::vector<double> t, val;
    for (double s = 1.0; s <= 20.0; s += 0.01) {
        t.push_back(s);
        val.push_back(std::exp(-0.5 * gamma_integral(d, s)));
    }
    RateFit fit = fit_series_rate(t, val, FitKind::ExpGamma, {1.0, 20.0}, false, &d);
    CHECK(fit.fitted == doctest::Approx(-0.5).epsilon(1e-6));
    CHECK(fit.residual_rms < 1e-9);

    CHECK_THROWS_AS(
        fit_series_rate(t, val, FitKind::ExpGamma, {1.0, 20.0}, false, nullptr),
        std::invalid_argument);
}

TEST_CASE("window and sample-count requirements") {
    std::vector<double> t = log_grid(1.0, 1e4, 50.0);
    std::vector<double> val(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) val[i] = std::pow(t[i], -3.0);

    // Polynomial fits need two decades in the requested window.
    CHECK_THROWS_AS(fit_series_rate(t, val, FitKind::PolyLogLog, {10.0, 999.0}, true),
                    std::invalid_argument);
    CHECK_NOTHROW(fit_series_rate(t, val, FitKind::PolyLogLog, {10.0, 1000.0}, true));

    // Exponential fits need five Gamma-units.
    DampingSpec d{2.0, 0.0, 1.0};
    std::vector<double> tu, vu;
    for (double s = 1.0; s <= 10.0; s += 0.01) {
        tu.push_back(s);
        vu.push_back(std::exp(-0.5 * gamma_integral(d, s)));
    }
    CHECK_THROWS_AS(fit_series_rate(tu, vu, FitKind::ExpGamma, {1.0, 3.0}, false, &d),
                    std::invalid_argument);
    CHECK_NOTHROW(fit_series_rate(tu, vu, FitKind::ExpGamma, {1.0, 3.5}, false, &d));

    // Degenerate windows are rejected outright.
    CHECK_THROWS_AS(fit_series_rate(t, val, FitKind::PolyLogLog, {0.0, 100.0}, true),
                    std::invalid_argument);
    CHECK_THROWS_AS(fit_series_rate(t, val, FitKind::PolyLogLog, {100.0, 100.0}, true),
                    std::invalid_argument);

    // A window holding fewer than 20 samples cannot be fit.
    std::vector<double> sparse_t = log_grid(1.0, 1e4, 4.0);
    std::vector<double> sparse_v(sparse_t.size(), 1.0);
    for (std::size_t i = 0; i < sparse_t.size(); ++i)
        sparse_v[i] = std::pow(sparse_t[i], -1.0);
    CHECK_THROWS_AS(fit_series_rate(sparse_t, sparse_v, FitKind::PolyLogLog,
                                    {1.0, 1e4}, true),
                    std::runtime_error);
}

TEST_CASE("samples at the floor are excluded rather than fit") {
    std::vector<double> t = log_grid(1.0, 1e3, 100.0);
    std::vector<double> val(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) val[i] = std::pow(t[i], -8.0);
    // floor = 1e-14 (1 + val[0]) = 2e-14; t^-8 crosses it near t = 51.
    RateFit fit = fit_series_rate(t, val, FitKind::PolyLogLog, {1.0, 1e3}, true);
    CHECK(fit.floor == doctest::Approx(2e-14).epsilon(1e-12));
    CHECK(fit.n_excluded_floor > 100);
    CHECK(fit.fitted == doctest::Approx(-8.0).epsilon(1e-9));
}

TEST_CASE("trajectory fits: objective gap and speed of a quadratic flow") {
    auto f = make_power_objective(2.0, {0.0, 0.0}, 0.5, 1.0);
    DampingSpec d{4.0, 1.0, 1.0};
    Trajectory traj = integrate(*f, d, zero_schedule(2), {1.0, 0.0}, {0.0, 0.0}, 1000.0);

    // F - F* decays like t^-4 (up to oscillation), |v| like t^-2.
    RateFit gap = fit_rate(traj, *f, FitKind::PolyLogLog, {10.0, 1000.0});
    CHECK(gap.fitted < -3.75);
    CHECK(gap.fitted > -4.6);

    RateFit vel = fit_velocity_rate(traj, {10.0, 1000.0});
    CHECK(vel.fitted < -1.75);
    CHECK(vel.fitted > -2.6);
}

TEST_CASE("a trajectory resting at the minimizer has nothing to fit") {
    auto f = make_power_objective(4.0, {0.0, 0.0}, 1.0, 1.0);
    DampingSpec d{3.0, 1.0, 1.0};
    Trajectory traj =
        integrate(*f, d, zero_schedule(2), {0.0, 0.0}, {0.0, 0.0}, 1000.0);
    CHECK_THROWS_AS(fit_velocity_rate(traj, {1.0, 1000.0}), std::runtime_error);
    CHECK_THROWS_AS(fit_rate(traj, *f, FitKind::PolyLogLog, {1.0, 1000.0}),
                    std::runtime_error);
}

TEST_CASE("closed-form exponents per regime") {
    GeometryClass g1{1.0, 2.0, 1.0, 1.0};
    DampingSpec d3{3.0, 1.0, 1.0};
    CHECK(predicted_exponent(RateCase::SharpNesterov, d3, g1) ==
          doctest::Approx(2.0).epsilon(1e-14));

    GeometryClass flat{4.0, 4.0, 1.0, 1.0};
    DampingSpec hb{1.0, 0.0, 1.0};
    CHECK(predicted_exponent(RateCase::FlatUnperturbed, hb, flat) ==
          doctest::Approx(2.0).epsilon(1e-14));
    DampingSpec nes{3.0, 1.0, 1.0};
    CHECK(predicted_exponent(RateCase::FlatVelocity, nes, flat) ==
          doctest::Approx(2.0).epsilon(1e-14));
    CHECK(predicted_exponent(RateCase::FlatPerturbed, nes, flat) ==
          doctest::Approx(4.0).epsilon(1e-14));

    CHECK_THROWS_AS(predicted_exponent(RateCase::SharpHeavyBall, hb, g1),
                    std::invalid_argument);
}

TEST_CASE("dispatch on quadratically sharp geometry") {
    GeometryClass sharp{2.0, 2.0, 1.0, 1.0};

    SUBCASE("supercritical 1/t damping, unperturbed") {
        DampingSpec d{4.0, 1.0, 1.0};
        auto preds = dispatch(d, sharp, zero_schedule(1));
        REQUIRE(preds.size() == 2);
        CHECK(preds[0].kase == RateCase::SharpNesterov);
        CHECK(preds[0].kind == FitKind::PolyLogLog);
        CHECK(preds[0].exponent == doctest::Approx(4.0).epsilon(1e-14));
        CHECK(preds[0].margin == std::numeric_limits<double>::infinity());
        CHECK_FALSE(preds[0].velocity);

        // The exponential statement survives at theta = 1 only as a strictly
        // weaker polynomial note: m alpha < 2 gamma alpha/(gamma+2) for every
        // admissible m, with equality of the suprema.
        CHECK(preds[1].kase == RateCase::SharpHeavyBall);
        CHECK(preds[1].kind == FitKind::ExpGamma);
        CHECK(preds[1].m == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(preds[1].exponent == doctest::Approx(2.0).epsilon(1e-14));
        CHECK_FALSE(preds[1].note.empty());
        CHECK(preds[1].exponent < preds[0].exponent);
        const double sup_m = 2.0 * sharp.gamma1 / (sharp.gamma1 + 2.0);
        CHECK(std::abs(sup_m * d.alpha - preds[0].exponent) < 1e-12);
    }
    SUBCASE("subcritical and boundary damping select the subcritical statement") {
        DampingSpec sub{1.5, 1.0, 1.0};
        auto preds = dispatch(sub, sharp, zero_schedule(1));
        REQUIRE(!preds.empty());
        CHECK(preds[0].kase == RateCase::SharpNesterovSubcritical);
        CHECK(preds[0].exponent == doctest::Approx(1.5).epsilon(1e-14));

        DampingSpec boundary{2.0, 1.0, 1.0};  // alpha = 1 + 2/gamma exactly
        auto bp = dispatch(boundary, sharp, zero_schedule(1));
        REQUIRE(!bp.empty());
        CHECK(bp[0].kase == RateCase::SharpNesterovSubcritical);
        for (const auto& p : bp) CHECK(p.kase != RateCase::SharpNesterov);
    }
    SUBCASE("perturbations below the required weight silence the statements") {
        DampingSpec d{4.0, 1.0, 1.0};
        PerturbationSchedule ok = powerlaw_schedule(1, 0.05, 3.5);
        auto with = dispatch(d, sharp, ok);
        REQUIRE(with.size() == 2);
        CHECK(with[0].margin == doctest::Approx(0.5).epsilon(1e-12));

        PerturbationSchedule slow = powerlaw_schedule(1, 0.05, 2.5);
        CHECK(dispatch(d, sharp, slow).empty());
    }
    SUBCASE("constant damping emits the exponential statement") {
        DampingSpec d{2.0, 0.0, 1.0};
        PerturbationSchedule eg = expgamma_schedule(1, 0.1, 0.95, d);
        auto preds = dispatch(d, sharp, eg);
        REQUIRE(preds.size() == 1);
        CHECK(preds[0].kase == RateCase::SharpHeavyBall);
        CHECK(preds[0].m == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(preds[0].margin == doctest::Approx(0.45).epsilon(1e-12));
        CHECK(preds[0].note.empty());

        auto faster = dispatch(d, sharp, eg, 0.8);
        REQUIRE(faster.size() == 1);
        CHECK(faster[0].m == doctest::Approx(0.8).epsilon(1e-14));
        CHECK(faster[0].margin == doctest::Approx(0.15).epsilon(1e-12));

        // Requested rates outside (0, 2 gamma/(gamma+2)) are rejected.
        CHECK_THROWS_AS(dispatch(d, sharp, eg, 1.5), std::invalid_argument);
        CHECK_THROWS_AS(dispatch(d, sharp, eg, 1.0), std::invalid_argument);
    }
}

TEST_CASE("dispatch on flat geometry") {
    GeometryClass flat{4.0, 4.0, 1.0, 1.0};

    SUBCASE("unperturbed at the critical 1/t damping") {
        DampingSpec d{3.0, 1.0, 1.0};
        auto preds = dispatch(d, flat, zero_schedule(1));
        REQUIRE(preds.size() == 3);
        CHECK(preds[0].kase == RateCase::FlatUnperturbed);
        CHECK(preds[0].exponent == doctest::Approx(4.0).epsilon(1e-14));
        CHECK(preds[1].kase == RateCase::FlatPerturbed);
        CHECK(preds[1].exponent == doctest::Approx(4.0).epsilon(1e-14));
        CHECK(preds[2].kase == RateCase::FlatVelocity);
        CHECK(preds[2].velocity);
        CHECK(preds[2].exponent == doctest::Approx(2.0).epsilon(1e-14));
    }
    SUBCASE("damping below the flat threshold yields no statement at theta = 1") {
        DampingSpec weak{2.9, 1.0, 1.0};  // threshold is (4+2)/(4-2) = 3
        CHECK(dispatch(weak, flat, zero_schedule(1)).empty());
    }
    SUBCASE("integrable perturbation keeps the perturbed statements only") {
        DampingSpec d{3.0, 1.0, 1.0};
        PerturbationSchedule g = powerlaw_schedule(1, 0.05, 3.2);
        auto preds = dispatch(d, flat, g);  // required weight p = 2, margin 0.2
        REQUIRE(preds.size() == 2);
        CHECK(preds[0].kase == RateCase::FlatPerturbed);
        CHECK(preds[0].margin == doctest::Approx(0.2).epsilon(1e-12));
        CHECK(preds[1].kase == RateCase::FlatVelocity);

        PerturbationSchedule heavy_tail = powerlaw_schedule(1, 0.05, 2.9);
        CHECK(dispatch(d, flat, heavy_tail).empty());
    }
    SUBCASE("distinct flatness and sharpness exponents drop the velocity companion") {
        GeometryClass aniso{3.0, 4.0, 0.5, 1.0};
        DampingSpec d{6.0, 1.0, 1.0};  // threshold (3+2)/(3-2) = 5
        auto preds = dispatch(d, aniso, zero_schedule(2));
        REQUIRE(preds.size() == 2);
        CHECK(preds[0].kase == RateCase::FlatUnperturbed);
        CHECK(preds[1].kase == RateCase::FlatPerturbed);
        // Exponents use the sharpness exponent gamma2.
        CHECK(preds[0].exponent == doctest::Approx(4.0).epsilon(1e-14));
    }
    SUBCASE("heavy-ball damping needs no threshold") {
        DampingSpec hb{1.0, 0.0, 1.0};
        auto preds = dispatch(hb, flat, zero_schedule(1));
        REQUIRE(preds.size() == 3);
        CHECK(preds[0].exponent == doctest::Approx(2.0).epsilon(1e-14));  // r = 1/2
        CHECK(preds[2].exponent == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("verdicts compare the fitted slope against predicted minus slack") {
    RatePrediction poly;
    poly.kase = RateCase::SharpNesterov;
    poly.kind = FitKind::PolyLogLog;
    poly.exponent = 4.0;

    RateFit fit;
    fit.kind = FitKind::PolyLogLog;

    fit.fitted = -4.1;
    Verdict v = rate_verdict(poly, fit, 0.25);
    CHECK(v.pass);
    CHECK(v.required == doctest::Approx(3.75).epsilon(1e-14));
    CHECK(v.detail.find("sharp-nesterov") != std::string::npos);

    fit.fitted = -3.5;
    CHECK_FALSE(rate_verdict(poly, fit, 0.25).pass);

    // Faster-than-predicted decay is never a failure.
    fit.fitted = -7.0;
    CHECK(rate_verdict(poly, fit, 0.25).pass);

    // Default slack: 0.25 for polynomial exponents, 0.1 m for exponential.
    CHECK(default_slack(poly) == doctest::Approx(0.25).epsilon(1e-14));

    RatePrediction expo;
    expo.kase = RateCase::SharpHeavyBall;
    expo.kind = FitKind::ExpGamma;
    expo.m = 0.5;
    CHECK(default_slack(expo) == doctest::Approx(0.05).epsilon(1e-14));

    RateFit efit;
    efit.kind = FitKind::ExpGamma;
    efit.fitted = -0.49;
    CHECK(rate_verdict(expo, efit, 0.05).pass);
    efit.fitted = -0.44;
    CHECK_FALSE(rate_verdict(expo, efit, 0.05).pass);

    // Mismatched kinds cannot be compared.
    CHECK_THROWS_AS(rate_verdict(poly, efit), std::invalid_argument);
}

TEST_CASE("fit kind names round-trip") {
    CHECK(to_string(FitKind::PolyLogLog) == "poly");
    CHECK(to_string(FitKind::ExpGamma) == "exp-gamma");
    CHECK(fit_kind_from_string("poly") == FitKind::PolyLogLog);
    CHECK(fit_kind_from_string("exp-gamma") == FitKind::ExpGamma);
    CHECK_THROWS_AS(fit_kind_from_string("linear"), std::invalid_argument);
}
