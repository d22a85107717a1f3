#include "voltvar/objective.hpp"

#include "voltvar/errors.hpp"
#include "support/test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace voltvar;

TEST_CASE("step function edge values") {
    CHECK(step(0.0) == 1.0);
    CHECK(step(-1e-12) == 0.0);
    CHECK(step(1e-300) == 1.0);
    std::mt19937_64 rng(41);
    for (int i = 0; i < 200; ++i) {
        const double x = testutil::uniform(rng, -5.0, 5.0);
        if (x != 0.0)
            CHECK(1.0 - step(x) == step(-x));
    }
}

TEST_CASE("logistic surrogate values, symmetry, and saturation") {
    const double gamma = 1e-4;
    CHECK(logistic(0.0, gamma) == 0.5);
    CHECK(logistic_derivative(0.0, gamma) == doctest::Approx(0.25 / gamma).epsilon(1e-14));
    CHECK(logistic(1e-3, gamma)
          == doctest::Approx(1.0 / (1.0 + std::exp(-10.0))).epsilon(1e-14));
    // saturates cleanly, no overflow
    CHECK(logistic(1e6, gamma) == 1.0);
    CHECK(logistic(-1e6, gamma) == 0.0);
    CHECK(logistic_derivative(1e6, gamma) == 0.0);

    std::mt19937_64 rng(42);
    for (int i = 0; i < 500; ++i) {
        const double x = testutil::uniform(rng, -10.0, 10.0) * gamma;
        CHECK(logistic(x, gamma) + logistic(-x, gamma) == 1.0); // exact by construction
        CHECK(logistic_derivative(x, gamma) == logistic_derivative(-x, gamma));
    }
    double prev = -1.0;
    for (int i = 0; i <= 100; ++i) {
        const double u = logistic((i - 50) * gamma / 10.0, gamma);
        CHECK(u > prev);
        prev = u;
    }
}

TEST_CASE("logistic derivative matches central differences") {
    const double gamma = 1e-4;
    // At h = gamma/100 the oracle's own truncation error is h^2/6 |u'''|,
    // about 8e-6 relative near zero; the assertion reflects that floor.
    for (int k = -3; k <= 3; ++k) {
        const double x = k * gamma;
        const double h = gamma / 100.0;
        const double fd = (logistic(x + h, gamma) - logistic(x - h, gamma)) / (2 * h);
        const double an = logistic_derivative(x, gamma);
        CHECK(std::abs(fd - an) <= 2e-5 * std::abs(an));
    }
    // a tighter step meets 1e-6 relative comfortably
    for (int k = -3; k <= 3; ++k) {
        const double x = k * gamma;
        const double h = gamma / 1000.0;
        const double fd = (logistic(x + h, gamma) - logistic(x - h, gamma)) / (2 * h);
        const double an = logistic_derivative(x, gamma);
        CHECK(std::abs(fd - an) <= 1e-6 * std::abs(an));
    }
}

TEST_CASE("band indicator at the center, edge, and outside") {
    ChanceConfig cfg; // 0.97 / 1.03, gamma 1e-4
    CHECK(band_indicator(1.0, cfg) < 1e-3);
    CHECK(band_indicator(1.03, cfg) == 0.5);
    CHECK(band_indicator(0.97, cfg) == 0.5);
    CHECK(band_indicator(1.05, cfg) > 0.999);
    CHECK(band_indicator(0.95, cfg) > 0.999);
}

TEST_CASE("indicator converges pointwise to the step as gamma shrinks") {
    for (double v : {0.99, 1.011, 1.029, 1.031, 1.05}) {
        const double want = step((v - 1.0) * (v - 1.0) - 0.03 * 0.03);
        double prev_err = 1.0;
        for (double gamma : {1e-2, 1e-3, 1e-4}) {
            ChanceConfig cfg;
            cfg.gamma = gamma;
            const double err = std::abs(band_indicator(v, cfg) - want);
            CHECK(err <= prev_err + 1e-15);
            prev_err = err;
        }
        ChanceConfig sharp;
        sharp.gamma = 1e-4;
        CHECK(std::abs(band_indicator(v, sharp) - want) < 0.5);
    }
}

namespace {

// One-bus fixture where equilibrium voltages can be dialed in directly.
struct OneBus {
    GridModel model = GridModel::build(testutil::two_bus(0.01, 0.02));
    RuleSet flat = RuleSet::flat({1});

    Scenario with_voltage(double v) const {
        // v~ = v0 + X q~ => q~ = (v - 1) / 0.04, flat rules leave it there
        return {Vec::Zero(1), Vec::Constant(1, (v - 1.0) / 0.04)};
    }
};

} // namespace

TEST_CASE("empirical violation counts scenarios exactly") {
    OneBus fix;
    std::vector<Scenario> scenarios;
    for (int i = 0; i < 80; ++i)
        scenarios.push_back(fix.with_voltage(1.0));
    scenarios[17] = fix.with_voltage(1.05); // exactly one offender

    ChanceConfig cfg;
    Vec hard = empirical_violation(fix.flat, fix.model, scenarios, cfg,
                                   ViolationMode::hard);
    CHECK(hard(0) == doctest::Approx(0.0125).epsilon(1e-15));
    CHECK(hard(0) * 80.0 == 1.0); // exact multiple of 1/S

    Vec none = empirical_violation(fix.flat, fix.model,
                                   std::span<const Scenario>(scenarios.data(), 17), cfg,
                                   ViolationMode::hard);
    CHECK(none(0) == 0.0);
}

TEST_CASE("hard/soft gap is controlled by band-edge mass") {
    OneBus fix;
    ChanceConfig cfg;
    std::mt19937_64 rng(43);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<Scenario> scenarios;
        int near_edge = 0;
        const int s_count = 60;
        for (int i = 0; i < s_count; ++i) {
            const double v = testutil::uniform(rng, 0.95, 1.08);
            scenarios.push_back(fix.with_voltage(v));
            const double arg = (v - cfg.v_ref()) * (v - cfg.v_ref())
                               - cfg.radius() * cfg.radius();
            if (std::abs(arg) < 10 * cfg.gamma)
                ++near_edge;
        }
        Vec hard = empirical_violation(fix.flat, fix.model, scenarios, cfg,
                                       ViolationMode::hard);
        Vec soft = empirical_violation(fix.flat, fix.model, scenarios, cfg,
                                       ViolationMode::soft);
        CHECK(std::abs(hard(0) - soft(0))
              <= static_cast<double>(near_edge) / s_count + 1e-3);
    }
}

TEST_CASE("average loss: single scenario, duplication, two-pass recomputation") {
    OneBus fix;
    Scenario s = fix.with_voltage(1.02);
    std::vector<Scenario> one{s};
    const double single = average_loss(fix.flat, fix.model, one);
    CHECK(single == doctest::Approx(fix.model.approx_losses(Vec::Zero(1), s)).epsilon(1e-15));

    std::vector<Scenario> twice{s, s};
    CHECK(average_loss(fix.flat, fix.model, twice) == single);

    GridModel m37 = GridModel::build(testutil::ieee37());
    std::vector<int> buses;
    for (int b : m37.der_buses())
        buses.push_back(b + 1);
    RuleSet defaults = RuleSet::defaults(buses, m37.q_hat());
    std::mt19937_64 rng(44);
    std::vector<Scenario> batch;
    for (int i = 0; i < 12; ++i)
        batch.push_back(testutil::random_scenario(m37.n(), rng, 0.05));
    EquilibriumOptions opts;
    opts.max_iterations = 1000;
    const double fast = average_loss(defaults, m37, batch, opts);
    double slow = 0.0;
    for (const Scenario& sc : batch)
        slow += m37.approx_losses(equilibrium(defaults, m37, sc, opts).q_star, sc);
    slow /= batch.size();
    CHECK(fast == doctest::Approx(slow).epsilon(1e-12));
}
