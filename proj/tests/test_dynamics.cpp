#include "voltvar/dynamics.hpp"

#include "voltvar/errors.hpp"
#include "support/test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace voltvar;

namespace {

// Independent scalar oracle: bisection on q - f(Xq + v~) over [-q_bar, q_bar].
double scalar_fixed_point(const RuleParams& rule, double x, double v_tilde) {
    const double qb = rule.q_bar();
    auto g = [&](double q) { return rule.eval_piecewise(x * q + v_tilde) - q; };
    double lo = -qb - 1e-9, hi = qb + 1e-9;
    REQUIRE(g(lo) >= 0.0);
    REQUIRE(g(hi) <= 0.0);
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) >= 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

RuleSet one_der_rules(double v_bar, double alpha, double delta, double sigma) {
    return RuleSet::uniform({1}, RuleParams{v_bar, alpha, delta, sigma});
}

} // namespace

TEST_CASE("stability checks on the scalar example") {
    GridModel m = GridModel::build(testutil::two_bus(0.01, 0.02)); // X = [[0.04]]
    SUBCASE("alpha = 0 passes both") {
        StabilityReport rep = check_stability(one_der_rules(1.0, 0.0, 0.0, 0.1), m, 0.5);
        CHECK(rep.spectral_ok);
        CHECK(rep.inner_ok);
        CHECK(rep.spectral_norm == 0.0);
    }
    SUBCASE("alpha = 10 gives spectral norm 0.4") {
        StabilityReport rep = check_stability(one_der_rules(1.0, 10.0, 0.0, 0.1), m, 0.5);
        CHECK(rep.spectral_norm == doctest::Approx(0.4).epsilon(1e-12));
        CHECK(rep.spectral_ok);
        CHECK(rep.inner_ok);
    }
    SUBCASE("alpha = 20 fails both") {
        StabilityReport rep = check_stability(one_der_rules(1.0, 20.0, 0.0, 0.1), m, 0.5);
        CHECK(rep.spectral_norm == doctest::Approx(0.8).epsilon(1e-12));
        CHECK(!rep.spectral_ok);
        CHECK(!rep.inner_ok);
    }
}

TEST_CASE("inner approximation implies the spectral condition (sampled)") {
    GridModel m = GridModel::build(testutil::ieee37());
    const double eps = 0.5;
    const Vec row_sums = m.x_der().rowwise().sum();
    std::mt19937_64 rng(31);
    int kept = 0;
    while (kept < 200) {
        Vec alpha(m.n_der());
        for (int i = 0; i < m.n_der(); ++i)
            alpha(i) = testutil::uniform01(rng) * (1.0 - eps) / row_sums(i);
        if (((m.x_der() * alpha).array() > (1.0 - eps)).any())
            continue; // rejection sampling onto the inner set
        ++kept;
        Mat ax = alpha.asDiagonal() * m.x_der();
        CHECK(ax.jacobiSvd().singularValues()(0) <= (1.0 - eps) + 1e-12);
    }
}

TEST_CASE("depth bound arithmetic") {
    Vec q_hat = Vec::Constant(1, 0.5);
    CHECK(depth_bound(q_hat, 0.5, 1e-7) == 24);
    CHECK(depth_bound(q_hat, 0.5, 1.0) == 0);
    CHECK_THROWS_AS(depth_bound(q_hat, 0.5, 0.0), NumericalError);
    CHECK_THROWS_AS(depth_bound(q_hat, 1.5, 1e-7), NumericalError);
}

TEST_CASE("depth bound delivers the advertised accuracy on a scalar example") {
    GridModel m = GridModel::build(testutil::two_bus(0.01, 0.02));
    RuleSet rules = one_der_rules(1.0, 5.0, 0.0, 0.1);
    Scenario s{Vec::Zero(1), Vec::Constant(1, 1.25)}; // v~ = 1.05

    const double eps = 0.5; // alpha * X = 0.2 <= 1 - eps holds
    const double eps1 = 1e-5;
    const int t_bound = depth_bound(Vec::Constant(1, rules.rule(0).q_bar()), eps, eps1);

    EquilibriumOptions opts;
    opts.max_iterations = t_bound;
    opts.tol = 1e-30;
    opts.throw_on_max = false;
    EquilibriumResult truncated = equilibrium(rules, m, s, opts);

    const double oracle = scalar_fixed_point(rules.rule(0), 0.04, 1.05);
    CHECK(std::abs(truncated.q_star(0) - oracle) <= eps1);
}

TEST_CASE("equilibrium: open loop, scalar analytic value, and init independence") {
    GridModel m = GridModel::build(testutil::two_bus(0.01, 0.02));
    Scenario s{Vec::Zero(1), Vec::Constant(1, 1.25)}; // v~ = 1.05

    SUBCASE("flat rules settle immediately at the uncompensated profile") {
        EquilibriumResult eq = equilibrium(one_der_rules(1.0, 0.0, 0.01, 0.1), m, s);
        CHECK(eq.iterations == 1);
        CHECK(eq.q_star(0) == 0.0);
        CHECK(eq.v_star(0) == doctest::Approx(1.05).epsilon(1e-15));
    }

    RuleSet rules = one_der_rules(1.0, 5.0, 0.0, 0.1);
    EquilibriumOptions opts;
    opts.tol = 1e-12;

    SUBCASE("fixed point in the linear segment matches the affine solve") {
        EquilibriumResult eq = equilibrium(rules, m, s, opts);
        CHECK(eq.converged);
        CHECK(eq.q_star(0) == doctest::Approx(-0.25 / 1.2).epsilon(1e-9));
        CHECK(eq.v_star(0) == doctest::Approx(1.05 - 0.04 * 0.25 / 1.2).epsilon(1e-9));
        // bisection oracle agrees
        CHECK(eq.q_star(0)
              == doctest::Approx(scalar_fixed_point(rules.rule(0), 0.04, 1.05))
                     .epsilon(1e-9));
        // v* = X q* + v~ holds at the returned state
        CHECK(eq.v_star(0)
              == doctest::Approx(0.04 * eq.q_star(0) + 1.05).epsilon(1e-15));
    }

    SUBCASE("distinct initializations agree within 10 tol") {
        opts.tol = 1e-9;
        EquilibriumResult from_zero = equilibrium(rules, m, s, opts);
        EquilibriumOptions opts2 = opts;
        opts2.q_init = Vec::Constant(1, rules.rule(0).q_bar());
        EquilibriumResult from_cap = equilibrium(rules, m, s, opts2);
        CHECK(std::abs(from_zero.q_star(0) - from_cap.q_star(0)) <= 10 * opts.tol);
    }
}

TEST_CASE("unstable closed loop raises a divergence error with trajectory") {
    GridModel m = GridModel::build(testutil::two_bus(0.01, 0.02));
    RuleSet rules = one_der_rules(1.0, 40.0, 0.0, 0.02); // alpha X = 1.6
    Scenario s{Vec::Zero(1), Vec::Constant(1, 1.25)};
    EquilibriumOptions opts;
    opts.max_iterations = 150;
    opts.tol = 1e-10;
    try {
        equilibrium(rules, m, s, opts);
        FAIL("expected DivergenceError");
    } catch (const DivergenceError& e) {
        CHECK(e.residuals().size() == 150);
        CHECK(e.residuals().back() > 1e-6);
    }
}

TEST_CASE("batch properties on random stable 37-bus instances") {
    GridModel m = GridModel::build(testutil::ieee37());
    std::mt19937_64 rng(32);
    std::vector<int> buses;
    for (int b : m.der_buses())
        buses.push_back(b + 1);
    const Vec row_sums = m.x_der().rowwise().sum();
    const double eps = 0.5;

    for (int rep = 0; rep < 10; ++rep) {
        std::vector<RuleParams> params;
        Vec alpha_vec(m.n_der());
        for (int i = 0; i < m.n_der(); ++i) {
            RuleParams p;
            p.v_bar = testutil::uniform(rng, 0.98, 1.02);
            p.delta = testutil::uniform(rng, 0.0, 0.02);
            p.sigma = p.delta + testutil::uniform(rng, 0.02, 0.1);
            p.alpha = testutil::uniform(rng, 0.2, 1.0) * (1.0 - eps) / row_sums(i);
            alpha_vec(i) = p.alpha;
            params.push_back(p);
        }
        if (((m.x_der() * alpha_vec).array() > (1.0 - eps)).any())
            continue;
        RuleSet rules(buses, params);
        Scenario s = testutil::random_scenario(m.n(), rng, 0.08);
        EquilibriumOptions opts;
        opts.tol = 1e-10;
        EquilibriumResult eq = equilibrium(rules, m, s, opts);

        // fixed-point residual bound
        Vec v_der(m.n_der());
        for (int i = 0; i < m.n_der(); ++i)
            v_der(i) = eq.v_star(m.der_buses()[i]);
        double resid = 0.0;
        for (int i = 0; i < m.n_der(); ++i)
            resid = std::max(resid, std::abs(eq.q_star(m.der_buses()[i])
                                             - rules.rule(i).eval_piecewise(v_der(i))));
        const double bound =
            opts.tol
            * (1.0 + alpha_vec.lpNorm<Eigen::Infinity>()
                         * m.x_der().cwiseAbs().rowwise().sum().maxCoeff());
        CHECK(resid <= bound);

        // contraction along the trajectory
        for (std::size_t t = 1; t < eq.step_norms.size(); ++t)
            if (eq.step_norms[t - 1] > 1e-14)
                CHECK(eq.step_norms[t] <= (1.0 - eps) * eq.step_norms[t - 1] + 1e-14);

        // raising v~ never raises any equilibrium injection
        Scenario raised = s;
        // +0.01 on v~ via the substation: shift q~ so that X q~ adds 0.01
        // exactly is awkward; shift the scenario's uncompensated profile by
        // perturbing v0 through an equivalent uniform bump on v~ instead.
        EquilibriumResult eq_up;
        {
            // emulate v~ + 0.01 by solving with a model copy whose v0 is bumped
            FeederModel bumped = testutil::ieee37();
            bumped.v0 += 0.01;
            GridModel m2 = GridModel::build(bumped);
            eq_up = equilibrium(rules, m2, raised, opts);
        }
        for (int i = 0; i < m.n(); ++i)
            CHECK(eq_up.q_star(i) <= eq.q_star(i) + 1e-9);
    }
}
