#include "voltvar/grid_model.hpp"

#include "voltvar/ac_validation.hpp"
#include "voltvar/errors.hpp"
#include "support/test_util.hpp"

#include <doctest.h>

using namespace voltvar;

TEST_CASE("two-bus sensitivities carry the factor of two") {
    GridModel m = GridModel::build(testutil::two_bus(0.01, 0.02));
    REQUIRE(m.n() == 1);
    CHECK(m.R()(0, 0) == doctest::Approx(0.02).epsilon(1e-15));
    CHECK(m.X()(0, 0) == doctest::Approx(0.04).epsilon(1e-15));
}

TEST_CASE("three-bus chain follows the common-path rule") {
    const double x1 = 0.02, x2 = 0.03;
    GridModel m = GridModel::build(testutil::chain3(0.01, x1, 0.015, x2));
    CHECK(m.X()(0, 0) == doctest::Approx(2 * x1));
    CHECK(m.X()(0, 1) == doctest::Approx(2 * x1));
    CHECK(m.X()(1, 0) == doctest::Approx(2 * x1));
    CHECK(m.X()(1, 1) == doctest::Approx(2 * (x1 + x2)));
}

TEST_CASE("sensitivities are symmetric, positive, and positive definite") {
    GridModel m = GridModel::build(testutil::ieee37());
    CHECK((m.X() - m.X().transpose()).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((m.R() - m.R().transpose()).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((m.X().array() > 0.0).all());
    CHECK((m.R().array() > 0.0).all());
}

TEST_CASE("bad topologies are rejected with a diagnostic") {
    FeederModel cycle;
    cycle.n_buses = 3;
    cycle.lines = {{0, 1, 0.01, 0.01}, {1, 2, 0.01, 0.01}, {2, 2, 0.01, 0.01}};
    CHECK_THROWS_AS(GridModel::build(cycle), FeederError);

    FeederModel disconnected;
    disconnected.n_buses = 4;
    disconnected.lines = {{0, 1, 0.01, 0.01}, {0, 1, 0.01, 0.01}, {2, 3, 0.01, 0.01}};
    CHECK_THROWS_WITH_AS(GridModel::build(disconnected),
                         doctest::Contains("not connected"), FeederError);

    FeederModel bad_line = testutil::two_bus();
    bad_line.lines[0].x = 0.0;
    CHECK_THROWS_WITH_AS(GridModel::build(bad_line), doctest::Contains("line 0"),
                         FeederError);
}

TEST_CASE("uncompensated voltage: flat profile and single-line drop") {
    GridModel m = GridModel::build(testutil::two_bus(0.01, 0.02));
    Scenario zero = testutil::zero_scenario(1);
    CHECK(m.uncompensated_voltage(zero)(0) == 1.0);

    Scenario load{Vec::Constant(1, -0.5), Vec::Zero(1)};
    CHECK(m.uncompensated_voltage(load)(0) == doctest::Approx(0.99).epsilon(1e-15));
}

TEST_CASE("uncompensated voltage matches an independent dense matvec") {
    GridModel m = GridModel::build(testutil::ieee37());
    std::mt19937_64 rng(11);
    const int n = m.n();
    for (int rep = 0; rep < 5; ++rep) {
        Scenario s = testutil::random_scenario(n, rng, 0.2);
        Vec v = m.uncompensated_voltage(s);
        // hand-rolled row-by-row oracle
        for (int i = 0; i < n; ++i) {
            double acc = m.v0();
            for (int j = 0; j < n; ++j)
                acc += m.R()(i, j) * s.p_tilde(j) + m.X()(i, j) * s.q_tilde(j);
            CHECK(v(i) == doctest::Approx(acc).epsilon(1e-13));
        }
    }
}

TEST_CASE("uncompensated voltage is affine in the loading") {
    GridModel m = GridModel::build(testutil::ieee37());
    std::mt19937_64 rng(12);
    const int n = m.n();
    Scenario s1 = testutil::random_scenario(n, rng, 0.2);
    Scenario s2 = testutil::random_scenario(n, rng, 0.2);
    for (double a : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        Scenario mix{a * s1.p_tilde + (1 - a) * s2.p_tilde,
                     a * s1.q_tilde + (1 - a) * s2.q_tilde};
        Vec lhs = m.uncompensated_voltage(mix);
        Vec rhs = a * m.uncompensated_voltage(s1) + (1 - a) * m.uncompensated_voltage(s2);
        CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() < 1e-13);
    }
}

TEST_CASE("loss proxy: vanishing, open-loop, and convexity cases") {
    GridModel m = GridModel::build(testutil::ieee37());
    std::mt19937_64 rng(13);
    const int n = m.n();

    Scenario s = testutil::random_scenario(n, rng, 0.1);
    SUBCASE("q = -q~ with p~ = 0 zeroes the loss") {
        Scenario qonly{Vec::Zero(n), s.q_tilde};
        CHECK(m.approx_losses(-s.q_tilde, qonly) == doctest::Approx(0.0).epsilon(1e-14));
    }
    SUBCASE("q = 0 reduces to the definition") {
        const double expect =
            s.q_tilde.dot(m.R() * s.q_tilde) + s.p_tilde.dot(m.R() * s.p_tilde);
        CHECK(m.approx_losses(Vec::Zero(n), s) == doctest::Approx(expect).epsilon(1e-14));
    }
    SUBCASE("midpoint convexity on random injections") {
        for (int rep = 0; rep < 50; ++rep) {
            Vec q1(n), q2(n);
            for (int i = 0; i < n; ++i) {
                q1(i) = testutil::uniform(rng, -0.3, 0.3);
                q2(i) = testutil::uniform(rng, -0.3, 0.3);
            }
            const double mid = m.approx_losses(0.5 * (q1 + q2), s);
            const double avg = 0.5 * (m.approx_losses(q1, s) + m.approx_losses(q2, s));
            CHECK(mid <= avg + 1e-12);
        }
    }
    SUBCASE("loss floor p~' R p~ is attained only at q = -q~") {
        const double floor = s.p_tilde.dot(m.R() * s.p_tilde);
        CHECK(m.approx_losses(-s.q_tilde, s) == doctest::Approx(floor).epsilon(1e-12));
        for (int rep = 0; rep < 20; ++rep) {
            Vec q(n);
            for (int i = 0; i < n; ++i)
                q(i) = testutil::uniform(rng, -0.3, 0.3);
            CHECK(m.approx_losses(q, s) >= floor - 1e-14);
        }
    }
}

TEST_CASE("X matches AC finite-difference voltage sensitivities within 5%") {
    FeederModel feeder = testutil::ieee37();
    GridModel m = GridModel::build(feeder);
    const int n = m.n();
    const double h = 1e-4;
    AcOptions ac_opts;
    ac_opts.tol = 1e-12;
    for (int col : {0, 4, 9, 17, 26, 34}) {
        Vec qp = Vec::Zero(n), qm = Vec::Zero(n);
        qp(col) = h;
        qm(col) = -h;
        Vec up = ac_power_flow(feeder, Vec::Zero(n), qp, ac_opts).squared_magnitudes();
        Vec um = ac_power_flow(feeder, Vec::Zero(n), qm, ac_opts).squared_magnitudes();
        for (int row = 0; row < n; ++row) {
            const double fd = (up(row) - um(row)) / (2 * h);
            CHECK(std::abs(fd - m.X()(row, col)) <= 0.05 * std::abs(m.X()(row, col)));
        }
    }
}
