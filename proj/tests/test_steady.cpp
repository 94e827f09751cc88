#include "oracles.hpp"
#include "helpers.hpp"

#include "pwmsnb/sdstab.hpp"
#include "pwmsnb/steady.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace pwmsnb;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Root of the residual found by an RK4 shooting oracle: x0(0) is the fixed
// point of the two-stage affine map, built column by column from RK4 runs.
Vector rk4_orbit_at_d(const ConverterModel& m, double d, int steps = 4000) {
    const std::size_t n = m.dim();
    const double T = m.period();
    const Vector b1u = oracle::mul(m.B1(), m.u());
    const Vector b2u = oracle::mul(m.B2(), m.u());
    const Vector zero(n, 0.0);
    auto map = [&](const Vector& x, bool affine) {
        const Vector x1 = oracle::rk4(m.A1(), affine ? b1u : zero, x, d, steps);
        return oracle::rk4(m.A2(), affine ? b2u : zero, x1, T - d, steps);
    };
    const Vector c = map(zero, true);
    Matrix M(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        Vector e(n, 0.0);
        e[j] = 1.0;
        const Vector col = map(e, false);
        for (std::size_t i = 0; i < n; ++i) M(i, j) = (i == j ? 1.0 : 0.0) - col[i];
    }
    const Vector x0 = solve(M, c);
    return oracle::rk4(m.A1(), b1u, x0, d, steps);
}

std::vector<double> duties(const ConverterModel& m) {
    std::vector<double> out;
    for (const auto& o : periodic_solutions(m)) out.push_back(o.D);
    return out;
}

}  // namespace

TEST_CASE("general and buck orbit forms agree", "[steady]") {
    for (const char* id : {"e1", "e2"}) {
        const ConverterModel m = testutil::example(id);
        for (int k = 1; k <= 9; ++k) {
            const double d = 0.1 * k * m.period();
            CHECK(oracle::max_rel_diff(orbit_state_at_d(m, d), buck_orbit_state_at_d(m, d)) <= 1e-9);
        }
    }
}

TEST_CASE("general and boost orbit forms agree", "[steady]") {
    for (const char* id : {"e3", "e4", "e5"}) {
        const ConverterModel m = testutil::example(id);
        for (int k = 1; k <= 9; ++k) {
            const double d = 0.1 * k * m.period();
            CHECK(oracle::max_rel_diff(orbit_state_at_d(m, d), boost_orbit_state_at_d(m, d)) <= 1e-9);
        }
    }
    CHECK_THROWS_AS(buck_orbit_state_at_d(testutil::example("e3"), 1e-7), Error);
    CHECK_THROWS_AS(boost_orbit_state_at_d(testutil::example("e1"), 1e-6), Error);
}

TEST_CASE("orbit state matches the RK4 shooting oracle", "[steady]") {
    for (const char* id : {"e1", "e2", "e3", "e4", "e5"}) {
        const ConverterModel m = testutil::example(id);
        const double d = 0.63 * m.period();
        CHECK(oracle::max_rel_diff(orbit_state_at_d(m, d), rk4_orbit_at_d(m, d)) <= 1e-9);
    }
}

TEST_CASE("zero duty orbit of the current-mode buck", "[steady]") {
    const ConverterModel m = testutil::example("e1");
    const Vector x = orbit_state_at_d(m, 0.0);
    CHECK_THAT(x[0], WithinAbs(0.0, 1e-15));
    CHECK_THAT(x[1], WithinAbs(0.0, 1e-15));
}

TEST_CASE("boost orbit near its saddle-node duty", "[steady]") {
    const ConverterModel m = testutil::example("e3", 7.1);
    const Vector x = boost_orbit_state_at_d(m, 0.78 * m.period());
    CHECK(std::isfinite(x[0]));
    CHECK(x[1] > 3.0);
    CHECK(x[1] < 12.0);
}

TEST_CASE("residual roots of the current-mode buck", "[steady]") {
    auto r = duties(testutil::example("e1", 1.21));
    REQUIRE(r.size() == 2);
    CHECK_THAT(r[0], WithinAbs(0.62, 0.005));
    CHECK_THAT(r[1], WithinAbs(0.78, 0.005));

    // Closer to the fold the roots are checked against the shooting oracle.
    const ConverterModel m = testutil::example("e1", 1.223);
    r = duties(m);
    REQUIRE(r.size() == 2);
    for (double D : r) {
        const Vector x = rk4_orbit_at_d(m, D * m.period());
        CHECK_THAT(1.223 - x[0], WithinAbs(0.0, 1e-9));
    }
    CHECK(r[0] < 0.7);
    CHECK(r[1] > 0.7);

    CHECK(duties(testutil::example("e1", 1.3)).empty());
    CHECK(duties(testutil::example("e1", 0.9)).size() <= 1);
}

TEST_CASE("periodic solutions of the boost examples", "[steady]") {
    auto r = duties(testutil::example("e3", 7.0));
    REQUIRE(r.size() == 2);
    CHECK_THAT(r[0], WithinAbs(0.74, 0.01));
    CHECK_THAT(r[1], WithinAbs(0.81, 0.01));

    const ConverterModel m5 = testutil::example("e5", 0.48);
    const auto orbits = periodic_solutions(m5);
    REQUIRE(orbits.size() == 2);
    const auto s0 = stability(m5, orbits[0]).classification;
    const auto s1 = stability(m5, orbits[1]).classification;
    CHECK(s0 == Classification::Stable);
    CHECK(s1 == Classification::Unstable);
}

TEST_CASE("every periodic solution is a fixed point of the two-stage flow", "[steady]") {
    for (const char* id : {"e1", "e2", "e3", "e4", "e5"}) {
        const ConverterModel m = testutil::example(id);
        for (const PeriodicOrbit& o : periodic_solutions(m)) {
            CHECK(std::abs(o.residual) <= 1e-9 * residual_scale(m, o.y0_d));
            const Vector xd = oracle::rk4(m.A1(), oracle::mul(m.B1(), m.u()), o.x0_0, o.d, 4000);
            const Vector xT = oracle::rk4(m.A2(), oracle::mul(m.B2(), m.u()), xd, m.period() - o.d, 4000);
            CHECK(oracle::max_rel_diff(xT, o.x0_0) <= 1e-9);
            CHECK(oracle::max_rel_diff(o.xdot_minus, m.A1() * o.x0_d + m.B1() * m.u()) == 0.0);
        }
    }
}

TEST_CASE("steady-state fold residual of the buck", "[steady]") {
    const ConverterModel m = testutil::example("e1");
    const double T = m.period();
    const auto roots = bracketed_roots([&](double D) { return buck_steadystate_snb_residual(m, D * T); }, 0.01, 0.99);
    REQUIRE(roots.size() == 1);
    CHECK_THAT(roots[0], WithinAbs(0.7, 1e-3));

    for (const char* id : {"e1", "e2"}) {
        const ConverterModel b = testutil::example(id);
        const double Tb = b.period();
        for (double D : {0.3, 0.55, 0.8}) {
            const double h = 1e-6 * Tb;
            const double fd = Tb * (residual(b, D * Tb + h) - residual(b, D * Tb - h)) / (2.0 * h);
            const double eq = buck_steadystate_snb_residual(b, D * Tb);
            CHECK_THAT(fd, WithinRel(eq, 1e-6));
            CHECK_THAT(eq, WithinRel(Tb * (s_value(b, D) - b.hdot()), 1e-9));
        }
    }

    const ConverterModel big = testutil::with(testutil::example("e2"), "Vh", 1e4);
    for (double D : {0.1, 0.5, 0.9}) CHECK(buck_steadystate_snb_residual(big, D * big.period()) < 0.0);
    CHECK_THROWS_AS(buck_steadystate_snb_residual(testutil::example("e3"), 1e-7), Error);
}

TEST_CASE("boost residual slope and slope condition share their roots", "[steady]") {
    for (const char* id : {"e3", "e4", "e5"}) {
        const auto& f = builtin_fixture(id);
        const ConverterModel m = testutil::example(id, f.param_star);
        const double T = m.period();
        const auto slope = [&](double D) {
            const double h = 1e-7 * T;
            return (residual(m, D * T + h) - residual(m, D * T - h)) / (2.0 * h);
        };
        const auto a = bracketed_roots(slope, 0.5, 0.98, 400, 1e-12);
        const auto b = bracketed_roots([&](double D) { return theorem1_residual(m, D); }, 0.5, 0.98, 400, 1e-12);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK_THAT(a[i], WithinAbs(b[i], 1e-4));
    }
}

TEST_CASE("root gap closes monotonically toward the fold", "[steady]") {
    double prev = 1.0;
    for (int k = 0; k < 10; ++k) {
        const double ic = 1.215 + 0.001 * k;
        const auto r = duties(testutil::example("e1", ic));
        REQUIRE(r.size() == 2);
        const double gap = r[1] - r[0];
        CHECK(gap < prev);
        prev = gap;
    }
}

TEST_CASE("saturated steady states", "[steady]") {
    const auto s3 = saturated_solutions(testutil::example("e3", 7.0));
    REQUIRE(s3.size() == 1);
    CHECK(s3[0].always_on);
    CHECK_THAT(s3[0].x[0], WithinRel(30.0, 1e-12));
    CHECK_THAT(s3[0].x[1], WithinAbs(0.0, 1e-12));
    CHECK(std::abs(s3[0].multipliers.front()) < 1.0);

    const auto on = [](const std::vector<SaturatedSolution>& v) {
        for (const auto& s : v)
            if (s.always_on) return true;
        return false;
    };
    CHECK(on(saturated_solutions(testutil::example("e2", 19.3))));
    CHECK_FALSE(on(saturated_solutions(testutil::example("e2", 19.1))));
}

TEST_CASE("orbit average", "[steady]") {
    const ConverterModel m = testutil::example("e1", 1.21);
    for (const auto& o : periodic_solutions(m)) CHECK_THAT(average_output(m, o), WithinRel(o.D * m.vs(), 1e-9));
}
