#include "oracles.hpp"

#include "pwmsnb/matnum.hpp"
#include "pwmsnb/sweep.hpp"

#include "helpers.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace pwmsnb;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("expm_pair of the zero generator", "[matnum]") {
    for (std::size_t n : {1u, 2u, 5u}) {
        const auto p = expm_pair(Matrix::zeros(n, n), 3.0);
        CHECK(p.E == Matrix::identity(n));
        CHECK(oracle::max_rel_diff(p.Psi, 3.0 * Matrix::identity(n)) <= 1e-15);
    }
}

TEST_CASE("expm_pair scalar closed form", "[matnum]") {
    for (double a : {-3.0, -0.2, 0.5, 2.0}) {
        const double t = 0.8;
        const auto p = expm_pair(Matrix{{a}}, t);
        CHECK_THAT(p.E(0, 0), WithinRel(std::exp(a * t), 1e-13));
        CHECK_THAT(p.Psi(0, 0), WithinRel((std::exp(a * t) - 1.0) / a, 1e-13));
    }
}

TEST_CASE("expm_pair matches the Taylor oracle on random 3x3 matrices", "[matnum]") {
    std::mt19937_64 rng(11);
    for (int k = 0; k < 25; ++k) {
        const Matrix a = oracle::random_matrix(rng, 3);
        const auto p = expm_pair(a, 0.7);
        CHECK(oracle::max_rel_diff(p.E, oracle::taylor_expm(a, 0.7)) <= 1e-10);
    }
}

TEST_CASE("expm handles large norms by scaling and squaring", "[matnum]") {
    std::mt19937_64 rng(5);
    const Matrix a = oracle::random_matrix(rng, 4, -10.0, 10.0);
    CHECK(oracle::max_rel_diff(expm(a), oracle::taylor_expm(a, 1.0)) <= 1e-9);
}

TEST_CASE("expm_pair semigroup and integral identities", "[matnum]") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> ut(0.05, 1.5);
    for (int k = 0; k < 20; ++k) {
        const Matrix a = oracle::random_matrix(rng, 4);
        const double t1 = ut(rng), t2 = ut(rng);
        const Matrix e12 = expm_pair(a, t1 + t2).E;
        CHECK(oracle::max_rel_diff(e12, expm_pair(a, t1).E * expm_pair(a, t2).E) <= 1e-9);

        const auto p = expm_pair(a, t1);
        const Matrix ref = solve(a, p.E - Matrix::identity(4));
        CHECK(oracle::max_rel_diff(p.Psi, ref) <= 1e-9);
    }
}

TEST_CASE("expm_pair integral with a singular generator", "[matnum]") {
    const Matrix a{{0.0, 0.0}, {0.0, -2.0}};
    const auto p = expm_pair(a, 0.5);
    CHECK_THAT(p.Psi(0, 0), WithinRel(0.5, 1e-14));
    CHECK_THAT(p.Psi(1, 1), WithinRel((1.0 - std::exp(-1.0)) / 2.0, 1e-13));
}

TEST_CASE("expm_pair rejects bad input", "[matnum]") {
    CHECK_THROWS_AS(expm_pair(Matrix(2, 3), 1.0), Error);
    try {
        expm_pair(Matrix(2, 3), 1.0);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Dimension);
    }
    try {
        expm_pair(Matrix{{800.0}}, 1.0);
        FAIL("expected overflow");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Overflow);
    }
}

TEST_CASE("eigenvalues of simple matrices", "[matnum]") {
    auto ev = eigenvalues(Matrix{{2.0, 0.0}, {0.0, -1.0}});
    REQUIRE(ev.size() == 2);
    CHECK_THAT(ev[0].real(), WithinAbs(2.0, 1e-14));
    CHECK_THAT(ev[1].real(), WithinAbs(-1.0, 1e-14));

    ev = eigenvalues(Matrix{{0.0, -1.0}, {1.0, 0.0}});
    REQUIRE(ev.size() == 2);
    for (const Complex& l : ev) {
        CHECK_THAT(l.real(), WithinAbs(0.0, 1e-14));
        CHECK_THAT(std::abs(l.imag()), WithinAbs(1.0, 1e-14));
    }
    CHECK(ev[0].imag() == -ev[1].imag());
}

TEST_CASE("eigenvalues satisfy the determinant residual on random 4x4 matrices", "[matnum]") {
    std::mt19937_64 rng(7);
    for (int k = 0; k < 30; ++k) {
        const Matrix a = oracle::random_matrix(rng, 4);
        const auto ev = eigenvalues(a);
        REQUIRE(ev.size() == 4);
        for (const Complex& l : ev) CHECK(std::abs(oracle::shifted_det(a, l)) <= 1e-8 * oracle::inf_norm(a));
    }
}

TEST_CASE("eigenvalues of the exponential are exponentials of eigenvalues", "[matnum]") {
    std::mt19937_64 rng(9);
    for (int k = 0; k < 10; ++k) {
        const Matrix a = oracle::random_matrix(rng, 3);
        const double t = 0.6;
        auto lhs = eigenvalues(expm_pair(a, t).E);
        ComplexList rhs;
        for (const Complex& l : eigenvalues(a)) rhs.push_back(std::exp(t * l));
        for (const Complex& l : lhs) {
            double best = 1e300;
            for (const Complex& r : rhs) best = std::min(best, std::abs(l - r) / std::abs(r));
            CHECK(best <= 1e-7);
        }
    }
}

TEST_CASE("eigenvalues rejects oversized input", "[matnum]") {
    CHECK_THROWS_AS(eigenvalues(Matrix::identity(9)), Error);
}

TEST_CASE("bracketed_roots basic cases", "[matnum]") {
    auto r = bracketed_roots([](double x) { return x * x - 1.0; }, -2.0, 2.0, 100, 1e-10);
    REQUIRE(r.size() == 2);
    CHECK_THAT(r[0], WithinAbs(-1.0, 1e-10));
    CHECK_THAT(r[1], WithinAbs(1.0, 1e-10));

    CHECK(bracketed_roots([](double x) { return x * x + 1.0; }, -2.0, 2.0).empty());

    r = bracketed_roots([](double x) { return std::sin(2.0 * std::numbers::pi * x); }, 0.1, 1.4, 1000, 1e-12);
    REQUIRE(r.size() == 2);
    CHECK_THAT(r[0], WithinAbs(0.5, 1e-12));
    CHECK_THAT(r[1], WithinAbs(1.0, 1e-12));
}

TEST_CASE("bracketed_roots reports non-finite evaluations", "[matnum]") {
    try {
        bracketed_roots([](double x) { return x > 0.5 ? std::nan("") : x; }, 0.0, 1.0, 10);
        FAIL("expected an evaluation error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Evaluation);
        CHECK(std::string(e.what()).find("0.6") != std::string::npos);
    }
}

TEST_CASE("bracketed_roots returns the better bracket endpoint", "[matnum]") {
    const auto f = [](double x) { return std::tanh(40.0 * (x - 0.3137)) + 0.01 * x; };
    const auto r = bracketed_roots(f, 0.0, 1.0, 50, 1e-9);
    REQUIRE(r.size() == 1);
    CHECK(std::abs(f(r[0])) <= std::max(std::abs(f(r[0] - 1e-9)), std::abs(f(r[0] + 1e-9))));
}

TEST_CASE("newton_2d simple systems", "[matnum]") {
    auto x = newton_2d([](const Point2& p) { return Point2{p[0] - 1.0, p[1] + 2.0}; }, {0.0, 0.0});
    CHECK_THAT(x[0], WithinAbs(1.0, 1e-10));
    CHECK_THAT(x[1], WithinAbs(-2.0, 1e-10));

    x = newton_2d([](const Point2& p) { return Point2{p[0] * p[0] - p[1], p[1] - 4.0}; }, {1.0, 3.0});
    CHECK_THAT(x[0], WithinAbs(2.0, 1e-9));
    CHECK_THAT(x[1], WithinAbs(4.0, 1e-9));
}

TEST_CASE("newton_2d failures", "[matnum]") {
    try {
        newton_2d([](const Point2& p) { return Point2{p[0] + p[1] - 1.0, 2.0 * (p[0] + p[1]) - 1.0}; }, {0.0, 0.0});
        FAIL("expected singular Jacobian");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Singular);
    }

    Newton2Options opts;
    opts.max_iter = 8;
    try {
        newton_2d([](const Point2& p) { return Point2{std::exp(p[0]), p[1]}; }, {0.0, 1.0}, opts);
        FAIL("expected non-convergence");
    } catch (const NonConvergenceError& e) {
        REQUIRE(e.best_iterate().size() == 2);
        CHECK(e.best_iterate()[0] < -5.0);
    }
}

TEST_CASE("newton_2d on the saddle-node system of the multi-loop buck", "[matnum]") {
    const ConverterModel m = testutil::example("e2");
    const auto F = [&](const Point2& v) { return snb_system(m, "vs", v[0], v[1]); };
    const Point2 x = newton_2d(F, {0.68, 19.0});
    CHECK_THAT(x[0], WithinAbs(0.70, 0.01));
    CHECK_THAT(x[1], WithinAbs(20.0, 0.1));
}

TEST_CASE("linear algebra helpers", "[matnum]") {
    const Matrix a{{4.0, 1.0}, {2.0, 3.0}};
    CHECK_THAT(determinant(a), WithinRel(10.0, 1e-14));
    const Matrix ai = inverse(a);
    CHECK(oracle::max_rel_diff(a * ai, Matrix::identity(2)) <= 1e-15);
    CHECK_THROWS_AS(inverse(Matrix{{1.0, 2.0}, {2.0, 4.0}}), Error);
    const Vector x = solve(a, Vector{1.0, 2.0});
    CHECK_THAT(4.0 * x[0] + x[1], WithinRel(1.0, 1e-14));
    CHECK_THAT(2.0 * x[0] + 3.0 * x[1], WithinRel(2.0, 1e-14));
}
