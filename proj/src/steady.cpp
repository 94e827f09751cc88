#include "pwmsnb/steady.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pwmsnb {

namespace {

void check_d(const ConverterModel& m, double d) {
    if (!(d >= 0.0 && d <= m.period())) {
        std::ostringstream os;
        os << "switching instant d = " << d << " outside [0, T]";
        throw Error(ErrorKind::InvalidParameter, os.str());
    }
}

LuDecomposition orbit_lu(const Matrix& e1, const Matrix& e2) {
    const std::size_t n = e1.rows();
    LuDecomposition lu(Matrix::identity(n) - e1 * e2);
    if (lu.singular())
        throw Error(ErrorKind::DegenerateOrbit,
                    "I - e^{A1 d} e^{A2 (T-d)} is singular (open-loop multiplier at 1)");
    return lu;
}

// Integral over [0, t] of the stage trajectory started at x0:
// Psi(t) x0 + Gamma(t) B u, with Gamma = int_0^t Psi from a 3N augmented block.
Vector stage_integral(const Matrix& a, const Matrix& b, const Vector& u, const Vector& x0, double t) {
    const std::size_t n = a.rows();
    Matrix big = Matrix::zeros(3 * n, 3 * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) big(i, j) = a(i, j) * t;
        big(i, n + i) = t;
        big(n + i, 2 * n + i) = t;
    }
    const Matrix e = expm(big);
    Matrix psi(n, n), gamma(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            psi(i, j) = e(i, n + j);
            gamma(i, j) = e(i, 2 * n + j);
        }
    return psi * x0 + gamma * (b * u);
}

}  // namespace

Vector orbit_average(const ConverterModel& m, const PeriodicOrbit& orb) {
    const double T = m.period();
    Vector sum(m.dim(), 0.0);
    if (orb.d > 0.0) sum = sum + stage_integral(m.A1(), m.B1(), m.u(), orb.x0_0, orb.d);
    if (orb.d < T) sum = sum + stage_integral(m.A2(), m.B2(), m.u(), orb.x0_d, T - orb.d);
    return (1.0 / T) * sum;
}

double average_output(const ConverterModel& m, const PeriodicOrbit& orb) {
    return dot(m.e1(), orbit_average(m, orb));
}

Vector orbit_state_at_d(const ConverterModel& m, double d) {
    check_d(m, d);
    const auto s1 = expm_pair(m.A1(), d);
    const auto s2 = expm_pair(m.A2(), m.period() - d);
    const Vector b1u = m.B1() * m.u();
    const Vector b2u = m.B2() * m.u();
    const Vector rhs = s1.E * (s2.Psi * b2u) + s1.Psi * b1u;
    return orbit_lu(s1.E, s2.E).solve(rhs);
}

Vector buck_orbit_state_at_d(const ConverterModel& m, double d) {
    if (!m.has_buck_form())
        throw Error(ErrorKind::UnsupportedScheme, "buck orbit form needs A1 = A2, B21 = 0, B12 = B22");
    check_d(m, d);
    const std::size_t n = m.dim();
    const Matrix id = Matrix::identity(n);
    const LuDecomposition a_lu(m.A1());
    if (a_lu.singular()) throw Error(ErrorKind::Singular, "buck orbit form needs invertible A1");
    const Matrix ed = expm(m.A1() * d);
    const Matrix eT = expm(m.A1() * m.period());
    // (I - e^{AT})^{-1} A^{-1} (e^{Ad} - I) B11 vs - A^{-1} B12 vr
    const Vector w = (ed - id) * m.B11();
    const Vector a_inv_w = a_lu.solve(w);
    const Vector first = orbit_lu(eT, id).solve(a_inv_w);
    const Vector second = a_lu.solve(m.B12());
    return m.vs() * first - m.vr() * second;
}

Matrix boost_orbit_matrix(const ConverterModel& m, double d) {
    if (!m.has_boost_form())
        throw Error(ErrorKind::UnsupportedScheme, "boost orbit form needs B1 = B2");
    check_d(m, d);
    const auto s1 = expm_pair(m.A1(), d);
    const auto s2 = expm_pair(m.A2(), m.period() - d);
    return orbit_lu(s1.E, s2.E).solve(s1.E * s2.Psi + s1.Psi);
}

Vector boost_orbit_state_at_d(const ConverterModel& m, double d) {
    return boost_orbit_matrix(m, d) * (m.B1() * m.u());
}

double residual(const ConverterModel& m, double d) {
    const Vector x = orbit_state_at_d(m, d);
    return dot(m.crow(), x) + dot(m.drow(), m.u()) - m.ramp_within_period(d);
}

double residual_scale(const ConverterModel& m, double y0) {
    return std::max({std::abs(y0), m.ramp().amplitude, 1.0});
}

PeriodicOrbit make_orbit(const ConverterModel& m, double d) {
    PeriodicOrbit orb;
    orb.d = d;
    orb.D = d / m.period();
    orb.x0_d = orbit_state_at_d(m, d);
    const auto s2 = expm_pair(m.A2(), m.period() - d);
    orb.x0_0 = s2.E * orb.x0_d + s2.Psi * (m.B2() * m.u());
    orb.xdot_minus = m.A1() * orb.x0_d + m.B1() * m.u();
    orb.xdot_plus = m.A2() * orb.x0_d + m.B2() * m.u();
    orb.y0_d = dot(m.crow(), orb.x0_d) + dot(m.drow(), m.u());
    orb.residual = orb.y0_d - m.ramp_within_period(d);
    return orb;
}

std::vector<PeriodicOrbit> periodic_solutions(const ConverterModel& m, const PeriodicSolveOptions& opts) {
    const double T = m.period();
    const double lo = opts.edge_fraction * T;
    const double hi = (1.0 - opts.edge_fraction) * T;
    const auto roots =
        bracketed_roots([&](double d) { return residual(m, d); }, lo, hi, opts.n_grid, opts.tol_fraction * T);
    std::vector<PeriodicOrbit> out;
    out.reserve(roots.size());
    for (double d : roots) out.push_back(make_orbit(m, d));
    return out;
}

double buck_steadystate_snb_residual(const ConverterModel& m, double d) {
    if (!m.has_buck_form())
        throw Error(ErrorKind::UnsupportedScheme, "steady-state SNB residual needs a buck-form model");
    check_d(m, d);
    const double T = m.period();
    const std::size_t n = m.dim();
    const Matrix id = Matrix::identity(n);
    const Matrix eT = expm(m.A1() * T);
    const Vector v = expm(m.A1() * d) * m.B11();
    return T * dot(m.crow(), orbit_lu(eT, id).solve(v)) * m.vs() - m.ramp().amplitude;
}

std::vector<SaturatedSolution> saturated_solutions(const ConverterModel& m) {
    std::vector<SaturatedSolution> out;
    const double h_lo = m.ramp().offset;
    const double h_hi = m.ramp().offset + m.ramp().amplitude;
    for (bool on : {true, false}) {
        const Matrix& a = on ? m.A1() : m.A2();
        const Matrix& b = on ? m.B1() : m.B2();
        const LuDecomposition lu(a);
        if (lu.singular()) continue;
        SaturatedSolution s;
        s.always_on = on;
        s.x = -1.0 * lu.solve(b * m.u());
        s.y = dot(m.crow(), s.x) + dot(m.drow(), m.u());
        const bool consistent = on ? s.y >= h_hi : s.y <= h_lo;
        if (!consistent) continue;
        s.multipliers = eigenvalues(expm(a * m.period()));
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace pwmsnb
