#include "pwmsnb/average.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pwmsnb {

namespace {

LuDecomposition averaged_lu(const Matrix& a, double D) {
    LuDecomposition lu(a);
    if (lu.singular()) {
        std::ostringstream os;
        os << "averaged matrix D A1 + (1-D) A2 is singular at D = " << D;
        throw Error(ErrorKind::DegenerateOrbit, os.str());
    }
    return lu;
}

Vector modulation_column(const ConverterModel& m, const Vector& X) {
    return (m.A1() - m.A2()) * X + (m.B1() - m.B2()) * m.u();
}

// Relative to the size of the terms, since the residual cancels near its roots.
void cross_check(double general, double special, double term_scale, const char* form, double D) {
    const double scale = std::max({std::abs(general), std::abs(special), term_scale, 1e-300});
    if (std::abs(general - special) > 1e-9 * scale) {
        std::ostringstream os;
        os.precision(14);
        os << "averaged residual at D = " << D << ": general " << general << " vs " << form << " " << special;
        throw Error(ErrorKind::ModelInvariant, os.str());
    }
}

}  // namespace

Vector avg_equilibrium(const ConverterModel& m, double D) {
    const Matrix a = D * m.A1() + (1.0 - D) * m.A2();
    const Matrix b = D * m.B1() + (1.0 - D) * m.B2();
    return -1.0 * averaged_lu(a, D).solve(b * m.u());
}

AveragedModel averaged_model(const ConverterModel& m, double D) {
    AveragedModel am;
    am.Aavg = D * m.A1() + (1.0 - D) * m.A2();
    am.Bavg = D * m.B1() + (1.0 - D) * m.B2();
    am.X = avg_equilibrium(m, D);
    if (m.ramp().amplitude > 0.0) am.PhiA = avg_closed_loop(m, D);
    return am;
}

Vector boost_avg_equilibrium(double vs, double R, double r, double D) {
    const double w = 1.0 - D;
    const double k = vs / (r / R + w * w);
    return {k / R, k * w};
}

Matrix avg_closed_loop(const ConverterModel& m, double D) {
    const double Vh = m.ramp().amplitude;
    if (!(Vh > 0.0))
        throw Error(ErrorKind::UnsupportedParameter,
                    "averaged closed loop needs Vh > 0 (infinite modulator gain otherwise)");
    const Matrix a = D * m.A1() + (1.0 - D) * m.A2();
    const Vector X = avg_equilibrium(m, D);
    return a + (1.0 / Vh) * outer(modulation_column(m, X), m.crow());
}

double avg_snb_residual(const ConverterModel& m, double D) {
    const Matrix a = D * m.A1() + (1.0 - D) * m.A2();
    const LuDecomposition lu = averaged_lu(a, D);
    const Vector X = -1.0 * lu.solve((D * m.B1() + (1.0 - D) * m.B2()) * m.u());
    const double Vh = m.ramp().amplitude;
    const double general = Vh + dot(m.crow(), lu.solve(modulation_column(m, X)));
    const double terms = std::max(std::abs(Vh), std::abs(general - Vh));

    if (m.has_buck_form()) {
        cross_check(general, Vh + dot(m.crow(), lu.solve(m.B11())) * m.vs(), terms, "buck form", D);
    } else if (m.has_boost_form()) {
        cross_check(general, Vh + dot(m.crow(), lu.solve((m.A1() - m.A2()) * X)), terms, "boost form", D);
        if (m.power_stage() && m.control() && m.topology() == Topology::Boost) {
            const PowerStage& ps = *m.power_stage();
            const double rho = ps.r / ps.R;
            const double w = 1.0 - D;
            const double q = rho + w * w;
            const Scheme& s = m.control()->scheme;
            if (const auto* v = std::get_if<Vmc>(&s); v && Vh > 0.0) {
                const double poly = boost_vmc_avg_polynomial(rho, v->kp / Vh, ps.vs, D);
                cross_check(general, Vh * poly / (q * q), terms, "vmc quartic", D);
            } else if (const auto* ml = std::get_if<MultiLoop>(&s); ml && ps.r == 0.0) {
                const double cond = boost_multiloop_avg_condition(Vh, ps.vs, ml->ki, ml->kv, ps.R, D);
                cross_check(general, cond * ps.vs / (w * w), terms, "multiloop condition", D);
            }
        }
    }
    return general;
}

double boost_vmc_avg_polynomial(double rho, double kappa, double vs, double D) {
    const double w2 = (1.0 - D) * (1.0 - D);
    return (rho + w2) * (rho + w2) + kappa * vs * (w2 - rho);
}

double boost_multiloop_avg_condition(double Vh, double vs, double ki, double kv, double R, double D) {
    const double w = 1.0 - D;
    return (Vh / vs) * w * w + 2.0 * ki / (R * w) + kv;
}

DutyPrediction boost_multiloop_avg_duty(double Vh, double vs, double ki, double kv, double R) {
    // Multiply by w = 1 - D: (Vh/vs) w^3 + kv w + 2 ki / R = 0 on w in (0, 1).
    const auto cubic = [&](double w) { return (Vh / vs) * w * w * w + kv * w + 2.0 * ki / R; };
    const auto ws = bracketed_roots(cubic, 1e-9, 1.0 - 1e-9, 2000, 1e-14);
    DutyPrediction p;
    for (double w : ws) p.duties.push_back(1.0 - w);
    std::sort(p.duties.begin(), p.duties.end());
    if (p.duties.empty()) {
        p.status = DutyStatus::NoSnb;
        p.reason = (ki > 0.0 && kv > 0.0) ? "ki > 0 and kv > 0: averaged condition cannot be met for D < 1"
                                          : "averaged condition has no root for D in (0, 1)";
    } else {
        p.status = DutyStatus::Found;
    }
    return p;
}

PlotSeries avg_plot(const ConverterModel& m, const GridSpec& grid) {
    PlotSeries p;
    p.kind = PlotSeries::Kind::AvgResidual;
    p.grid = grid.points();
    p.reference_level = 0.0;
    p.values.resize(p.grid.size());
    p.valid.resize(p.grid.size());
    for (std::size_t k = 0; k < p.grid.size(); ++k) {
        try {
            p.values[k] = avg_snb_residual(m, p.grid[k]);
            p.valid[k] = true;
        } catch (const Error&) {
            p.values[k] = std::numeric_limits<double>::quiet_NaN();
            p.valid[k] = false;
        }
    }
    return p;
}

}  // namespace pwmsnb
