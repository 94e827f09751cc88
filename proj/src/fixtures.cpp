#include "pwmsnb/fixtures.hpp"

#include "pwmsnb/steady.hpp"
#include "pwmsnb/sweep.hpp"

#include <cmath>

namespace pwmsnb {

namespace {

ConfigDocument doc(Topology t, PowerStage ps, Scheme s, double vr, double Vh) {
    ConfigDocument d;
    d.topology = t;
    d.power = ps;
    d.control = {s, vr};
    d.ramp = {0.0, Vh};
    return d;
}

PowerStage stage(double vs, double L, double C, double R, double r, double fs) {
    PowerStage ps;
    ps.vs = vs;
    ps.L = L;
    ps.Cap = C;
    ps.R = R;
    ps.r = r;
    ps.fs = fs;
    return ps;
}

std::vector<Fixture> make_fixtures() {
    std::vector<Fixture> out;

    Fixture e1;
    e1.id = "e1";
    e1.description = "buck, current mode, voltage loop open, no ramp; parameter i_c";
    e1.doc = doc(Topology::Buck, stage(5.0, 5e-6, 40e-6, 5.0, 0.0, 200e3), CmcOpen{}, 1.21, 0.0);
    e1.param = "ic";
    e1.lo = 1.2;
    e1.hi = 1.3;
    e1.param_star = 1.225;
    e1.param_tol = 0.002;
    e1.duty_star = 0.7;
    e1.duty_tol = 0.002;
    e1.vo_star = 3.5;
    e1.roots = {{1.21, {0.62, 0.78}, 0.01}, {1.223, {0.67, 0.73}, 0.01}, {1.3, {}, 0.0}};
    e1.closed_form_at = 1.21;
    e1.closed_form_duty = 0.7;
    e1.closed_form_tol = 1e-12;
    e1.note =
        "CCM roots only: below i_c = 1.2 the lower orbit enters discontinuous conduction, which the "
        "two-stage model does not represent";
    out.push_back(e1);

    Fixture e2;
    e2.id = "e2";
    e2.description = "buck, current and voltage feedback (multi-loop); parameter v_s";
    e2.doc = doc(Topology::Buck, stage(20.0, 20e-3, 47e-6, 22.0, 0.0, 2500.0), MultiLoop{2.1435, -0.1383}, 0.2152,
                 1.0);
    e2.param = "vs";
    e2.lo = 19.5;
    e2.hi = 21.0;
    e2.param_star = 20.0;
    e2.param_tol = 0.1;
    e2.duty_star = 0.7;
    e2.duty_tol = 0.005;
    e2.closed_form_at = 20.0;
    e2.closed_form_duty = 0.71;
    e2.closed_form_tol = 0.005;
    out.push_back(e2);

    Fixture e3;
    e3.id = "e3";
    e3.description = "boost, voltage mode; parameter v_r";
    e3.doc = doc(Topology::Boost, stage(3.0, 1e-6, 100e-6, 2.0, 0.1, 600e3), Vmc{2.0}, 7.0, 1.0);
    e3.param = "vr";
    e3.lo = 6.5;
    e3.hi = 8.0;
    e3.param_star = 7.1;
    e3.param_tol = 0.1;
    e3.duty_star = 0.78;
    e3.duty_tol = 0.01;
    e3.roots = {{7.0, {0.74, 0.81}, 0.01}};
    e3.closed_form_at = 7.0;
    e3.closed_form_duty = 0.78;
    e3.closed_form_tol = 0.001;
    out.push_back(e3);

    Fixture e4;
    e4.id = "e4";
    e4.description = "boost, current mode with proportional voltage loop, no ramp; parameter v_r";
    e4.doc = doc(Topology::Boost, stage(3.0, 1e-6, 100e-6, 2.0, 0.1, 600e3), CmcClosed{2.0}, 17.0, 0.0);
    e4.param = "vr";
    e4.lo = 16.0;
    e4.hi = 19.0;
    e4.param_star = 17.71;
    e4.param_tol = 0.2;
    e4.duty_star = 0.91;
    e4.duty_tol = 0.005;
    out.push_back(e4);

    Fixture e5;
    e5.id = "e5";
    e5.description = "boost, current and voltage feedback (multi-loop); parameter v_r";
    e5.doc = doc(Topology::Boost, stage(4.0, 5.24e-6, 0.2e-6, 16.0, 0.0, 500e3), MultiLoop{-0.1, 0.01}, 0.48, 1.0);
    e5.param = "vr";
    e5.lo = 0.48;
    e5.hi = 0.52;
    e5.param_star = 0.496;
    e5.param_tol = 0.002;
    e5.duty_star = 0.65;
    e5.duty_tol = 0.005;
    e5.closed_form_at = 0.48;
    e5.closed_form_duty = 0.65;
    e5.closed_form_tol = 0.05;
    out.push_back(e5);

    return out;
}

FixtureCheck check(std::string name, double value, double expected, double tol) {
    return {std::move(name), value, expected, tol, std::abs(value - expected) <= tol};
}

std::string fmt(double v) { return format_number(v); }

}  // namespace

const std::vector<Fixture>& builtin_fixtures() {
    static const std::vector<Fixture> all = make_fixtures();
    return all;
}

const Fixture& builtin_fixture(std::string_view id) {
    for (const Fixture& f : builtin_fixtures())
        if (f.id == id) return f;
    throw Error(ErrorKind::InvalidParameter, "unknown fixture \"" + std::string(id) + "\" (expected e1..e5)");
}

std::vector<FixtureCheck> run_fixture(const Fixture& f) {
    std::vector<FixtureCheck> out;
    const ConverterModel m = to_model(f.doc);

    const SnbPoint snb = locate_snb(m, f.param, f.lo, f.hi);
    out.push_back(check(f.param + "*", snb.param_star, f.param_star, f.param_tol));
    out.push_back(check("D*", snb.D_star, f.duty_star, f.duty_tol));
    out.push_back(check("snb residual", snb.residual_norm, 0.0, 1e-8));
    if (f.vo_star) {
        const ConverterModel ms = with_parameter(m, f.param, snb.param_star);
        const double vo = average_output(ms, make_orbit(ms, snb.D_star * ms.period()));
        out.push_back(check("v_o at SNB", vo, *f.vo_star, 0.01 * std::abs(*f.vo_star)));
    }

    for (const RootExpectation& re : f.roots) {
        const auto orbits = periodic_solutions(with_parameter(m, f.param, re.param));
        const std::string at = f.param + "=" + fmt(re.param);
        out.push_back(check("root count at " + at, static_cast<double>(orbits.size()),
                            static_cast<double>(re.duties.size()), 0.0));
        if (orbits.size() != re.duties.size()) continue;
        for (std::size_t i = 0; i < orbits.size(); ++i)
            out.push_back(check("root " + std::to_string(i + 1) + " at " + at, orbits[i].D, re.duties[i], re.tol));
    }

    if (f.closed_form_at) {
        const DutyPrediction p = closed_form_snb_duty(with_parameter(m, f.param, *f.closed_form_at));
        if (!p.found()) {
            out.push_back({"closed-form duty", std::nan(""), f.closed_form_duty, f.closed_form_tol, false});
        } else {
            double best = p.duties.front();
            for (double d : p.duties)
                if (std::abs(d - f.closed_form_duty) < std::abs(best - f.closed_form_duty)) best = d;
            out.push_back(check("closed-form duty", best, f.closed_form_duty, f.closed_form_tol));
        }
    }
    return out;
}

}  // namespace pwmsnb
