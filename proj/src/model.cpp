#include "pwmsnb/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace pwmsnb {

const char* to_string(Topology t) {
    switch (t) {
        case Topology::Buck: return "buck";
        case Topology::Boost: return "boost";
        case Topology::Generic: return "generic";
    }
    return "unknown";
}

const char* to_string(SchemeKind k) {
    switch (k) {
        case SchemeKind::Vmc: return "vmc";
        case SchemeKind::CmcOpen: return "cmc_open";
        case SchemeKind::CmcClosed: return "cmc_closed";
        case SchemeKind::MultiLoop: return "multiloop";
        case SchemeKind::Custom: return "custom";
    }
    return "unknown";
}

SchemeKind kind_of(const Scheme& s) {
    struct Visitor {
        SchemeKind operator()(const Vmc&) const { return SchemeKind::Vmc; }
        SchemeKind operator()(const CmcOpen&) const { return SchemeKind::CmcOpen; }
        SchemeKind operator()(const CmcClosed&) const { return SchemeKind::CmcClosed; }
        SchemeKind operator()(const MultiLoop&) const { return SchemeKind::MultiLoop; }
    };
    return std::visit(Visitor{}, s);
}

double PowerStage::omega_s() const noexcept { return 2.0 * std::numbers::pi * fs; }

namespace {

void require(bool ok, const char* field, const char* rule) {
    if (!ok) {
        std::ostringstream os;
        os << "invalid parameter " << field << ": must be " << rule;
        throw Error(ErrorKind::InvalidParameter, os.str());
    }
}

bool finite(double v) { return std::isfinite(v); }

void validate_ramp(const RampSpec& ramp) {
    require(finite(ramp.offset), "ramp.offset", "finite");
    require(finite(ramp.amplitude) && ramp.amplitude >= 0.0, "ramp.amplitude", ">= 0");
}

void validate_control(const ControlScheme& ctl) {
    require(finite(ctl.vr), "control.vr", "finite");
    std::visit(
        [](const auto& s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Vmc> || std::is_same_v<S, CmcClosed>) {
                require(finite(s.kp), "control.kp", "finite");
            } else if constexpr (std::is_same_v<S, MultiLoop>) {
                require(finite(s.ki), "control.ki", "finite");
                require(finite(s.kv), "control.kv", "finite");
            }
        },
        ctl.scheme);
}

// C and D rows of y = C x + D u for the state (i_L, v_C).
void control_rows(const Scheme& scheme, Vector& crow, Vector& drow) {
    struct Visitor {
        Vector& c;
        Vector& d;
        void operator()(const Vmc& s) const { c = {0.0, -s.kp}, d = {0.0, s.kp}; }
        void operator()(const CmcOpen&) const { c = {-1.0, 0.0}, d = {0.0, 1.0}; }
        void operator()(const CmcClosed& s) const { c = {-1.0, -s.kp}, d = {0.0, s.kp}; }
        void operator()(const MultiLoop& s) const { c = {-s.ki, -s.kv}, d = {0.0, 1.0}; }
    };
    std::visit(Visitor{crow, drow}, scheme);
}

}  // namespace

void PowerStage::validate() const {
    require(finite(vs) && vs > 0.0, "power.vs", "> 0");
    require(finite(L) && L > 0.0, "power.L", "> 0");
    require(finite(Cap) && Cap > 0.0, "power.C", "> 0");
    require(finite(R) && R > 0.0, "power.R", "> 0");
    require(finite(r) && r >= 0.0, "power.r", ">= 0");
    require(finite(Rc) && Rc >= 0.0, "power.Rc", ">= 0");
    require(finite(fs) && fs > 0.0, "power.fs", "> 0");
}

void ConverterModel::check_shapes() const {
    const std::size_t n = A1_.rows();
    auto fail = [](const char* what) { throw Error(ErrorKind::Dimension, std::string("model: ") + what); };
    if (n == 0 || n > 8) fail("state dimension must be in 1..8");
    if (!A1_.is_square() || A2_.rows() != n || A2_.cols() != n) fail("A1, A2 must be NxN");
    if (B1_.rows() != n || B1_.cols() != 2 || B2_.rows() != n || B2_.cols() != 2) fail("B1, B2 must be Nx2");
    if (crow_.size() != n || e1_.size() != n || e2_.size() != n) fail("C, E1, E2 must be 1xN");
    if (drow_.size() != 2 || u_.size() != 2) fail("D and u must have 2 entries");
    if (!(T_ > 0.0) || !std::isfinite(T_)) throw Error(ErrorKind::InvalidParameter, "model: period must be > 0");
    if (!A1_.all_finite() || !A2_.all_finite() || !B1_.all_finite() || !B2_.all_finite())
        throw Error(ErrorKind::InvalidParameter, "model: non-finite matrix entry");
    validate_ramp(ramp_);
}

ConverterModel ConverterModel::from_matrices(Matrix A1, Matrix A2, Matrix B1, Matrix B2, Vector crow,
                                             Vector drow, Vector e1, Vector e2, RampSpec ramp,
                                             double period, Vector u) {
    ConverterModel m;
    m.A1_ = std::move(A1);
    m.A2_ = std::move(A2);
    m.B1_ = std::move(B1);
    m.B2_ = std::move(B2);
    m.crow_ = std::move(crow);
    m.drow_ = std::move(drow);
    m.e1_ = std::move(e1);
    m.e2_ = std::move(e2);
    m.ramp_ = ramp;
    m.T_ = period;
    m.u_ = std::move(u);
    m.check_shapes();
    return m;
}

bool ConverterModel::has_buck_form() const {
    return A1_ == A2_ && norm_inf(B21()) == 0.0 && B12() == B22();
}

bool ConverterModel::has_boost_form() const { return B1_ == B2_; }

ConverterModel build_buck(const PowerStage& ps, const ControlScheme& ctl, const RampSpec& ramp) {
    ps.validate();
    validate_control(ctl);
    validate_ramp(ramp);
    if (std::holds_alternative<CmcClosed>(ctl.scheme))
        throw Error(ErrorKind::UnsupportedScheme,
                    "buck: cmc_closed has no state-space model; use vmc, cmc_open or multiloop");
    if (ps.r != 0.0)
        throw Error(ErrorKind::UnsupportedParameter, "buck: inductor resistance r must be 0");

    ConverterModel m;
    const double L = ps.L, C = ps.Cap, R = ps.R;
    m.A1_ = Matrix{{0.0, -1.0 / L}, {1.0 / C, -1.0 / (R * C)}};
    m.A2_ = m.A1_;
    m.B1_ = Matrix{{1.0 / L, 0.0}, {0.0, 0.0}};
    m.B2_ = Matrix(2, 2);
    control_rows(ctl.scheme, m.crow_, m.drow_);
    m.e1_ = {0.0, 1.0};
    m.e2_ = {0.0, 1.0};
    m.ramp_ = ramp;
    m.T_ = ps.period();
    m.u_ = {ps.vs, ctl.vr};
    m.topology_ = Topology::Buck;
    m.scheme_ = kind_of(ctl.scheme);
    m.power_ = ps;
    m.control_ = ctl;
    m.check_shapes();
    return m;
}

ConverterModel build_boost(const PowerStage& ps, const ControlScheme& ctl, const RampSpec& ramp) {
    ps.validate();
    validate_control(ctl);
    validate_ramp(ramp);

    ConverterModel m;
    const double L = ps.L, C = ps.Cap, R = ps.R, r = ps.r;
    m.A1_ = Matrix{{-r / L, 0.0}, {0.0, -1.0 / (R * C)}};
    m.A2_ = Matrix{{-r / L, -1.0 / L}, {1.0 / C, -1.0 / (R * C)}};
    m.B1_ = Matrix{{1.0 / L, 0.0}, {0.0, 0.0}};
    m.B2_ = m.B1_;
    control_rows(ctl.scheme, m.crow_, m.drow_);
    m.e1_ = {0.0, 1.0};
    m.e2_ = {0.0, 1.0};
    m.ramp_ = ramp;
    m.T_ = ps.period();
    m.u_ = {ps.vs, ctl.vr};
    m.topology_ = Topology::Boost;
    m.scheme_ = kind_of(ctl.scheme);
    m.power_ = ps;
    m.control_ = ctl;
    m.check_shapes();
    return m;
}

ConverterModel build(Topology topology, const PowerStage& ps, const ControlScheme& ctl,
                     const RampSpec& ramp) {
    switch (topology) {
        case Topology::Buck: return build_buck(ps, ctl, ramp);
        case Topology::Boost: return build_boost(ps, ctl, ramp);
        case Topology::Generic: break;
    }
    throw Error(ErrorKind::UnsupportedScheme, "build: generic topology has no builder");
}

RampValue ramp_at(const ConverterModel& m, double t) {
    const double T = m.period();
    double phase = std::fmod(t, T);
    if (phase < 0.0) phase += T;
    return {m.ramp().offset + m.hdot() * phase, m.hdot()};
}

namespace {

double* scheme_gain(Scheme& s, std::string_view name) {
    if (auto* v = std::get_if<Vmc>(&s); v && name == "kp") return &v->kp;
    if (auto* c = std::get_if<CmcClosed>(&s); c && name == "kp") return &c->kp;
    if (auto* ml = std::get_if<MultiLoop>(&s)) {
        if (name == "ki") return &ml->ki;
        if (name == "kv") return &ml->kv;
    }
    return nullptr;
}

[[noreturn]] void unknown_parameter(std::string_view name, const ConverterModel& m) {
    std::ostringstream os;
    os << "unknown parameter '" << name << "' for " << to_string(m.topology()) << "/"
       << to_string(m.scheme_kind()) << " model";
    throw Error(ErrorKind::UnsupportedParameter, os.str());
}

}  // namespace

double parameter_value(const ConverterModel& m, std::string_view name) {
    if (name == "vs") return m.vs();
    if (name == "vr" || name == "ic") return m.vr();
    if (name == "Vh") return m.ramp().amplitude;
    if (name == "h0") return m.ramp().offset;
    if (!m.power_stage() || !m.control()) unknown_parameter(name, m);
    const PowerStage& ps = *m.power_stage();
    if (name == "L") return ps.L;
    if (name == "C") return ps.Cap;
    if (name == "R") return ps.R;
    if (name == "r") return ps.r;
    if (name == "Rc") return ps.Rc;
    if (name == "fs") return ps.fs;
    Scheme s = m.control()->scheme;
    if (double* g = scheme_gain(s, name)) return *g;
    unknown_parameter(name, m);
}

ConverterModel with_parameter(const ConverterModel& m, std::string_view name, double value) {
    if (!m.power_stage() || !m.control()) {
        Vector u = m.u();
        RampSpec ramp = m.ramp();
        if (name == "vs") u[0] = value;
        else if (name == "vr" || name == "ic") u[1] = value;
        else if (name == "Vh") ramp.amplitude = value;
        else if (name == "h0") ramp.offset = value;
        else unknown_parameter(name, m);
        return ConverterModel::from_matrices(m.A1(), m.A2(), m.B1(), m.B2(), m.crow(), m.drow(), m.e1(),
                                             m.e2(), ramp, m.period(), u);
    }
    PowerStage ps = *m.power_stage();
    ControlScheme ctl = *m.control();
    RampSpec ramp = m.ramp();
    if (name == "vs") ps.vs = value;
    else if (name == "vr" || name == "ic") ctl.vr = value;
    else if (name == "Vh") ramp.amplitude = value;
    else if (name == "h0") ramp.offset = value;
    else if (name == "L") ps.L = value;
    else if (name == "C") ps.Cap = value;
    else if (name == "R") ps.R = value;
    else if (name == "r") ps.r = value;
    else if (name == "Rc") ps.Rc = value;
    else if (name == "fs") ps.fs = value;
    else if (double* g = scheme_gain(ctl.scheme, name)) *g = value;
    else unknown_parameter(name, m);
    return build(m.topology(), ps, ctl, ramp);
}

}  // namespace pwmsnb
