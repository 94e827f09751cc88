#include "pwmsnb/harmonic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pwmsnb {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> c(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
    return c;
}

std::vector<double> poly_add(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> c(std::max(a.size(), b.size()), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) c[i] += a[i];
    for (std::size_t i = 0; i < b.size(); ++i) c[i] += b[i];
    return c;
}

Complex horner(const std::vector<double>& p, Complex s) {
    Complex acc(0.0, 0.0);
    for (std::size_t k = p.size(); k-- > 0;) acc = acc * s + p[k];
    return acc;
}

}  // namespace

TransferFunction::TransferFunction(std::vector<double> numerator, std::vector<double> denominator)
    : num_(std::move(numerator)), den_(std::move(denominator)) {
    if (num_.empty()) num_ = {0.0};
    if (den_.empty() || std::all_of(den_.begin(), den_.end(), [](double c) { return c == 0.0; }))
        throw Error(ErrorKind::InvalidParameter, "transfer function: denominator is identically zero");
}

Complex TransferFunction::operator()(Complex s) const { return horner(num_, s) / horner(den_, s); }

double TransferFunction::dc_gain() const {
    if (den_[0] == 0.0) throw Error(ErrorKind::Singular, "transfer function has a pole at s = 0");
    return num_[0] / den_[0];
}

TransferFunction operator*(const TransferFunction& a, const TransferFunction& b) {
    return TransferFunction(poly_mul(a.num_, b.num_), poly_mul(a.den_, b.den_));
}

TransferFunction operator+(const TransferFunction& a, const TransferFunction& b) {
    if (a.den_ == b.den_) return TransferFunction(poly_add(a.num_, b.num_), a.den_);
    return TransferFunction(poly_add(poly_mul(a.num_, b.den_), poly_mul(b.num_, a.den_)),
                            poly_mul(a.den_, b.den_));
}

TransferFunction operator*(double k, const TransferFunction& a) {
    std::vector<double> num = a.num_;
    for (double& c : num) c *= k;
    return TransferFunction(std::move(num), a.den_);
}

Complex vd_fourier(double vs, double D, int n) {
    if (n == 0) return Complex(vs * D, 0.0);
    const double nn = static_cast<double>(n);
    const Complex j(0.0, 1.0);
    return vs / (j * two_pi * nn) * (1.0 - std::exp(-j * two_pi * nn * D));
}

TransferFunction buck_tf(const PowerStage& ps, BuckTf which) {
    const double L = ps.L, C = ps.Cap, R = ps.R, Rc = ps.Rc;
    std::vector<double> den = {1.0, L / R + Rc * C, L * C * (1.0 + Rc / R)};
    if (which == BuckTf::Gv) return TransferFunction({1.0, Rc * C}, den);
    return TransferFunction({1.0 / R, (1.0 + Rc / R) * C}, den);
}

TransferFunction hb_gain(const PowerStage& ps, const ControlScheme& ctl,
                         const std::optional<TransferFunction>& Gc) {
    const TransferFunction gv = buck_tf(ps, BuckTf::Gv);
    const TransferFunction gi = buck_tf(ps, BuckTf::Gi);
    if (const auto* v = std::get_if<Vmc>(&ctl.scheme)) return Gc.value_or(TransferFunction::constant(v->kp)) * gv;
    if (std::holds_alternative<CmcOpen>(ctl.scheme)) return gi;
    if (const auto* c = std::get_if<CmcClosed>(&ctl.scheme))
        return Gc.value_or(TransferFunction::constant(c->kp)) * gv + gi;
    const auto& ml = std::get<MultiLoop>(ctl.scheme);
    return ml.ki * gi + ml.kv * gv;
}

double hb_sum(const TransferFunction& G, double D, double omega_s, const HarmonicConfig& cfg) {
    const Complex j(0.0, 1.0);
    const double g0 = G.dc_gain();
    double tail = 0.0;
    for (int n = 1; n <= cfg.n_harmonics; ++n) {
        const double nn = static_cast<double>(n);
        const Complex gn = G(j * nn * omega_s);
        tail += std::real(std::exp(j * two_pi * nn * D) * gn);
        // Stop on the envelope |G(jn ws)|; single terms can vanish by phase.
        if (std::abs(gn) < cfg.tail_tol * std::abs(g0 + 2.0 * tail)) break;
    }
    return g0 + 2.0 * tail;
}

Complex hb_sum_two_sided(const TransferFunction& G, double D, double omega_s, const HarmonicConfig& cfg) {
    const Complex j(0.0, 1.0);
    Complex acc = G(Complex(0.0, 0.0));
    for (int n = 1; n <= cfg.n_harmonics; ++n) {
        const double nn = static_cast<double>(n);
        acc += std::exp(j * two_pi * nn * D) * G(j * nn * omega_s);
        acc += std::exp(-j * two_pi * nn * D) * G(-j * nn * omega_s);
    }
    return acc;
}

double theorem2_residual(const TransferFunction& G, double vs, double Vh, double D, double omega_s,
                         const HarmonicConfig& cfg) {
    return vs * hb_sum(G, D, omega_s, cfg) + Vh;
}

double hb_critical_vs(const TransferFunction& G, double Vh, double D, double omega_s, const HarmonicConfig& cfg) {
    const double s = hb_sum(G, D, omega_s, cfg);
    if (s == 0.0) throw Error(ErrorKind::NoCriticalValue, "harmonic sum vanishes: no critical vs");
    return -Vh / s;
}

PlotSeries h_plot(const TransferFunction& G, const GridSpec& grid, double omega_s, double vs, double Vh,
                  const HarmonicConfig& cfg) {
    const Complex j(0.0, 1.0);
    PlotSeries p;
    p.kind = PlotSeries::Kind::H;
    p.grid = grid.points();
    p.reference_level = -(Vh + vs * G.dc_gain()) / (2.0 * vs);
    const Complex g1 = G(j * omega_s);
    for (double D : p.grid) {
        Complex h(0.0, 0.0);
        for (int n = 1; n <= cfg.n_harmonics; ++n) {
            const double nn = static_cast<double>(n);
            const Complex gn = G(j * nn * omega_s);
            h += std::exp(j * two_pi * nn * D) * gn;
            if (std::abs(gn) < cfg.tail_tol * std::abs(h)) break;
        }
        p.values.push_back(h.real());
        p.imag.push_back(h.imag());
        p.companion.push_back(std::real(std::exp(j * two_pi * D) * g1));
        p.valid.push_back(true);
    }
    return p;
}

PlotSeries hb_residual_plot(const TransferFunction& G, const GridSpec& grid, double omega_s, double vs,
                            double Vh, const HarmonicConfig& cfg) {
    PlotSeries p;
    p.kind = PlotSeries::Kind::HbResidual;
    p.grid = grid.points();
    p.reference_level = 0.0;
    for (double D : p.grid) {
        p.values.push_back(theorem2_residual(G, vs, Vh, D, omega_s, cfg));
        p.valid.push_back(true);
    }
    return p;
}

LPlots l_plots(const ConverterModel& m, const GridSpec& grid, const std::optional<TransferFunction>& Gc,
               const HarmonicConfig& cfg) {
    if (m.topology() != Topology::Buck || !m.power_stage() || !m.control())
        throw Error(ErrorKind::UnsupportedScheme, "loop-gain plots are derived for the buck converter only");
    const PowerStage& ps = *m.power_stage();
    const TransferFunction G = hb_gain(ps, *m.control(), Gc);
    const double vs = m.vs();
    const double Vh = m.ramp().amplitude;

    LPlots out;
    out.L2.kind = PlotSeries::Kind::L2;
    out.L2.grid = grid.points();
    out.L2.reference_level = -Vh / vs;
    for (double D : out.L2.grid) {
        out.L2.values.push_back(hb_sum(G, D, ps.omega_s(), cfg));
        out.L2.valid.push_back(true);
    }
    if (Vh > 0.0) {
        PlotSeries l1 = out.L2;
        l1.kind = PlotSeries::Kind::L1;
        l1.reference_level = -1.0;
        for (double& v : l1.values) v *= vs / Vh;
        out.L1 = std::move(l1);
    }
    return out;
}

double l2_matrix_form(const ConverterModel& m, double D) {
    if (!m.has_buck_form()) throw Error(ErrorKind::UnsupportedScheme, "L2 matrix form needs a buck-form model");
    return -m.period() * s_value_buck(m, D) / m.vs();
}

}  // namespace pwmsnb
