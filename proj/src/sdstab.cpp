#include "pwmsnb/sdstab.hpp"

#include "pwmsnb/average.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pwmsnb {

const char* to_string(Classification c) {
    switch (c) {
        case Classification::Stable: return "stable";
        case Classification::SaddleNodeCritical: return "saddle_node";
        case Classification::PeriodDoublingCritical: return "period_doubling";
        case Classification::NeimarkCritical: return "neimark";
        case Classification::Unstable: return "unstable";
    }
    return "unknown";
}

namespace {

void check_duty(double D) {
    if (!(D > 0.0 && D < 1.0)) {
        std::ostringstream os;
        os << "duty ratio D = " << D << " outside (0, 1)";
        throw Error(ErrorKind::InvalidParameter, os.str());
    }
}

ConverterModel with_input(const ConverterModel& m, Vector u) {
    return ConverterModel::from_matrices(m.A1(), m.A2(), m.B1(), m.B2(), m.crow(), m.drow(), m.e1(), m.e2(),
                                         m.ramp(), m.period(), std::move(u));
}

struct SlopeTerms {
    Vector x;      // x0(d)
    Vector xm;     // slope before switching
    Vector xp;     // slope after switching
    Matrix e1d;    // e^{A1 d}
    Matrix e2r;    // e^{A2 (T - d)}
};

SlopeTerms slope_terms(const ConverterModel& m, double d) {
    SlopeTerms s;
    s.x = orbit_state_at_d(m, d);
    s.xm = m.A1() * s.x + m.B1() * m.u();
    s.xp = m.A2() * s.x + m.B2() * m.u();
    s.e1d = expm(m.A1() * d);
    s.e2r = expm(m.A2() * (m.period() - d));
    return s;
}

LuDecomposition nonsingular(const Matrix& a, const char* what) {
    LuDecomposition lu(a);
    if (lu.singular()) throw Error(ErrorKind::DegenerateOrbit, std::string(what) + " is singular");
    return lu;
}

double slope_scale(const ConverterModel& m, const SlopeTerms& s) {
    return std::max({std::abs(dot(m.crow(), s.xm)), std::abs(dot(m.crow(), s.xp)), std::abs(m.hdot()),
                     std::numeric_limits<double>::min()});
}

// Inverse of e^{A1 d} e^{A2 (T-d)}; the exponentials are inverted in closed form.
Matrix inverse_cycle(const ConverterModel& m, double d) {
    return expm(m.A2() * (-(m.period() - d))) * expm(m.A1() * (-d));
}

}  // namespace

Matrix jacobian(const ConverterModel& m, const PeriodicOrbit& orb) {
    const double T = m.period();
    const double ydot = dot(m.crow(), orb.xdot_minus);
    const double denom = ydot - m.hdot();
    const double scale = std::max({std::abs(ydot), std::abs(dot(m.crow(), orb.xdot_plus)), std::abs(m.hdot())});
    if (!(std::abs(denom) > 1e-12 * scale)) {
        std::ostringstream os;
        os << "grazing switching at D = " << orb.D << ": ydot(d-) - hdot = " << denom;
        throw Error(ErrorKind::Grazing, os.str());
    }
    const std::size_t n = m.dim();
    const Vector jump = orb.xdot_minus - orb.xdot_plus;
    const Matrix correction = Matrix::identity(n) - (1.0 / denom) * outer(jump, m.crow());
    return expm(m.A2() * (T - orb.d)) * correction * expm(m.A1() * orb.d);
}

Classification classify(const ComplexList& multipliers, double tol) {
    double max_mod = 0.0;
    for (const auto& l : multipliers) max_mod = std::max(max_mod, std::abs(l));
    for (const auto& l : multipliers)
        if (std::abs(l - Complex(1.0, 0.0)) <= tol) return Classification::SaddleNodeCritical;
    for (const auto& l : multipliers)
        if (std::abs(l + Complex(1.0, 0.0)) <= tol) return Classification::PeriodDoublingCritical;
    for (const auto& l : multipliers)
        if (l.imag() != 0.0 && std::abs(std::abs(l) - 1.0) <= tol) return Classification::NeimarkCritical;
    if (max_mod < 1.0 - tol) return Classification::Stable;
    if (max_mod > 1.0 + tol) return Classification::Unstable;
    return max_mod > 1.0 ? Classification::Unstable : Classification::Stable;
}

StabilityReport stability(const ConverterModel& m, const PeriodicOrbit& orb, double tol) {
    StabilityReport rep;
    rep.Phi = jacobian(m, orb);
    rep.multipliers = eigenvalues(rep.Phi);
    rep.classification = classify(rep.multipliers, tol);
    double max_mod = 0.0;
    for (const auto& l : rep.multipliers) max_mod = std::max(max_mod, std::abs(l));
    rep.margin = max_mod - 1.0;
    return rep;
}

double s_value_general(const ConverterModel& m, double D) {
    check_duty(D);
    const double d = D * m.period();
    const SlopeTerms s = slope_terms(m, d);
    const std::size_t n = m.dim();
    const Matrix lhs = Matrix::identity(n) - inverse_cycle(m, d);
    const Vector corr = nonsingular(lhs, "I - e^{-A2 (T-d)} e^{-A1 d}").solve(s.xm - s.xp);
    return dot(m.crow(), s.xm) - dot(m.crow(), corr);
}

double s_value_buck(const ConverterModel& m, double D) {
    if (!m.has_buck_form()) throw Error(ErrorKind::UnsupportedScheme, "buck S form needs a buck-form model");
    check_duty(D);
    const double T = m.period();
    const std::size_t n = m.dim();
    const Matrix lhs = Matrix::identity(n) - expm(m.A1() * T);
    const Vector v = expm(m.A1() * (D * T)) * m.B11();
    return dot(m.crow(), nonsingular(lhs, "I - e^{A1 T}").solve(v)) * m.vs();
}

Matrix lambda_matrix(const ConverterModel& m, double d) {
    const std::size_t n = m.dim();
    const Matrix X = boost_orbit_matrix(m, d);
    const Matrix lhs = Matrix::identity(n) - inverse_cycle(m, d);
    const Matrix inner = m.A1() - nonsingular(lhs, "I - e^{-A2 (T-d)} e^{-A1 d}").solve(m.A1() - m.A2());
    return Matrix::identity(n) + inner * X;
}

double s_value_boost(const ConverterModel& m, double D) {
    check_duty(D);
    const Matrix lam = lambda_matrix(m, D * m.period());
    return dot(m.crow(), lam * (m.B1() * m.u()));
}

double s_value(const ConverterModel& m, double D) {
    const double general = s_value_general(m, D);
    std::optional<double> special;
    const char* form = "";
    if (m.has_buck_form()) {
        special = s_value_buck(m, D);
        form = "buck";
    } else if (m.has_boost_form()) {
        special = s_value_boost(m, D);
        form = "boost";
    }
    if (special) {
        const double d = D * m.period();
        const SlopeTerms s = slope_terms(m, d);
        const double scale = std::max(slope_scale(m, s), std::abs(general));
        if (std::abs(*special - general) > 1e-6 * scale) {
            std::ostringstream os;
            os.precision(12);
            os << "S(" << D << "): general form " << general << " disagrees with " << form << " form "
               << *special;
            throw Error(ErrorKind::ModelInvariant, os.str());
        }
    }
    return general;
}

double theorem1_residual_post(const ConverterModel& m, double D) {
    check_duty(D);
    const double d = D * m.period();
    const SlopeTerms s = slope_terms(m, d);
    const std::size_t n = m.dim();
    const Matrix lhs = s.e1d * s.e2r - Matrix::identity(n);
    const Vector corr = nonsingular(lhs, "e^{A1 d} e^{A2 (T-d)} - I").solve(s.xm - s.xp);
    return dot(m.crow(), s.xp) - dot(m.crow(), corr) - m.hdot();
}

double theorem1_residual(const ConverterModel& m, double D) {
    const double pre = s_value(m, D) - m.hdot();
    const double post = theorem1_residual_post(m, D);
    const SlopeTerms s = slope_terms(m, D * m.period());
    const double scale = std::max({slope_scale(m, s), std::abs(pre), std::abs(post)});
    if (std::abs(pre - post) > 1e-8 * scale) {
        std::ostringstream os;
        os.precision(12);
        os << "slope condition forms disagree at D = " << D << ": " << pre << " vs " << post;
        throw Error(ErrorKind::ModelInvariant, os.str());
    }
    return pre;
}

double fold_determinant(const ConverterModel& m, double D) {
    check_duty(D);
    const PeriodicOrbit orb = make_orbit(m, D * m.period());
    const Matrix phi = jacobian(m, orb);
    return determinant(Matrix::identity(m.dim()) - phi);
}

double critical_vs(const ConverterModel& m, double D) {
    check_duty(D);
    const double s_vs = s_value(with_input(m, {1.0, 0.0}), D);
    const double s_vr = m.vr() != 0.0 ? s_value(with_input(m, {0.0, m.vr()}), D) : 0.0;
    const double scale = std::max({std::abs(s_vs), std::abs(s_vr), std::abs(m.hdot())});
    if (!(std::abs(s_vs) > 1e-14 * scale) || scale == 0.0) {
        std::ostringstream os;
        os << "no critical vs at D = " << D << ": slope is independent of vs";
        throw Error(ErrorKind::NoCriticalValue, os.str());
    }
    const double vs = (m.hdot() - s_vr) / s_vs;

    // Cross-check against the structured forms.
    std::optional<double> special;
    const double d = D * m.period();
    if (m.has_buck_form()) {
        const ConverterModel unit = with_input(m, {1.0, m.vr()});
        special = m.hdot() / s_value_buck(unit, D);
    } else if (m.has_boost_form()) {
        const Matrix lam = lambda_matrix(m, d);
        const double c11 = dot(m.crow(), lam * m.B11());
        const double c12 = dot(m.crow(), lam * m.B12());
        special = (m.hdot() - c12 * m.vr()) / c11;
    }
    if (special && std::abs(*special - vs) > 1e-6 * std::max(std::abs(vs), 1.0)) {
        std::ostringstream os;
        os.precision(12);
        os << "critical vs forms disagree at D = " << D << ": " << vs << " vs " << *special;
        throw Error(ErrorKind::ModelInvariant, os.str());
    }
    return vs;
}

ApproxSlope buck_approx_S(const ConverterModel& m, double D) {
    if (!m.has_buck_form()) throw Error(ErrorKind::UnsupportedScheme, "approximate S needs a buck-form model");
    const LuDecomposition a_lu(m.A1());
    if (a_lu.singular()) throw Error(ErrorKind::Singular, "approximate S needs invertible A1");
    const double T = m.period();
    const Vector b11 = m.B11();
    const double ca_inv_b = dot(m.crow(), a_lu.solve(b11));
    const double cb = dot(m.crow(), b11);
    const double cab = dot(m.crow(), m.A1() * b11);
    const double vs = m.vs();
    ApproxSlope out;
    out.first_term = -vs * ca_inv_b / T;
    out.three_term = out.first_term + vs * (0.5 - D) * cb - vs * ((1.0 - 6.0 * D + 6.0 * D * D) / 12.0) * cab * T;
    return out;
}

// -----------------------------------------------------------------------------
// Scheme-specific duty formulas
// -----------------------------------------------------------------------------

double DutyPrediction::duty() const {
    if (duties.empty()) throw Error(ErrorKind::NoCriticalValue, "no saddle-node duty: " + reason);
    return duties.front();
}

namespace {

DutyPrediction in_unit_interval(std::vector<double> candidates, const std::string& why_not) {
    DutyPrediction p;
    for (double D : candidates)
        if (std::isfinite(D) && D > 0.0 && D < 1.0) p.duties.push_back(D);
    std::sort(p.duties.begin(), p.duties.end());
    if (p.duties.empty()) {
        p.status = DutyStatus::NoSnb;
        p.reason = why_not;
    } else {
        p.status = DutyStatus::Found;
    }
    return p;
}

DutyPrediction not_available(std::string reason) {
    DutyPrediction p;
    p.status = DutyStatus::NotAvailable;
    p.reason = std::move(reason);
    return p;
}

}  // namespace

DutyPrediction buck_cmc_open_snb_duty(double K, double L, double hdot, double vs) {
    const double D = 0.5 * (1.0 + K) + L * hdot / vs;
    std::ostringstream why;
    why << "predicted duty " << D << " outside (0, 1)";
    if (D >= 1.0) why << " (K >= 1 - 2 L hdot / vs)";
    return in_unit_interval({D}, why.str());
}

DutyPrediction buck_multiloop_snb_duty(double K, double L, double T, double hdot, double vs, double ki,
                                       double kv) {
    if (ki == 0.0) return not_available("ki = 0: the duty formula divides by ki");
    const double D = 0.5 * (K + 1.0) + L * hdot / (vs * ki) + L * kv / (T * ki);
    std::ostringstream why;
    why << "predicted duty " << D << " outside (0, 1)";
    return in_unit_interval({D}, why.str());
}

DutyPrediction buck_vmc_snb_duty(double T, double L, double C, double Vh, double kp, double vs) {
    if (kp == 0.0 || vs == 0.0) return not_available("kp or vs is zero");
    // 6 D^2 - 6 D + 1 - c = 0 with c = 12 L C (1 + Vh/(kp vs)) / T^2
    const double c = 12.0 * L * C * (1.0 + Vh / (kp * vs)) / (T * T);
    const double disc = 12.0 + 24.0 * c;
    std::ostringstream why;
    why << "left side -1 + T^2 (1 - 6D + 6D^2)/(12 L C) never reaches Vh/(kp vs) on (0, 1) (c = " << c << ")";
    if (disc < 0.0) return in_unit_interval({}, why.str());
    const double half = std::sqrt(disc) / 12.0;
    return in_unit_interval({0.5 - half, 0.5 + half}, why.str());
}

DutyPrediction boost_vmc_snb_duty(double rho, double kappa, double vs) {
    const double kvs = kappa * vs;
    const double radicand = (2.0 * rho + kvs / 4.0) * kvs;
    if (radicand < 0.0) return in_unit_interval({}, "negative inner radicand");
    const double w = std::sqrt(radicand) - rho - kvs / 2.0;  // (1 - D)^2
    if (w <= 0.0) {
        std::ostringstream why;
        why << "(1 - D)^2 = " << w << " <= 0: no saddle-node for D < 1";
        return in_unit_interval({}, why.str());
    }
    return in_unit_interval({1.0 - std::sqrt(w)}, "predicted duty outside (0, 1)");
}

DutyPrediction boost_vmc_snb_duty_large_gain(double rho) {
    if (rho <= 0.0) return in_unit_interval({}, "rho = 0: no saddle-node for D < 1");
    return in_unit_interval({1.0 - std::sqrt(rho)}, "predicted duty outside (0, 1)");
}

DutyPrediction closed_form_snb_duty(const ConverterModel& m) {
    if (!m.power_stage() || !m.control()) return not_available("generic model has no closed form");
    const PowerStage& ps = *m.power_stage();
    const Scheme& scheme = m.control()->scheme;
    const double T = m.period();
    const double hdot = m.hdot();
    const double K = 2.0 * ps.L / (ps.R * T);

    if (m.topology() == Topology::Buck) {
        if (std::holds_alternative<CmcOpen>(scheme)) return buck_cmc_open_snb_duty(K, ps.L, hdot, ps.vs);
        if (const auto* ml = std::get_if<MultiLoop>(&scheme))
            return buck_multiloop_snb_duty(K, ps.L, T, hdot, ps.vs, ml->ki, ml->kv);
        if (const auto* v = std::get_if<Vmc>(&scheme))
            return buck_vmc_snb_duty(T, ps.L, ps.Cap, m.ramp().amplitude, v->kp, ps.vs);
    } else if (m.topology() == Topology::Boost) {
        const double rho = ps.r / ps.R;
        if (const auto* v = std::get_if<Vmc>(&scheme)) {
            if (m.ramp().amplitude == 0.0) return boost_vmc_snb_duty_large_gain(rho);
            return boost_vmc_snb_duty(rho, v->kp / m.ramp().amplitude, ps.vs);
        }
        if (std::holds_alternative<CmcOpen>(scheme)) {
            DutyPrediction p;
            p.status = DutyStatus::NoSnb;
            p.reason = "peak inductor current increases monotonically with D: one solution per i_c";
            return p;
        }
        if (const auto* ml = std::get_if<MultiLoop>(&scheme))
            return boost_multiloop_avg_duty(m.ramp().amplitude, ps.vs, ml->ki, ml->kv, ps.R);
        if (std::holds_alternative<CmcClosed>(scheme))
            return not_available("no closed form for boost cmc_closed; use the S plot");
    }
    return not_available("no closed form for this topology/scheme");
}

// -----------------------------------------------------------------------------
// Plots
// -----------------------------------------------------------------------------

std::vector<double> GridSpec::points() const {
    if (!(step > 0.0) || !(hi >= lo)) throw Error(ErrorKind::InvalidParameter, "grid: need step > 0 and hi >= lo");
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> g(n);
    for (std::size_t k = 0; k < n; ++k) g[k] = lo + static_cast<double>(k) * step;
    return g;
}

PlotSeries s_plot(const ConverterModel& m, const GridSpec& grid) {
    PlotSeries p;
    p.kind = PlotSeries::Kind::S;
    p.grid = grid.points();
    p.reference_level = m.hdot();
    p.values.resize(p.grid.size());
    p.valid.resize(p.grid.size());
    for (std::size_t k = 0; k < p.grid.size(); ++k) {
        try {
            p.values[k] = s_value(m, p.grid[k]);
            p.valid[k] = true;
        } catch (const Error&) {
            p.values[k] = std::numeric_limits<double>::quiet_NaN();
            p.valid[k] = false;
        }
    }
    return p;
}

std::vector<double> crossings(const PlotSeries& p) {
    std::vector<double> out;
    for (std::size_t k = 0; k + 1 < p.grid.size(); ++k) {
        const bool ok0 = p.valid.empty() || p.valid[k];
        const bool ok1 = p.valid.empty() || p.valid[k + 1];
        if (!ok0 || !ok1) continue;
        const double a = p.values[k] - p.reference_level;
        const double b = p.values[k + 1] - p.reference_level;
        if (a == 0.0) {
            out.push_back(p.grid[k]);
        } else if (b != 0.0 && (a < 0.0) != (b < 0.0)) {
            out.push_back(p.grid[k] + (p.grid[k + 1] - p.grid[k]) * a / (a - b));
        }
    }
    const std::size_t last = p.grid.size();
    if (last > 0 && (p.valid.empty() || p.valid[last - 1]) && p.values[last - 1] == p.reference_level)
        out.push_back(p.grid[last - 1]);
    return out;
}

}  // namespace pwmsnb
