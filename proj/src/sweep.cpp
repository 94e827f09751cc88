#include "pwmsnb/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace pwmsnb {

namespace {

constexpr int kEventGrid = 64;

void require_finite(const Vector& x, const char* where) {
    for (double v : x)
        if (!std::isfinite(v)) throw Error(ErrorKind::Overflow, std::string(where) + ": state is not finite");
}

double switching_margin(const ConverterModel& m, const Vector& x, double t) {
    return dot(m.crow(), x) + dot(m.drow(), m.u()) - m.ramp_within_period(t);
}

Vector propagate(const Matrix& a, const Vector& bu, const Vector& x, double t) {
    const auto s = expm_pair(a, t);
    return s.E * x + s.Psi * bu;
}

int thread_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("PWMSNB_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<int>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

struct PointResult {
    bool ok = true;
    std::string error;
    std::vector<BranchRecord> orbits;     // sorted by D
    std::vector<BranchRecord> saturated;
    std::vector<SweepFailure> root_failures;
};

BranchRecord orbit_record(const ConverterModel& mp, const PeriodicOrbit& orb, double param, double tol) {
    const StabilityReport rep = stability(mp, orb, tol);
    BranchRecord rec;
    rec.param = param;
    rec.d = orb.d;
    rec.D = orb.D;
    rec.x0_0 = orb.x0_0;
    rec.v_o = average_output(mp, orb);
    rec.classification = rep.classification;
    rec.max_multiplier = rep.multipliers.front();
    return rec;
}

PointResult evaluate_point(const ConverterModel& m, const std::string& param, double p, const SweepOptions& opts) {
    PointResult out;
    try {
        const ConverterModel mp = with_parameter(m, param, p);
        for (const PeriodicOrbit& orb : periodic_solutions(mp, opts.solve)) {
            try {
                out.orbits.push_back(orbit_record(mp, orb, p, opts.classify_tol));
            } catch (const Error& e) {
                out.root_failures.push_back({p, e.what()});
            }
        }
        if (opts.include_saturated) {
            for (const SaturatedSolution& s : saturated_solutions(mp)) {
                BranchRecord rec;
                rec.param = p;
                rec.D = s.always_on ? 1.0 : 0.0;
                rec.d = rec.D * mp.period();
                rec.x0_0 = s.x;
                rec.v_o = dot(mp.e1(), s.x);
                rec.classification = classify(s.multipliers, opts.classify_tol);
                rec.max_multiplier = s.multipliers.front();
                rec.saturated = true;
                out.saturated.push_back(std::move(rec));
            }
        }
    } catch (const Error& e) {
        out.ok = false;
        out.error = e.what();
    }
    return out;
}

bool is_critical(Classification c) {
    return c == Classification::SaddleNodeCritical || c == Classification::PeriodDoublingCritical ||
           c == Classification::NeimarkCritical;
}

// Bisects the parameter between two grid points where the i-th orbit changes
// between Stable and Unstable, until the classification becomes critical.
std::optional<BranchRecord> refine_change(const ConverterModel& m, const std::string& param, double a, double b,
                                          std::size_t index, std::size_t count, const SweepOptions& opts) {
    auto margin_at = [&](double p) -> std::optional<BranchRecord> {
        const ConverterModel mp = with_parameter(m, param, p);
        const auto orbits = periodic_solutions(mp, opts.solve);
        if (orbits.size() != count) return std::nullopt;
        return orbit_record(mp, orbits[index], p, opts.classify_tol);
    };
    try {
        const auto ra = margin_at(a);
        if (!ra) return std::nullopt;
        const bool a_stable = std::abs(ra->max_multiplier) < 1.0;
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (a + b);
            const auto rm = margin_at(mid);
            if (!rm) return std::nullopt;
            if (is_critical(rm->classification)) {
                BranchRecord rec = *rm;
                rec.refined = true;
                return rec;
            }
            if ((std::abs(rm->max_multiplier) < 1.0) == a_stable)
                a = mid;
            else
                b = mid;
        }
    } catch (const Error&) {
    }
    return std::nullopt;
}

double min_gap_midpoint(const std::vector<PeriodicOrbit>& orbits) {
    double best_gap = std::numeric_limits<double>::infinity();
    double mid = 0.5;
    for (std::size_t i = 0; i + 1 < orbits.size(); ++i) {
        const double gap = orbits[i + 1].D - orbits[i].D;
        if (gap < best_gap) {
            best_gap = gap;
            mid = 0.5 * (orbits[i].D + orbits[i + 1].D);
        }
    }
    if (orbits.size() == 1) mid = orbits.front().D;
    return mid;
}

}  // namespace

StrobeStep strobe_step(const ConverterModel& m, const Vector& x) {
    if (x.size() != m.dim()) throw Error(ErrorKind::Dimension, "strobe_step: state has the wrong dimension");
    require_finite(x, "strobe_step");
    const double T = m.period();
    const Vector b1u = m.B1() * m.u();
    const Vector b2u = m.B2() * m.u();

    double d = T;
    Vector xd = x;
    if (switching_margin(m, x, 0.0) <= 0.0) {
        d = 0.0;
    } else {
        const double dt = T / kEventGrid;
        const auto step = expm_pair(m.A1(), dt);
        Vector xk = x;
        double tk = 0.0;
        for (int k = 1; k <= kEventGrid; ++k) {
            const double tn = (k == kEventGrid) ? T : k * dt;
            Vector xn = step.E * xk + step.Psi * b1u;
            require_finite(xn, "strobe_step");
            if (switching_margin(m, xn, tn) <= 0.0) {
                double lo = 0.0, hi = tn - tk;
                Vector xhi = xn;
                for (int it = 0; it < 200 && hi - lo > 1e-15 * T; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    if (mid <= lo || mid >= hi) break;
                    Vector xm = propagate(m.A1(), b1u, xk, mid);
                    if (switching_margin(m, xm, tk + mid) > 0.0) {
                        lo = mid;
                    } else {
                        hi = mid;
                        xhi = std::move(xm);
                    }
                }
                d = tk + hi;
                xd = std::move(xhi);
                break;
            }
            xk = std::move(xn);
            tk = tn;
        }
        if (d == T) xd = xk;
    }

    StrobeStep out{xd, d};
    if (d < T) out.x_next = propagate(m.A2(), b2u, xd, T - d);
    require_finite(out.x_next, "strobe_step");
    return out;
}

std::vector<SimulationRecord> simulate(const ConverterModel& m, const Vector& x0, int n_periods) {
    if (n_periods < 1) throw Error(ErrorKind::InvalidParameter, "simulate: n_periods must be >= 1");
    std::vector<SimulationRecord> log;
    log.reserve(static_cast<std::size_t>(n_periods));
    Vector x = x0;
    for (int n = 0; n < n_periods; ++n) {
        StrobeStep s = strobe_step(m, x);
        log.push_back({n, x, s.d_event});
        x = std::move(s.x_next);
    }
    return log;
}

Matrix fd_jacobian(const ConverterModel& m, const PeriodicOrbit& orb, double eps) {
    if (!(eps >= 1e-8 && eps <= 1e-3)) throw Error(ErrorKind::InvalidParameter, "fd_jacobian: eps outside [1e-8, 1e-3]");
    const Vector& x = orb.x0_0;
    const std::size_t n = x.size();
    const double xmax = norm_inf(x);
    Matrix J(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double h = eps * std::max(std::abs(x[j]), xmax);
        if (h == 0.0) h = eps;
        Vector xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        const Vector fp = strobe_step(m, xp).x_next;
        const Vector fm = strobe_step(m, xm).x_next;
        for (std::size_t i = 0; i < n; ++i) J(i, j) = (fp[i] - fm[i]) / (2.0 * h);
    }
    return J;
}

int SweepResult::root_count(double param) const {
    int count = 0;
    for (const BranchRecord& r : branches)
        if (r.param == param && !r.saturated && !r.refined) ++count;
    return count;
}

SweepResult branch_sweep(const ConverterModel& m, const std::string& param, double lo, double hi, int steps,
                         const SweepOptions& opts) {
    if (steps < 2) throw Error(ErrorKind::InvalidParameter, "branch_sweep: steps must be >= 2");
    if (!(hi > lo)) throw Error(ErrorKind::InvalidParameter, "branch_sweep: empty parameter range");
    parameter_value(m, param);  // rejects unknown names before any work

    SweepResult res;
    res.param_name = param;
    const std::size_t n = static_cast<std::size_t>(steps) + 1;
    for (std::size_t k = 0; k < n; ++k)
        res.param_values.push_back(k + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(k) / steps);

    std::vector<PointResult> points(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < n; k = next++) points[k] = evaluate_point(m, param, res.param_values[k], opts);
    };
    const int nt = std::min<int>(thread_count(opts.threads), static_cast<int>(n));
    if (nt <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (std::size_t k = 0; k < n; ++k) {
        PointResult& pr = points[k];
        if (!pr.ok) {
            res.failures.push_back({res.param_values[k], pr.error});
            continue;
        }
        for (auto& f : pr.root_failures) res.failures.push_back(std::move(f));
        for (auto& r : pr.orbits) res.branches.push_back(r);
        for (auto& r : pr.saturated) res.branches.push_back(r);
    }

    if (opts.refine_critical) {
        for (std::size_t k = 0; k + 1 < n; ++k) {
            const PointResult& a = points[k];
            const PointResult& b = points[k + 1];
            if (!a.ok || !b.ok || !a.root_failures.empty() || !b.root_failures.empty()) continue;
            if (a.orbits.size() != b.orbits.size()) continue;
            for (std::size_t i = 0; i < a.orbits.size(); ++i) {
                const Classification ca = a.orbits[i].classification;
                const Classification cb = b.orbits[i].classification;
                if (ca == cb || is_critical(ca) || is_critical(cb)) continue;
                if (auto rec = refine_change(m, param, res.param_values[k], res.param_values[k + 1], i,
                                             a.orbits.size(), opts))
                    res.branches.push_back(std::move(*rec));
            }
        }
    }

    std::stable_sort(res.branches.begin(), res.branches.end(), [](const BranchRecord& x, const BranchRecord& y) {
        return x.param != y.param ? x.param < y.param : x.D < y.D;
    });
    return res;
}

Point2 snb_system(const ConverterModel& m, const std::string& param, double D, double p) {
    const ConverterModel mp = with_parameter(m, param, p);
    const double T = mp.period();
    const double r = residual(mp, D * T);
    const double scale = residual_scale(mp, r + mp.ramp_within_period(D * T));
    return {r / scale, T * theorem1_residual(mp, D) / scale};
}

SnbPoint locate_snb(const ConverterModel& m, const std::string& param, double lo, double hi,
                    std::optional<double> d_guess, const LocateOptions& opts) {
    if (!(hi > lo)) throw Error(ErrorKind::InvalidParameter, "locate_snb: empty bracket");
    auto orbits_at = [&](double p) { return periodic_solutions(with_parameter(m, param, p), opts.solve); };

    const auto o_lo = orbits_at(lo);
    const auto o_hi = orbits_at(hi);
    const std::size_t c_lo = o_lo.size();
    if (c_lo == o_hi.size()) {
        std::ostringstream os;
        os << "no change in the number of periodic solutions (" << c_lo << ") across " << param << " in [" << lo
           << ", " << hi << "]";
        throw Error(ErrorKind::NoSnbInBracket, os.str());
    }
    const bool many_at_lo = c_lo > o_hi.size();

    // a keeps the root count of lo, b that of the other side.
    double a = lo, b = hi;
    auto bisect = [&](int iterations) {
        for (int it = 0; it < iterations; ++it) {
            const double mid = 0.5 * (a + b);
            if (orbits_at(mid).size() == c_lo)
                a = mid;
            else
                b = mid;
        }
    };
    bisect(opts.count_bisections);

    auto duty_guess = [&] {
        if (d_guess) return *d_guess;
        const auto many = orbits_at(many_at_lo ? a : b);
        return many.empty() ? 0.5 : min_gap_midpoint(many);
    };
    const double D0 = duty_guess();

    const auto F = [&](const Point2& v) { return snb_system(m, param, v[0], v[1]); };
    const auto norm = [](const Point2& v) { return std::max(std::abs(v[0]), std::abs(v[1])); };
    const auto acceptable = [&](const Point2& v) { return v[0] > 0.0 && v[0] < 1.0 && v[1] >= lo && v[1] <= hi; };

    std::optional<Point2> sol;
    try {
        const Point2 x = newton_2d(F, {D0, 0.5 * (a + b)}, opts.newton);
        if (acceptable(x)) sol = x;
    } catch (const NonConvergenceError& e) {
        const Point2 best = {e.best_iterate()[0], e.best_iterate()[1]};
        if (acceptable(best) && norm(F(best)) <= 1e-8) sol = best;
    } catch (const Error&) {
    }
    if (sol) return {(*sol)[1], (*sol)[0], norm(F(*sol))};

    // Fallback: root-count bisection to 1e-6 of the bracket.
    while (std::abs(b - a) > 1e-6 * (hi - lo)) bisect(1);
    SnbPoint pt;
    pt.param_star = 0.5 * (a + b);
    pt.D_star = duty_guess();
    try {
        pt.residual_norm = norm(F({pt.D_star, pt.param_star}));
    } catch (const Error&) {
        pt.residual_norm = std::numeric_limits<double>::infinity();
    }
    return pt;
}

}  // namespace pwmsnb
