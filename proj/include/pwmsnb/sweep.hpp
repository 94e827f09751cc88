#pragma once

// Stroboscopic-map simulation, bifurcation sweeps, and saddle-node location.

#include "pwmsnb/sdstab.hpp"
#include "pwmsnb/steady.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pwmsnb {

struct StrobeStep {
    Vector x_next;   ///< state at the next clock edge
    double d_event;  ///< switching instant within the period [s]
};

/// One clock period of the switched system from state x. Stage S1 runs while
/// y > h; the first crossing is bracketed on 64 subintervals and bisected.
StrobeStep strobe_step(const ConverterModel& m, const Vector& x);

struct SimulationRecord {
    int n;           ///< period index, starting at 0
    Vector x;        ///< state at the start of period n
    double d_event;  ///< switching instant in period n
};

std::vector<SimulationRecord> simulate(const ConverterModel& m, const Vector& x0, int n_periods);

/// Central-difference derivative of strobe_step at orb.x0_0. The step for
/// coordinate j is eps * max(|x_j|, |x|_inf).
Matrix fd_jacobian(const ConverterModel& m, const PeriodicOrbit& orb, double eps = 1e-6);

struct BranchRecord {
    double param = 0.0;
    double d = 0.0;
    double D = 0.0;
    Vector x0_0;
    double v_o = 0.0;  ///< period-averaged output
    Classification classification = Classification::Stable;
    Complex max_multiplier;
    bool saturated = false;  ///< switch held on (D = 1) or off (D = 0)
    bool refined = false;    ///< inserted by stability-change refinement
};

struct SweepFailure {
    double param;
    std::string message;
};

struct SweepResult {
    std::string param_name;
    std::vector<double> param_values;  ///< ascending, including refined points
    std::vector<BranchRecord> branches;  ///< sorted by param, then D
    std::vector<SweepFailure> failures;

    /// Number of switching (non-saturated) periodic solutions at a parameter value.
    int root_count(double param) const;
};

struct SweepOptions {
    PeriodicSolveOptions solve;
    double classify_tol = 1e-3;
    bool include_saturated = true;
    bool refine_critical = true;  ///< bisect stability changes between steps
    int threads = 0;              ///< 0: PWMSNB_THREADS or hardware concurrency
};

/// steps + 1 equally spaced parameter values over [lo, hi].
SweepResult branch_sweep(const ConverterModel& m, const std::string& param, double lo, double hi, int steps,
                         const SweepOptions& opts = {});

struct SnbPoint {
    double param_star = 0.0;
    double D_star = 0.0;
    double residual_norm = 0.0;  ///< max of the two scaled residuals
};

struct LocateOptions {
    PeriodicSolveOptions solve;
    Newton2Options newton;
    int count_bisections = 24;  ///< root-count bisection steps before Newton
};

/// Solves r(d; p) = 0 and S(D; p) = hdot for (D, p). The bracket must show a
/// change in the number of periodic solutions. Falls back to root-count
/// bisection to 1e-6 (hi - lo) when Newton fails.
SnbPoint locate_snb(const ConverterModel& m, const std::string& param, double lo, double hi,
                    std::optional<double> d_guess = std::nullopt, const LocateOptions& opts = {});

/// The two scaled residuals of the saddle-node system at (D, param value).
Point2 snb_system(const ConverterModel& m, const std::string& param, double D, double p);

}  // namespace pwmsnb
