#pragma once

// Exact T-periodic steady states and the duty-time residual whose roots are
// the periodic solutions.

#include "pwmsnb/model.hpp"

#include <vector>

namespace pwmsnb {

/// A T-periodic solution candidate with switching instant d.
struct PeriodicOrbit {
    double d = 0.0;           ///< switching instant [s]
    double D = 0.0;           ///< duty ratio d / T
    Vector x0_0;              ///< state at the clock edge
    Vector x0_d;              ///< state at the switching instant
    Vector xdot_minus;        ///< A1 x0(d) + B1 u
    Vector xdot_plus;         ///< A2 x0(d) + B2 u
    double y0_d = 0.0;        ///< C x0(d) + D u
    double residual = 0.0;    ///< y0(d) - h(d)
};

/// x0(d) from the two-stage boundary condition (general form, any N).
Vector orbit_state_at_d(const ConverterModel& m, double d);
/// Buck specialisation (A1 = A2, B21 = 0, B12 = B22). Throws UnsupportedScheme otherwise.
Vector buck_orbit_state_at_d(const ConverterModel& m, double d);
/// Boost specialisation X(d) B1 u (B1 = B2). Throws UnsupportedScheme otherwise.
Vector boost_orbit_state_at_d(const ConverterModel& m, double d);
/// The matrix X(d) of the boost specialisation.
Matrix boost_orbit_matrix(const ConverterModel& m, double d);

/// r(d) = C x0(d) + D u - h(d).
double residual(const ConverterModel& m, double d);

/// Scale used for residual tolerances: max(|y0|, |Vh|, 1).
double residual_scale(const ConverterModel& m, double y0);

/// Expands a switching instant into a full orbit record (x0(0) from stage S2).
PeriodicOrbit make_orbit(const ConverterModel& m, double d);

/// Period average of the state along the orbit.
Vector orbit_average(const ConverterModel& m, const PeriodicOrbit& orb);
/// Period-averaged output E1 x.
double average_output(const ConverterModel& m, const PeriodicOrbit& orb);

struct PeriodicSolveOptions {
    int n_grid = 2000;
    double edge_fraction = 1e-4;   ///< scan d in (eps T, (1 - eps) T)
    double tol_fraction = 1e-13;   ///< bisection width relative to T
};

/// All sign-change-isolated roots of the residual inside the period.
std::vector<PeriodicOrbit> periodic_solutions(const ConverterModel& m,
                                              const PeriodicSolveOptions& opts = {});

/// T C (I - e^{A1 T})^{-1} e^{A1 d} B11 vs - Vh; zero at a buck saddle-node.
double buck_steadystate_snb_residual(const ConverterModel& m, double d);

/// Saturated steady state: switch held in one stage for the whole period.
struct SaturatedSolution {
    bool always_on = true;   ///< true: S1 all period (D = 1); false: S2 all period (D = 0)
    Vector x;                ///< equilibrium of the held stage
    double y = 0.0;          ///< C x + D u
    ComplexList multipliers; ///< eigenvalues of e^{A T} for the held stage
};

/// Equilibria of the held stages that are consistent with the switching rule:
/// always-on needs y >= h0 + Vh, always-off needs y <= h0. A singular stage
/// matrix has no equilibrium (unbounded current) and is skipped.
std::vector<SaturatedSolution> saturated_solutions(const ConverterModel& m);

}  // namespace pwmsnb
