#pragma once

// State-space averaged model: equilibria, averaged closed loop, and the
// averaged saddle-node condition with its buck/boost specialisations.

#include "pwmsnb/model.hpp"
#include "pwmsnb/sdstab.hpp"

namespace pwmsnb {

struct AveragedModel {
    Matrix Aavg;  ///< D A1 + (1 - D) A2
    Matrix Bavg;  ///< D B1 + (1 - D) B2
    Vector X;     ///< equilibrium, Aavg X + Bavg u = 0
    Matrix PhiA;  ///< closed-loop matrix (empty when Vh = 0)
};

AveragedModel averaged_model(const ConverterModel& m, double D);

/// X = -Aavg^{-1} Bavg u. Throws DegenerateOrbit when Aavg is singular.
Vector avg_equilibrium(const ConverterModel& m, double D);

/// Boost closed form vs / (rho + (1 - D)^2) * (1/R, 1 - D).
Vector boost_avg_equilibrium(double vs, double R, double r, double D);

/// Aavg + ((A1 - A2) X + (B1 - B2) u) C / Vh. Vh must be > 0.
Matrix avg_closed_loop(const ConverterModel& m, double D);

/// Vh + C Aavg^{-1} ((A1 - A2) X + (B1 - B2) u); zero where PhiA is singular.
/// Buck/boost specialisations are cross-checked to 1e-9 relative.
double avg_snb_residual(const ConverterModel& m, double D);

/// Boost VMC quartic (rho + w^2)^2 + kappa vs (w^2 - rho), w = 1 - D.
double boost_vmc_avg_polynomial(double rho, double kappa, double vs, double D);
/// Boost multi-loop condition (Vh/vs) w^2 + 2 ki/(R w) + kv, w = 1 - D.
double boost_multiloop_avg_condition(double Vh, double vs, double ki, double kv, double R, double D);

/// Roots D in (0, 1) of the boost multi-loop averaged condition, ascending.
DutyPrediction boost_multiloop_avg_duty(double Vh, double vs, double ki, double kv, double R);

/// avg_snb_residual sampled over a duty grid (kind AvgResidual, reference 0).
PlotSeries avg_plot(const ConverterModel& m, const GridSpec& grid);

}  // namespace pwmsnb
