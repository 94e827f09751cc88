#pragma once

// =============================================================================
// Sampled-data small-signal analysis
// =============================================================================
// Jacobian of the stroboscopic map at a periodic orbit, Floquet classification,
// and the slope-based saddle-node conditions (S plot and its buck/boost closed
// forms, plus the scheme-specific duty-ratio formulas).
// =============================================================================

#include "pwmsnb/model.hpp"
#include "pwmsnb/steady.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pwmsnb {

enum class Classification { Stable, SaddleNodeCritical, PeriodDoublingCritical, NeimarkCritical, Unstable };

const char* to_string(Classification c);

struct StabilityReport {
    Matrix Phi;
    ComplexList multipliers;  ///< sorted by descending modulus
    Classification classification = Classification::Stable;
    double margin = 0.0;      ///< max |lambda| - 1
};

/// Closed-form stroboscopic-map Jacobian at a periodic orbit. Throws
/// Error(Grazing) when the crossing is tangent to the ramp.
Matrix jacobian(const ConverterModel& m, const PeriodicOrbit& orb);

/// Critical classes first (|l - 1| <= tol, then |l + 1| <= tol, then a complex
/// pair with ||l| - 1| <= tol), then Stable / Unstable by max |l| against 1 -+ tol.
/// Anything left inside the band is reported as Stable.
Classification classify(const ComplexList& multipliers, double tol = 1e-3);

StabilityReport stability(const ConverterModel& m, const PeriodicOrbit& orb, double tol = 1e-3);

/// Slope quantity S(D) from the general ripple-slope formula, cross-checked
/// against the buck or boost matrix form when the model has that structure.
double s_value(const ConverterModel& m, double D);
/// General form only.
double s_value_general(const ConverterModel& m, double D);
/// C (I - e^{A1 T})^{-1} e^{A1 d} B11 vs.
double s_value_buck(const ConverterModel& m, double D);
/// C Lambda(d) B1 u.
double s_value_boost(const ConverterModel& m, double D);
/// Lambda(d) = I + (A1 - (I - e^{-A2 (T-d)} e^{-A1 d})^{-1} (A1 - A2)) X(d).
Matrix lambda_matrix(const ConverterModel& m, double d);

/// S(D) - hdot, slope-at-switching form.
double theorem1_residual(const ConverterModel& m, double D);
/// Same condition written with the post-switching slope; equals theorem1_residual.
double theorem1_residual_post(const ConverterModel& m, double D);

/// det(I - Phi) on the orbit through duty ratio D (the orbit need not satisfy
/// the residual equation; Phi depends on D only through x0(d)).
double fold_determinant(const ConverterModel& m, double D);

/// Source voltage at which S(D) = hdot for the given duty ratio.
double critical_vs(const ConverterModel& m, double D);

struct ApproxSlope {
    double three_term;   ///< low-order expansion of S, times vs
    double first_term;   ///< high-frequency limit -vs C A^{-1} B11 / T
};

/// Expansion of the buck S plot valid when RC and sqrt(LC) are much larger than T.
ApproxSlope buck_approx_S(const ConverterModel& m, double D);

enum class DutyStatus { Found, NoSnb, NotAvailable };

struct DutyPrediction {
    DutyStatus status = DutyStatus::NotAvailable;
    std::vector<double> duties;  ///< ascending
    std::string reason;          ///< why NoSnb / NotAvailable

    bool found() const noexcept { return status == DutyStatus::Found; }
    double duty() const;  ///< first duty; throws if none
};

/// Buck, CMC with voltage loop open: D = (1 + K)/2 + L hdot / vs, K = 2L/(RT).
DutyPrediction buck_cmc_open_snb_duty(double K, double L, double hdot, double vs);
/// Buck, multi-loop: D ~ (K + 1)/2 + L hdot/(vs ki) + L kv/(T ki).
DutyPrediction buck_multiloop_snb_duty(double K, double L, double T, double hdot, double vs,
                                       double ki, double kv);
/// Buck, VMC: roots of -1 + T^2 (1 - 6D + 6D^2)/(12 L C) = Vh/(kp vs) in (0, 1).
DutyPrediction buck_vmc_snb_duty(double T, double L, double C, double Vh, double kp, double vs);
/// Boost, VMC (average analysis): root of the quartic in (1 - D), rho = r/R, kappa = kp/Vh.
DutyPrediction boost_vmc_snb_duty(double rho, double kappa, double vs);
/// Large-gain limit 1 - sqrt(rho).
DutyPrediction boost_vmc_snb_duty_large_gain(double rho);

/// Dispatches on the model's topology and scheme.
DutyPrediction closed_form_snb_duty(const ConverterModel& m);

/// Sampled curve over a duty-ratio grid.
struct PlotSeries {
    enum class Kind { S, H, L1, L2, AvgResidual, HbResidual };
    Kind kind = Kind::S;
    std::vector<double> grid;
    std::vector<double> values;
    std::vector<double> imag;          ///< H only
    std::vector<double> companion;     ///< H: single-harmonic approximation
    std::vector<bool> valid;           ///< false where evaluation failed (gap)
    double reference_level = 0.0;
};

struct GridSpec {
    double lo = 0.01;
    double hi = 0.99;
    double step = 0.002;

    /// Grid points lo, lo + step, ... <= hi (within 1e-9 step).
    std::vector<double> points() const;
};

PlotSeries s_plot(const ConverterModel& m, const GridSpec& grid);

/// Duty ratios where values - reference_level changes sign (linear interpolation
/// between grid points; gaps break the scan).
std::vector<double> crossings(const PlotSeries& p);

}  // namespace pwmsnb
