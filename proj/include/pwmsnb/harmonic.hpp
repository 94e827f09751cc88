#pragma once

// =============================================================================
// Harmonic balance and loop-gain prediction of saddle-node bifurcation (buck)
// =============================================================================
// The diode voltage v_d is a square wave; y follows from v_d through the HB
// gain G(s) (transfer function from v_d to -y). Balancing y = h at the
// switching instant and differentiating in d gives the condition
//   vs * sum_n e^{j 2 n pi D} G(j n ws) + Vh = 0.
// All infinite sums are truncated at HarmonicConfig::n_harmonics.
// =============================================================================

#include "pwmsnb/model.hpp"
#include "pwmsnb/sdstab.hpp"

#include <optional>
#include <vector>

namespace pwmsnb {

/// Rational function with real coefficients in ascending powers of s.
class TransferFunction {
public:
    TransferFunction() : num_{0.0}, den_{1.0} {}
    TransferFunction(std::vector<double> numerator, std::vector<double> denominator);

    static TransferFunction constant(double k) { return TransferFunction({k}, {1.0}); }

    const std::vector<double>& numerator() const noexcept { return num_; }
    const std::vector<double>& denominator() const noexcept { return den_; }

    Complex operator()(Complex s) const;
    double dc_gain() const;

    friend TransferFunction operator*(const TransferFunction& a, const TransferFunction& b);
    friend TransferFunction operator+(const TransferFunction& a, const TransferFunction& b);
    friend TransferFunction operator*(double k, const TransferFunction& a);

private:
    std::vector<double> num_;
    std::vector<double> den_;
};

struct HarmonicConfig {
    int n_harmonics = 200;
    double tail_tol = 1e-9;  ///< stop once |term| < tail_tol * |partial sum|
};

/// Fourier coefficient c_n of the diode voltage (c_0 = vs D).
Complex vd_fourier(double vs, double D, int n);

enum class BuckTf { Gv, Gi };

/// Gv: v_d to v_o; Gi: v_d to i_L. Both include the capacitor ESR Rc.
TransferFunction buck_tf(const PowerStage& ps, BuckTf which);

/// HB gain for the buck: VMC Gc Gv, CMC open Gi, CMC closed Gc Gv + Gi,
/// multi-loop ki Gi + kv Gv. Gc defaults to the proportional gain kp.
TransferFunction hb_gain(const PowerStage& ps, const ControlScheme& ctl,
                         const std::optional<TransferFunction>& Gc = std::nullopt);

/// G(0) + 2 Re sum_{n=1}^{N} e^{j 2 n pi D} G(j n ws).
double hb_sum(const TransferFunction& G, double D, double omega_s, const HarmonicConfig& cfg = {});
/// The symmetric two-sided sum over |n| <= N; its imaginary part is roundoff.
Complex hb_sum_two_sided(const TransferFunction& G, double D, double omega_s, const HarmonicConfig& cfg = {});

/// vs * hb_sum + Vh; zero at the saddle-node duty.
double theorem2_residual(const TransferFunction& G, double vs, double Vh, double D, double omega_s,
                         const HarmonicConfig& cfg = {});
/// Source voltage solving the harmonic condition at duty D: -Vh / hb_sum.
double hb_critical_vs(const TransferFunction& G, double Vh, double D, double omega_s,
                      const HarmonicConfig& cfg = {});

/// H(D) = sum_{n>=1} e^{j 2 n pi D} G(j n ws); values/imag carry Re/Im H,
/// companion the single-harmonic term Re[e^{j 2 pi D} G(j ws)], reference
/// -(Vh + vs G(0)) / (2 vs).
PlotSeries h_plot(const TransferFunction& G, const GridSpec& grid, double omega_s, double vs, double Vh,
                  const HarmonicConfig& cfg = {});

/// Theorem-2 residual over a grid (reference 0).
PlotSeries hb_residual_plot(const TransferFunction& G, const GridSpec& grid, double omega_s, double vs,
                            double Vh, const HarmonicConfig& cfg = {});

struct LPlots {
    std::optional<PlotSeries> L1;  ///< absent when Vh = 0
    PlotSeries L2;
};

/// Loop-gain plots for a buck model: L2 (reference -Vh/vs) and, when Vh > 0,
/// L1 = L2 vs / Vh (reference -1).
LPlots l_plots(const ConverterModel& m, const GridSpec& grid,
               const std::optional<TransferFunction>& Gc = std::nullopt, const HarmonicConfig& cfg = {});

/// Closed matrix form of L2: -T C (I - e^{A1 T})^{-1} e^{A1 d} B11.
double l2_matrix_form(const ConverterModel& m, double D);

}  // namespace pwmsnb
