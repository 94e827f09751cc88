#pragma once

// =============================================================================
// Unified switched-linear converter model
// =============================================================================
// Within each clock period T the plant runs stage S1 (x' = A1 x + B1 u) until
// the compensator output y = C x + D u meets the ramp h(t), then stage S2
// (x' = A2 x + B2 u) until the next clock edge. u = (vs, vr).
// =============================================================================

#include "pwmsnb/matnum.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace pwmsnb {

enum class Topology { Buck, Boost, Generic };

const char* to_string(Topology t);

struct PowerStage {
    double vs = 0.0;   ///< source voltage [V]
    double L = 0.0;    ///< inductance [H]
    double Cap = 0.0;  ///< output capacitance [F]
    double R = 0.0;    ///< load [ohm]
    double r = 0.0;    ///< inductor series resistance [ohm]
    double Rc = 0.0;   ///< capacitor ESR [ohm]; harmonic module only
    double fs = 0.0;   ///< switching frequency [Hz]

    double period() const noexcept { return 1.0 / fs; }
    double omega_s() const noexcept;
    /// Throws Error(InvalidParameter) naming the offending field.
    void validate() const;

    friend bool operator==(const PowerStage&, const PowerStage&) = default;
};

struct Vmc {
    double kp = 0.0;
    friend bool operator==(const Vmc&, const Vmc&) = default;
};
struct CmcOpen {
    friend bool operator==(const CmcOpen&, const CmcOpen&) = default;
};
struct CmcClosed {
    double kp = 0.0;
    friend bool operator==(const CmcClosed&, const CmcClosed&) = default;
};
struct MultiLoop {
    double ki = 0.0;
    double kv = 0.0;
    friend bool operator==(const MultiLoop&, const MultiLoop&) = default;
};

using Scheme = std::variant<Vmc, CmcOpen, CmcClosed, MultiLoop>;

enum class SchemeKind { Vmc, CmcOpen, CmcClosed, MultiLoop, Custom };

const char* to_string(SchemeKind k);
SchemeKind kind_of(const Scheme& s);

/// Controller plus its reference. vr doubles as the current command i_c in CMC.
struct ControlScheme {
    Scheme scheme;
    double vr = 0.0;

    friend bool operator==(const ControlScheme&, const ControlScheme&) = default;
};

/// Positive-slope sawtooth h(t) = offset + amplitude * (t mod T) / T.
struct RampSpec {
    double offset = 0.0;
    double amplitude = 0.0;

    friend bool operator==(const RampSpec&, const RampSpec&) = default;
};

struct RampValue {
    double h;
    double hdot;
};

class ConverterModel {
public:
    /// Generic model of any dimension N; only shapes are checked.
    static ConverterModel from_matrices(Matrix A1, Matrix A2, Matrix B1, Matrix B2, Vector crow,
                                        Vector drow, Vector e1, Vector e2, RampSpec ramp,
                                        double period, Vector u);

    std::size_t dim() const noexcept { return A1_.rows(); }
    const Matrix& A1() const noexcept { return A1_; }
    const Matrix& A2() const noexcept { return A2_; }
    const Matrix& B1() const noexcept { return B1_; }
    const Matrix& B2() const noexcept { return B2_; }
    Vector B11() const { return B1_.col(0); }
    Vector B12() const { return B1_.col(1); }
    Vector B21() const { return B2_.col(0); }
    Vector B22() const { return B2_.col(1); }
    const Vector& crow() const noexcept { return crow_; }
    const Vector& drow() const noexcept { return drow_; }
    const Vector& e1() const noexcept { return e1_; }
    const Vector& e2() const noexcept { return e2_; }
    const RampSpec& ramp() const noexcept { return ramp_; }
    double period() const noexcept { return T_; }
    const Vector& u() const noexcept { return u_; }
    double vs() const noexcept { return u_[0]; }
    double vr() const noexcept { return u_[1]; }
    Topology topology() const noexcept { return topology_; }
    SchemeKind scheme_kind() const noexcept { return scheme_; }
    const std::optional<PowerStage>& power_stage() const noexcept { return power_; }
    const std::optional<ControlScheme>& control() const noexcept { return control_; }

    /// Constant ramp slope Vh / T.
    double hdot() const noexcept { return ramp_.amplitude / T_; }
    /// Ramp value within the first period, h0 + Vh t / T, without the reset.
    double ramp_within_period(double t) const noexcept { return ramp_.offset + hdot() * t; }

    /// A1 = A2, B21 = 0, B12 = B22 (exactly, as constructed by build_buck).
    bool has_buck_form() const;
    /// B1 = B2.
    bool has_boost_form() const;

    friend bool operator==(const ConverterModel&, const ConverterModel&) = default;

private:
    friend ConverterModel build_buck(const PowerStage&, const ControlScheme&, const RampSpec&);
    friend ConverterModel build_boost(const PowerStage&, const ControlScheme&, const RampSpec&);

    ConverterModel() = default;
    void check_shapes() const;

    Matrix A1_, A2_, B1_, B2_;
    Vector crow_, drow_, e1_, e2_;
    RampSpec ramp_;
    double T_ = 0.0;
    Vector u_;
    Topology topology_ = Topology::Generic;
    SchemeKind scheme_ = SchemeKind::Custom;
    std::optional<PowerStage> power_;
    std::optional<ControlScheme> control_;
};

/// State (i_L, v_C). Accepts VMC, CMC open, and multi-loop control; r must be 0.
ConverterModel build_buck(const PowerStage& ps, const ControlScheme& ctl, const RampSpec& ramp);
/// State (i_L, v_C) with inductor resistance r. Accepts all four schemes.
ConverterModel build_boost(const PowerStage& ps, const ControlScheme& ctl, const RampSpec& ramp);
ConverterModel build(Topology topology, const PowerStage& ps, const ControlScheme& ctl,
                     const RampSpec& ramp);

/// Sawtooth value and slope at time t (reset at multiples of T).
RampValue ramp_at(const ConverterModel& m, double t);

/// Reads a named parameter: vs, vr (alias ic), Vh, h0, and for built models
/// L, C, R, r, Rc, fs, kp, ki, kv.
double parameter_value(const ConverterModel& m, std::string_view name);
/// Copy of the model with one named parameter replaced, rebuilt through the
/// same builder so all invariants are rechecked.
ConverterModel with_parameter(const ConverterModel& m, std::string_view name, double value);

}  // namespace pwmsnb
