#pragma once

// Built-in reference converters e1..e5 with their expected saddle-node values.

#include "pwmsnb/config.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pwmsnb {

struct RootExpectation {
    double param;                 ///< value of the fixture's sweep parameter
    std::vector<double> duties;   ///< expected periodic-solution duties (empty: none)
    double tol;
};

struct Fixture {
    std::string id;
    std::string description;
    ConfigDocument doc;
    std::string param;            ///< bifurcation parameter
    double lo = 0.0, hi = 0.0;    ///< bracket for locate_snb
    double param_star = 0.0, param_tol = 0.0;
    double duty_star = 0.0, duty_tol = 0.0;
    std::optional<double> vo_star;  ///< averaged output at the saddle-node, 1 % tolerance
    std::vector<RootExpectation> roots;
    std::optional<double> closed_form_at;  ///< parameter value for the closed-form duty
    double closed_form_duty = 0.0, closed_form_tol = 0.0;
    std::string note;
};

const std::vector<Fixture>& builtin_fixtures();
/// Throws Error(InvalidParameter) for an unknown id.
const Fixture& builtin_fixture(std::string_view id);

struct FixtureCheck {
    std::string name;
    double value;
    double expected;
    double tol;
    bool pass;
};

/// Runs locate_snb, root checks and the closed form against the stored values.
std::vector<FixtureCheck> run_fixture(const Fixture& f);

}  // namespace pwmsnb
