#pragma once

#include "pwmsnb/fixtures.hpp"
#include "pwmsnb/model.hpp"

#include <string>

namespace testutil {

/// Reference converter by fixture id, optionally with its sweep parameter replaced.
inline pwmsnb::ConverterModel example(const std::string& id) {
    return pwmsnb::to_model(pwmsnb::builtin_fixture(id).doc);
}

inline pwmsnb::ConverterModel example(const std::string& id, double param) {
    const auto& f = pwmsnb::builtin_fixture(id);
    return pwmsnb::with_parameter(pwmsnb::to_model(f.doc), f.param, param);
}

inline pwmsnb::ConverterModel with(const pwmsnb::ConverterModel& m, const std::string& name, double v) {
    return pwmsnb::with_parameter(m, name, v);
}

}  // namespace testutil
