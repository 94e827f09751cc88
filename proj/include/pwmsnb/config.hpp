#pragma once

// JSON converter configuration, grid flags, and CSV output helpers.

#include "pwmsnb/model.hpp"
#include "pwmsnb/sdstab.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace pwmsnb {

struct AnalysisDefaults {
    GridSpec grid;
    int harmonics = 200;

    friend bool operator==(const AnalysisDefaults& a, const AnalysisDefaults& b) {
        return a.grid.lo == b.grid.lo && a.grid.hi == b.grid.hi && a.grid.step == b.grid.step &&
               a.harmonics == b.harmonics;
    }
};

struct ConfigDocument {
    Topology topology = Topology::Buck;
    PowerStage power;
    ControlScheme control;
    RampSpec ramp;
    AnalysisDefaults analysis;

    friend bool operator==(const ConfigDocument&, const ConfigDocument&) = default;
};

/// Parses and schema-checks a config. Throws Error(Parse) with line and
/// column, or Error(Schema) naming the field (e.g. "control.kp").
ConfigDocument parse_config(const std::string& text);
ConfigDocument load_config_document(const std::string& path);

ConverterModel to_model(const ConfigDocument& doc);
ConverterModel load_config(const std::string& path);

/// Canonical JSON text (fixed key order, optional fields always present).
std::string dump_config(const ConfigDocument& doc);
void save_config(const ConfigDocument& doc, const std::string& path);

/// "lo:hi:step".
GridSpec parse_grid(const std::string& text);
std::string format_grid(const GridSpec& g);

/// 12 significant digits, '.' separator; NaN as "nan".
std::string format_number(double v);

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& os) : os_(os) {}
    void header(const std::vector<std::string>& columns);
    /// Cells are written verbatim; use format_number for reals.
    void row(const std::vector<std::string>& cells);

private:
    std::ostream& os_;
};

}  // namespace pwmsnb
