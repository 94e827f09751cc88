#include "pwmsnb/config.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

namespace pwmsnb {

namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& field, const std::string& what) {
    throw Error(ErrorKind::Schema, "config field \"" + field + "\": " + what);
}

const json& object_at(const json& j, const std::string& key, const std::string& path) {
    const std::string field = path.empty() ? key : path + "." + key;
    if (!j.contains(key)) schema_error(field, "missing");
    const json& v = j.at(key);
    if (!v.is_object()) schema_error(field, "must be an object");
    return v;
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& path) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!allowed.count(key)) schema_error(path.empty() ? key : path + "." + key, "unknown field");
    }
}

double number_at(const json& j, const std::string& key, const std::string& path, std::optional<double> fallback = {}) {
    const std::string field = path + "." + key;
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        schema_error(field, "missing");
    }
    const json& v = j.at(key);
    if (!v.is_number()) schema_error(field, "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) schema_error(field, "must be finite");
    return x;
}

std::string string_at(const json& j, const std::string& key, const std::string& field) {
    if (!j.contains(key)) schema_error(field, "missing");
    if (!j.at(key).is_string()) schema_error(field, "must be a string");
    return j.at(key).get<std::string>();
}

std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

const char* control_type_name(const Scheme& s) {
    switch (kind_of(s)) {
        case SchemeKind::Vmc: return "vmc";
        case SchemeKind::CmcOpen: return "cmc_open";
        case SchemeKind::CmcClosed: return "cmc_closed";
        case SchemeKind::MultiLoop: return "multiloop";
        case SchemeKind::Custom: break;
    }
    return "custom";
}

}  // namespace

ConfigDocument parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_column(text, e.byte);
        std::ostringstream os;
        os << "config parse error at line " << line << ", column " << col << ": " << e.what();
        throw Error(ErrorKind::Parse, os.str());
    }
    if (!j.is_object()) schema_error("(root)", "must be an object");
    reject_unknown(j, {"topology", "power", "control", "ramp", "analysis"}, "");

    ConfigDocument doc;
    const std::string topo = string_at(j, "topology", "topology");
    if (topo == "buck")
        doc.topology = Topology::Buck;
    else if (topo == "boost")
        doc.topology = Topology::Boost;
    else
        schema_error("topology", "must be \"buck\" or \"boost\"");

    const json& p = object_at(j, "power", "");
    reject_unknown(p, {"vs", "L", "C", "R", "r", "Rc", "fs"}, "power");
    doc.power.vs = number_at(p, "vs", "power");
    doc.power.L = number_at(p, "L", "power");
    doc.power.Cap = number_at(p, "C", "power");
    doc.power.R = number_at(p, "R", "power");
    doc.power.r = number_at(p, "r", "power", 0.0);
    doc.power.Rc = number_at(p, "Rc", "power", 0.0);
    doc.power.fs = number_at(p, "fs", "power");

    const json& c = object_at(j, "control", "");
    const std::string type = string_at(c, "type", "control.type");
    if (type == "vmc") {
        reject_unknown(c, {"type", "kp", "vr"}, "control");
        doc.control.scheme = Vmc{number_at(c, "kp", "control")};
    } else if (type == "cmc_open") {
        reject_unknown(c, {"type", "vr"}, "control");
        doc.control.scheme = CmcOpen{};
    } else if (type == "cmc_closed") {
        reject_unknown(c, {"type", "kp", "vr"}, "control");
        doc.control.scheme = CmcClosed{number_at(c, "kp", "control")};
    } else if (type == "multiloop") {
        reject_unknown(c, {"type", "ki", "kv", "vr"}, "control");
        doc.control.scheme = MultiLoop{number_at(c, "ki", "control"), number_at(c, "kv", "control")};
    } else {
        schema_error("control.type", "must be one of vmc, cmc_open, cmc_closed, multiloop");
    }
    doc.control.vr = number_at(c, "vr", "control");

    const json& r = object_at(j, "ramp", "");
    reject_unknown(r, {"offset", "amplitude"}, "ramp");
    doc.ramp.offset = number_at(r, "offset", "ramp", 0.0);
    doc.ramp.amplitude = number_at(r, "amplitude", "ramp");

    if (j.contains("analysis")) {
        const json& a = object_at(j, "analysis", "");
        reject_unknown(a, {"grid", "harmonics"}, "analysis");
        if (a.contains("grid")) {
            try {
                doc.analysis.grid = parse_grid(string_at(a, "grid", "analysis.grid"));
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::Schema) throw;
                schema_error("analysis.grid", e.what());
            }
        }
        if (a.contains("harmonics")) {
            const json& h = a.at("harmonics");
            if (!h.is_number_integer() || h.get<long long>() < 1) schema_error("analysis.harmonics", "must be an integer >= 1");
            doc.analysis.harmonics = static_cast<int>(h.get<long long>());
        }
    }
    return doc;
}

ConfigDocument load_config_document(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Parse, "cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

ConverterModel to_model(const ConfigDocument& doc) { return build(doc.topology, doc.power, doc.control, doc.ramp); }

ConverterModel load_config(const std::string& path) { return to_model(load_config_document(path)); }

std::string dump_config(const ConfigDocument& doc) {
    json j = json::object();
    j["topology"] = doc.topology == Topology::Boost ? "boost" : "buck";
    j["power"] = {{"vs", doc.power.vs}, {"L", doc.power.L},   {"C", doc.power.Cap}, {"R", doc.power.R},
                  {"r", doc.power.r},   {"Rc", doc.power.Rc}, {"fs", doc.power.fs}};
    json c = {{"type", control_type_name(doc.control.scheme)}};
    std::visit(
        [&](const auto& s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Vmc> || std::is_same_v<S, CmcClosed>) c["kp"] = s.kp;
            if constexpr (std::is_same_v<S, MultiLoop>) {
                c["ki"] = s.ki;
                c["kv"] = s.kv;
            }
        },
        doc.control.scheme);
    c["vr"] = doc.control.vr;
    j["control"] = c;
    j["ramp"] = {{"offset", doc.ramp.offset}, {"amplitude", doc.ramp.amplitude}};
    j["analysis"] = {{"grid", format_grid(doc.analysis.grid)}, {"harmonics", doc.analysis.harmonics}};
    return j.dump(2) + "\n";
}

void save_config(const ConfigDocument& doc, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Parse, "cannot write config file " + path);
    out << dump_config(doc);
}

GridSpec parse_grid(const std::string& text) {
    GridSpec g;
    double v[3];
    std::size_t start = 0;
    for (int k = 0; k < 3; ++k) {
        const std::size_t colon = text.find(':', start);
        if ((k < 2) == (colon == std::string::npos))
            throw Error(ErrorKind::InvalidParameter, "grid \"" + text + "\" must have the form lo:hi:step");
        const std::string part = text.substr(start, k < 2 ? colon - start : std::string::npos);
        std::size_t used = 0;
        try {
            v[k] = std::stod(part, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != part.size() || !std::isfinite(v[k]))
            throw Error(ErrorKind::InvalidParameter, "grid \"" + text + "\": \"" + part + "\" is not a number");
        start = colon + 1;
    }
    g.lo = v[0];
    g.hi = v[1];
    g.step = v[2];
    if (!(g.step > 0.0) || !(g.hi >= g.lo))
        throw Error(ErrorKind::InvalidParameter, "grid \"" + text + "\" needs lo <= hi and step > 0");
    return g;
}

std::string format_grid(const GridSpec& g) {
    return format_number(g.lo) + ":" + format_number(g.hi) + ":" + format_number(g.step);
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void CsvWriter::header(const std::vector<std::string>& columns) { row(columns); }

void CsvWriter::row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os_ << ',';
        os_ << cells[i];
    }
    os_ << '\n';
}

}  // namespace pwmsnb
