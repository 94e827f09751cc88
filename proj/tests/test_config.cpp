#include "helpers.hpp"

#include "pwmsnb/config.hpp"
#include "pwmsnb/fixtures.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <sstream>

using namespace pwmsnb;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinRel;

namespace {

const char* kBuckVmc = R"({
  "topology": "buck",
  "power": {"vs": 5, "L": 5e-6, "C": 4e-5, "R": 5, "fs": 200000},
  "control": {"type": "vmc", "kp": 2, "vr": 3},
  "ramp": {"offset": 0, "amplitude": 1},
  "analysis": {"grid": "0.01:0.99:0.002", "harmonics": 200}
})";

std::string fixture_path(const std::string& name) { return std::string(PWMSNB_SOURCE_DIR) + "/fixtures/" + name; }

ErrorKind kind_of_failure(const std::string& text) {
    try {
        parse_config(text);
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::Parse;
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
    const auto pos = s.find(from);
    REQUIRE(pos != std::string::npos);
    return s.replace(pos, from.size(), to);
}

}  // namespace

TEST_CASE("fixture files load into models", "[config]") {
    const ConverterModel m = load_config(fixture_path("e1.json"));
    const PowerStage& ps = *m.power_stage();
    CHECK_THAT(2.0 * ps.L / (ps.R * m.period()), WithinRel(0.4, 1e-12));
    CHECK(m.topology() == Topology::Buck);
    CHECK(m.scheme_kind() == SchemeKind::CmcOpen);

    for (const auto& f : builtin_fixtures()) {
        const ConverterModel from_file = load_config(fixture_path(f.id + ".json"));
        CHECK(from_file == to_model(f.doc));
        CHECK(load_config_document(fixture_path(f.id + ".json")) == f.doc);
    }
}

TEST_CASE("optional fields take their defaults", "[config]") {
    const ConfigDocument d = parse_config(kBuckVmc);
    CHECK(d.power.r == 0.0);
    CHECK(d.power.Rc == 0.0);
    CHECK(d.ramp.offset == 0.0);
    CHECK(std::get<Vmc>(d.control.scheme).kp == 2.0);
    CHECK(d.analysis.grid.step == 0.002);
}

TEST_CASE("schema errors name the field", "[config]") {
    CHECK_THROWS_WITH(parse_config(replace(kBuckVmc, R"("kp": 2, )", "")), ContainsSubstring("control.kp"));
    CHECK(kind_of_failure(replace(kBuckVmc, R"("kp": 2, )", "")) == ErrorKind::Schema);
    CHECK_THROWS_WITH(parse_config(replace(kBuckVmc, R"("type": "vmc")", R"("type": "pid")")),
                      ContainsSubstring("control.type"));
    CHECK_THROWS_WITH(parse_config(replace(kBuckVmc, R"("R": 5)", R"("R": "five")")), ContainsSubstring("power.R"));
    CHECK_THROWS_WITH(parse_config(replace(kBuckVmc, R"("fs": 200000)", R"("fs": 200000, "extra": 1)")),
                      ContainsSubstring("power.extra"));

    const std::string ml = replace(kBuckVmc, R"("type": "vmc", "kp": 2)", R"("type": "multiloop", "ki": 1)");
    CHECK_THROWS_WITH(parse_config(ml), ContainsSubstring("control.kv"));
}

TEST_CASE("invariant errors come from the model builders", "[config]") {
    const ConfigDocument d = parse_config(replace(kBuckVmc, R"("amplitude": 1)", R"("amplitude": -1)"));
    try {
        to_model(d);
        FAIL("expected rejection");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidParameter);
        CHECK_THAT(e.what(), ContainsSubstring("amplitude"));
    }
    const ConfigDocument c = parse_config(replace(kBuckVmc, R"("type": "vmc")", R"("type": "cmc_closed")"));
    try {
        to_model(c);
        FAIL("expected rejection");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::UnsupportedScheme);
    }
}

TEST_CASE("parse errors carry line and column", "[config]") {
    const std::string bad = "{\n  \"topology\": \"buck\",\n  \"power\": {\"vs\": 5,, }\n}";
    try {
        parse_config(bad);
        FAIL("expected a parse error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Parse);
        CHECK_THAT(e.what(), ContainsSubstring("line 3"));
        CHECK_THAT(e.what(), ContainsSubstring("column"));
    }
    CHECK_THROWS_AS(load_config(fixture_path("does_not_exist.json")), Error);
}

TEST_CASE("canonical configs round-trip", "[config]") {
    const auto dir = std::filesystem::temp_directory_path() / "pwmsnb_config_test";
    std::filesystem::create_directories(dir);
    for (const auto& f : builtin_fixtures()) {
        const std::string text = dump_config(f.doc);
        CHECK(parse_config(text) == f.doc);
        CHECK(dump_config(parse_config(text)) == text);
        const std::string path = (dir / (f.id + ".json")).string();
        save_config(f.doc, path);
        CHECK(load_config(path) == to_model(f.doc));
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("grid flags", "[config]") {
    const GridSpec g = parse_grid("0.1:0.9:0.2");
    CHECK(g.lo == 0.1);
    CHECK(g.hi == 0.9);
    CHECK(g.step == 0.2);
    CHECK(g.points().size() == 5);
    CHECK(format_grid(g) == "0.1:0.9:0.2");
    CHECK(parse_grid(format_grid(GridSpec{})).points().size() == 491);
    for (const char* bad : {"0.1:0.9", "a:b:c", "0.9:0.1:0.1", "0.1:0.9:0", "0.1:0.9:-0.1"})
        CHECK_THROWS_AS(parse_grid(bad), Error);
}

TEST_CASE("number formatting and CSV", "[config]") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1.0 / 3.0) == "0.333333333333");
    CHECK(format_number(1e-7) == "1e-07");
    CHECK(format_number(-2.5e6) == "-2500000");
    CHECK(format_number(std::nan("")) == "nan");

    std::ostringstream os;
    CsvWriter w(os);
    w.header({"D", "S"});
    w.row({format_number(0.5), format_number(2.0)});
    CHECK(os.str() == "D,S\n0.5,2\n");
}

TEST_CASE("built-in fixtures pass their stored checks", "[config]") {
    CHECK(builtin_fixtures().size() == 5);
    CHECK_THROWS_AS(builtin_fixture("e9"), Error);
    for (const auto& f : builtin_fixtures()) {
        INFO(f.id);
        for (const FixtureCheck& c : run_fixture(f)) {
            INFO(c.name << ": " << c.value << " expected " << c.expected << " +- " << c.tol);
            CHECK(c.pass);
        }
    }
}
