#include <catch_amalgamated.hpp>

#include <cstdio>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

struct RunResult {
    int status;
    std::string out;
};

RunResult run(const std::string& args) {
    const std::string cmd = std::string(PWMSNB_CLI) + " " + args + " 2>&1";
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::string out;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
    const int raw = pclose(p);
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, out};
}

std::string fixture(const std::string& name) { return std::string(PWMSNB_FIXTURES) + "/" + name + ".json"; }

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST_CASE("built-in examples pass", "[cli]") {
    for (const char* id : {"e1", "e2", "e3", "e4", "e5"}) {
        const RunResult r = run(std::string("example ") + id);
        INFO(r.out);
        CHECK(r.status == 0);
    }
    const RunResult e1 = run("example e1");
    CHECK_THAT(e1.out, ContainsSubstring("ic"));
}

TEST_CASE("S plot of the current-mode boost changes sign once", "[cli]") {
    const RunResult r = run("splot --config " + fixture("e4") + " --grid 0.01:0.99:0.002");
    REQUIRE(r.status == 0);
    const auto rows = parse_csv(r.out);
    REQUIRE(rows.size() > 2);
    CHECK(rows[0] == std::vector<std::string>{"D", "S", "hdot"});
    std::vector<double> cross;
    double prev_d = 0.0, prev_v = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        REQUIRE(rows[i].size() == 3);
        const double d = std::stod(rows[i][0]);
        const double v = std::stod(rows[i][1]) - std::stod(rows[i][2]);
        if (i > 1 && (prev_v < 0.0) != (v < 0.0)) cross.push_back(prev_d + (d - prev_d) * prev_v / (prev_v - v));
        prev_d = d;
        prev_v = v;
    }
    REQUIRE(cross.size() == 1);
    CHECK_THAT(cross[0], WithinAbs(0.910, 0.002));
}

TEST_CASE("locate-snb prints one row", "[cli]") {
    const RunResult r = run("locate-snb --config " + fixture("e5") + " --param vr --lo 0.45 --hi 0.55");
    REQUIRE(r.status == 0);
    const auto rows = parse_csv(r.out);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == std::vector<std::string>{"param_star", "D_star", "residual_norm"});
    CHECK_THAT(std::stod(rows[1][0]), WithinAbs(0.496, 0.002));
    CHECK_THAT(std::stod(rows[1][1]), WithinAbs(0.650, 0.005));
}

TEST_CASE("other subcommands emit their headers", "[cli]") {
    const std::string e2 = fixture("e2");
    CHECK(parse_csv(run("hplot --config " + e2 + " --grid 0.1:0.9:0.1").out)[0] ==
          std::vector<std::string>{"D", "reH", "imH", "ref"});
    CHECK(parse_csv(run("lplot --config " + e2 + " --grid 0.1:0.9:0.1").out)[0] ==
          std::vector<std::string>{"D", "L1", "L2", "ref1", "ref2"});
    CHECK(parse_csv(run("lplot --config " + fixture("e1") + " --grid 0.1:0.9:0.1").out)[0] ==
          std::vector<std::string>{"D", "L2", "ref2"});
    CHECK(parse_csv(run("avg --config " + fixture("e3") + " --grid 0.1:0.9:0.1").out)[0] ==
          std::vector<std::string>{"D", "avg_residual"});
    CHECK(parse_csv(run("sweep --config " + fixture("e5") + " --param vr --lo 0.47 --hi 0.5 --steps 3").out)[0] ==
          std::vector<std::string>{"param", "D", "d", "iL0", "vC0", "vo", "class", "lam_re", "lam_im"});
    const RunResult sim = run("simulate --config " + fixture("e3") + " --x0 30,0 --periods 5");
    REQUIRE(sim.status == 0);
    const auto rows = parse_csv(sim.out);
    CHECK(rows[0] == std::vector<std::string>{"n", "iL", "vC", "d_event"});
    CHECK(rows.size() == 6);
    const RunResult an = run("analyze --config " + fixture("e3"));
    CHECK(an.status == 0);
    CHECK_THAT(an.out, ContainsSubstring("unstable"));
}

TEST_CASE("exit codes", "[cli]") {
    CHECK(run("").status == 2);
    CHECK(run("frobnicate").status == 2);
    CHECK(run("splot --config " + fixture("e4") + " --bogus").status == 2);
    CHECK(run("splot --config /nonexistent.json").status == 2);
    CHECK(run("example e9").status == 2);

    const RunResult bad = run("locate-snb --config " + fixture("e1") + " --param ic --lo 1.3 --hi 1.4");
    CHECK(bad.status == 1);
    CHECK_FALSE(bad.out.empty());
    CHECK(run("lplot --config " + fixture("e3")).status == 1);
}

TEST_CASE("output is byte-identical across runs", "[cli]") {
    const std::string args = "sweep --config " + fixture("e3") + " --param vr --lo 6 --hi 7.2 --steps 12 --threads 2";
    const RunResult a = run(args);
    const RunResult b = run(args);
    REQUIRE(a.status == 0);
    CHECK(a.out == b.out);
    CHECK(a.out.find('\r') == std::string::npos);
    const RunResult c = run("splot --config " + fixture("e1"));
    CHECK(c.out == run("splot --config " + fixture("e1")).out);
}
