// pwmsnb: periodic solutions, stability and saddle-node prediction for PWM
// buck/boost converters. Plot data is written as CSV.

#include "pwmsnb/average.hpp"
#include "pwmsnb/config.hpp"
#include "pwmsnb/fixtures.hpp"
#include "pwmsnb/harmonic.hpp"
#include "pwmsnb/sdstab.hpp"
#include "pwmsnb/steady.hpp"
#include "pwmsnb/sweep.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

using namespace pwmsnb;

namespace {

constexpr int kExitAnalysis = 1;
constexpr int kExitUsage = 2;
constexpr int kExitMismatch = 3;

struct Common {
    std::string config;
    std::string grid;
    int harmonics = 0;
    std::string out;
};

struct Loaded {
    ConfigDocument doc;
    ConverterModel model;
    GridSpec grid;
    HarmonicConfig harmonics;
};

Loaded load(const Common& c) {
    ConfigDocument doc = load_config_document(c.config);
    ConverterModel m = to_model(doc);
    Loaded l{doc, m, doc.analysis.grid, {}};
    if (!c.grid.empty()) l.grid = parse_grid(c.grid);
    l.harmonics.n_harmonics = c.harmonics > 0 ? c.harmonics : doc.analysis.harmonics;
    return l;
}

// Writes to --out when given, else stdout.
class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) throw Error(ErrorKind::Parse, "cannot write " + path);
        }
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

std::string num(double v) { return format_number(v); }

void add_common(CLI::App* sub, Common& c, bool grid) {
    sub->add_option("--config", c.config, "converter config (JSON)")->required()->check(CLI::ExistingFile);
    if (grid) {
        sub->add_option("--grid", c.grid, "duty grid lo:hi:step (default from config)");
        sub->add_option("--harmonics", c.harmonics, "harmonics in truncated sums (default 200)")
            ->check(CLI::PositiveNumber);
    }
    sub->add_option("--out", c.out, "output file (default stdout)");
}

void print_orbit(std::ostream& os, const ConverterModel& m, const PeriodicOrbit& orb) {
    os << "D = " << num(orb.D) << "  d = " << num(orb.d) << " s  x0(0) = (";
    for (std::size_t i = 0; i < orb.x0_0.size(); ++i) os << (i ? ", " : "") << num(orb.x0_0[i]);
    os << ")  v_o(avg) = " << num(average_output(m, orb)) << "  residual = " << num(orb.residual) << "\n";
    try {
        const StabilityReport rep = stability(m, orb);
        os << "    " << to_string(rep.classification) << ", multipliers:";
        for (const Complex& l : rep.multipliers) os << " " << num(l.real()) << (l.imag() < 0 ? "-" : "+") << num(std::abs(l.imag())) << "j";
        os << "  (|lambda|max = " << num(std::abs(rep.multipliers.front())) << ")\n";
    } catch (const Error& e) {
        os << "    stability unavailable: " << e.what() << "\n";
    }
}

int run_analyze(const Common& c, std::optional<double> duty) {
    const Loaded l = load(c);
    Output out(c.out);
    std::ostream& os = out.stream();
    const ConverterModel& m = l.model;
    os << to_string(m.topology()) << " / " << to_string(m.scheme_kind()) << ", vs = " << num(m.vs())
       << ", vr = " << num(m.vr()) << ", Vh = " << num(m.ramp().amplitude) << ", T = " << num(m.period()) << "\n";
    if (duty) {
        os << "orbit through forced duty:\n";
        print_orbit(os, m, make_orbit(m, *duty * m.period()));
        return 0;
    }
    const auto orbits = periodic_solutions(m);
    os << orbits.size() << " periodic solution(s)\n";
    for (const auto& orb : orbits) print_orbit(os, m, orb);
    for (const auto& s : saturated_solutions(m)) {
        os << (s.always_on ? "switch held on (D = 1)" : "switch held off (D = 0)") << ": x = (";
        for (std::size_t i = 0; i < s.x.size(); ++i) os << (i ? ", " : "") << num(s.x[i]);
        os << ")  " << to_string(classify(s.multipliers)) << "\n";
    }
    const DutyPrediction p = closed_form_snb_duty(m);
    os << "closed-form saddle-node duty: ";
    if (p.found()) {
        for (std::size_t i = 0; i < p.duties.size(); ++i) os << (i ? ", " : "") << num(p.duties[i]);
        os << "\n";
    } else {
        os << (p.status == DutyStatus::NoSnb ? "none (" : "not available (") << p.reason << ")\n";
    }
    return 0;
}

int run_splot(const Common& c) {
    const Loaded l = load(c);
    const PlotSeries p = s_plot(l.model, l.grid);
    Output out(c.out);
    CsvWriter csv(out.stream());
    csv.header({"D", "S", "hdot"});
    for (std::size_t i = 0; i < p.grid.size(); ++i) csv.row({num(p.grid[i]), num(p.values[i]), num(p.reference_level)});
    return 0;
}

TransferFunction buck_gain(const ConverterModel& m) {
    if (m.topology() != Topology::Buck)
        throw Error(ErrorKind::UnsupportedScheme, "harmonic-balance plots are available for the buck converter only");
    return hb_gain(*m.power_stage(), *m.control());
}

int run_hplot(const Common& c) {
    const Loaded l = load(c);
    const ConverterModel& m = l.model;
    const PlotSeries p =
        h_plot(buck_gain(m), l.grid, m.power_stage()->omega_s(), m.vs(), m.ramp().amplitude, l.harmonics);
    Output out(c.out);
    CsvWriter csv(out.stream());
    csv.header({"D", "reH", "imH", "ref"});
    for (std::size_t i = 0; i < p.grid.size(); ++i)
        csv.row({num(p.grid[i]), num(p.values[i]), num(p.imag[i]), num(p.reference_level)});
    return 0;
}

int run_lplot(const Common& c) {
    const Loaded l = load(c);
    const LPlots lp = l_plots(l.model, l.grid, std::nullopt, l.harmonics);
    Output out(c.out);
    CsvWriter csv(out.stream());
    const bool has_l1 = lp.L1.has_value();
    if (has_l1)
        csv.header({"D", "L1", "L2", "ref1", "ref2"});
    else
        csv.header({"D", "L2", "ref2"});
    for (std::size_t i = 0; i < lp.L2.grid.size(); ++i) {
        if (has_l1)
            csv.row({num(lp.L2.grid[i]), num(lp.L1->values[i]), num(lp.L2.values[i]), num(lp.L1->reference_level),
                     num(lp.L2.reference_level)});
        else
            csv.row({num(lp.L2.grid[i]), num(lp.L2.values[i]), num(lp.L2.reference_level)});
    }
    return 0;
}

int run_avg(const Common& c) {
    const Loaded l = load(c);
    const PlotSeries p = avg_plot(l.model, l.grid);
    Output out(c.out);
    CsvWriter csv(out.stream());
    csv.header({"D", "avg_residual"});
    for (std::size_t i = 0; i < p.grid.size(); ++i) csv.row({num(p.grid[i]), num(p.values[i])});
    return 0;
}

int run_sweep(const Common& c, const std::string& param, double lo, double hi, int steps, int threads, int n_grid) {
    const Loaded l = load(c);
    SweepOptions opts;
    opts.threads = threads;
    if (n_grid > 0) opts.solve.n_grid = n_grid;
    const SweepResult r = branch_sweep(l.model, param, lo, hi, steps, opts);
    for (const auto& f : r.failures) std::cerr << "warning: " << param << " = " << num(f.param) << ": " << f.message << "\n";
    Output out(c.out);
    CsvWriter csv(out.stream());
    csv.header({"param", "D", "d", "iL0", "vC0", "vo", "class", "lam_re", "lam_im"});
    for (const BranchRecord& b : r.branches)
        csv.row({num(b.param), num(b.D), num(b.d), num(b.x0_0[0]), num(b.x0_0[1]), num(b.v_o), to_string(b.classification),
                 num(b.max_multiplier.real()), num(b.max_multiplier.imag())});
    return 0;
}

int run_locate(const Common& c, const std::string& param, double lo, double hi, std::optional<double> guess) {
    const Loaded l = load(c);
    const SnbPoint p = locate_snb(l.model, param, lo, hi, guess);
    Output out(c.out);
    CsvWriter csv(out.stream());
    csv.header({"param_star", "D_star", "residual_norm"});
    csv.row({num(p.param_star), num(p.D_star), num(p.residual_norm)});
    return 0;
}

int run_simulate(const Common& c, const std::vector<double>& x0_in, int periods) {
    const Loaded l = load(c);
    Vector x0 = x0_in;
    if (x0.empty()) {
        const auto orbits = periodic_solutions(l.model);
        x0 = orbits.empty() ? Vector(l.model.dim(), 0.0) : orbits.front().x0_0;
    }
    const auto log = simulate(l.model, x0, periods);
    Output out(c.out);
    CsvWriter csv(out.stream());
    csv.header({"n", "iL", "vC", "d_event"});
    for (const auto& r : log) csv.row({std::to_string(r.n), num(r.x[0]), num(r.x[1]), num(r.d_event)});
    return 0;
}

int run_example(const std::string& id) {
    const Fixture& f = builtin_fixture(id);
    std::cout << f.id << ": " << f.description << "\n";
    bool ok = true;
    for (const FixtureCheck& ch : run_fixture(f)) {
        ok = ok && ch.pass;
        std::cout << (ch.pass ? "  ok       " : "  MISMATCH ") << ch.name << " = " << num(ch.value) << " (expected "
                  << num(ch.expected) << " +- " << num(ch.tol) << ")\n";
    }
    if (!f.note.empty()) std::cout << "  note: " << f.note << "\n";
    std::cout << (ok ? "all checks passed" : "fixture mismatch") << "\n";
    return ok ? 0 : kExitMismatch;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Periodic solutions, stability and saddle-node prediction for PWM buck/boost converters"};
    app.require_subcommand(1);

    Common common;
    std::optional<double> duty;
    std::string param;
    double lo = 0.0, hi = 0.0;
    int steps = 200, threads = 0, n_grid = 0, periods = 100;
    std::optional<double> guess;
    std::vector<double> x0;
    std::string example_id;

    auto* analyze = app.add_subcommand("analyze", "periodic solutions, multipliers and classification");
    add_common(analyze, common, false);
    analyze->add_option("--duty", duty, "evaluate the orbit through this duty ratio instead")->check(CLI::Range(0.0, 1.0));

    auto* splot = app.add_subcommand("splot", "S plot as CSV");
    add_common(splot, common, true);
    auto* hplot = app.add_subcommand("hplot", "harmonic-balance H plot as CSV (buck)");
    add_common(hplot, common, true);
    auto* lplot = app.add_subcommand("lplot", "loop-gain L1/L2 plots as CSV (buck)");
    add_common(lplot, common, true);
    auto* avg = app.add_subcommand("avg", "averaged saddle-node residual as CSV");
    add_common(avg, common, true);

    auto* sweep = app.add_subcommand("sweep", "bifurcation sweep as CSV");
    add_common(sweep, common, false);
    sweep->add_option("--param", param, "parameter (vs, vr/ic, Vh, L, C, R, r, fs, kp, ki, kv)")->required();
    sweep->add_option("--lo", lo)->required();
    sweep->add_option("--hi", hi)->required();
    sweep->add_option("--steps", steps, "number of parameter steps")->check(CLI::Range(2, 1000000));
    sweep->add_option("--threads", threads, "worker threads (default PWMSNB_THREADS or all cores)")
        ->check(CLI::NonNegativeNumber);
    sweep->add_option("--scan", n_grid, "duty scan points per parameter value (default 2000)")
        ->check(CLI::Range(10, 1000000));

    auto* locate = app.add_subcommand("locate-snb", "saddle-node point as a CSV row");
    add_common(locate, common, false);
    locate->add_option("--param", param)->required();
    locate->add_option("--lo", lo)->required();
    locate->add_option("--hi", hi)->required();
    locate->add_option("--duty-guess", guess, "starting duty ratio")->check(CLI::Range(0.0, 1.0));

    auto* sim = app.add_subcommand("simulate", "stroboscopic trajectory as CSV");
    add_common(sim, common, false);
    sim->add_option("--x0", x0, "initial state iL,vC (default: first periodic solution)")->delimiter(',')->expected(2);
    sim->add_option("--periods", periods)->check(CLI::Range(1, 100000000));

    auto* example = app.add_subcommand("example", "run a built-in reference converter and compare");
    example->add_option("id", example_id, "e1, e2, e3, e4 or e5")->required()->check(CLI::IsMember({"e1", "e2", "e3", "e4", "e5"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*analyze) return run_analyze(common, duty);
        if (*splot) return run_splot(common);
        if (*hplot) return run_hplot(common);
        if (*lplot) return run_lplot(common);
        if (*avg) return run_avg(common);
        if (*sweep) return run_sweep(common, param, lo, hi, steps, threads, n_grid);
        if (*locate) return run_locate(common, param, lo, hi, guess);
        if (*sim) return run_simulate(common, x0, periods);
        if (*example) return run_example(example_id);
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        return kExitAnalysis;
    }
    return kExitUsage;
}
