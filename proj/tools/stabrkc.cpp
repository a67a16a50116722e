// stabrkc command-line driver: stability scans, benchmarks, convergence studies
// and single integrations.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stabrkc/stabrkc.hpp"

namespace {

using namespace stabrkc;

/// Writes to --out if given, else stdout.
class Sink {
public:
    explicit Sink(const std::string& path) {
        if (!path.empty() && path != "-") {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw std::runtime_error("cannot open output file " + path);
        }
    }
    std::ostream& os() { return file_ ? static_cast<std::ostream&>(*file_) : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

enum class Format { Csv, Json };

struct Common {
    std::string out;
    Format format = Format::Csv;
    std::uint64_t seed = kDefaultSeed;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--out", c.out, "Output path (default stdout)")->envname("STABRKC_OUT");
    sub->add_option("--format", c.format, "Output format")
        ->transform(CLI::CheckedTransformer(std::map<std::string, Format>{{"csv", Format::Csv}, {"json", Format::Json}},
                                            CLI::ignore_case))
        ->envname("STABRKC_FORMAT");
    sub->add_option("--seed", c.seed, "Seed of the power-iteration radius estimator")->envname("STABRKC_SEED");
}

struct ProblemArgs {
    std::string id = "ad1d";
    std::optional<int> n;
    std::optional<double> A, D, B, A1, A2, D1, D2, t_end;
    bool constant_wave = false;
    bool analytic_rho = false;
};

void add_problem(CLI::App* sub, ProblemArgs& p) {
    sub->add_option("--problem", p.id, "Problem id")
        ->check(CLI::IsMember(problem_ids()))
        ->envname("STABRKC_PROBLEM");
    sub->add_option("--n", p.n, "Grid points per axis")->check(CLI::Range(3, 1 << 20))->envname("STABRKC_N");
    sub->add_option("--A", p.A, "Advection coefficient");
    sub->add_option("--D", p.D, "Diffusion coefficient");
    sub->add_option("--B", p.B, "wave2d damping");
    sub->add_option("--A1", p.A1, "wave2d x wave speed squared");
    sub->add_option("--A2", p.A2, "wave2d y wave speed squared");
    sub->add_option("--D1", p.D1, "wave2d constant x viscosity (with --constant-wave)");
    sub->add_option("--D2", p.D2, "wave2d constant y viscosity (with --constant-wave)");
    sub->add_option("--t-end", p.t_end, "Final time");
    sub->add_flag("--constant-wave", p.constant_wave, "wave2d: constant coefficients, periodic, no source");
    sub->add_flag("--analytic-rho", p.analytic_rho, "Burgers: analytic rho_A bound instead of power iteration");
}

ProblemSpec to_spec(const ProblemArgs& a, std::uint64_t seed) {
    ProblemSpec p = default_problem_spec(a.id);
    if (a.n) p.N = *a.n;
    if (a.A) p.A = *a.A;
    if (a.D) p.D = *a.D;
    if (a.B) p.B = *a.B;
    if (a.A1) p.A1 = *a.A1;
    if (a.A2) p.A2 = *a.A2;
    if (a.D1) p.D1 = *a.D1;
    if (a.D2) p.D2 = *a.D2;
    if (a.t_end) p.t_end = *a.t_end;
    p.wave_benchmark_fields = !a.constant_wave;
    p.analytic_rho_A = a.analytic_rho;
    p.seed = seed;
    return p;
}

void write_state_csv(std::span<const double> y, std::ostream& os) {
    os << "i,y\n";
    for (std::size_t i = 0; i < y.size(); ++i) os << i << ',' << format_double(y[i]) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Partitioned Runge-Kutta-Chebyshev integrators: stability, benchmarks, convergence"};
    app.set_config("--config", "", "Key-value configuration file mirroring the command-line flags");
    app.require_subcommand(1);

    // region
    Common region_c;
    RegionSpec region;
    std::string region_method = "nprkc";
    double p_min = -70, p_max = 1, q_min = -10, q_max = 10;
    int np = 401, nq = 201;
    auto* reg = app.add_subcommand("region", "Sample |R(p, q)| on a grid");
    add_common(reg, region_c);
    reg->add_option("--method", region_method, "rkc | prkc | arkc | nprkc")
        ->check(CLI::IsMember({"rkc", "prkc", "arkc", "nprkc"}))
        ->envname("STABRKC_METHOD");
    reg->add_option("--s", region.s, "Chebyshev stages")->check(CLI::Range(2, kMaxStages));
    reg->add_option("--m", region.m, "NPRKC advection blocks")->check(CLI::PositiveNumber);
    reg->add_option("--eta", region.eta, "Damping parameter (arkc defaults to its schedule)");
    reg->add_option("--p-min", p_min);
    reg->add_option("--p-max", p_max);
    reg->add_option("--q-min", q_min);
    reg->add_option("--q-max", q_max);
    reg->add_option("--np", np, "Samples along p");
    reg->add_option("--nq", nq, "Samples along q");

    // bench
    Common bench_c;
    std::string example = "ex2a";
    std::vector<double> bench_tols;
    std::vector<std::string> bench_methods{"nprkc1", "nprkc2"};
    std::optional<int> bench_n;
    bool no_compute_ref = false;
    bool timing = false;
    std::string cache_dir = ".stabrkc-cache";
    double h_ref = kDefaultRefStep;
    auto* bench = app.add_subcommand("bench", "Adaptive benchmark table for one example");
    add_common(bench, bench_c);
    bench->add_option("--example", example, "Example id")->check(CLI::IsMember(example_ids()))
        ->envname("STABRKC_EXAMPLE");
    bench->add_option("--tol", bench_tols, "Tolerances")->required()->delimiter(',')->envname("STABRKC_TOL");
    bench->add_option("--method", bench_methods, "nprkc1 and/or nprkc2")
        ->delimiter(',')
        ->check(CLI::IsMember({"nprkc1", "nprkc2"}))
        ->envname("STABRKC_METHOD");
    bench->add_option("--n", bench_n, "Override grid size")->check(CLI::Range(3, 1 << 20))->envname("STABRKC_N");
    bench->add_flag("--no-compute-ref", no_compute_ref, "Fail instead of computing a missing reference")
        ->envname("STABRKC_NO_COMPUTE_REF");
    bench->add_option("--cache-dir", cache_dir, "Reference cache directory")->envname("STABRKC_CACHE_DIR");
    bench->add_option("--h-ref", h_ref, "Initial reference step (halved until stable)")->check(CLI::PositiveNumber);
    bench->add_flag("--timing", timing, "Include wall time (breaks byte-determinism)");

    // convergence
    Common conv_c;
    ProblemArgs conv_p;
    std::string conv_method = "nprkc";
    std::vector<double> ladder;
    FixedStepConfig conv_cfg;
    std::optional<int> conv_s, conv_m;
    auto* conv = app.add_subcommand("convergence", "Fixed-step global error on a step-size ladder");
    add_common(conv, conv_c);
    add_problem(conv, conv_p);
    conv->add_option("--method", conv_method, "rkc | prkc | arkc | nprkc | rk3 | prkc-rk3 | midpoint")
        ->envname("STABRKC_METHOD");
    conv->add_option("--h-ladder", ladder, "Step sizes")->required()->delimiter(',');
    conv->add_option("--s", conv_s, "Chebyshev stages (default: chosen for the largest h)");
    conv->add_option("--m", conv_m, "Advection blocks (default: chosen for the largest h)");
    conv->add_option("--eta", conv_cfg.eta, "Damping parameter");

    // integrate
    Common int_c;
    ProblemArgs int_p;
    std::string int_method = "nprkc2";
    double int_tol = 1e-3;
    std::optional<double> int_h;
    std::optional<int> int_s, int_m;
    std::string trace_path;
    auto* integ = app.add_subcommand("integrate", "Integrate one problem and write the final state");
    add_common(integ, int_c);
    add_problem(integ, int_p);
    integ->add_option("--method", int_method, "nprkc1 | nprkc2 (adaptive) or a fixed-step method with --step")
        ->envname("STABRKC_METHOD");
    integ->add_option("--tol", int_tol, "Tolerance (adaptive)")->check(CLI::PositiveNumber)->envname("STABRKC_TOL");
    integ->add_option("--step", int_h, "Fixed step")->check(CLI::PositiveNumber);
    integ->add_option("--s", int_s, "Fixed-step Chebyshev stages");
    integ->add_option("--m", int_m, "Fixed-step advection blocks");
    integ->add_option("--trace", trace_path, "Write the adaptive step trace CSV here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*reg) {
            region.method = *parse_region_method(region_method);
            if (region.method == RegionMethod::Arkc && reg->count("--eta") == 0) region.eta = arkc_eta(region.s);
            const auto grid = scan_region(region, p_min, p_max, q_min, q_max, np, nq);
            Sink sink(region_c.out);
            if (region_c.format == Format::Csv) {
                write_grid_csv(grid, sink.os());
            } else {
                nlohmann::ordered_json j;
                j["schema"] = kSchemaVersion;
                j["kind"] = "region";
                j["method"] = region_method;
                j["s"] = region.s;
                j["m"] = region.m;
                j["eta"] = region.eta;
                j["p"] = {p_min, p_max, np};
                j["q"] = {q_min, q_max, nq};
                j["absR"] = grid.values;
                sink.os() << j.dump(1) << '\n';
            }
            return 0;
        }
        if (*bench) {
            BenchOptions opt;
            opt.N = bench_n;
            opt.reference.compute = !no_compute_ref;
            opt.reference.config.h_ref = h_ref;
            if (!cache_dir.empty()) opt.reference.cache_dir = cache_dir;
            const auto rows = run_bench(example, bench_tols, bench_methods, opt);
            Sink sink(bench_c.out);
            if (bench_c.format == Format::Csv) {
                write_bench_csv(rows, sink.os(), timing);
            } else {
                sink.os() << bench_json(rows, timing).dump(1) << '\n';
            }
            return 0;
        }
        if (*conv) {
            const auto method = parse_method(conv_method);
            if (!method) throw std::invalid_argument("unknown method '" + conv_method + "'");
            const ProblemSpec spec = to_spec(conv_p, conv_c.seed);
            const SplitOde ode = make_problem(spec);
            conv_cfg.method = *method;
            double hmax = 0.0;
            for (double h : ladder) hmax = std::max(hmax, h);
            const auto sm = select_s_m(hmax, ode.rho_D(ode.y0), ode.rho_A(ode.y0));
            conv_cfg.s = conv_s.value_or(sm.s);
            conv_cfg.m = conv_m.value_or(sm.m);
            const auto ref = obtain_reference(spec, ode, ReferenceOptions{});
            const auto res = run_convergence(ode, conv_cfg, ladder, ref.y);
            Sink sink(conv_c.out);
            if (conv_c.format == Format::Json) {
                sink.os() << convergence_json(res).dump(1) << '\n';
            } else {
                sink.os() << "h,err_rms,err_max,finite\n";
                for (const auto& p : res.points) {
                    sink.os() << format_double(p.h) << ',' << format_double(p.err_rms) << ','
                              << format_double(p.err_max) << ',' << (p.finite ? "true" : "false") << '\n';
                }
                sink.os() << "# slope," << format_double(res.slope) << '\n';
            }
            return 0;
        }
        if (*integ) {
            const ProblemSpec spec = to_spec(int_p, int_c.seed);
            const SplitOde ode = make_problem(spec);
            State y;
            StepStats stats;
            if (int_method == "nprkc1" || int_method == "nprkc2") {
                AdaptiveConfig cfg;
                cfg.tol = int_tol;
                cfg.estimator = parse_bench_method(int_method);
                const auto res = integrate_adaptive(ode, cfg);
                y = res.y;
                stats = res.stats;
                if (!trace_path.empty()) {
                    Sink t(trace_path);
                    write_trace_csv(res.trace, t.os());
                }
            } else {
                const auto method = parse_method(int_method);
                if (!method) throw std::invalid_argument("unknown method '" + int_method + "'");
                if (!int_h) throw std::invalid_argument("fixed-step method needs --step");
                FixedStepConfig cfg;
                cfg.method = *method;
                cfg.h = *int_h;
                const auto sm = select_s_m(cfg.h, ode.rho_D(ode.y0), ode.rho_A(ode.y0));
                cfg.s = int_s.value_or(sm.s);
                cfg.m = int_m.value_or(sm.m);
                const auto res = integrate_fixed(ode, cfg);
                y = res.y;
                stats = res.stats;
            }
            std::cerr << "steps " << stats.n_accept << " rejected " << stats.n_reject << " nfd " << stats.nfd
                      << " nfa " << stats.nfa << '\n';
            Sink sink(int_c.out);
            if (int_c.format == Format::Csv) {
                write_state_csv(y, sink.os());
            } else {
                nlohmann::ordered_json j;
                j["schema"] = kSchemaVersion;
                j["kind"] = "integrate";
                j["problem"] = problem_key(spec);
                j["n_accept"] = stats.n_accept;
                j["n_reject"] = stats.n_reject;
                j["nfd"] = stats.nfd;
                j["nfa"] = stats.nfa;
                j["y"] = y;
                sink.os() << j.dump(1) << '\n';
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
