#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "stabrkc/adaptive.hpp"
#include "stabrkc/format.hpp"
#include "stabrkc/methods.hpp"
#include "stabrkc/problems.hpp"
#include "stabrkc/reference.hpp"

namespace stabrkc {

inline constexpr int kSchemaVersion = 1;

// --- example bindings ----------------------------------------------------------

struct ExampleBinding {
    std::string id;
    ProblemSpec problem;
};

inline const std::vector<std::string>& example_ids() {
    static const std::vector<std::string> ids{"ex1", "ex2a", "ex2b", "ex2c", "ex3a", "ex3b", "ex4", "ex5"};
    return ids;
}

/// Parameter bindings of the named benchmark examples.
[[nodiscard]] inline ExampleBinding example_binding(const std::string& id) {
    auto with = [](const char* pid, double A, double D) {
        ProblemSpec p = default_problem_spec(pid);
        p.A = A;
        p.D = D;
        return p;
    };
    if (id == "ex1") return {id, default_problem_spec("wave2d")};
    if (id == "ex2a") return {id, with("ad1d", 0.1, 1.0)};
    if (id == "ex2b") return {id, with("ad1d", 5.0, 1.0)};
    if (id == "ex2c") return {id, with("ad1d", 5.0, 0.2)};
    if (id == "ex3a") return {id, with("brusselator2d", 0.02, 0.04)};
    if (id == "ex3b") return {id, with("brusselator2d", 2.0, 0.04)};
    if (id == "ex4") return {id, with("burgers1d", 10.0, 0.5)};
    if (id == "ex5") return {id, with("burgers2d", 4.0, 0.2)};
    throw std::invalid_argument("unknown example id '" + id + "'");
}

/// Published NPRKC work/accuracy rows for the ex2 variants, used as a comparison baseline.
struct BaselineRow {
    std::string example;
    double tol;
    std::string method;
    double err;
    long n_accept;
    long n_reject;
    long nfd;
    long nfa;
};

inline const std::vector<BaselineRow>& baseline_rows() {
    static const std::vector<BaselineRow> rows{
        {"ex2a", 1e-2, "nprkc1", 2.1550e-03, 8, 0, 434, 32},   {"ex2a", 1e-2, "nprkc2", 1.2977e-03, 10, 0, 491, 40},
        {"ex2a", 1e-5, "nprkc1", 2.6832e-05, 54, 0, 1221, 216}, {"ex2a", 1e-5, "nprkc2", 2.1540e-06, 229, 1, 2655, 920},
        {"ex2b", 1e-2, "nprkc1", 2.1688e-03, 8, 0, 426, 192},  {"ex2b", 1e-2, "nprkc2", 1.3058e-03, 10, 0, 491, 200},
        {"ex2b", 1e-5, "nprkc1", 2.6743e-05, 54, 0, 1167, 272}, {"ex2b", 1e-5, "nprkc2", 2.1452e-06, 229, 1, 2655, 920},
        {"ex2c", 1e-2, "nprkc1", 3.0295e-03, 5, 0, 142, 196},  {"ex2c", 1e-2, "nprkc2", 1.1741e-03, 5, 0, 148, 192},
        {"ex2c", 1e-5, "nprkc1", 3.7919e-06, 40, 0, 503, 212}, {"ex2c", 1e-5, "nprkc2", 3.8247e-07, 76, 0, 717, 304},
    };
    return rows;
}

[[nodiscard]] inline std::optional<BaselineRow> baseline_row(const std::string& example, double tol,
                                                      const std::string& method) {
    for (const auto& r : baseline_rows()) {
        if (r.example == example && r.method == method && std::abs(r.tol - tol) <= 1e-12 * tol) return r;
    }
    return std::nullopt;
}

// --- reference solutions ---------------------------------------------------------

struct ReferenceOptions {
    ReferenceConfig config;
    std::optional<std::filesystem::path> cache_dir;
    bool compute = true;
};

struct ReferenceResult {
    State y;
    double h_ref = 0.0;
    bool from_cache = false;
};

/// Loads the reference state for a configuration from the cache or computes (and caches) it.
[[nodiscard]] inline ReferenceResult obtain_reference(const ProblemSpec& spec, const SplitOde& ode,
                                                      const ReferenceOptions& opt) {
    const double h = stable_reference_step(ode, opt.config);
    const std::string key = problem_key(spec) + "_href=" + format_double(h);
    std::optional<ReferenceCache> cache;
    if (opt.cache_dir) cache.emplace(*opt.cache_dir);
    if (cache) {
        if (auto y = cache->load(key)) return {std::move(*y), h, true};
    }
    if (!opt.compute) throw std::runtime_error("no cached reference for " + key + " and computation disabled");
    ReferenceResult r{reference_solve(ode, h), h, false};
    if (cache) cache->store(key, r.y);
    return r;
}

// --- benchmark ------------------------------------------------------------------

struct BenchRecord {
    std::string example;
    double tol = 0.0;
    std::string method;
    int N = 0;
    double err_rms = 0.0;
    double err_max = 0.0;
    long n_accept = 0;
    long n_reject = 0;
    long nfd = 0;
    long nfa = 0;
    double wall_seconds = 0.0;
    bool audit_ok = false;

    [[nodiscard]] long nf_total() const { return nfd + nfa; }
};

[[nodiscard]] inline Estimator parse_bench_method(const std::string& id) {
    if (id == "nprkc1") return Estimator::Variant1;
    if (id == "nprkc2") return Estimator::Variant2;
    throw std::invalid_argument("unknown bench method '" + id + "' (expected nprkc1 or nprkc2)");
}

struct BenchOptions {
    std::optional<int> N;
    ReferenceOptions reference;
    AdaptiveConfig adaptive;  // tol and estimator are overwritten per cell
};

/// Adaptive run of one (tol, method) cell against a known reference state.
[[nodiscard]] inline BenchRecord bench_cell(const std::string& example, const SplitOde& ode, std::span<const double> ref,
                                            double tol, const std::string& method, AdaptiveConfig cfg) {
    cfg.tol = tol;
    cfg.estimator = parse_bench_method(method);
    cfg.record_trace = true;
    const auto t0 = std::chrono::steady_clock::now();
    const AdaptiveResult res = integrate_adaptive(ode, cfg);
    const auto t1 = std::chrono::steady_clock::now();
    const State e = difference(res.y, ref);
    BenchRecord r;
    r.example = example;
    r.tol = tol;
    r.method = method;
    r.err_rms = rms_norm(e);
    r.err_max = max_norm(e);
    r.n_accept = res.stats.n_accept;
    r.n_reject = res.stats.n_reject;
    r.nfd = res.stats.nfd;
    r.nfa = res.stats.nfa;
    r.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    const auto [ad, aa] = audit_counters(res.trace, cfg.estimator);
    r.audit_ok = ad == r.nfd && aa == r.nfa;
    return r;
}

[[nodiscard]] inline std::vector<BenchRecord> run_bench(const std::string& example, const std::vector<double>& tols,
                                                        const std::vector<std::string>& methods,
                                                        const BenchOptions& opt) {
    if (tols.empty()) throw std::invalid_argument("bench: empty tolerance list");
    if (methods.empty()) throw std::invalid_argument("bench: empty method list");
    for (double t : tols) {
        if (!(t > 0.0)) throw std::invalid_argument("bench: tolerances must be positive");
    }
    for (const auto& m : methods) (void)parse_bench_method(m);
    ExampleBinding b = example_binding(example);
    if (opt.N) b.problem.N = *opt.N;
    const SplitOde ode = make_problem(b.problem);
    const ReferenceResult ref = obtain_reference(b.problem, ode, opt.reference);
    std::vector<BenchRecord> out;
    for (double tol : tols) {
        for (const auto& m : methods) {
            out.push_back(bench_cell(example, ode, ref.y, tol, m, opt.adaptive));
            out.back().N = b.problem.N;
        }
    }
    return out;
}

inline void write_bench_csv(const std::vector<BenchRecord>& rows, std::ostream& os, bool with_time = false) {
    os << "example,tol,method,err_rms,err_max,n_accept,n_reject,nfd,nfa,nf_total,audit_ok";
    if (with_time) os << ",wall_seconds";
    os << '\n';
    for (const auto& r : rows) {
        os << r.example << ',' << format_double(r.tol) << ',' << r.method << ',' << format_double(r.err_rms) << ','
           << format_double(r.err_max) << ',' << r.n_accept << ',' << r.n_reject << ',' << r.nfd << ',' << r.nfa
           << ',' << r.nf_total() << ',' << (r.audit_ok ? "true" : "false");
        if (with_time) os << ',' << format_double(r.wall_seconds);
        os << '\n';
    }
}

[[nodiscard]] inline nlohmann::ordered_json bench_json(const std::vector<BenchRecord>& rows, bool with_time = false) {
    nlohmann::ordered_json j;
    j["schema"] = kSchemaVersion;
    j["kind"] = "bench";
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json o;
        o["example"] = r.example;
        o["tol"] = r.tol;
        o["method"] = r.method;
        o["N"] = r.N;
        o["err_rms"] = r.err_rms;
        o["err_max"] = r.err_max;
        o["n_accept"] = r.n_accept;
        o["n_reject"] = r.n_reject;
        o["nfd"] = r.nfd;
        o["nfa"] = r.nfa;
        o["nf_total"] = r.nf_total();
        o["audit_ok"] = r.audit_ok;
        if (with_time) o["wall_seconds"] = r.wall_seconds;
        const auto p = baseline_row(r.example, r.tol, r.method);
        if (p && r.N == example_binding(r.example).problem.N) {
            o["baseline"] = {{"err", p->err}, {"n_accept", p->n_accept}, {"n_reject", p->n_reject},
                          {"nfd", p->nfd}, {"nfa", p->nfa}, {"nf_total", p->nfd + p->nfa}};
        }
        arr.push_back(std::move(o));
    }
    j["records"] = std::move(arr);
    return j;
}

inline void write_trace_csv(const std::vector<TraceRecord>& trace, std::ostream& os) {
    os << "t,h,s,m,err,accepted,nfd,nfa\n";
    for (const auto& r : trace) {
        os << format_double(r.t) << ',' << format_double(r.h) << ',' << r.s << ',' << r.m << ','
           << format_double(r.err) << ',' << (r.accepted ? 1 : 0) << ',' << r.nfd << ',' << r.nfa << '\n';
    }
}

// --- convergence -------------------------------------------------------------------

struct ConvergencePoint {
    double h = 0.0;
    double err_rms = 0.0;
    double err_max = 0.0;
    bool finite = true;
};

struct ConvergenceResult {
    std::string method;
    std::string problem;
    std::vector<ConvergencePoint> points;
    double slope = 0.0;
};

/// Least-squares slope of log(err) against log(h) over the finite, nonzero points.
[[nodiscard]] inline double fit_slope(const std::vector<double>& hs, const std::vector<double>& errs) {
    if (hs.size() != errs.size()) throw std::invalid_argument("fit_slope: size mismatch");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < hs.size(); ++i) {
        if (!(errs[i] > 0.0) || !std::isfinite(errs[i]) || !(hs[i] > 0.0)) continue;
        const double x = std::log(hs[i]);
        const double y = std::log(errs[i]);
        sx += x, sy += y, sxx += x * x, sxy += x * y;
        ++n;
    }
    if (n < 2) throw std::invalid_argument("fit_slope: need at least two usable points");
    const double den = n * sxx - sx * sx;
    if (den == 0.0) throw std::invalid_argument("fit_slope: degenerate h ladder");
    return (n * sxy - sx * sy) / den;
}

/// Fixed-step global errors of one method on a ladder of step sizes.
[[nodiscard]] inline ConvergenceResult run_convergence(const SplitOde& ode, FixedStepConfig cfg,
                                                       const std::vector<double>& ladder,
                                                       std::span<const double> ref) {
    if (ladder.size() < 2) throw std::invalid_argument("convergence: need at least two step sizes");
    ConvergenceResult res;
    res.method = std::string(method_name(cfg.method));
    res.problem = ode.id;
    std::vector<double> hs, errs;
    for (double h : ladder) {
        cfg.h = h;
        ConvergencePoint pt{h};
        try {
            const auto run = integrate_fixed(ode, cfg);
            const State e = difference(run.y, ref);
            pt.err_rms = rms_norm(e);
            pt.err_max = max_norm(e);
            hs.push_back(h);
            errs.push_back(pt.err_rms);
        } catch (const NonFiniteState&) {
            pt.finite = false;
            pt.err_rms = pt.err_max = std::numeric_limits<double>::infinity();
        }
        res.points.push_back(pt);
    }
    res.slope = fit_slope(hs, errs);
    return res;
}

[[nodiscard]] inline nlohmann::ordered_json convergence_json(const ConvergenceResult& r) {
    nlohmann::ordered_json j;
    j["schema"] = kSchemaVersion;
    j["kind"] = "convergence";
    j["method"] = r.method;
    j["problem"] = r.problem;
    j["slope"] = r.slope;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& p : r.points) {
        nlohmann::ordered_json o;
        o["h"] = p.h;
        o["finite"] = p.finite;
        if (p.finite) {
            o["err_rms"] = p.err_rms;
            o["err_max"] = p.err_max;
        }
        arr.push_back(std::move(o));
    }
    j["points"] = std::move(arr);
    return j;
}

}  // namespace stabrkc
