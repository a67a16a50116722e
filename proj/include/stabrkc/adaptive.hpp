#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stabrkc/chebyshev.hpp"
#include "stabrkc/methods.hpp"
#include "stabrkc/stability.hpp"
#include "stabrkc/state.hpp"

namespace stabrkc {

/// Error-estimate variants: 1 = max(|err_D|, |err_A|) with order p = 3,
/// 2 = max(|err~_D|, |err_A|^{2/3}) with p = 2.
enum class Estimator { Variant1 = 1, Variant2 = 2 };

[[nodiscard]] constexpr double controller_order(Estimator e) noexcept {
    return e == Estimator::Variant1 ? 3.0 : 2.0;
}

struct AdaptiveConfig {
    double tol = 1e-3;
    Estimator estimator = Estimator::Variant2;
    double fac = 0.8;
    std::optional<double> h_init;
    double h_min = 1e-14;
    double h_max = std::numeric_limits<double>::infinity();
    double growth_cap = 2.0;
    double shrink_floor = 0.1;
    double eta = kDefaultEta;
    int max_stages = kMaxStages;
    int max_consecutive_failures = 20;
    bool record_trace = true;

    void validate() const {
        if (!(tol > 0.0)) throw std::invalid_argument("AdaptiveConfig: tol must be > 0");
        if (!(fac > 0.0 && fac < 1.0)) throw std::invalid_argument("AdaptiveConfig: fac must lie in (0, 1)");
        if (!(growth_cap > 1.0)) throw std::invalid_argument("AdaptiveConfig: growth_cap must be > 1");
        if (!(h_min > 0.0) || !(h_min <= h_max)) throw std::invalid_argument("AdaptiveConfig: need 0 < h_min <= h_max");
        if (h_init && !(*h_init >= h_min && *h_init <= h_max)) {
            throw std::invalid_argument("AdaptiveConfig: h_init outside [h_min, h_max]");
        }
        if (max_stages < 2 || max_stages > kMaxStages) throw std::invalid_argument("AdaptiveConfig: bad max_stages");
    }
};

/// Component estimates of one step; the unused D-estimate of a variant is empty.
struct ErrorEstimate {
    State err_D;
    State err_tilde_D;
    State err_A;
    double err = 0.0;
};

/// RKC local-error estimate (1/15)(12(K_0 - K_s) + 6h(F_D(K_0) + F_D(K_s))).
[[nodiscard]] inline State est_err_D(std::span<const double> K0, std::span<const double> Ks,
                                     std::span<const double> FD_K0, std::span<const double> FD_Ks, double h) {
    State e(K0.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
        e[i] = (12.0 * (K0[i] - Ks[i]) + 6.0 * h * (FD_K0[i] + FD_Ks[i])) / 15.0;
    }
    return e;
}

/// First-order embedded solution (1 - w) K_0 + w K_{s1}, w = 1 / (b_{s1} T'_{s1}(ω0) ω1).
[[nodiscard]] inline State embedded_tilde_Ks(std::span<const double> K0, std::span<const double> Ks1,
                                             const ChebCoeffs& c) {
    const int s1 = embedded_stage(c.s);
    if (s1 < 1) throw std::invalid_argument("embedded_tilde_Ks: needs floor(4s/5) >= 1");
    const double w = 1.0 / (c.b[s1] * c.T[s1].d1 * c.omega1);
    State k(K0.size());
    for (std::size_t i = 0; i < k.size(); ++i) k[i] = (1.0 - w) * K0[i] + w * Ks1[i];
    return k;
}

/// y_{n+1} minus the second-order embedded f_A solution built from the retained
/// block evaluations; uses no new f_A evaluations.
[[nodiscard]] inline State est_err_A(const StepOutput& step, double h, int m) {
    if (m < 1 || static_cast<int>(step.fa_block_start.size()) != m ||
        static_cast<int>(step.fa_block_mid.size()) != m) {
        throw std::invalid_argument("est_err_A: step does not carry m f_A blocks");
    }
    const double md = static_cast<double>(m);
    State k = step.Ks;
    for (int i = 0; i < m; ++i) {
        const auto& f1 = step.fa_block_start[static_cast<std::size_t>(i)];
        const auto& f2 = step.fa_block_mid[static_cast<std::size_t>(i)];
        for (std::size_t j = 0; j < k.size(); ++j) k[j] += -(h / md) * f1[j] + (1.5 * h / md) * f2[j];
    }
    return difference(step.y_next, k);
}

[[nodiscard]] inline double combine_err(const ErrorEstimate& e, Estimator variant) {
    const double a = rms_norm(e.err_A);
    if (variant == Estimator::Variant1) return std::max(rms_norm(e.err_D), a);
    return std::max(rms_norm(e.err_tilde_D), std::pow(a, 2.0 / 3.0));
}

struct StepBounds {
    double growth_cap = 2.0;
    double shrink_floor = 0.1;
    double h_min = 0.0;
    double h_max = std::numeric_limits<double>::infinity();
};

/// fac * h * (tol/err)^{1/p}, limited to [shrink_floor h, growth_cap h] and [h_min, h_max].
[[nodiscard]] inline double new_h(double h, double err, double tol, Estimator variant, double fac,
                                  const StepBounds& b = {}) {
    double hn = err > 0.0 ? fac * h * std::pow(tol / err, 1.0 / controller_order(variant)) : b.growth_cap * h;
    hn = std::clamp(hn, b.shrink_floor * h, b.growth_cap * h);
    return std::clamp(hn, b.h_min, b.h_max);
}

namespace detail {

/// ceil with a relative slack so that values a few ulps above an integer round down.
[[nodiscard]] inline long ceil_slack(double x) {
    return static_cast<long>(std::ceil(x - 1e-12 * std::max(1.0, std::abs(x))));
}

}  // namespace detail

struct StageChoice {
    int s = 2;
    int m = 1;
};

/// Smallest (s, m) whose certified rectangle covers h ρ_D on the real axis and h ρ_A on the imaginary axis.
[[nodiscard]] inline StageChoice select_s_m(double h, double rho_D, double rho_A) {
    if (rho_D < 0.0 || rho_A < 0.0) throw std::invalid_argument("select_s_m: radii must be >= 0");
    const long s = detail::ceil_slack(std::sqrt(h * rho_D / kRealAxisFactor + 1.0));
    const long m = detail::ceil_slack(h * rho_A / kImagAxisFactor);
    return {static_cast<int>(std::max(2L, s)), static_cast<int>(std::max(1L, m))};
}

struct TraceRecord {
    double t = 0.0;  // step start
    double h = 0.0;
    int s = 0;
    int m = 0;
    double err = 0.0;
    bool accepted = false;
    bool non_finite = false;
    int nfd = 0;
    int nfa = 0;
};

struct AdaptiveResult {
    State y;
    StepStats stats;
    std::vector<TraceRecord> trace;
};

[[nodiscard]] inline double default_h_init(const SplitOde& ode, double rho_D) {
    return std::min((ode.t_end - ode.t0) / 100.0, 10.0 / std::max(rho_D, 1.0));
}

/// Variable-step NPRKC integration with the selected error estimator.
///
/// A step is accepted iff err <= tol. Non-finite stages count as a rejection and
/// halve h; 20 consecutive failures or h < h_min abort with std::runtime_error.
[[nodiscard]] inline AdaptiveResult integrate_adaptive(const SplitOde& ode, const AdaptiveConfig& cfg) {
    cfg.validate();
    if (ode.y0.size() != ode.dim) throw std::invalid_argument("integrate_adaptive: y0 size != dim");

    long fd_calls = 0;
    long fa_calls = 0;
    SplitOde counted = ode;
    counted.f_D = [&fd_calls, f = ode.f_D](std::span<const double> y, std::span<double> o) {
        ++fd_calls;
        f(y, o);
    };
    counted.f_A = [&fa_calls, f = ode.f_A](std::span<const double> y, std::span<double> o) {
        ++fa_calls;
        f(y, o);
    };

    AdaptiveResult res;
    res.y = ode.y0;
    double t = ode.t0;
    double rho_D = ode.rho_D(res.y);
    double rho_A = ode.rho_A(res.y);
    long since_D = 0;
    long since_A = 0;

    double h = cfg.h_init.value_or(std::clamp(default_h_init(ode, rho_D), cfg.h_min, cfg.h_max));
    const StepBounds bounds{cfg.growth_cap, cfg.shrink_floor, cfg.h_min, cfg.h_max};
    const double t_eps = 1e-13 * std::max(1.0, std::abs(ode.t_end - ode.t0));
    int failures = 0;

    while (t < ode.t_end - t_eps) {
        if (t + h > ode.t_end) h = ode.t_end - t;
        StageChoice sm = select_s_m(h, rho_D, rho_A);
        if (sm.s > cfg.max_stages) {
            const double smax = static_cast<double>(cfg.max_stages);
            h = kRealAxisFactor * (smax * smax - 1.0) / rho_D * (1.0 - 1e-12);
            sm = select_s_m(h, rho_D, rho_A);
        }
        const auto coeffs = cached_rkc_coeffs(sm.s, cfg.eta);

        TraceRecord rec{t, h, sm.s, sm.m};
        const long fd0 = fd_calls;
        const long fa0 = fa_calls;
        std::optional<StepOutput> out;
        double err = std::numeric_limits<double>::infinity();
        try {
            out = nprkc_step(counted, res.y, h, *coeffs, sm.m);
            ErrorEstimate est;
            if (cfg.estimator == Estimator::Variant1) {
                const State fd_ks = eval(counted.f_D, out->Ks);
                est.err_D = est_err_D(out->K0, out->Ks, out->FD_K0, fd_ks, h);
            } else {
                est.err_tilde_D = difference(out->Ks, embedded_tilde_Ks(out->K0, out->Ks1, *coeffs));
            }
            est.err_A = est_err_A(*out, h, sm.m);
            err = combine_err(est, cfg.estimator);
            if (!std::isfinite(err)) throw NonFiniteState("integrate_adaptive(estimate)", res.stats.n_accept);
        } catch (const NonFiniteState&) {
            out.reset();
            rec.non_finite = true;
        }
        rec.err = err;
        rec.nfd = static_cast<int>(fd_calls - fd0);
        rec.nfa = static_cast<int>(fa_calls - fa0);
        res.stats.nfd += rec.nfd;
        res.stats.nfa += rec.nfa;

        double h_next;
        if (rec.non_finite) {
            ++res.stats.n_reject;
            if (++failures >= cfg.max_consecutive_failures) {
                if (cfg.record_trace) res.trace.push_back(rec);
                throw std::runtime_error("integrate_adaptive: " + std::to_string(failures) +
                                         " consecutive non-finite steps at t = " + std::to_string(t));
            }
            h_next = 0.5 * h;
        } else if (err <= cfg.tol) {
            rec.accepted = true;
            failures = 0;
            ++res.stats.n_accept;
            t += h;
            res.y = std::move(out->y_next);
            if (++since_D >= std::max(1, ode.rho_D.refresh_every)) {
                rho_D = ode.rho_D(res.y);
                since_D = 0;
            }
            if (++since_A >= std::max(1, ode.rho_A.refresh_every)) {
                rho_A = ode.rho_A(res.y);
                since_A = 0;
            }
            h_next = new_h(h, err, cfg.tol, cfg.estimator, cfg.fac, bounds);
        } else {
            ++res.stats.n_reject;
            h_next = new_h(h, err, cfg.tol, cfg.estimator, cfg.fac, bounds);
        }
        if (cfg.record_trace) res.trace.push_back(rec);

        if (!rec.accepted && h <= cfg.h_min * (1.0 + 1e-12)) {
            throw std::runtime_error("integrate_adaptive: step rejected at h_min, t = " + std::to_string(t));
        }
        h = std::max(h_next, cfg.h_min);
    }
    return res;
}

/// Per-step cost of NPRKC (s f_D, 4m f_A) plus the variant-1 surcharge of one f_D evaluation.
[[nodiscard]] constexpr std::pair<long, long> nprkc_step_cost(int s, int m, Estimator e) noexcept {
    return {static_cast<long>(s) + (e == Estimator::Variant1 ? 1 : 0), 4L * m};
}

/// Sum of the per-step cost formula over a trace; non-finite aborted steps contribute
/// what they actually used.
[[nodiscard]] inline std::pair<long, long> audit_counters(const std::vector<TraceRecord>& trace, Estimator e) {
    long nfd = 0;
    long nfa = 0;
    for (const auto& r : trace) {
        if (r.non_finite) {
            nfd += r.nfd;
            nfa += r.nfa;
            continue;
        }
        const auto [d, a] = nprkc_step_cost(r.s, r.m, e);
        nfd += d;
        nfa += a;
    }
    return {nfd, nfa};
}

}  // namespace stabrkc
