#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stabrkc/chebyshev.hpp"
#include "stabrkc/state.hpp"

namespace stabrkc {

/// Result of one step plus the stages the error estimators consume.
///
/// Only `y_next`, `nfd` and `nfa` are meaningful for every method. The
/// estimator stages (K_0, F_D(K_0), K_{s1}, K_s and the f_A block evaluations)
/// are filled by rkc_step and nprkc_step.
struct StepOutput {
    State y_next;
    int nfd = 0;
    int nfa = 0;

    int s1 = 0;
    State K0;
    State FD_K0;
    State Ks1;
    State Ks;
    std::vector<State> fa_block_start;  // F_A(K_{s+3i-3}), i = 1..m
    std::vector<State> fa_block_mid;    // F_A(K_{s+3i-2}), i = 1..m
};

/// Stage index of the embedded first-order RKC solution, floor(4s/5).
[[nodiscard]] constexpr int embedded_stage(int s) noexcept { return (4 * s) / 5; }

namespace detail {

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

/// Runs the Chebyshev recurrence K_j for j = 2..last starting from km2 = K_0,
/// km1 = K_1:
///   K_j = u_j K_{j-1} + v_j K_{j-2} + (1 - u_j - v_j) K_0 + ũ_j h G(K_{j-1}) + γ̃_j h F0
/// On return km1 = K_last, km2 = K_{last-1}. `force` evaluates G into its second
/// argument and returns the number of f_D evaluations it used.
template <typename Force>
int rkc_advance(Force&& force, std::span<const double> K0, std::span<const double> F0, double h,
                const ChebCoeffs& c, int last, State& km2, State& km1, int keep, State* kept,
                const char* where) {
    const std::size_t d = K0.size();
    State g(d);
    State next(d);
    int evals = 0;
    for (int j = 2; j <= last; ++j) {
        evals += force(std::span<const double>(km1), std::span<double>(g));
        const double uj = c.u[j];
        const double vj = c.v[j];
        const double wj = 1.0 - uj - vj;
        const double ut = c.u_tilde[j] * h;
        const double gt = c.gamma_tilde[j] * h;
        for (std::size_t i = 0; i < d; ++i) {
            next[i] = uj * km1[i] + vj * km2[i] + wj * K0[i] + ut * g[i] + gt * F0[i];
        }
        ensure_finite(next, where, j);
        std::swap(km2, km1);
        std::swap(km1, next);
        if (j == keep && kept != nullptr) *kept = km1;
    }
    return evals;
}

inline void check_step_args(double h, const ChebCoeffs& c) {
    if (!(h > 0.0)) throw std::invalid_argument("step size must be > 0");
    if (c.s < 2) throw std::invalid_argument("coefficients need s >= 2");
}

}  // namespace detail

/// Classic s-stage RKC step on a single right-hand side. Counts s evaluations as nfd.
[[nodiscard]] inline StepOutput rkc_step(const RhsFn& f, std::span<const double> y_n, double h,
                                         const ChebCoeffs& c) {
    detail::check_step_args(h, c);
    const int s = c.s;
    StepOutput out;
    out.s1 = embedded_stage(s);
    out.K0.assign(y_n.begin(), y_n.end());
    out.FD_K0 = eval(f, y_n);
    ensure_finite(out.FD_K0, "rkc_step", 0);

    State km2 = out.K0;
    State km1 = out.K0;
    detail::axpy(c.u_tilde[1] * h, out.FD_K0, km1);
    ensure_finite(km1, "rkc_step", 1);
    if (out.s1 == 1) out.Ks1 = km1;

    const int evals = detail::rkc_advance(
        [&f](std::span<const double> y, std::span<double> o) {
            f(y, o);
            return 1;
        },
        out.K0, out.FD_K0, h, c, s, km2, km1, out.s1, &out.Ks1, "rkc_step");
    out.nfd = 1 + evals;
    out.Ks = km1;
    out.y_next = std::move(km1);
    return out;
}

/// RKC applied to f_D + f_A; both parts are evaluated at every stage.
[[nodiscard]] inline StepOutput rkc_step(const SplitOde& ode, std::span<const double> y_n, double h,
                                         const ChebCoeffs& c) {
    StepOutput out = rkc_step(combined_rhs(ode), y_n, h, c);
    out.nfa = out.nfd;
    return out;
}

/// s+2-stage PRKC step. The f_D stages K_1..K_{s-1} are shared between K_s and K_{s+1}.
[[nodiscard]] inline StepOutput prkc_step(const SplitOde& ode, std::span<const double> y_n, double h,
                                          const ChebCoeffs& c, const PrkcAlphas& al) {
    detail::check_step_args(h, c);
    const int s = c.s;
    const std::size_t d = y_n.size();
    StepOutput out;

    const State fa_m1 = eval(ode.f_A, y_n);
    State K0(y_n.begin(), y_n.end());
    detail::axpy(al[0] * h, fa_m1, K0);
    ensure_finite(K0, "prkc_step", 0);
    const State fa_0 = eval(ode.f_A, K0);
    const State fd_0 = eval(ode.f_D, K0);

    State km2 = K0;
    State km1 = K0;
    detail::axpy(c.u_tilde[1] * h, fd_0, km1);
    ensure_finite(km1, "prkc_step", 1);
    int nfd = 1;
    nfd += detail::rkc_advance(
        [&ode](std::span<const double> y, std::span<double> o) {
            ode.f_D(y, o);
            return 1;
        },
        K0, fd_0, h, c, s - 1, km2, km1, -1, nullptr, "prkc_step");
    // km1 = K_{s-1}, km2 = K_{s-2}
    const State fd_sm1 = eval(ode.f_D, km1);
    ++nfd;
    const State fa_sm1 = eval(ode.f_A, km1);

    State base(d);
    const double us = c.u[s];
    const double vs = c.v[s];
    const double ws = 1.0 - us - vs;
    for (std::size_t i = 0; i < d; ++i) {
        base[i] = us * km1[i] + vs * km2[i] + ws * K0[i] + c.u_tilde[s] * h * fd_sm1[i] +
                  c.gamma_tilde[s] * h * fd_0[i];
    }

    State Ks = base;
    for (std::size_t i = 0; i < d; ++i) {
        Ks[i] += h * (al[1] * fa_m1[i] + al[2] * fa_0[i] + al[3] * fa_sm1[i]);
    }
    ensure_finite(Ks, "prkc_step", s);
    const State fa_s = eval(ode.f_A, Ks);

    State y = std::move(base);
    for (std::size_t i = 0; i < d; ++i) {
        y[i] += h * (al[4] * fa_m1[i] + al[5] * fa_0[i] + al[6] * fa_sm1[i] + al[7] * fa_s[i]);
    }
    ensure_finite(y, "prkc_step", s + 1);

    out.nfd = nfd;
    out.nfa = 4;
    out.y_next = std::move(y);
    return out;
}

/// Default ARKC damping: piecewise-linear through (5, 4), (15, 9), (50, 13.5), clamped.
[[nodiscard]] inline double arkc_eta(int s) noexcept {
    constexpr double xs[] = {5.0, 15.0, 50.0};
    constexpr double ys[] = {4.0, 9.0, 13.5};
    const double x = static_cast<double>(s);
    if (x <= xs[0]) return ys[0];
    if (x >= xs[2]) return ys[2];
    const int k = x <= xs[1] ? 0 : 1;
    const double w = (x - xs[k]) / (xs[k + 1] - xs[k]);
    return ys[k] + w * (ys[k + 1] - ys[k]);
}

/// s-stage ARKC step (s+2 f_D and 3 f_A evaluations).
[[nodiscard]] inline StepOutput arkc_step(const SplitOde& ode, std::span<const double> y_n, double h,
                                          const ChebCoeffs& c) {
    detail::check_step_args(h, c);
    const int s = c.s;
    const std::size_t d = y_n.size();
    const double w1 = c.omega1;

    const State fd_y = eval(ode.f_D, y_n);
    const State fa_y = eval(ode.f_A, y_n);

    State tmp(y_n.begin(), y_n.end());
    detail::axpy(0.5 * w1 * h, fd_y, tmp);
    const State fa_inner = eval(ode.f_A, tmp);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = y_n[i] + 0.5 * h * fa_inner[i] + 0.5 * h * fd_y[i];
    const State fa_outer = eval(ode.f_A, tmp);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = y_n[i] + 0.5 * (w1 - 1.0) * h * fa_y[i];
    const State fd_shift = eval(ode.f_D, tmp);

    State G(d);
    for (std::size_t i = 0; i < d; ++i) G[i] = h * fa_outer[i] + h * fd_shift[i] - h * fd_y[i];
    ensure_finite(G, "arkc_step", 0);

    const double alpha_hat = (1.0 - 0.5 * w1) * c.b[1] * static_cast<double>(s) * w1;
    State K0(y_n.begin(), y_n.end());
    detail::axpy(0.5 * w1, G, K0);
    const State fd_K0 = eval(ode.f_D, K0);

    State km2 = K0;
    State km1 = K0;
    for (std::size_t i = 0; i < d; ++i) km1[i] += c.u_tilde[1] * h * fd_y[i] + alpha_hat * G[i];
    ensure_finite(km1, "arkc_step", 1);

    int nfd = 3;
    nfd += detail::rkc_advance(
        [&](std::span<const double> y, std::span<double> o) {
            ode.f_D(y, o);
            for (std::size_t i = 0; i < o.size(); ++i) o[i] += fd_y[i] - fd_K0[i];
            return 1;
        },
        K0, fd_y, h, c, s, km2, km1, -1, nullptr, "arkc_step");

    StepOutput out;
    out.nfd = nfd;
    out.nfa = 3;
    out.y_next = std::move(km1);
    return out;
}

/// NPRKC step: m forward-Euler f_A stages, s RKC stages on f_D, then m three-stage
/// f_A blocks. Uses s f_D and 4m f_A evaluations and keeps the estimator stages.
[[nodiscard]] inline StepOutput nprkc_step(const SplitOde& ode, std::span<const double> y_n, double h,
                                           const ChebCoeffs& c, int m) {
    detail::check_step_args(h, c);
    if (m < 1) throw std::invalid_argument("nprkc_step: m must be >= 1");
    const int s = c.s;
    const std::size_t d = y_n.size();
    const double md = static_cast<double>(m);
    StepOutput out;
    out.s1 = embedded_stage(s);

    State y(y_n.begin(), y_n.end());
    State fa(d);
    for (int i = 1; i <= m; ++i) {
        ode.f_A(y, fa);
        detail::axpy(h / (2.0 * md), fa, y);
        ensure_finite(y, "nprkc_step(prefix)", i);
    }
    out.K0 = y;
    out.FD_K0 = eval(ode.f_D, out.K0);

    State km2 = out.K0;
    State km1 = out.K0;
    detail::axpy(c.u_tilde[1] * h, out.FD_K0, km1);
    ensure_finite(km1, "nprkc_step", 1);
    if (out.s1 == 1) out.Ks1 = km1;
    out.nfd = 1 + detail::rkc_advance(
                      [&ode](std::span<const double> yy, std::span<double> o) {
                          ode.f_D(yy, o);
                          return 1;
                      },
                      out.K0, out.FD_K0, h, c, s, km2, km1, out.s1, &out.Ks1, "nprkc_step");
    out.Ks = km1;

    State base = std::move(km1);
    State stage(d);
    State f2(d);
    State f3(d);
    out.fa_block_start.reserve(static_cast<std::size_t>(m));
    out.fa_block_mid.reserve(static_cast<std::size_t>(m));
    const double sixth = h / (6.0 * md);
    for (int i = 1; i <= m; ++i) {
        State f1 = eval(ode.f_A, base);
        for (std::size_t k = 0; k < d; ++k) stage[k] = base[k] + sixth * f1[k];
        ode.f_A(stage, f2);
        for (std::size_t k = 0; k < d; ++k) stage[k] = base[k] - sixth * f2[k];
        ode.f_A(stage, f3);
        for (std::size_t k = 0; k < d; ++k) {
            base[k] += (2.0 * h / md) * f1[k] - (1.5 * h / md) * f3[k];
        }
        ensure_finite(base, "nprkc_step(suffix)", s + 3 * i);
        out.fa_block_start.push_back(std::move(f1));
        out.fa_block_mid.push_back(f2);
    }
    out.nfa = 4 * m;
    out.y_next = std::move(base);
    return out;
}

/// The 4m-stage explicit RK scheme NPRKC reduces to when f_D vanishes (third order).
[[nodiscard]] inline State rk4m_step(const RhsFn& f, std::span<const double> y_n, double h, int m) {
    if (m < 1) throw std::invalid_argument("rk4m_step: m must be >= 1");
    const std::size_t d = y_n.size();
    const double md = static_cast<double>(m);
    State H(y_n.begin(), y_n.end());
    State fh(d);
    for (int j = 1; j <= m; ++j) {
        f(H, fh);
        detail::axpy(h / (2.0 * md), fh, H);
        ensure_finite(H, "rk4m_step", j);
    }
    State a(d), b(d), fa(d), fb(d), fc(d);
    for (int i = 1; i <= m; ++i) {
        f(H, fa);
        for (std::size_t k = 0; k < d; ++k) a[k] = H[k] + h / (6.0 * md) * fa[k];
        f(a, fb);
        for (std::size_t k = 0; k < d; ++k) b[k] = H[k] - h / (6.0 * md) * fb[k];
        f(b, fc);
        for (std::size_t k = 0; k < d; ++k) H[k] += 2.0 * h / md * fa[k] - 1.5 * h / md * fc[k];
        ensure_finite(H, "rk4m_step", m + 3 * i);
    }
    return H;
}

/// Three-stage RK scheme PRKC reduces to when f_D vanishes.
[[nodiscard]] inline State prkc_rk3_step(const RhsFn& f, std::span<const double> y_n, double h,
                                         const PrkcAlphas& al) {
    const std::size_t d = y_n.size();
    const State f1 = eval(f, y_n);
    State H2(d), H3(d), y(d);
    for (std::size_t i = 0; i < d; ++i) H2[i] = y_n[i] + al[0] * h * f1[i];
    const State f2 = eval(f, H2);
    for (std::size_t i = 0; i < d; ++i) {
        H3[i] = y_n[i] + (al[0] + al[1]) * h * f1[i] + (al[2] + al[3]) * h * f2[i];
    }
    const State f3 = eval(f, H3);
    for (std::size_t i = 0; i < d; ++i) {
        y[i] = y_n[i] + (al[0] + al[4]) * h * f1[i] + (al[5] + al[6]) * h * f2[i] + al[7] * h * f3[i];
    }
    ensure_finite(y, "prkc_rk3_step", 3);
    return y;
}

/// Explicit midpoint rule, the f_D = 0 limit of ARKC.
[[nodiscard]] inline State midpoint_step(const RhsFn& f, std::span<const double> y_n, double h) {
    const std::size_t d = y_n.size();
    const State f1 = eval(f, y_n);
    State H2(d);
    for (std::size_t i = 0; i < d; ++i) H2[i] = y_n[i] + 0.5 * h * f1[i];
    const State f2 = eval(f, H2);
    State y(d);
    for (std::size_t i = 0; i < d; ++i) y[i] = y_n[i] + h * f2[i];
    ensure_finite(y, "midpoint_step", 2);
    return y;
}

enum class Method { Rkc, Prkc, Arkc, Nprkc, Rk3, PrkcRk3, Midpoint };

[[nodiscard]] inline std::string_view method_name(Method m) noexcept {
    switch (m) {
        case Method::Rkc: return "rkc";
        case Method::Prkc: return "prkc";
        case Method::Arkc: return "arkc";
        case Method::Nprkc: return "nprkc";
        case Method::Rk3: return "rk3";
        case Method::PrkcRk3: return "prkc-rk3";
        case Method::Midpoint: return "midpoint";
    }
    return "?";
}

[[nodiscard]] inline std::optional<Method> parse_method(std::string_view name) noexcept {
    for (Method m : {Method::Rkc, Method::Prkc, Method::Arkc, Method::Nprkc, Method::Rk3,
                     Method::PrkcRk3, Method::Midpoint}) {
        if (method_name(m) == name) return m;
    }
    return std::nullopt;
}

/// Constant-step integration settings. Stabilized methods use a fixed (s, m).
struct FixedStepConfig {
    Method method = Method::Nprkc;
    double h = 0.01;
    int s = 10;
    int m = 1;
    double eta = kDefaultEta;
    std::optional<double> arkc_eta_override;
    double prkc_r = 1.0;
    double prkc_alpha3 = 0.0;
};

struct FixedStepResult {
    State y;
    StepStats stats;
    long steps = 0;
};

/// Advances ode.y0 from t0 to t_end with constant h; the last step is shortened to land on t_end.
/// Non-stabilized methods (rk3, prkc-rk3, midpoint) integrate f_D + f_A as one field.
[[nodiscard]] inline FixedStepResult integrate_fixed(const SplitOde& ode, const FixedStepConfig& cfg) {
    if (!(cfg.h > 0.0)) throw std::invalid_argument("integrate_fixed: h must be > 0");
    const bool stabilized = cfg.method == Method::Rkc || cfg.method == Method::Prkc ||
                            cfg.method == Method::Arkc || cfg.method == Method::Nprkc;
    std::shared_ptr<const ChebCoeffs> coeffs;
    if (stabilized) {
        const double eta = cfg.method == Method::Arkc ? cfg.arkc_eta_override.value_or(arkc_eta(cfg.s))
                                                      : cfg.eta;
        coeffs = cached_rkc_coeffs(cfg.s, eta);
    }
    std::optional<PrkcAlphas> alphas;
    if (cfg.method == Method::Prkc || cfg.method == Method::PrkcRk3) {
        // The order conditions alone do not depend on c_{s-1} through α5+α6; any nonzero value works.
        const double c_sm1 = coeffs ? coeffs->c[coeffs->s - 1] : 0.5;
        alphas = prkc_alphas(cfg.prkc_r, cfg.prkc_alpha3, c_sm1);
    }
    const RhsFn f = combined_rhs(ode);

    FixedStepResult res;
    res.y = ode.y0;
    double t = ode.t0;
    const double span = ode.t_end - ode.t0;
    const double eps = 1e-12 * std::max(1.0, std::abs(span));
    while (t < ode.t_end - eps) {
        const double h = std::min(cfg.h, ode.t_end - t);
        int nfd = 0;
        int nfa = 0;
        try {
            switch (cfg.method) {
                case Method::Rkc: {
                    auto o = rkc_step(ode, res.y, h, *coeffs);
                    res.y = std::move(o.y_next);
                    nfd = o.nfd;
                    nfa = o.nfa;
                    break;
                }
                case Method::Prkc: {
                    auto o = prkc_step(ode, res.y, h, *coeffs, *alphas);
                    res.y = std::move(o.y_next);
                    nfd = o.nfd;
                    nfa = o.nfa;
                    break;
                }
                case Method::Arkc: {
                    auto o = arkc_step(ode, res.y, h, *coeffs);
                    res.y = std::move(o.y_next);
                    nfd = o.nfd;
                    nfa = o.nfa;
                    break;
                }
                case Method::Nprkc: {
                    auto o = nprkc_step(ode, res.y, h, *coeffs, cfg.m);
                    res.y = std::move(o.y_next);
                    nfd = o.nfd;
                    nfa = o.nfa;
                    break;
                }
                case Method::Rk3:
                    res.y = rk4m_step(f, res.y, h, cfg.m);
                    nfd = nfa = 4 * cfg.m;
                    break;
                case Method::PrkcRk3:
                    res.y = prkc_rk3_step(f, res.y, h, *alphas);
                    nfd = nfa = 3;
                    break;
                case Method::Midpoint:
                    res.y = midpoint_step(f, res.y, h);
                    nfd = nfa = 2;
                    break;
            }
        } catch (const NonFiniteState&) {
            throw NonFiniteState(std::string("integrate_fixed(") + std::string(method_name(cfg.method)) + ")",
                                 res.steps + 1);
        }
        t += h;
        ++res.steps;
        ++res.stats.n_accept;
        res.stats.nfd += nfd;
        res.stats.nfa += nfa;
    }
    return res;
}

}  // namespace stabrkc
