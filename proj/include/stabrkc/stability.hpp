#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "stabrkc/chebyshev.hpp"
#include "stabrkc/format.hpp"

namespace stabrkc {

using cplx = std::complex<double>;

/// Length factor L of the certified real-axis interval [-L s^2, 0].
inline constexpr double kRealAxisFactor = 0.65;
/// Half-width factor of the certified imaginary strip |q| <= 2.15 m.
inline constexpr double kImagAxisFactor = 2.15;

namespace detail {

/// R_{s-1}(p) and R_s(p) of the internal RKC stages.
struct StagePolys {
    cplx r_sm1;
    cplx r_s;
};

inline StagePolys rkc_stage_polys(const cplx& p, const ChebCoeffs& c) {
    const cplx x = c.omega0 + c.omega1 * p;
    cplx tm1(1.0);
    cplx t = x;
    for (int j = 2; j <= c.s; ++j) {
        cplx next = 2.0 * x * t - tm1;
        tm1 = t;
        t = next;
    }
    const int s = c.s;
    return {c.a(s - 1) + c.b[s - 1] * tm1, c.a(s) + c.b[s] * t};
}

}  // namespace detail

/// RKC stability function R_s(p) = a_s + b_s T_s(ω0 + ω1 p); p may be complex.
[[nodiscard]] inline cplx eval_R_s(const cplx& p, const ChebCoeffs& c) {
    return detail::rkc_stage_polys(p, c).r_s;
}

[[nodiscard]] inline cplx eval_R_s(const cplx& p, int s, double eta) {
    return eval_R_s(p, *cached_rkc_coeffs(s, eta));
}

/// PRKC stability function on y' = (λ1 + iλ2) y with p = λ1 h, q = λ2 h.
[[nodiscard]] inline cplx eval_R_tilde(double p, double q, const ChebCoeffs& c, const PrkcAlphas& al) {
    const auto [r_sm1, r_s] = detail::rkc_stage_polys(cplx(p), c);
    const cplx z(0.0, q);
    const cplx z2 = z * z;
    const cplx z3 = z2 * z;
    return r_s * (1.0 + (al[0] + al[7]) * z + al[0] * al[7] * z2) +
           r_sm1 * (al[6] * z + (al[0] * al[6] + al[3] * al[7]) * z2 + al[0] * al[3] * al[7] * z3) +
           (al[4] + al[5]) * z + (al[0] * al[5] + (al[1] + al[2]) * al[7]) * z2 + al[0] * al[2] * al[7] * z3;
}

[[nodiscard]] inline cplx eval_R_tilde(double p, double q, int s, double eta, const PrkcAlphas& al) {
    return eval_R_tilde(p, q, *cached_rkc_coeffs(s, eta), al);
}

/// ARKC stability function.
[[nodiscard]] inline cplx eval_R_hat(double p, double q, const ChebCoeffs& c) {
    const double w0 = c.omega0;
    const double w1 = c.omega1;
    const cplx rs = eval_R_s(cplx(p), c);
    const double u_ref = cheb_eval(ChebKind::Second, c.s - 1, w0);
    const cplx u_p = cheb_eval(ChebKind::Second, c.s - 1, cplx(w0 + w1 * p));
    const cplx z(0.0, q);
    const cplx weight = 0.5 * w1 + (1.0 - 0.5 * w1) * u_p / u_ref;
    return rs + weight * (1.0 + 0.5 * w1 * p) * (z + 0.5 * z * z);
}

[[nodiscard]] inline cplx eval_R_hat(double p, double q, int s, double eta) {
    return eval_R_hat(p, q, *cached_rkc_coeffs(s, eta));
}

/// One factor (1 + iq/(2m)) (1 + iq/(2m) + (iq)^2/(4m^2) + (iq)^3/(24m^3)) of the
/// NPRKC stability function; R̈ = R_s(p) times this factor to the m-th power.
[[nodiscard]] inline cplx nprkc_q_factor(double q, int m) {
    const double md = static_cast<double>(m);
    const cplx z(0.0, q / md);
    return (1.0 + 0.5 * z) * (1.0 + 0.5 * z + 0.25 * z * z + z * z * z / 24.0);
}

/// NPRKC stability function R̈_{s,m}(p, q).
[[nodiscard]] inline cplx eval_R_ddot(double p, double q, const ChebCoeffs& c, int m) {
    if (m < 1) throw std::invalid_argument("eval_R_ddot: m must be >= 1");
    const double md = static_cast<double>(m);
    const cplx z(0.0, q);
    const cplx pre = std::pow(1.0 + z / (2.0 * md), m);
    const cplx post = std::pow(1.0 + z / (2.0 * md) + z * z / (4.0 * md * md) + z * z * z / (24.0 * md * md * md), m);
    return pre * eval_R_s(cplx(p), c) * post;
}

[[nodiscard]] inline cplx eval_R_ddot(double p, double q, int s, int m, double eta) {
    return eval_R_ddot(p, q, *cached_rkc_coeffs(s, eta), m);
}

enum class RegionMethod { Rkc, Prkc, Arkc, Nprkc };

[[nodiscard]] inline std::optional<RegionMethod> parse_region_method(std::string_view id) noexcept {
    if (id == "rkc") return RegionMethod::Rkc;
    if (id == "prkc") return RegionMethod::Prkc;
    if (id == "arkc") return RegionMethod::Arkc;
    if (id == "nprkc") return RegionMethod::Nprkc;
    return std::nullopt;
}

/// Which stability function to sample and its parameters.
///
/// For RKC the (p, q) plane is the complex plane of λh and the sample is R_s(p + iq);
/// the partitioned methods use the two-parameter test equation.
struct RegionSpec {
    RegionMethod method = RegionMethod::Nprkc;
    int s = 10;
    int m = 1;
    double eta = kDefaultEta;
    double prkc_r = 1.0;
    double prkc_alpha3 = 0.0;
};

class RegionEvaluator {
public:
    explicit RegionEvaluator(const RegionSpec& spec)
        : spec_(spec), coeffs_(cached_rkc_coeffs(spec.s, spec.eta)) {
        if (spec.method == RegionMethod::Prkc) {
            alphas_ = prkc_alphas(spec.prkc_r, spec.prkc_alpha3, coeffs_->c[coeffs_->s - 1]);
        }
        if (spec.method == RegionMethod::Nprkc && spec.m < 1) {
            throw std::invalid_argument("nprkc region needs m >= 1");
        }
    }

    [[nodiscard]] cplx operator()(double p, double q) const {
        switch (spec_.method) {
            case RegionMethod::Rkc: return eval_R_s(cplx(p, q), *coeffs_);
            case RegionMethod::Prkc: return eval_R_tilde(p, q, *coeffs_, alphas_);
            case RegionMethod::Arkc: return eval_R_hat(p, q, *coeffs_);
            case RegionMethod::Nprkc: return eval_R_ddot(p, q, *coeffs_, spec_.m);
        }
        return {};
    }

private:
    RegionSpec spec_;
    std::shared_ptr<const ChebCoeffs> coeffs_;
    PrkcAlphas alphas_{};
};

/// |R| sampled on a uniform (p, q) grid; values[i * nq + j] is at (p_i, q_j).
struct StabilityGrid {
    double p_min = 0.0;
    double p_max = 0.0;
    double q_min = 0.0;
    double q_max = 0.0;
    int np = 0;
    int nq = 0;
    std::vector<double> values;

    [[nodiscard]] double p(int i) const { return axis(p_min, p_max, np, i); }
    [[nodiscard]] double q(int j) const { return axis(q_min, q_max, nq, j); }
    [[nodiscard]] double at(int i, int j) const { return values[static_cast<std::size_t>(i) * nq + j]; }

    [[nodiscard]] double max_value() const {
        return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
    }

private:
    static double axis(double lo, double hi, int n, int k) {
        if (k == n - 1) return hi;
        return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    }
};

[[nodiscard]] inline StabilityGrid scan_region(const RegionSpec& spec, double p_min, double p_max,
                                               double q_min, double q_max, int np, int nq) {
    if (np < 2 || nq < 2) throw std::invalid_argument("scan_region: need at least 2 samples per axis");
    if (!(p_max > p_min) || !(q_max > q_min)) throw std::invalid_argument("scan_region: empty or inverted range");
    const RegionEvaluator R(spec);
    StabilityGrid g{p_min, p_max, q_min, q_max, np, nq, {}};
    g.values.resize(static_cast<std::size_t>(np) * static_cast<std::size_t>(nq));
    for (int i = 0; i < np; ++i) {
        const double p = g.p(i);
        for (int j = 0; j < nq; ++j) g.values[static_cast<std::size_t>(i) * nq + j] = std::abs(R(p, g.q(j)));
    }
    return g;
}

/// Writes `p,q,absR` rows in grid order.
inline void write_grid_csv(const StabilityGrid& g, std::ostream& os) {
    os << "p,q,absR\n";
    for (int i = 0; i < g.np; ++i) {
        const std::string p = format_double(g.p(i));
        for (int j = 0; j < g.nq; ++j) {
            os << p << ',' << format_double(g.q(j)) << ',' << format_double(g.at(i, j)) << '\n';
        }
    }
}

/// Maximum of |R̈_{s,m}| over a uniform grid of [-0.65 s^2, 0] x [-2.15 m, 2.15 m].
///
/// np / nq of 0 select the default of 10 samples per unit length on each axis.
/// The grid must resolve at least 10 samples per s units in p and 10 per unit in q.
[[nodiscard]] inline double certify_rectangle(int s, int m, double eta = kDefaultEta, int np = 0, int nq = 0) {
    if (m < 1) throw std::invalid_argument("certify_rectangle: m must be >= 1");
    const double len = kRealAxisFactor * static_cast<double>(s) * s;
    const double half = kImagAxisFactor * static_cast<double>(m);
    if (np == 0) np = static_cast<int>(std::ceil(10.0 * len)) + 1;
    if (nq == 0) nq = static_cast<int>(std::ceil(10.0 * 2.0 * half)) + 1;
    if (static_cast<double>(np - 1) < 10.0 * len / s || static_cast<double>(nq - 1) < 10.0 * 2.0 * half) {
        throw std::invalid_argument("certify_rectangle: grid too coarse");
    }
    RegionSpec spec{RegionMethod::Nprkc, s, m, eta};
    const RegionEvaluator R(spec);
    double worst = 0.0;
    for (int i = 0; i < np; ++i) {
        const double p = i == np - 1 ? 0.0 : -len + len * static_cast<double>(i) / (np - 1);
        for (int j = 0; j < nq; ++j) {
            const double q = j == nq - 1 ? half : -half + 2.0 * half * static_cast<double>(j) / (nq - 1);
            worst = std::max(worst, std::abs(R(p, q)));
        }
    }
    return worst;
}

/// Largest β such that |R_s(p)| <= 1 + tol on [-β, 0].
///
/// Scans 200 s samples per s^2 units of the real axis up to the Chebyshev bound 2 s^2,
/// then bisects between the last stable and first unstable sample.
[[nodiscard]] inline double real_axis_extent(int s, double eta, double tol = 1e-12) {
    const auto coeffs = cached_rkc_coeffs(s, eta);
    auto unstable = [&](double p) { return std::abs(eval_R_s(cplx(p), *coeffs)) > 1.0 + tol; };
    const double limit = 2.0 * static_cast<double>(s) * s;
    const int n = 400 * s;
    double good = 0.0;
    std::optional<double> first_bad;
    for (int k = 1; k <= n; ++k) {
        const double p = -limit * static_cast<double>(k) / n;
        if (unstable(p)) {
            first_bad = p;
            break;
        }
        good = p;
    }
    if (!first_bad) return limit;
    double bad = *first_bad;
    for (int it = 0; it < 200 && good - bad > 1e-13 * std::abs(bad); ++it) {
        const double mid = 0.5 * (good + bad);
        (unstable(mid) ? bad : good) = mid;
    }
    return -good;
}

}  // namespace stabrkc
