#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

namespace stabrkc {

/// Largest stage count the coefficient tables are validated for.
inline constexpr int kMaxStages = 512;

/// Damping used by RKC, PRKC and NPRKC unless overridden.
inline constexpr double kDefaultEta = 2.0 / 13.0;

enum class ChebKind { First, Second };

/// T_j(x) or U_j(x) by the forward three-term recurrence.
///
/// Works for any scalar supporting +, -, * (double, std::complex<double>); no
/// restriction to [-1, 1] since stabilized methods evaluate outside it.
template <typename Scalar>
[[nodiscard]] Scalar cheb_eval(ChebKind kind, int j, const Scalar& x) {
    if (j < 0) throw std::invalid_argument("cheb_eval: degree must be >= 0");
    Scalar prev(1.0);
    if (j == 0) return prev;
    Scalar cur = kind == ChebKind::First ? x : Scalar(2.0) * x;
    for (int k = 2; k <= j; ++k) {
        Scalar next = Scalar(2.0) * x * cur - prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

struct ChebTriple {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

/// Values, first and second derivatives of T_0..T_n at x.
[[nodiscard]] inline std::vector<ChebTriple> cheb_table(int n, double x) {
    if (n < 0) throw std::invalid_argument("cheb_table: degree must be >= 0");
    std::vector<ChebTriple> t(static_cast<std::size_t>(n) + 1);
    t[0] = {1.0, 0.0, 0.0};
    if (n >= 1) t[1] = {x, 1.0, 0.0};
    for (int j = 2; j <= n; ++j) {
        const auto& a = t[j - 1];
        const auto& b = t[j - 2];
        t[j].value = 2.0 * x * a.value - b.value;
        t[j].d1 = 2.0 * a.value + 2.0 * x * a.d1 - b.d1;
        t[j].d2 = 4.0 * a.d1 + 2.0 * x * a.d2 - b.d2;
    }
    return t;
}

/// (T_j, T_j', T_j'') at x.
[[nodiscard]] inline ChebTriple cheb_derivs(int j, double x) {
    if (j < 1) throw std::invalid_argument("cheb_derivs: degree must be >= 1");
    return cheb_table(j, x).back();
}

/// Recurrence coefficients of the s-stage second-order RKC scheme.
///
/// Arrays are indexed by stage number; entries that the scheme does not define
/// (u[0], u[1], v[0], v[1], gamma_tilde[0], gamma_tilde[1], u_tilde[0]) are zero.
struct ChebCoeffs {
    int s = 0;
    double eta = 0.0;
    double omega0 = 0.0;
    double omega1 = 0.0;
    std::vector<double> b;            // b_0..b_s
    std::vector<double> u_tilde;      // ũ_1..ũ_s
    std::vector<double> u;            // u_2..u_s
    std::vector<double> v;            // v_2..v_s
    std::vector<double> gamma_tilde;  // γ̃_2..γ̃_s
    std::vector<double> c;            // c_0..c_s
    std::vector<ChebTriple> T;        // T_j(ω0) with derivatives, j = 0..s

    /// a_j = 1 - b_j T_j(ω0); R_j(p) = a_j + b_j T_j(ω0 + ω1 p).
    [[nodiscard]] double a(int j) const { return 1.0 - b[j] * T[j].value; }
};

[[nodiscard]] inline ChebCoeffs rkc_coeffs(int s, double eta) {
    if (s < 2) throw std::invalid_argument("rkc_coeffs: stage count must be >= 2");
    if (s > kMaxStages) throw std::invalid_argument("rkc_coeffs: stage count exceeds 512");
    if (!(eta >= 0.0)) throw std::invalid_argument("rkc_coeffs: eta must be >= 0");

    ChebCoeffs c;
    c.s = s;
    c.eta = eta;
    const double sd = static_cast<double>(s);
    c.omega0 = 1.0 + eta / (sd * sd);
    c.T = cheb_table(s, c.omega0);
    c.omega1 = c.T[s].d1 / c.T[s].d2;

    const std::size_t n = static_cast<std::size_t>(s) + 1;
    c.b.assign(n, 0.0);
    for (int j = 2; j <= s; ++j) c.b[j] = c.T[j].d2 / (c.T[j].d1 * c.T[j].d1);
    c.b[0] = c.b[1] = c.b[2];

    c.u_tilde.assign(n, 0.0);
    c.u.assign(n, 0.0);
    c.v.assign(n, 0.0);
    c.gamma_tilde.assign(n, 0.0);
    c.u_tilde[1] = c.omega1 * c.b[1];
    for (int j = 2; j <= s; ++j) {
        const double ratio = c.b[j] / c.b[j - 1];
        c.u_tilde[j] = 2.0 * c.omega1 * ratio;
        c.u[j] = 2.0 * c.omega0 * ratio;
        c.v[j] = -c.b[j] / c.b[j - 2];
        c.gamma_tilde[j] = -(1.0 - c.b[j - 1] * c.T[j - 1].value) * c.u_tilde[j];
    }

    c.c.assign(n, 0.0);
    c.c[1] = c.u_tilde[1];
    for (int j = 2; j <= s; ++j) {
        c.c[j] = c.u[j] * c.c[j - 1] + c.v[j] * c.c[j - 2] + c.u_tilde[j] + c.gamma_tilde[j];
    }
    return c;
}

/// Shared immutable coefficients; repeated requests for the same (s, eta) hit a cache.
[[nodiscard]] inline std::shared_ptr<const ChebCoeffs> cached_rkc_coeffs(int s, double eta) {
    static std::mutex mu;
    static std::map<std::pair<int, std::uint64_t>, std::shared_ptr<const ChebCoeffs>> cache;
    const auto key = std::make_pair(s, std::bit_cast<std::uint64_t>(eta));
    std::lock_guard lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto ptr = std::make_shared<const ChebCoeffs>(rkc_coeffs(s, eta));
    cache.emplace(key, ptr);
    return ptr;
}

/// Coupling coefficients α_0..α_7 of the PRKC scheme (third order in f_A).
struct PrkcAlphas {
    std::array<double, 8> a{};

    double operator[](std::size_t i) const { return a[i]; }
};

/// Closed-form α_0..α_7 for free parameters r, α_3 and the abscissa c_{s-1}.
[[nodiscard]] inline PrkcAlphas prkc_alphas(double r, double alpha3, double c_s_minus_1) {
    if (r == 0.0 || r == 0.5) throw std::invalid_argument("prkc_alphas: r must not be 0 or 1/2");
    if (c_s_minus_1 == 0.0) throw std::invalid_argument("prkc_alphas: c_{s-1} must be nonzero");
    const double c = c_s_minus_1;
    const double d = r * (2.0 * r - 1.0);
    PrkcAlphas al;
    al.a[0] = 0.5;
    al.a[1] = -0.5 + r * (3.0 - 4.0 * r);
    al.a[3] = alpha3;
    al.a[2] = 2.0 * d - alpha3;
    al.a[4] = (1.0 - 3.0 * r) / (6.0 * r);
    al.a[5] = (1.0 + 3.0 * r * (1.0 - 2.0 * r) + 4.0 * c * r * (3.0 * r - 2.0)) / (6.0 * c * d);
    al.a[6] = (3.0 * d - 1.0) / (6.0 * c * d);
    al.a[7] = 1.0 / (6.0 * d);
    return al;
}

/// Default PRKC parameters r = 1, α_3 = 0 for the given coefficients.
[[nodiscard]] inline PrkcAlphas default_prkc_alphas(const ChebCoeffs& coeffs) {
    return prkc_alphas(1.0, 0.0, coeffs.c[coeffs.s - 1]);
}

}  // namespace stabrkc
