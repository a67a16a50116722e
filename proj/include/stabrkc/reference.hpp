#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include "stabrkc/state.hpp"

namespace stabrkc {

/// Default fixed reference step, 2^-14.
inline constexpr double kDefaultRefStep = 1.0 / 16384.0;

/// Dormand–Prince 5(4) tableau; the propagated solution is the fifth-order one.
struct Dopri5 {
    static constexpr std::array<double, 7> c{0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0};
    static constexpr std::array<std::array<double, 6>, 7> a{{
        {0, 0, 0, 0, 0, 0},
        {1.0 / 5.0, 0, 0, 0, 0, 0},
        {3.0 / 40.0, 9.0 / 40.0, 0, 0, 0, 0},
        {44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0, 0, 0},
        {19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0, 0},
        {9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0},
        {35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0},
    }};
    static constexpr std::array<double, 7> b{35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0,
                                             -2187.0 / 6784.0, 11.0 / 84.0, 0.0};
};

struct ReferenceConfig {
    double h_ref = kDefaultRefStep;
    /// Halve h_ref until h_ref * (rho_D + rho_A) at y0 is at most this bound (0 disables).
    double stability_bound = 2.5;
};

/// Fixed-step fifth-order propagation of f from t0 to t_end; the last step is truncated.
/// Throws NonFiniteState carrying the step index if the state blows up.
[[nodiscard]] inline State dopri5_fixed(const RhsFn& f, std::span<const double> y0, double t0, double t_end,
                                        double h) {
    if (!(h > 0.0)) throw std::invalid_argument("dopri5_fixed: h must be positive");
    if (!(t_end >= t0)) throw std::invalid_argument("dopri5_fixed: t_end < t0");
    const std::size_t d = y0.size();
    State y(y0.begin(), y0.end());
    std::array<State, 7> k;
    for (auto& v : k) v.resize(d);
    State tmp(d);
    f(y, k[0]);
    double t = t0;
    long step = 0;
    while (t_end - t > 1e-12 * std::max(1.0, std::abs(t_end))) {
        const double hs = std::min(h, t_end - t);
        for (int i = 1; i < 7; ++i) {
            for (std::size_t n = 0; n < d; ++n) {
                double acc = 0.0;
                for (int j = 0; j < i; ++j) acc += Dopri5::a[i][j] * k[j][n];
                tmp[n] = y[n] + hs * acc;
            }
            f(tmp, k[i]);
        }
        // Row 7 of a equals b, so tmp now holds y_{n+1} and k[6] = f(y_{n+1}).
        y.swap(tmp);
        ensure_finite(y, "dopri5_fixed", step);
        std::swap(k[0], k[6]);
        t = hs < h ? t_end : t + hs;
        ++step;
    }
    return y;
}

/// Largest h_ref / 2^k with h * (rho_D + rho_A) at y0 within cfg.stability_bound.
[[nodiscard]] inline double stable_reference_step(const SplitOde& ode, const ReferenceConfig& cfg) {
    double h = cfg.h_ref;
    if (!(h > 0.0)) throw std::invalid_argument("reference: h_ref must be positive");
    if (cfg.stability_bound <= 0.0) return h;
    const double rho = (ode.rho_D.fn ? ode.rho_D(ode.y0) : 0.0) + (ode.rho_A.fn ? ode.rho_A(ode.y0) : 0.0);
    while (h * rho > cfg.stability_bound) h *= 0.5;
    return h;
}

/// Reference solution at ode.t_end with exactly the given fixed step.
[[nodiscard]] inline State reference_solve(const SplitOde& ode, double h_ref) {
    return dopri5_fixed(combined_rhs(ode), ode.y0, ode.t0, ode.t_end, h_ref);
}

// --- on-disk cache -----------------------------------------------------------

namespace detail {

inline constexpr std::uint64_t kCacheMagic = 0x31464552'4b524253ULL;  // "SBRKREF1"

inline std::string sanitize_key(const std::string& key) {
    std::string out;
    out.reserve(key.size());
    for (char ch : key) {
        const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') ||
                        ch == '.' || ch == '-' || ch == '_' || ch == '=';
        out.push_back(ok ? ch : '_');
    }
    return out;
}

}  // namespace detail

/// Binary cache of reference states. Each file stores the full key, so a
/// filename collision after sanitizing is detected rather than silently reused.
class ReferenceCache {
public:
    explicit ReferenceCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

    [[nodiscard]] std::filesystem::path path_for(const std::string& key) const {
        return dir_ / (detail::sanitize_key(key) + ".ref");
    }

    [[nodiscard]] std::optional<State> load(const std::string& key) const {
        std::ifstream in(path_for(key), std::ios::binary);
        if (!in) return std::nullopt;
        std::uint64_t magic = 0, klen = 0, n = 0;
        in.read(reinterpret_cast<char*>(&magic), sizeof magic);
        in.read(reinterpret_cast<char*>(&klen), sizeof klen);
        if (!in || magic != detail::kCacheMagic || klen > 4096) return std::nullopt;
        std::string stored(klen, '\0');
        in.read(stored.data(), static_cast<std::streamsize>(klen));
        in.read(reinterpret_cast<char*>(&n), sizeof n);
        if (!in || stored != key || n > (std::uint64_t{1} << 32)) return std::nullopt;
        State y(n);
        in.read(reinterpret_cast<char*>(y.data()), static_cast<std::streamsize>(n * sizeof(double)));
        if (!in) return std::nullopt;
        return y;
    }

    void store(const std::string& key, std::span<const double> y) const {
        std::filesystem::create_directories(dir_);
        const auto target = path_for(key);
        const auto tmp = std::filesystem::path(target.string() + ".tmp");
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw std::runtime_error("reference cache: cannot write " + tmp.string());
            const std::uint64_t magic = detail::kCacheMagic, klen = key.size(), n = y.size();
            out.write(reinterpret_cast<const char*>(&magic), sizeof magic);
            out.write(reinterpret_cast<const char*>(&klen), sizeof klen);
            out.write(key.data(), static_cast<std::streamsize>(klen));
            out.write(reinterpret_cast<const char*>(&n), sizeof n);
            out.write(reinterpret_cast<const char*>(y.data()), static_cast<std::streamsize>(n * sizeof(double)));
            if (!out) throw std::runtime_error("reference cache: write failed for " + tmp.string());
        }
        std::filesystem::rename(tmp, target);
    }

private:
    std::filesystem::path dir_;
};

}  // namespace stabrkc
