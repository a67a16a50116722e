#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stabrkc/format.hpp"
#include "stabrkc/state.hpp"

namespace stabrkc {

enum class Boundary { Periodic, ZeroFlux };

/// Uniform grid on [0, 1] (per axis) with spacing 1/N.
///
/// Periodic nodes sit at x_i = i/N, i = 0..N-1 (x_N is identified with x_0).
/// Zero-flux grids are cell-centred, x_i = (i + 1/2)/N, with mirrored ghost
/// values u_{-1} = u_0 and u_N = u_{N-1}.
struct Grid {
    int dims = 1;
    int N = 0;
    double hx = 0.0;
    Boundary boundary = Boundary::Periodic;

    Grid(int dims_, int n, Boundary b) : dims(dims_), N(n), hx(1.0 / n), boundary(b) {
        if (n < 3) throw std::invalid_argument("Grid: need N >= 3");
    }

    [[nodiscard]] double x(int i) const {
        return boundary == Boundary::Periodic ? i * hx : (i + 0.5) * hx;
    }
    [[nodiscard]] int left(int i) const {
        if (i > 0) return i - 1;
        return boundary == Boundary::Periodic ? N - 1 : 0;
    }
    [[nodiscard]] int right(int i) const {
        if (i < N - 1) return i + 1;
        return boundary == Boundary::Periodic ? 0 : N - 1;
    }
    [[nodiscard]] std::size_t points() const {
        return dims == 1 ? static_cast<std::size_t>(N) : static_cast<std::size_t>(N) * static_cast<std::size_t>(N);
    }
    /// Flattened index of node (ix, iy); x varies slowest.
    [[nodiscard]] std::size_t at(int ix, int iy) const {
        return static_cast<std::size_t>(ix) * static_cast<std::size_t>(N) + static_cast<std::size_t>(iy);
    }
};

using Field2d = std::function<double(double x, double y)>;

namespace detail {

/// (u_{i-1} - 2u_i + u_{i+1}) / h^2 along x (axis 0) or y (axis 1) of a 2D field.
inline double d2(const Grid& g, std::span<const double> u, int ix, int iy, int axis) {
    const double c = u[g.at(ix, iy)];
    const double l = axis == 0 ? u[g.at(g.left(ix), iy)] : u[g.at(ix, g.left(iy))];
    const double r = axis == 0 ? u[g.at(g.right(ix), iy)] : u[g.at(ix, g.right(iy))];
    return (l - 2.0 * c + r) / (g.hx * g.hx);
}

/// (u_{i+1} - u_{i-1}) / (2h) along the given axis of a 2D field.
inline double d1(const Grid& g, std::span<const double> u, int ix, int iy, int axis) {
    const double l = axis == 0 ? u[g.at(g.left(ix), iy)] : u[g.at(ix, g.left(iy))];
    const double r = axis == 0 ? u[g.at(g.right(ix), iy)] : u[g.at(ix, g.right(iy))];
    return (r - l) / (2.0 * g.hx);
}

inline double l2(std::span<const double> v) {
    double a = 0.0;
    for (double x : v) a += x * x;
    return std::sqrt(a);
}

}  // namespace detail

/// Spectral radius estimate of ∂f/∂y at y by power iteration on finite-difference
/// directional derivatives, multiplied by `safety`. Deterministic for a given seed.
[[nodiscard]] inline double power_iteration_radius(const RhsFn& f, std::span<const double> y, int iters = 50,
                                                   std::uint64_t seed = 12345, double safety = 1.05) {
    if (iters < 5) throw std::invalid_argument("power_iteration_radius: iters must be >= 5");
    const std::size_t d = y.size();
    if (d == 0) return 0.0;
    const State f0 = eval(f, y);
    const double scale = std::sqrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, detail::l2(y));
    State v(d), yp(d), fp(d);

    auto seed_vector = [&](std::uint64_t sd) {
        std::mt19937_64 rng(sd);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        for (auto& x : v) x = dist(rng);
        const double n = detail::l2(v);
        for (auto& x : v) x /= n;
    };
    // ||J v|| for unit v; leaves J v in fp.
    auto apply = [&]() {
        for (std::size_t i = 0; i < d; ++i) yp[i] = y[i] + scale * v[i];
        f(yp, fp);
        for (std::size_t i = 0; i < d; ++i) fp[i] = (fp[i] - f0[i]) / scale;
        return detail::l2(fp);
    };

    seed_vector(seed);
    double est = apply();
    if (est == 0.0) {
        seed_vector(seed + 0x9E3779B97F4A7C15ULL);
        est = apply();
        if (est == 0.0) return 0.0;
    }
    for (int k = 1; k < iters && est > 0.0; ++k) {
        for (std::size_t i = 0; i < d; ++i) v[i] = fp[i] / est;
        est = apply();
    }
    return safety * est;
}

[[nodiscard]] inline RadiusProvider constant_radius(double r) {
    return {[r](std::span<const double>) { return r; }, 1};
}

inline constexpr std::uint64_t kDefaultSeed = 12345;

[[nodiscard]] inline RadiusProvider power_iteration_provider(RhsFn f, std::uint64_t seed = kDefaultSeed,
                                                             int refresh_every = 25) {
    return {[f = std::move(f), seed](std::span<const double> y) { return power_iteration_radius(f, y, 50, seed); },
            refresh_every};
}

// --- 1D advection-diffusion -------------------------------------------------

/// w_t + A w_x = D w_xx on the periodic unit interval, central differences.
/// f_D is the diffusion stencil, f_A the advection stencil A (w_{j-1} - w_{j+1}) / (2h).
[[nodiscard]] inline SplitOde advection_diffusion_1d(int N, double A, double D, double t_end = 0.1) {
    const Grid g(1, N, Boundary::Periodic);
    SplitOde ode;
    ode.id = "ad1d";
    ode.dim = static_cast<std::size_t>(N);
    ode.t_end = t_end;
    const double h = g.hx;
    ode.f_D = [N, D, h](std::span<const double> w, std::span<double> o) {
        const double k = D / (h * h);
        for (int j = 0; j < N; ++j) {
            const double l = w[j == 0 ? N - 1 : j - 1];
            const double r = w[j == N - 1 ? 0 : j + 1];
            o[j] = k * (l - 2.0 * w[j] + r);
        }
    };
    ode.f_A = [N, A, h](std::span<const double> w, std::span<double> o) {
        const double k = A / (2.0 * h);
        for (int j = 0; j < N; ++j) {
            const double l = w[j == 0 ? N - 1 : j - 1];
            const double r = w[j == N - 1 ? 0 : j + 1];
            o[j] = k * (l - r);
        }
    };
    ode.y0.resize(ode.dim);
    for (int j = 0; j < N; ++j) ode.y0[j] = std::sin(2.0 * std::numbers::pi * g.x(j));
    ode.rho_D = constant_radius(4.0 * std::abs(D) * N * N);
    ode.rho_A = constant_radius(std::abs(A) * N);
    return ode;
}

/// Eigenvalues of the periodic advection-diffusion matrix, k = 1..N.
[[nodiscard]] inline std::vector<std::complex<double>> ad_eigenvalues(int N, double A, double D) {
    if (N < 3) throw std::invalid_argument("ad_eigenvalues: need N >= 3");
    const double h = 1.0 / N;
    std::vector<std::complex<double>> ev;
    ev.reserve(static_cast<std::size_t>(N));
    for (int k = 1; k <= N; ++k) {
        const double th = 2.0 * k * std::numbers::pi * h;
        ev.emplace_back(2.0 * D / (h * h) * (std::cos(th) - 1.0), -A / h * std::sin(th));
    }
    return ev;
}

/// Exact solution of the semi-discrete advection-diffusion system from the sin(2πx) start.
[[nodiscard]] inline State ad1d_exact(int N, double A, double D, double t) {
    const auto lam = ad_eigenvalues(N, A, D).front();
    const double h = 1.0 / N;
    State w(static_cast<std::size_t>(N));
    for (int j = 0; j < N; ++j) {
        w[j] = std::exp(lam.real() * t) * std::sin(2.0 * std::numbers::pi * j * h + lam.imag() * t);
    }
    return w;
}

// --- 2D damped wave ----------------------------------------------------------

struct WaveParams {
    double B = 0.0;
    double A1 = 0.05;
    double A2 = 15.0;
    Field2d D1;
    Field2d D2;
    Field2d S;
    Boundary boundary = Boundary::ZeroFlux;
    double t_end = 0.75;
};

/// Diffusion coefficient field of the damped-wave benchmark.
[[nodiscard]] inline double wave_benchmark_D(double x, double y) {
    return 0.1 * std::exp(-100.0 * ((x - 0.25) * (x - 0.25) + (y - 0.25) * (y - 0.25)));
}

/// Source field of the damped-wave benchmark.
[[nodiscard]] inline double wave_benchmark_S(double x, double y) {
    const auto bump = [](double dx, double dy) { return 100.0 * std::exp(-500.0 * (dx * dx + dy * dy)); };
    return bump(x - 0.75, y - 1.0) + bump(x - 0.25, y - 1.0);
}

[[nodiscard]] inline WaveParams wave_benchmark_params() {
    WaveParams p;
    p.D1 = wave_benchmark_D;
    p.D2 = wave_benchmark_D;
    p.S = wave_benchmark_S;
    return p;
}

/// First-order form (w, ŵ = w_t) of B w_t + w_tt = A1 w_xx + A2 w_yy + D1 w_txx + D2 w_tyy + S
/// on the unit square. f_D is the D1 ŵ_xx + D2 ŵ_yy part; f_A holds everything else.
[[nodiscard]] inline SplitOde damped_wave_2d(int N, const WaveParams& P) {
    const Grid g(2, N, P.boundary);
    const std::size_t n = g.points();
    std::vector<double> d1(n), d2(n), src(n);
    double max_d1 = 0.0;
    double max_d2 = 0.0;
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j < N; ++j) {
            const auto k = g.at(i, j);
            d1[k] = P.D1 ? P.D1(g.x(i), g.x(j)) : 0.0;
            d2[k] = P.D2 ? P.D2(g.x(i), g.x(j)) : 0.0;
            src[k] = P.S ? P.S(g.x(i), g.x(j)) : 0.0;
            max_d1 = std::max(max_d1, std::abs(d1[k]));
            max_d2 = std::max(max_d2, std::abs(d2[k]));
        }
    }
    SplitOde ode;
    ode.id = "wave2d";
    ode.dim = 2 * n;
    ode.t_end = P.t_end;
    ode.f_D = [g, n, d1, d2](std::span<const double> y, std::span<double> o) {
        const auto wh = y.subspan(n, n);
        std::fill(o.begin(), o.begin() + static_cast<std::ptrdiff_t>(n), 0.0);
        for (int i = 0; i < g.N; ++i) {
            for (int j = 0; j < g.N; ++j) {
                const auto k = g.at(i, j);
                o[n + k] = d1[k] * detail::d2(g, wh, i, j, 0) + d2[k] * detail::d2(g, wh, i, j, 1);
            }
        }
    };
    const double B = P.B, A1 = P.A1, A2 = P.A2;
    ode.f_A = [g, n, src, B, A1, A2](std::span<const double> y, std::span<double> o) {
        const auto w = y.subspan(0, n);
        const auto wh = y.subspan(n, n);
        for (std::size_t k = 0; k < n; ++k) o[k] = wh[k];
        for (int i = 0; i < g.N; ++i) {
            for (int j = 0; j < g.N; ++j) {
                const auto k = g.at(i, j);
                o[n + k] = -B * wh[k] + A1 * detail::d2(g, w, i, j, 0) + A2 * detail::d2(g, w, i, j, 1) + src[k];
            }
        }
    };
    ode.y0.assign(ode.dim, 0.0);
    const double Nd = N;
    ode.rho_D = constant_radius(4.0 * Nd * Nd * (max_d1 + max_d2) + std::abs(B));
    ode.rho_A = constant_radius(2.0 * Nd * std::sqrt(std::abs(A1) + std::abs(A2)));
    return ode;
}

/// Both eigenvalue families of the periodic constant-coefficient damped-wave system,
/// ordered (λ1, λ2) per (j1, j2), j1, j2 = 1..N.
[[nodiscard]] inline std::vector<std::complex<double>> wave_eigenvalues(int N, double B, double A1, double A2,
                                                                       double D1, double D2) {
    if (N < 3) throw std::invalid_argument("wave_eigenvalues: need N >= 3");
    const double h = 1.0 / N;
    std::vector<std::complex<double>> ev;
    ev.reserve(2 * static_cast<std::size_t>(N) * N);
    for (int j1 = 1; j1 <= N; ++j1) {
        for (int j2 = 1; j2 <= N; ++j2) {
            const double s1 = std::sin(j1 * std::numbers::pi * h);
            const double s2 = std::sin(j2 * std::numbers::pi * h);
            const double aA = 4.0 * A1 / (h * h) * s1 * s1 + 4.0 * A2 / (h * h) * s2 * s2;
            const double aD = 4.0 * D1 / (h * h) * s1 * s1 + 4.0 * D2 / (h * h) * s2 * s2;
            const std::complex<double> disc = std::sqrt(std::complex<double>((aD + B) * (aD + B) - 4.0 * aA));
            ev.push_back(-0.5 * (aD + B) + 0.5 * disc);
            ev.push_back(-0.5 * (aD + B) - 0.5 * disc);
        }
    }
    return ev;
}

// --- 2D Brusselator ----------------------------------------------------------

/// Periodic two-species reaction-advection-diffusion system; f_D = D Δ on both species,
/// f_A = advection plus reaction.
[[nodiscard]] inline SplitOde brusselator_2d(int N, double A, double D, double t_end = 1.0,
                                             std::uint64_t seed = kDefaultSeed) {
    const Grid g(2, N, Boundary::Periodic);
    const std::size_t n = g.points();
    SplitOde ode;
    ode.id = "brusselator2d";
    ode.dim = 2 * n;
    ode.t_end = t_end;
    ode.f_D = [g, n, D](std::span<const double> y, std::span<double> o) {
        for (std::size_t c = 0; c < 2; ++c) {
            const auto u = y.subspan(c * n, n);
            for (int i = 0; i < g.N; ++i) {
                for (int j = 0; j < g.N; ++j) {
                    o[c * n + g.at(i, j)] = D * (detail::d2(g, u, i, j, 0) + detail::d2(g, u, i, j, 1));
                }
            }
        }
    };
    ode.f_A = [g, n, A](std::span<const double> y, std::span<double> o) {
        const auto w = y.subspan(0, n);
        const auto v = y.subspan(n, n);
        for (int i = 0; i < g.N; ++i) {
            for (int j = 0; j < g.N; ++j) {
                const auto k = g.at(i, j);
                const double r = w[k] * w[k] * v[k];
                o[k] = A * (-0.5 * detail::d1(g, w, i, j, 0) + detail::d1(g, w, i, j, 1)) + r - 2.0 * w[k] + 1.3;
                o[n + k] = A * (0.4 * detail::d1(g, v, i, j, 0) + 0.7 * detail::d1(g, v, i, j, 1)) + w[k] - r;
            }
        }
    };
    ode.y0.resize(ode.dim);
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j < N; ++j) {
            const double x = g.x(i);
            const double yy = g.x(j);
            ode.y0[g.at(i, j)] = 22.0 * yy * std::pow(1.0 - yy, 1.5);
            ode.y0[n + g.at(i, j)] = 22.0 * x * std::pow(1.0 - x, 1.5);
        }
    }
    ode.rho_D = constant_radius(8.0 * std::abs(D) * N * N);
    ode.rho_A = power_iteration_provider(ode.f_A, seed);
    return ode;
}

// --- Burgers ------------------------------------------------------------------

/// Periodic 1D viscous Burgers w_t = D w_xx + A w w_x, advection in non-conservative
/// central form A w_j (w_{j+1} - w_{j-1}) / (2h).
[[nodiscard]] inline SplitOde burgers_1d(int N, double A, double D, double t_end = 0.5,
                                         bool analytic_rho_A = false, std::uint64_t seed = kDefaultSeed) {
    const Grid g(1, N, Boundary::Periodic);
    const double h = g.hx;
    SplitOde ode;
    ode.id = "burgers1d";
    ode.dim = static_cast<std::size_t>(N);
    ode.t_end = t_end;
    ode.f_D = [N, D, h](std::span<const double> w, std::span<double> o) {
        for (int j = 0; j < N; ++j) {
            const double l = w[j == 0 ? N - 1 : j - 1];
            const double r = w[j == N - 1 ? 0 : j + 1];
            o[j] = D * (l - 2.0 * w[j] + r) / (h * h);
        }
    };
    ode.f_A = [N, A, h](std::span<const double> w, std::span<double> o) {
        for (int j = 0; j < N; ++j) {
            const double l = w[j == 0 ? N - 1 : j - 1];
            const double r = w[j == N - 1 ? 0 : j + 1];
            o[j] = A * w[j] * (r - l) / (2.0 * h);
        }
    };
    ode.y0.resize(ode.dim);
    for (int j = 0; j < N; ++j) ode.y0[j] = 1.0 + std::cos(2.0 * std::numbers::pi * g.x(j));
    ode.rho_D = constant_radius(4.0 * std::abs(D) * N * N);
    if (analytic_rho_A) {
        ode.rho_A = {[A, N](std::span<const double> w) { return std::abs(A) * max_norm(w) * N * 1.5; }, 1};
    } else {
        ode.rho_A = power_iteration_provider(ode.f_A, seed);
    }
    return ode;
}

/// Periodic 2D Burgers system for (w, ŵ) with f_A = A (w ∂x + ŵ ∂y) applied to each component.
[[nodiscard]] inline SplitOde burgers_2d(int N, double A, double D, double t_end = 0.5,
                                         bool analytic_rho_A = false, std::uint64_t seed = kDefaultSeed) {
    const Grid g(2, N, Boundary::Periodic);
    const std::size_t n = g.points();
    SplitOde ode;
    ode.id = "burgers2d";
    ode.dim = 2 * n;
    ode.t_end = t_end;
    ode.f_D = [g, n, D](std::span<const double> y, std::span<double> o) {
        for (std::size_t c = 0; c < 2; ++c) {
            const auto u = y.subspan(c * n, n);
            for (int i = 0; i < g.N; ++i) {
                for (int j = 0; j < g.N; ++j) {
                    o[c * n + g.at(i, j)] = D * (detail::d2(g, u, i, j, 0) + detail::d2(g, u, i, j, 1));
                }
            }
        }
    };
    ode.f_A = [g, n, A](std::span<const double> y, std::span<double> o) {
        const auto w = y.subspan(0, n);
        const auto v = y.subspan(n, n);
        for (int i = 0; i < g.N; ++i) {
            for (int j = 0; j < g.N; ++j) {
                const auto k = g.at(i, j);
                o[k] = A * (w[k] * detail::d1(g, w, i, j, 0) + v[k] * detail::d1(g, w, i, j, 1));
                o[n + k] = A * (w[k] * detail::d1(g, v, i, j, 0) + v[k] * detail::d1(g, v, i, j, 1));
            }
        }
    };
    ode.y0.resize(ode.dim);
    const double tau = 2.0 * std::numbers::pi;
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j < N; ++j) {
            const double x = g.x(i);
            const double yy = g.x(j);
            ode.y0[g.at(i, j)] = 1.0 + std::cos(tau * x) * std::cos(tau * yy);
            ode.y0[n + g.at(i, j)] = 1.0 + std::sin(tau * x) * std::sin(tau * yy);
        }
    }
    ode.rho_D = constant_radius(8.0 * std::abs(D) * N * N);
    if (analytic_rho_A) {
        ode.rho_A = {[A, N, n](std::span<const double> y) {
                         return std::abs(A) * (max_norm(y.subspan(0, n)) + max_norm(y.subspan(n, n))) * N * 1.5;
                     },
                     1};
    } else {
        ode.rho_A = power_iteration_provider(ode.f_A, seed);
    }
    return ode;
}

// --- selection by id ----------------------------------------------------------

/// Problem id plus physical parameters; fields a problem does not use are ignored.
struct ProblemSpec {
    std::string id = "ad1d";
    int N = 64;
    double A = 0.1;
    double D = 1.0;
    double B = 0.0;
    double A1 = 0.05;
    double A2 = 15.0;
    double D1 = 0.1;
    double D2 = 0.1;
    double t_end = 0.1;
    /// wave2d: use the benchmark D and S fields with zero-flux boundaries; otherwise
    /// constant D1, D2, no source, periodic boundaries.
    bool wave_benchmark_fields = true;
    bool analytic_rho_A = false;
    std::uint64_t seed = kDefaultSeed;  // power-iteration start vector
};

inline const std::vector<std::string>& problem_ids() {
    static const std::vector<std::string> ids{"ad1d", "wave2d", "brusselator2d", "burgers1d", "burgers2d"};
    return ids;
}

/// Benchmark defaults for a problem id.
[[nodiscard]] inline ProblemSpec default_problem_spec(const std::string& id) {
    ProblemSpec p;
    p.id = id;
    if (id == "ad1d") {
        p.N = 200, p.A = 0.1, p.D = 1.0, p.t_end = 0.1;
    } else if (id == "wave2d") {
        p.N = 100, p.B = 0.0, p.A1 = 0.05, p.A2 = 15.0, p.t_end = 0.75;
    } else if (id == "brusselator2d") {
        p.N = 200, p.A = 0.02, p.D = 0.04, p.t_end = 1.0;
    } else if (id == "burgers1d") {
        p.N = 100, p.A = 10.0, p.D = 0.5, p.t_end = 0.5;
    } else if (id == "burgers2d") {
        p.N = 100, p.A = 4.0, p.D = 0.2, p.t_end = 0.5;
    } else {
        throw std::invalid_argument("unknown problem id '" + id + "'");
    }
    return p;
}

[[nodiscard]] inline SplitOde make_problem(const ProblemSpec& p) {
    const double params[] = {p.A, p.D, p.B, p.A1, p.A2, p.D1, p.D2, p.t_end};
    for (double v : params) {
        if (!std::isfinite(v)) throw std::invalid_argument("make_problem: non-finite parameter");
    }
    if (p.id == "ad1d") return advection_diffusion_1d(p.N, p.A, p.D, p.t_end);
    if (p.id == "wave2d") {
        WaveParams w;
        if (p.wave_benchmark_fields) {
            w = wave_benchmark_params();
        } else {
            const double d1 = p.D1, d2 = p.D2;
            w.D1 = [d1](double, double) { return d1; };
            w.D2 = [d2](double, double) { return d2; };
            w.boundary = Boundary::Periodic;
        }
        w.B = p.B, w.A1 = p.A1, w.A2 = p.A2, w.t_end = p.t_end;
        return damped_wave_2d(p.N, w);
    }
    if (p.id == "brusselator2d") return brusselator_2d(p.N, p.A, p.D, p.t_end, p.seed);
    if (p.id == "burgers1d") return burgers_1d(p.N, p.A, p.D, p.t_end, p.analytic_rho_A, p.seed);
    if (p.id == "burgers2d") return burgers_2d(p.N, p.A, p.D, p.t_end, p.analytic_rho_A, p.seed);
    throw std::invalid_argument("unknown problem id '" + p.id + "'");
}

/// Stable textual identity of a configuration (used as the reference-cache key).
[[nodiscard]] inline std::string problem_key(const ProblemSpec& p) {
    std::string k = p.id + "_N=" + std::to_string(p.N) + "_T=" + format_double(p.t_end);
    auto add = [&k](const char* name, double v) { k += std::string("_") + name + "=" + format_double(v); };
    if (p.id == "wave2d") {
        add("B", p.B), add("A1", p.A1), add("A2", p.A2);
        if (p.wave_benchmark_fields) {
            k += "_fields=bench";
        } else {
            add("D1", p.D1), add("D2", p.D2);
        }
    } else {
        add("A", p.A), add("D", p.D);
    }
    return k;
}

}  // namespace stabrkc
