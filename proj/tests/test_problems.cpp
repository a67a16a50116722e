#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "stabrkc/problems.hpp"

using namespace stabrkc;

namespace {

/// Dense Jacobian of a linear field, built column by column.
Eigen::MatrixXd dense_matrix(const RhsFn& f, std::size_t d) {
    Eigen::MatrixXd M(d, d);
    State e(d, 0.0), o(d);
    for (std::size_t j = 0; j < d; ++j) {
        e[j] = 1.0;
        f(e, o);
        for (std::size_t i = 0; i < d; ++i) M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = o[i];
        e[j] = 0.0;
    }
    return M;
}

/// Every expected eigenvalue is matched to a distinct computed one within tol.
void expect_same_spectrum(std::vector<std::complex<double>> expect, const Eigen::MatrixXd& M, double tol) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
    std::vector<std::complex<double>> got(es.eigenvalues().begin(), es.eigenvalues().end());
    ASSERT_EQ(expect.size(), got.size());
    std::vector<bool> used(got.size(), false);
    for (const auto& l : expect) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t at = 0;
        for (std::size_t k = 0; k < got.size(); ++k) {
            if (!used[k] && std::abs(got[k] - l) < best) best = std::abs(got[k] - l), at = k;
        }
        EXPECT_LT(best, tol * std::max(1.0, std::abs(l))) << l;
        used[at] = true;
    }
}

State random_state(std::size_t d, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    State y(d);
    for (auto& v : y) v = u(rng);
    return y;
}

double sum(const State& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST(GridTest, NodesAndRejects) {
    const Grid p(1, 4, Boundary::Periodic);
    EXPECT_DOUBLE_EQ(p.x(1), 0.25);
    const Grid z(2, 4, Boundary::ZeroFlux);
    EXPECT_DOUBLE_EQ(z.x(0), 0.125);
    EXPECT_EQ(z.points(), 16u);
    EXPECT_EQ(z.at(1, 2), 6u);
    EXPECT_THROW(Grid(1, 2, Boundary::Periodic), std::invalid_argument);
    EXPECT_THROW((void)advection_diffusion_1d(2, 1.0, 1.0), std::invalid_argument);
    EXPECT_THROW((void)burgers_2d(2, 1.0, 1.0), std::invalid_argument);
}

TEST(AdvectionDiffusion, DenseEigenvalueOracle) {
    const int N = 8;
    const SplitOde ode = advection_diffusion_1d(N, 3.0, 0.7);
    expect_same_spectrum(ad_eigenvalues(N, 3.0, 0.7), dense_matrix(combined_rhs(ode), ode.dim), 1e-9);
}

TEST(AdvectionDiffusion, EigenvalueExamples) {
    const int N = 16;
    const double D = 0.5;
    const auto ev = ad_eigenvalues(N, 2.0, D);
    EXPECT_LT(std::abs(ev[N - 1]), 1e-12);
    EXPECT_NEAR(ev[N / 2 - 1].real(), -4.0 * D * N * N, 1e-9);
    EXPECT_NEAR(ev[N / 2 - 1].imag(), 0.0, 1e-9);
}

TEST(AdvectionDiffusion, SplitPartsAndRadii) {
    const SplitOde ode = advection_diffusion_1d(50, 3.0, 2.0);
    EXPECT_DOUBLE_EQ(ode.rho_D(ode.y0), 4.0 * 2.0 * 2500);
    EXPECT_DOUBLE_EQ(ode.rho_A(ode.y0), 150.0);
    // f_D is symmetric, f_A skew.
    const auto MD = dense_matrix(ode.f_D, ode.dim);
    const auto MA = dense_matrix(ode.f_A, ode.dim);
    EXPECT_LT((MD - MD.transpose()).norm(), 1e-9);
    EXPECT_LT((MA + MA.transpose()).norm(), 1e-9);
    EXPECT_NEAR(sum(eval(ode.f_D, random_state(ode.dim, 1))), 0.0, 1e-9);
}

TEST(AdvectionDiffusion, ExactSolutionAtTimeZero) {
    const int N = 20;
    const SplitOde ode = advection_diffusion_1d(N, 1.0, 1.0);
    const State w = ad1d_exact(N, 1.0, 1.0, 0.0);
    for (int j = 0; j < N; ++j) EXPECT_NEAR(w[j], ode.y0[j], 1e-15);
}

TEST(DampedWave, DenseEigenvalueOracleConstantPeriodic) {
    const int N = 8;
    WaveParams P;
    P.B = 0.5;
    P.A1 = 1.0;
    P.A2 = 2.0;
    P.D1 = [](double, double) { return 0.3; };
    P.D2 = [](double, double) { return 0.2; };
    P.boundary = Boundary::Periodic;
    const SplitOde ode = damped_wave_2d(N, P);
    expect_same_spectrum(wave_eigenvalues(N, 0.5, 1.0, 2.0, 0.3, 0.2), dense_matrix(combined_rhs(ode), ode.dim),
                         1e-10);
}

TEST(DampedWave, VietaRelations) {
    const int N = 6;
    const double B = 0.4, A1 = 1.0, A2 = 3.0, D1 = 0.1, D2 = 0.2;
    const auto ev = wave_eigenvalues(N, B, A1, A2, D1, D2);
    const double h = 1.0 / N;
    std::size_t k = 0;
    for (int j1 = 1; j1 <= N; ++j1) {
        for (int j2 = 1; j2 <= N; ++j2, k += 2) {
            const double s1 = std::pow(std::sin(j1 * std::numbers::pi * h), 2);
            const double s2 = std::pow(std::sin(j2 * std::numbers::pi * h), 2);
            const double aA = 4.0 / (h * h) * (A1 * s1 + A2 * s2);
            const double aD = 4.0 / (h * h) * (D1 * s1 + D2 * s2);
            EXPECT_NEAR(std::abs(ev[k] + ev[k + 1] + (aD + B)), 0.0, 1e-9);
            EXPECT_NEAR(std::abs(ev[k] * ev[k + 1] - aA), 0.0, 1e-9 * std::max(1.0, aA));
        }
    }
}

TEST(DampedWave, RadiiAndZeroFluxConservation) {
    const int N = 10;
    WaveParams P;
    P.A1 = 1.0;
    P.A2 = 3.0;
    P.D1 = [](double, double) { return 0.25; };
    P.D2 = [](double, double) { return 0.25; };
    const SplitOde ode = damped_wave_2d(N, P);
    EXPECT_DOUBLE_EQ(ode.rho_D(ode.y0), 4.0 * N * N * 0.5);
    EXPECT_DOUBLE_EQ(ode.rho_A(ode.y0), 2.0 * N * 2.0);
    // With constant coefficients and mirrored ghosts the second-difference sums vanish.
    const State y = random_state(ode.dim, 4);
    const State fd = eval(ode.f_D, y);
    const State fa = eval(ode.f_A, y);
    const std::size_t n = ode.dim / 2;
    EXPECT_NEAR(std::accumulate(fd.begin() + static_cast<std::ptrdiff_t>(n), fd.end(), 0.0), 0.0, 1e-9);
    EXPECT_NEAR(std::accumulate(fa.begin() + static_cast<std::ptrdiff_t>(n), fa.end(), 0.0), 0.0, 1e-9);
    for (std::size_t k = 0; k < n; ++k) EXPECT_EQ(fd[k], 0.0);
    for (std::size_t k = 0; k < n; ++k) EXPECT_EQ(fa[k], y[n + k]);
}

TEST(DampedWave, BenchmarkFields) {
    EXPECT_NEAR(wave_benchmark_D(0.25, 0.25), 0.1, 1e-15);
    EXPECT_NEAR(wave_benchmark_S(0.75, 1.0), 100.0, 1e-9);
    const SplitOde ode = damped_wave_2d(20, wave_benchmark_params());
    EXPECT_EQ(ode.dim, 800u);
    EXPECT_TRUE(std::all_of(ode.y0.begin(), ode.y0.end(), [](double v) { return v == 0.0; }));
}

TEST(Brusselator, UniformFixedPoint) {
    const int N = 8;
    const SplitOde ode = brusselator_2d(N, 0.3, 0.05);
    const std::size_t n = ode.dim / 2;
    State y(ode.dim);
    std::fill(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n), 1.3);
    std::fill(y.begin() + static_cast<std::ptrdiff_t>(n), y.end(), 1.0 / 1.3);
    EXPECT_LT(max_norm(eval(combined_rhs(ode), y)), 1e-13);
}

TEST(Brusselator, DiffusionConservesAndRepeatsBitwise) {
    const SplitOde ode = brusselator_2d(12, 0.3, 0.05);
    const State y = random_state(ode.dim, 9);
    EXPECT_NEAR(sum(eval(ode.f_D, y)), 0.0, 1e-9);
    EXPECT_EQ(eval(ode.f_A, y), eval(ode.f_A, y));
    EXPECT_DOUBLE_EQ(ode.rho_D(y), 8.0 * 0.05 * 144);
    EXPECT_EQ(ode.rho_A(y), ode.rho_A(y));
}

TEST(Burgers1d, HandStencil) {
    const SplitOde ode = burgers_1d(4, 1.0, 1.0);
    const State w{1.0, 2.0, 3.0, 4.0};
    const State fd = eval(ode.f_D, w);
    const State fa = eval(ode.f_A, w);
    const State ed{64.0, 0.0, 0.0, -64.0};
    const State ea{-4.0, 8.0, 12.0, -16.0};
    for (int j = 0; j < 4; ++j) {
        EXPECT_NEAR(fd[j], ed[j], 1e-12);
        EXPECT_NEAR(fa[j], ea[j], 1e-12);
    }
}

TEST(Burgers1d, AnalyticRadiusBoundsPowerIteration) {
    const SplitOde a = burgers_1d(64, 10.0, 0.5, 0.5, true);
    const SplitOde p = burgers_1d(64, 10.0, 0.5, 0.5, false);
    EXPECT_DOUBLE_EQ(a.rho_A(a.y0), 10.0 * 2.0 * 64 * 1.5);
    EXPECT_GE(a.rho_A(a.y0), p.rho_A(p.y0));
    EXPECT_GT(p.rho_A(p.y0), 0.0);
}

TEST(Burgers2d, SwapEquivariance) {
    // Transposing the grid while exchanging w and ŵ commutes with both fields.
    const int N = 6;
    const SplitOde ode = burgers_2d(N, 1.7, 0.3);
    const Grid g(2, N, Boundary::Periodic);
    const std::size_t n = g.points();
    auto swap = [&](const State& y) {
        State z(y.size());
        for (int i = 0; i < N; ++i) {
            for (int j = 0; j < N; ++j) {
                z[g.at(i, j)] = y[n + g.at(j, i)];
                z[n + g.at(i, j)] = y[g.at(j, i)];
            }
        }
        return z;
    };
    const State y = random_state(ode.dim, 17);
    for (const RhsFn* f : {&ode.f_D, &ode.f_A}) {
        EXPECT_LT(max_norm(difference(eval(*f, swap(y)), swap(eval(*f, y)))), 1e-12);
    }
    EXPECT_NEAR(sum(eval(ode.f_D, y)), 0.0, 1e-9);
}

TEST(PowerIteration, DiagonalExample) {
    const RhsFn f = [](std::span<const double> y, std::span<double> o) {
        const double d[4] = {-105.0, -50.0, -10.0, 1.0};
        for (int k = 0; k < 4; ++k) o[k] = d[k] * y[k];
    };
    const double r = power_iteration_radius(f, State{1.0, 1.0, 1.0, 1.0}, 50, kDefaultSeed, 1.0);
    EXPECT_NEAR(r, 105.0, 0.02 * 105.0);
}

TEST(PowerIteration, ZeroFieldGivesZero) {
    EXPECT_EQ(power_iteration_radius(zero_rhs(), State(5, 1.0)), 0.0);
}

TEST(PowerIteration, DiffusionOperator) {
    const int N = 64;
    const double D = 1.0;
    const SplitOde ode = advection_diffusion_1d(N, 0.0, D);
    const double r = power_iteration_radius(ode.f_D, ode.y0);
    EXPECT_GE(r, 0.9 * 4 * D * N * N);
    EXPECT_LE(r, 1.1 * 4 * D * N * N);
}

TEST(PowerIteration, DeterministicForFixedSeed) {
    const SplitOde ode = brusselator_2d(10, 0.5, 0.05, 1.0, 99);
    EXPECT_EQ(power_iteration_radius(ode.f_A, ode.y0, 50, 99), power_iteration_radius(ode.f_A, ode.y0, 50, 99));
}

TEST(ProblemSpecs, DefaultsAndConstruction) {
    for (const auto& id : problem_ids()) {
        ProblemSpec s = default_problem_spec(id);
        s.N = 8;
        const SplitOde ode = make_problem(s);
        EXPECT_EQ(ode.id, id);
        EXPECT_EQ(ode.y0.size(), ode.dim);
        EXPECT_TRUE(all_finite(eval(combined_rhs(ode), ode.y0)));
    }
    EXPECT_EQ(default_problem_spec("ad1d").N, 200);
    EXPECT_THROW((void)default_problem_spec("heat3d"), std::invalid_argument);
    auto a = default_problem_spec("burgers1d");
    auto b = a;
    b.A = 11.0;
    EXPECT_NE(problem_key(a), problem_key(b));
}
