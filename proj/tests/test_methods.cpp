#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "stabrkc/methods.hpp"
#include "stabrkc/problems.hpp"
#include "stabrkc/stability.hpp"

using namespace stabrkc;

namespace {

/// y' = λ1 y + i λ2 y as a real 2-vector: f_D = λ1 I, f_A = λ2 J.
SplitOde scalar_test(double l1, double l2) {
    SplitOde ode;
    ode.id = "scalar";
    ode.dim = 2;
    ode.y0 = {1.0, 0.0};
    ode.f_D = [l1](std::span<const double> y, std::span<double> o) {
        o[0] = l1 * y[0];
        o[1] = l1 * y[1];
    };
    ode.f_A = [l2](std::span<const double> y, std::span<double> o) {
        o[0] = -l2 * y[1];
        o[1] = l2 * y[0];
    };
    ode.rho_D = constant_radius(std::abs(l1));
    ode.rho_A = constant_radius(std::abs(l2));
    return ode;
}

cplx as_complex(const State& y) { return {y[0], y[1]}; }

RhsFn matrix_rhs(const Eigen::MatrixXd& M) {
    return [M](std::span<const double> y, std::span<double> o) {
        Eigen::Map<const Eigen::VectorXd> yy(y.data(), static_cast<Eigen::Index>(y.size()));
        Eigen::Map<Eigen::VectorXd>(o.data(), static_cast<Eigen::Index>(o.size())) = M * yy;
    };
}

SplitOde random_linear(unsigned seed, bool zero_D, bool zero_A, int d = 10) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd MD(d, d), MA(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            MD(i, j) = n(rng);
            MA(i, j) = n(rng);
        }
    }
    MD = -(MD * MD.transpose()) * 0.5;  // symmetric negative semidefinite
    MA = 0.5 * (MA - MA.transpose());  // skew
    SplitOde ode;
    ode.id = "random";
    ode.dim = static_cast<std::size_t>(d);
    ode.f_D = zero_D ? zero_rhs() : matrix_rhs(MD);
    ode.f_A = zero_A ? zero_rhs() : matrix_rhs(MA);
    ode.y0.resize(ode.dim);
    for (auto& v : ode.y0) v = n(rng);
    return ode;
}

double rel_diff(const State& a, const State& b) {
    return max_norm(difference(a, b)) / std::max(1e-300, max_norm(b));
}

}  // namespace

TEST(RkcStep, ZeroFieldKeepsState) {
    const auto c = rkc_coeffs(7, kDefaultEta);
    const State y{1.0, -2.0, 3.5};
    const auto out = rkc_step(zero_rhs(), y, 0.3, c);
    EXPECT_LE(rel_diff(out.y_next, y), 1e-14);
    EXPECT_EQ(out.nfd, 7);
}

TEST(RkcStep, ScalarMatchesStabilityFunction) {
    const auto c = rkc_coeffs(5, kDefaultEta);
    const double lambda = -1.0;
    const double h = 1.0;
    const RhsFn f = [lambda](std::span<const double> y, std::span<double> o) { o[0] = lambda * y[0]; };
    const auto out = rkc_step(f, State{1.0}, h, c);
    EXPECT_NEAR(out.y_next[0], eval_R_s(cplx(-1.0), c).real(), 1e-13);
}

TEST(RkcStep, StableAtCertifiedRealBoundary) {
    const auto c = rkc_coeffs(10, kDefaultEta);
    const RhsFn f = [](std::span<const double> y, std::span<double> o) { o[0] = -65.0 * y[0]; };
    const auto out = rkc_step(f, State{1.0}, 1.0, c);
    // Recorded: |R_10(-65)| = 1.298 with eta = 2/13; the extent of s = 10 is 0.6474 s^2.
    EXPECT_NEAR(std::abs(out.y_next[0]), 1.298, 1e-3);
    const RhsFn g = [](std::span<const double> y, std::span<double> o) { o[0] = -64.7 * y[0]; };
    EXPECT_LE(std::abs(rkc_step(g, State{1.0}, 1.0, c).y_next[0]), 1.0);
}

TEST(RkcStep, RejectsNonPositiveStep) {
    const auto c = rkc_coeffs(3, kDefaultEta);
    EXPECT_THROW((void)rkc_step(zero_rhs(), State{1.0}, 0.0, c), std::invalid_argument);
}

TEST(RkcStep, NonFiniteStageCarriesIndex) {
    const auto c = rkc_coeffs(6, kDefaultEta);
    const RhsFn f = [](std::span<const double> y, std::span<double> o) { o[0] = 1e308 * y[0]; };
    try {
        (void)rkc_step(f, State{1e10}, 1.0, c);
        FAIL() << "expected NonFiniteState";
    } catch (const NonFiniteState& e) {
        EXPECT_GE(e.index(), 0);
        EXPECT_LE(e.index(), 6);
    }
}

TEST(Counters, CostsPerStep) {
    const auto ode = random_linear(1, false, false);
    for (int s : {3, 8}) {
        const auto c = rkc_coeffs(s, kDefaultEta);
        const auto r = rkc_step(ode, ode.y0, 0.01, c);
        EXPECT_EQ(r.nfd, s);
        EXPECT_EQ(r.nfa, s);
        const auto p = prkc_step(ode, ode.y0, 0.01, c, default_prkc_alphas(c));
        EXPECT_EQ(p.nfd, s);
        EXPECT_EQ(p.nfa, 4);
        const auto a = arkc_step(ode, ode.y0, 0.01, c);
        EXPECT_EQ(a.nfd, s + 2);
        EXPECT_EQ(a.nfa, 3);
        for (int m : {1, 3}) {
            const auto n = nprkc_step(ode, ode.y0, 0.01, c, m);
            EXPECT_EQ(n.nfd, s);
            EXPECT_EQ(n.nfa, 4 * m);
            EXPECT_EQ(n.fa_block_start.size(), static_cast<std::size_t>(m));
            EXPECT_EQ(n.fa_block_mid.size(), static_cast<std::size_t>(m));
        }
    }
}

TEST(Counters, CountedCallsMatchReportedCounts) {
    auto ode = random_linear(2, false, false);
    int nd = 0, na = 0;
    const auto fD = ode.f_D, fA = ode.f_A;
    ode.f_D = [&](std::span<const double> y, std::span<double> o) { ++nd, fD(y, o); };
    ode.f_A = [&](std::span<const double> y, std::span<double> o) { ++na, fA(y, o); };
    const auto c = rkc_coeffs(9, kDefaultEta);
    const auto p = prkc_step(ode, ode.y0, 0.02, c, default_prkc_alphas(c));
    EXPECT_EQ(nd, p.nfd);
    EXPECT_EQ(na, p.nfa);
    nd = na = 0;
    const auto a = arkc_step(ode, ode.y0, 0.02, c);
    EXPECT_EQ(nd, a.nfd);
    EXPECT_EQ(na, a.nfa);
    nd = na = 0;
    const auto n = nprkc_step(ode, ode.y0, 0.02, c, 4);
    EXPECT_EQ(nd, n.nfd);
    EXPECT_EQ(na, n.nfa);
}

TEST(PrkcStep, ScalarMatchesStabilityFunction) {
    const auto c = rkc_coeffs(10, kDefaultEta);
    const auto al = default_prkc_alphas(c);
    const auto ode = scalar_test(-5.0, 1.0);
    const auto out = prkc_step(ode, ode.y0, 1.0, c, al);
    EXPECT_LT(std::abs(as_complex(out.y_next) - eval_R_tilde(-5.0, 1.0, c, al)), 1e-12);
}

TEST(ArkcStep, ScalarMatchesStabilityFunction) {
    const auto c = rkc_coeffs(5, 4.0);
    const auto ode = scalar_test(-10.0, 0.5);
    const auto out = arkc_step(ode, ode.y0, 1.0, c);
    EXPECT_LT(std::abs(as_complex(out.y_next) - eval_R_hat(-10.0, 0.5, c)), 1e-12);
}

TEST(ArkcStep, RealAdvectionGivesTaylorQuadratic) {
    const auto c = rkc_coeffs(6, arkc_eta(6));
    SplitOde ode;
    ode.dim = 1;
    ode.f_D = zero_rhs();
    const double lambda = -0.7, h = 0.3;
    ode.f_A = [lambda](std::span<const double> y, std::span<double> o) { o[0] = lambda * y[0]; };
    const auto out = arkc_step(ode, State{1.0}, h, c);
    const double z = lambda * h;
    EXPECT_NEAR(out.y_next[0], 1.0 + z + 0.5 * z * z, 1e-15);
}

TEST(ArkcStep, EtaSchedule) {
    EXPECT_DOUBLE_EQ(arkc_eta(2), 4.0);
    EXPECT_DOUBLE_EQ(arkc_eta(5), 4.0);
    EXPECT_DOUBLE_EQ(arkc_eta(10), 6.5);
    EXPECT_DOUBLE_EQ(arkc_eta(15), 9.0);
    EXPECT_DOUBLE_EQ(arkc_eta(50), 13.5);
    EXPECT_DOUBLE_EQ(arkc_eta(200), 13.5);
}

TEST(NprkcStep, ScalarMatchesStabilityFunction) {
    const auto c = rkc_coeffs(10, kDefaultEta);
    const auto ode = scalar_test(-20.0, 2.0);
    const auto out = nprkc_step(ode, ode.y0, 1.0, c, 2);
    EXPECT_LT(std::abs(as_complex(out.y_next) - eval_R_ddot(-20.0, 2.0, c, 2)), 1e-12);
}

TEST(StepperStability, TwentyRandomPointsPerMethod) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto c = rkc_coeffs(10, kDefaultEta);
    const auto ca = rkc_coeffs(10, arkc_eta(10));
    const auto al = default_prkc_alphas(c);
    for (int k = 0; k < 20; ++k) {
        const double p = -64.0 * u(rng);
        const double q = (2.0 * u(rng) - 1.0);
        // RKC: λh = p + iq on the combined field.
        auto ode = scalar_test(p, q);
        const auto r = rkc_step(ode, ode.y0, 1.0, c);
        EXPECT_LT(std::abs(as_complex(r.y_next) - eval_R_s(cplx(p, q), c)), 1e-12);
        const auto pr = prkc_step(ode, ode.y0, 1.0, c, al);
        EXPECT_LT(std::abs(as_complex(pr.y_next) - eval_R_tilde(p, q, c, al)), 1e-12);
        const double pa = -20.0 * u(rng);
        auto oa = scalar_test(pa, 0.5 * q);
        const auto a = arkc_step(oa, oa.y0, 1.0, ca);
        EXPECT_LT(std::abs(as_complex(a.y_next) - eval_R_hat(pa, 0.5 * q, ca)), 1e-12);
        const int m = 1 + k % 4;
        const double qn = 2.15 * m * (2.0 * u(rng) - 1.0);
        auto on = scalar_test(p, qn);
        const auto n = nprkc_step(on, on.y0, 1.0, c, m);
        EXPECT_LT(std::abs(as_complex(n.y_next) - eval_R_ddot(p, qn, c, m)), 1e-12);
    }
}

TEST(Degeneration, NoAdvectionCollapsesToRkc) {
    for (unsigned seed : {11u, 12u, 13u}) {
        const auto ode = random_linear(seed, false, true);
        const auto c = rkc_coeffs(8, kDefaultEta);
        const auto ref = rkc_step(ode.f_D, ode.y0, 0.05, c).y_next;
        EXPECT_LE(rel_diff(prkc_step(ode, ode.y0, 0.05, c, default_prkc_alphas(c)).y_next, ref), 1e-14);
        EXPECT_LE(rel_diff(nprkc_step(ode, ode.y0, 0.05, c, 3).y_next, ref), 1e-14);
        const auto c15 = rkc_coeffs(15, 9.0);
        EXPECT_LE(rel_diff(arkc_step(ode, ode.y0, 0.05, c15).y_next, rkc_step(ode.f_D, ode.y0, 0.05, c15).y_next),
                  1e-14);
    }
}

TEST(Degeneration, NoDiffusionCollapsesToPureRk) {
    for (unsigned seed : {21u, 22u, 23u}) {
        const auto ode = random_linear(seed, true, false);
        const auto c = rkc_coeffs(8, kDefaultEta);
        const auto al = default_prkc_alphas(c);
        const double h = 0.1;
        EXPECT_LE(rel_diff(prkc_step(ode, ode.y0, h, c, al).y_next, prkc_rk3_step(ode.f_A, ode.y0, h, al)), 1e-14);
        EXPECT_LE(rel_diff(arkc_step(ode, ode.y0, h, c).y_next, midpoint_step(ode.f_A, ode.y0, h)), 1e-14);
        for (int m : {1, 2, 5}) {
            EXPECT_LE(rel_diff(nprkc_step(ode, ode.y0, h, c, m).y_next, rk4m_step(ode.f_A, ode.y0, h, m)), 1e-14) << m;
        }
    }
}

TEST(Rk4m, ZeroField) { EXPECT_EQ(rk4m_step(zero_rhs(), State{2.5}, 0.1, 3), State{2.5}); }

TEST(Rk4m, HandExpandedSingleBlock) {
    // f(y) = y, h = 0.1, y = 1: K_1 = 1 + h/2, then one block.
    const double h = 0.1;
    const double F1 = 1.0;
    const double K1 = 1.0 + 0.5 * h * F1;
    const double F2 = K1;
    const double K2 = K1 + h / 6.0 * F2;
    const double F3 = K2;
    const double K3 = K1 - h / 6.0 * F3;
    const double F4 = K3;
    const double expect = K1 + 2.0 * h * F2 - 1.5 * h * F4;
    const RhsFn f = [](std::span<const double> y, std::span<double> o) { o[0] = y[0]; };
    EXPECT_NEAR(rk4m_step(f, State{1.0}, h, 1)[0], expect, 1e-15);
    // ... which agrees with the e^h Taylor polynomial through h^3.
    EXPECT_NEAR(expect, 1.0 + h + h * h / 2 + h * h * h / 6, 1e-5);
}

TEST(Rk4m, LinearAmplificationFactorizes) {
    for (int m : {1, 2, 4}) {
        const double lambda = -1.3, h = 0.4;
        const RhsFn f = [lambda](std::span<const double> y, std::span<double> o) { o[0] = lambda * y[0]; };
        const double z = lambda * h, md = m;
        const double expect = std::pow(1 + z / (2 * md), m) *
                              std::pow(1 + z / (2 * md) + z * z / (4 * md * md) + z * z * z / (24 * md * md * md), m);
        EXPECT_NEAR(rk4m_step(f, State{1.0}, h, m)[0], expect, 1e-14);
    }
}

namespace {

double global_error(const SplitOde& ode, FixedStepConfig cfg, double h, cplx exact) {
    cfg.h = h;
    const auto r = integrate_fixed(ode, cfg);
    return std::abs(as_complex(r.y) - exact);
}

double order_slope(Method method, int m = 1) {
    const double l1 = -1.0, l2 = 2.0;
    auto ode = scalar_test(l1, l2);
    ode.t_end = 1.0;
    const cplx exact = std::exp(cplx(l1, l2));
    FixedStepConfig cfg;
    cfg.method = method;
    cfg.s = 5;
    cfg.m = m;
    std::vector<double> hs, es;
    for (int k = 4; k <= 9; ++k) {
        const double h = std::ldexp(1.0, -k);
        hs.push_back(std::log(h));
        es.push_back(std::log(global_error(ode, cfg, h, exact)));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(hs.size());
    for (std::size_t i = 0; i < hs.size(); ++i) sx += hs[i], sy += es[i], sxx += hs[i] * hs[i], sxy += hs[i] * es[i];
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST(Order, StabilizedMethodsAreSecondOrder) {
    for (Method m : {Method::Rkc, Method::Prkc, Method::Arkc, Method::Nprkc}) {
        const double p = order_slope(m);
        EXPECT_GE(p, 1.8) << method_name(m);
        EXPECT_LE(p, 2.2) << method_name(m);
    }
    const double p3 = order_slope(Method::Nprkc, 3);
    EXPECT_GE(p3, 1.8);
    EXPECT_LE(p3, 2.2);
}

TEST(Order, PureRkMethodsAreThirdOrder) {
    for (Method m : {Method::Rk3, Method::PrkcRk3}) {
        const double p = order_slope(m);
        EXPECT_GE(p, 2.75) << method_name(m);
        EXPECT_LE(p, 3.25) << method_name(m);
    }
    const double p2 = order_slope(Method::Midpoint);
    EXPECT_GE(p2, 1.8);
    EXPECT_LE(p2, 2.2);
}

TEST(Order, NonlinearThirdOrderOfFourStageScheme) {
    // y' = -y^2, y(0) = 1, exact 1/(1 + t).
    const RhsFn f = [](std::span<const double> y, std::span<double> o) { o[0] = -y[0] * y[0]; };
    std::vector<double> errs;
    for (int n : {8, 16, 32, 64}) {
        State y{1.0};
        for (int i = 0; i < n; ++i) y = rk4m_step(f, y, 1.0 / n, 1);
        errs.push_back(std::abs(y[0] - 0.5));
    }
    for (std::size_t i = 1; i < errs.size(); ++i) {
        const double p = std::log2(errs[i - 1] / errs[i]);
        EXPECT_GE(p, 2.75);
        EXPECT_LE(p, 3.25);
    }
}

TEST(IntegrateFixed, TruncatesFinalStepAndCounts) {
    auto ode = scalar_test(-1.0, 0.0);
    ode.t_end = 1.0;
    FixedStepConfig cfg;
    cfg.method = Method::Nprkc;
    cfg.h = 0.3;
    cfg.s = 4;
    cfg.m = 2;
    const auto r = integrate_fixed(ode, cfg);
    EXPECT_EQ(r.steps, 4);
    EXPECT_EQ(r.stats.nfd, 16);
    EXPECT_EQ(r.stats.nfa, 32);
    // Three steps of 0.3 and one of 0.1.
    const auto c = rkc_coeffs(4, kDefaultEta);
    const double expect = std::pow(eval_R_s(cplx(-0.3), c).real(), 3) * eval_R_s(cplx(-0.1), c).real();
    EXPECT_NEAR(r.y[0], expect, 1e-14);
}

TEST(IntegrateFixed, NonFiniteReportsStepIndex) {
    auto ode = scalar_test(-1e6, 0.0);
    ode.t_end = 1.0;
    FixedStepConfig cfg;
    cfg.method = Method::Rkc;
    cfg.h = 0.01;
    cfg.s = 2;
    try {
        (void)integrate_fixed(ode, cfg);
        FAIL() << "expected blow-up";
    } catch (const NonFiniteState& e) {
        EXPECT_GE(e.index(), 1);
        EXPECT_LE(e.index(), 100);
    }
}

TEST(MethodNames, RoundTrip) {
    for (Method m : {Method::Rkc, Method::Prkc, Method::Arkc, Method::Nprkc, Method::Rk3, Method::PrkcRk3,
                     Method::Midpoint}) {
        EXPECT_EQ(parse_method(method_name(m)), m);
    }
    EXPECT_FALSE(parse_method("rock2").has_value());
}
