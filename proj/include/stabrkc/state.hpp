#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stabrkc {

using State = std::vector<double>;

/// Right-hand side evaluator writing f(y) into `out` (same length as `y`).
using RhsFn = std::function<void(std::span<const double> y, std::span<double> out)>;

/// Spectral radius estimate of a Jacobian at a state.
using RadiusFn = std::function<double(std::span<const double> y)>;

/// Radius provider plus how often the adaptive loop refreshes it (in accepted steps).
struct RadiusProvider {
    RadiusFn fn;
    int refresh_every = 1;

    double operator()(std::span<const double> y) const { return fn ? fn(y) : 0.0; }
};

/// Additively split autonomous system y' = f_D(y) + f_A(y), f_D moderately stiff.
struct SplitOde {
    std::string id;
    std::size_t dim = 0;
    RhsFn f_D;
    RhsFn f_A;
    double t0 = 0.0;
    double t_end = 1.0;
    State y0;
    RadiusProvider rho_D;
    RadiusProvider rho_A;
};

/// Accepted/rejected steps and f_D / f_A evaluation counters of a run.
struct StepStats {
    long n_accept = 0;
    long n_reject = 0;
    long nfd = 0;
    long nfa = 0;

    StepStats& operator+=(const StepStats& o) {
        n_accept += o.n_accept;
        n_reject += o.n_reject;
        nfd += o.nfd;
        nfa += o.nfa;
        return *this;
    }
};

/// Thrown when a stage value overflows or becomes NaN.
class NonFiniteState : public std::runtime_error {
public:
    NonFiniteState(const std::string& where, long index)
        : std::runtime_error(where + ": non-finite value at stage/step " + std::to_string(index)),
          index_(index) {}

    [[nodiscard]] long index() const noexcept { return index_; }

private:
    long index_;
};

[[nodiscard]] inline bool all_finite(std::span<const double> y) noexcept {
    for (double v : y) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

inline void ensure_finite(std::span<const double> y, const char* where, long index) {
    if (!all_finite(y)) throw NonFiniteState(where, index);
}

/// Root-mean-square norm sqrt(sum e_i^2 / d).
[[nodiscard]] inline double rms_norm(std::span<const double> e) noexcept {
    if (e.empty()) return 0.0;
    double acc = 0.0;
    for (double v : e) acc += v * v;
    return std::sqrt(acc / static_cast<double>(e.size()));
}

[[nodiscard]] inline double max_norm(std::span<const double> e) noexcept {
    double m = 0.0;
    for (double v : e) m = std::max(m, std::abs(v));
    return m;
}

[[nodiscard]] inline State difference(std::span<const double> a, std::span<const double> b) {
    State d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return d;
}

/// Evaluate an RHS into a freshly allocated vector.
[[nodiscard]] inline State eval(const RhsFn& f, std::span<const double> y) {
    State out(y.size());
    f(y, out);
    return out;
}

/// Combined right-hand side f_D + f_A.
[[nodiscard]] inline RhsFn combined_rhs(const SplitOde& ode) {
    return [fd = ode.f_D, fa = ode.f_A](std::span<const double> y, std::span<double> out) {
        State tmp(y.size());
        fd(y, out);
        fa(y, tmp);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += tmp[i];
    };
}

[[nodiscard]] inline RhsFn zero_rhs() {
    return [](std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
    };
}

}  // namespace stabrkc
