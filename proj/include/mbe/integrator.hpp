#pragma once

// Embedded Dormand-Prince 5(4) integrator with PI step-size control and the
// pair's native 4th-order continuous extension for dense output.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "mbe/errors.hpp"
#include "mbe/linalg.hpp"

namespace mbe {

struct IntegratorOptions {
    double tol = 1e-10;
    /// Times at which dense output is emitted; increasing, inside the span.
    std::vector<double> sample_times;
    /// Also emit every accepted step end.
    bool record_steps = false;
    /// Maximum |I(y(t)) - I(y(0))| for the conserved quantity I handed to the
    /// integrator.  Empty selects max(1e-9, 10 tol) per 10^3 time units.
    std::optional<double> drift_budget;
    /// When set, integrate with this constant step and no error control.
    std::optional<double> fixed_step;
    double max_step = std::numeric_limits<double>::infinity();
    std::size_t max_steps = 200'000'000;
};

struct IntegratorStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evals = 0;
    double max_drift = 0.0;
};

inline double default_drift_budget(double tol, double span) {
    return std::max(1e-9, 10.0 * tol) * std::max(1.0, std::abs(span) / 1e3);
}

namespace detail {

/// Kahan-compensated accumulator for the running time.
class CompensatedTime {
public:
    explicit CompensatedTime(double t0) : sum_(t0) {}
    void add(double h) {
        const double y = h - comp_;
        const double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

private:
    double sum_;
    double comp_ = 0.0;
};

struct Dp5 {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                            a75 = -2187.0 / 6784, a76 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    static constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                            d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                            d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
};

}  // namespace detail

/// Integrates y' = f(t, y) from t0 to t1 (t1 > t0).  `observe(t, y)` receives
/// the initial point, every requested sample and, if enabled, every accepted
/// step end, in strictly increasing time order.  `invariant(y)` is a scalar
/// that the exact flow conserves; its drift is audited against the budget.
template <std::size_t N, class Rhs, class Observer, class Invariant>
IntegratorStats dopri5(Rhs&& f, double t0, double t1, const Vec<N>& y0, const IntegratorOptions& opt,
                       Observer&& observe, Invariant&& invariant) {
    using C = detail::Dp5;
    if (!(std::isfinite(t0) && std::isfinite(t1) && t1 > t0))
        throw Error(ErrorKind::InvalidParameter, "integration span must be finite and increasing");
    if (!opt.fixed_step && !(opt.tol >= 1e-13 && opt.tol <= 1e-4))
        throw Error(ErrorKind::InvalidParameter, "tol must lie in [1e-13, 1e-4]");
    if (!std::is_sorted(opt.sample_times.begin(), opt.sample_times.end()))
        throw Error(ErrorKind::InvalidParameter, "sample times must be increasing");

    const double span = t1 - t0;
    const double budget = opt.drift_budget.value_or(default_drift_budget(opt.tol, span));
    const double inv0 = invariant(y0);
    const double atol = opt.tol, rtol = opt.tol;

    IntegratorStats stats;
    Vec<N> y = y0, k1{}, k2{}, k3{}, k4{}, k5{}, k6{}, k7{}, ytmp{}, ynew{};

    auto eval = [&](double t, const Vec<N>& x, Vec<N>& out) {
        out = f(t, x);
        ++stats.rhs_evals;
    };

    auto sample = opt.sample_times.begin();
    double last_emitted = t0;
    observe(t0, y0);
    while (sample != opt.sample_times.end() && *sample <= t0) ++sample;

    eval(t0, y, k1);

    auto weighted_norm = [&](const Vec<N>& a, const Vec<N>& b, const Vec<N>& err) {
        double s = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sc = atol + rtol * std::max(std::abs(a[i]), std::abs(b[i]));
            s += (err[i] / sc) * (err[i] / sc);
        }
        return std::sqrt(s / static_cast<double>(N));
    };

    // Initial step guess (Hairer & Wanner, HINIT).
    double h;
    if (opt.fixed_step) {
        h = *opt.fixed_step;
    } else {
        const Vec<N> zero{};
        double dnf = weighted_norm(y, zero, k1), dny = weighted_norm(y, zero, y);
        h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * dny / dnf;
        h = std::min(h, opt.max_step);
        for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + h * k1[i];
        eval(t0 + h, ytmp, k2);
        const double der2 = weighted_norm(y, zero, k2 - k1) / h;
        const double der12 = std::max(std::abs(der2), dnf);
        const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
        h = std::min({100.0 * h, h1, opt.max_step, span});
    }

    constexpr double beta = 0.04, expo1 = 0.2 - beta * 0.75, safe = 0.9;
    constexpr double facc1 = 1.0 / 0.2, facc2 = 1.0 / 10.0;
    double facold = 1e-4;
    bool last_rejected = false;

    detail::CompensatedTime clock(t0);
    while (true) {
        const double t = clock.value();
        if (t >= t1) break;
        if (stats.accepted + stats.rejected >= opt.max_steps)
            throw IntegrationError(ErrorKind::StepSizeUnderflow, t, "step budget exhausted");
        bool last = false;
        if (t + h >= t1 || t + 1.01 * h >= t1) {
            h = t1 - t;
            last = true;
        }
        if (!opt.fixed_step && h < 1e-14 * std::max(1.0, std::abs(t)))
            throw IntegrationError(ErrorKind::StepSizeUnderflow, t, "step size underflow");

        for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + h * C::a21 * k1[i];
        eval(t + C::c2 * h, ytmp, k2);
        for (std::size_t i = 0; i < N; ++i) ytmp[i] = y[i] + h * (C::a31 * k1[i] + C::a32 * k2[i]);
        eval(t + C::c3 * h, ytmp, k3);
        for (std::size_t i = 0; i < N; ++i)
            ytmp[i] = y[i] + h * (C::a41 * k1[i] + C::a42 * k2[i] + C::a43 * k3[i]);
        eval(t + C::c4 * h, ytmp, k4);
        for (std::size_t i = 0; i < N; ++i)
            ytmp[i] = y[i] + h * (C::a51 * k1[i] + C::a52 * k2[i] + C::a53 * k3[i] + C::a54 * k4[i]);
        eval(t + C::c5 * h, ytmp, k5);
        for (std::size_t i = 0; i < N; ++i)
            ytmp[i] = y[i] + h * (C::a61 * k1[i] + C::a62 * k2[i] + C::a63 * k3[i] + C::a64 * k4[i] +
                                  C::a65 * k5[i]);
        eval(t + h, ytmp, k6);
        for (std::size_t i = 0; i < N; ++i)
            ynew[i] = y[i] + h * (C::a71 * k1[i] + C::a73 * k3[i] + C::a74 * k4[i] + C::a75 * k5[i] +
                                  C::a76 * k6[i]);
        eval(t + h, ynew, k7);

        double err = 0.0;
        if (!opt.fixed_step) {
            Vec<N> e{};
            for (std::size_t i = 0; i < N; ++i)
                e[i] = h * (C::e1 * k1[i] + C::e3 * k3[i] + C::e4 * k4[i] + C::e5 * k5[i] + C::e6 * k6[i] +
                            C::e7 * k7[i]);
            // Error per unit step below unit step size: a step of length h
            // may spend at most h * tol, which keeps invariant drift within
            // budget over long spans.
            err = weighted_norm(y, ynew, e) / std::min(1.0, h);
            if (!std::isfinite(err))
                throw IntegrationError(ErrorKind::StepSizeUnderflow, t, "non-finite error estimate");
        }

        if (err > 1.0) {
            const double fac11 = std::pow(err, expo1);
            h /= std::min(facc1, fac11 / safe);
            last_rejected = true;
            ++stats.rejected;
            continue;
        }

        // Accepted: emit dense samples inside (t, t + h).
        const double t_end = last ? t1 : t + h;
        if (sample != opt.sample_times.end() && *sample < t_end) {
            Vec<N> r2{}, r3{}, r4{}, r5{};
            for (std::size_t i = 0; i < N; ++i) {
                const double ydiff = ynew[i] - y[i];
                const double bspl = h * k1[i] - ydiff;
                r2[i] = ydiff;
                r3[i] = bspl;
                r4[i] = ydiff - h * k7[i] - bspl;
                r5[i] = h * (C::d1 * k1[i] + C::d3 * k3[i] + C::d4 * k4[i] + C::d5 * k5[i] + C::d6 * k6[i] +
                             C::d7 * k7[i]);
            }
            while (sample != opt.sample_times.end() && *sample < t_end) {
                const double ts = *sample++;
                if (ts <= last_emitted) continue;
                const double th = (ts - t) / h, th1 = 1.0 - th;
                Vec<N> ys{};
                for (std::size_t i = 0; i < N; ++i)
                    ys[i] = y[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
                observe(ts, ys);
                last_emitted = ts;
            }
        }

        y = ynew;
        k1 = k7;
        if (last)
            clock = detail::CompensatedTime(t1);
        else
            clock.add(h);
        ++stats.accepted;

        const double drift = std::abs(invariant(y) - inv0);
        stats.max_drift = std::max(stats.max_drift, drift);
        if (drift > budget)
            throw IntegrationError(ErrorKind::DriftBudgetExceeded, t_end,
                                   "conserved quantity drifted by " + std::to_string(drift));

        const bool sample_here = sample != opt.sample_times.end() && *sample == t_end;
        if ((opt.record_steps || sample_here) && t_end > last_emitted) {
            observe(t_end, y);
            last_emitted = t_end;
        }
        while (sample != opt.sample_times.end() && *sample <= t_end) ++sample;

        if (!opt.fixed_step) {
            const double fac11 = std::pow(std::max(err, 1e-300), expo1);
            double fac = fac11 / std::pow(facold, beta);
            fac = std::max(facc2, std::min(facc1, fac / safe));
            double hnew = std::min(h / fac, opt.max_step);
            if (last_rejected) hnew = std::min(hnew, h);
            facold = std::max(err, 1e-4);
            last_rejected = false;
            h = hnew;
        }
    }
    return stats;
}

}  // namespace mbe
