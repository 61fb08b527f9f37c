#pragma once

// Experiment campaigns: adiabatic and stable asymptotics of the full system,
// attraction to the stable branch under the averaged flow, averaging
// consistency, the KBM order function, a priori field bounds and the
// pure-state oracle.  Every campaign is a pure function of its config; the
// optional worker count only changes wall time.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "mbe/dynamics.hpp"
#include "mbe/equilibria.hpp"
#include "mbe/errors.hpp"
#include "mbe/model.hpp"
#include "mbe/parallel.hpp"
#include "mbe/trig_series.hpp"

namespace mbe {

namespace detail {

inline double period(double Omega) { return 2.0 * std::numbers::pi / Omega; }

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2) return std::nan("");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0 && y[i] > 0.0)) return std::nan("");
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double nn = static_cast<double>(n);
    return (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
}

inline double spread(const std::vector<double>& v) {
    if (v.empty()) return std::nan("");
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi / *lo;
}

inline IntegratorOptions sampled_options(double tol, double horizon, double dt, bool steps) {
    IntegratorOptions opt;
    opt.tol = tol;
    opt.sample_times = uniform_samples(0.0, horizon, dt);
    opt.record_steps = steps;
    return opt;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Adiabatic asymptotics

struct AdiabaticConfig {
    ModelParams base;  ///< p and gamma are replaced per run
    Pumping pumping{Complex{1.0, 0.0}, {}};
    double r = 2.0;
    std::vector<double> p_values{1e-2, 3e-3, 1e-3, 3e-4};
    /// Z2 states with purely resonant pumping are exact periodic solutions of
    /// the full system (E is integrator noise), so the default sits on Z1.
    Branch branch = Branch::Z1;
    double parameter = std::numbers::pi / 2;  ///< theta on Z1, S3 on Z2
    double tol = 1e-10;
    int points_per_period = 200;
};

struct AdiabaticError {
    double total = 0.0;  ///< max_t of field + Bloch deviation
    double field = 0.0;  ///< max_t |M(t) - exp(-i Omega t) M|
    double bloch = 0.0;  ///< max_t |S(t) - R(omega t) S|
    double drift = 0.0;
    std::size_t steps = 0;
};

/// Integrates the full system from the lab image of h over [0, horizon] and
/// measures the deviation from the single-frequency solution built on h.
inline AdiabaticError adiabatic_error(const ModelParams& m, const Pumping& P, const HarmonicState& h, double horizon,
                                      double tol, int points_per_period = 200) {
    const EnvelopeState env = h.envelope();
    const IntegratorOptions opt =
        detail::sampled_options(tol, horizon, detail::period(m.Omega) / points_per_period, true);
    AdiabaticError out;
    auto observe = [&](double t, const State5& y) {
        const FullState ref = to_lab_frame(env, m, t);
        const FullState cur = unpack_full(y);
        const double ef = std::abs(cur.M - ref.M);
        const double es = norm(cur.S - ref.S);
        out.field = std::max(out.field, ef);
        out.bloch = std::max(out.bloch, es);
        out.total = std::max(out.total, ef + es);
    };
    const auto stats = integrate_observed<5>(RhsKind::Full, pack(to_lab_frame(env, m, 0.0)), 0.0, horizon, m, P,
                                             opt, observe);
    out.drift = stats.max_drift;
    out.steps = stats.accepted;
    return out;
}

struct ScalingReport {
    std::vector<double> p_values;
    std::vector<double> errors;
    std::vector<double> field_errors;
    std::vector<double> bloch_errors;
    std::vector<double> ratios;  ///< E(p) / sqrt(p)
    double slope = 0.0;
    bool ratios_ok = false;  ///< ratios non-increasing within factor 1.5
    bool slope_ok = false;   ///< slope >= 0.4
    bool pass = false;
};

inline HarmonicState harmonic_state(Branch branch, const ModelParams& m, const Pumping& P, double parameter) {
    return branch == Branch::Z1 ? harmonic_z1(m, P, parameter) : harmonic_z2(m, P, parameter);
}

inline ScalingReport run_adiabatic_asymptotics(const AdiabaticConfig& cfg, unsigned workers = 1) {
    if (cfg.p_values.size() < 3) throw Error(ErrorKind::InvalidParameter, "slope fit needs at least 3 p values");
    for (std::size_t i = 0; i < cfg.p_values.size(); ++i) {
        if (!(cfg.p_values[i] > 0.0)) throw Error(ErrorKind::InvalidParameter, "p values must be positive");
        if (i > 0 && !(cfg.p_values[i] < cfg.p_values[i - 1]))
            throw Error(ErrorKind::InvalidParameter, "p values must be strictly decreasing");
    }
    const auto results = parallel_map<AdiabaticError>(cfg.p_values.size(), workers, [&](std::size_t i) {
        const double p = cfg.p_values[i];
        const ModelParams m = cfg.base.with_coupling(p, cfg.r);
        if (!m.is_resonant()) throw Error(ErrorKind::NotResonant, "adiabatic campaign needs Omega == omega");
        const HarmonicState h = harmonic_state(cfg.branch, m, cfg.pumping, cfg.parameter);
        return adiabatic_error(m, cfg.pumping, h, 1.0 / p, cfg.tol, cfg.points_per_period);
    });
    ScalingReport rep;
    rep.p_values = cfg.p_values;
    for (std::size_t i = 0; i < results.size(); ++i) {
        rep.errors.push_back(results[i].total);
        rep.field_errors.push_back(results[i].field);
        rep.bloch_errors.push_back(results[i].bloch);
        rep.ratios.push_back(results[i].total / std::sqrt(cfg.p_values[i]));
    }
    rep.slope = detail::loglog_slope(rep.p_values, rep.errors);
    rep.ratios_ok = true;
    for (std::size_t i = 1; i < rep.ratios.size(); ++i)
        if (!(rep.ratios[i] <= 1.5 * rep.ratios[i - 1])) rep.ratios_ok = false;
    rep.slope_ok = rep.slope >= 0.4;
    rep.pass = rep.ratios_ok && rep.slope_ok;
    return rep;
}

// ---------------------------------------------------------------------------
// Stable asymptotics

struct StableConfig {
    ModelParams base;
    Pumping pumping{Complex{1.0, 0.0}, {}};
    std::vector<double> r_values{2.0, 5.0};
    double p = 3e-3;
    double d = 0.05;
    std::optional<double> s;  ///< default beta_r / 8
    std::size_t samples = 16;
    std::uint64_t seed = 1;
    double tol = 1e-10;
    int points_per_period = 50;
};

struct StableCase {
    double r = 0.0, p = 0.0, d = 0.0, s = 0.0;
    double max_field_deviation = 0.0;  ///< max over samples, t of |M(t) - exp(-i Omega t)(-Ae)|
    double max_distance = 0.0;         ///< max over samples, t of dist(rotating state, Z2+)
    double max_limit_deviation = 0.0;  ///< max over samples of |Me(1/p) + Ae|
    double constant = 0.0;             ///< max_field_deviation / (sqrt p + d)
    bool limit_ok = false;             ///< max_limit_deviation <= sqrt p + d
};

struct StableReport {
    std::vector<StableCase> cases;  ///< per r: (d, p), (d/2, p), (d, p/3)
    std::vector<double> constant_spread;  ///< per r: max C / min C
    bool constant_stable = false;         ///< every spread <= 2
    bool limits_ok = false;
    bool pass = false;
};

struct SampleOutcome {
    double field = 0.0, distance = 0.0, limit = 0.0;
};

inline SampleOutcome stable_sample(const ModelParams& m, const Pumping& P, const EnvelopeState& env0, double tol,
                                   int points_per_period) {
    const double horizon = 1.0 / m.p;
    const double beta = z2_half_length(m, P);
    const IntegratorOptions opt =
        detail::sampled_options(tol, horizon, detail::period(m.Omega) / points_per_period, true);
    SampleOutcome out;
    State5 last{};
    auto observe = [&](double t, const State5& y) {
        const FullState cur = unpack_full(y);
        out.field = std::max(out.field, std::abs(cur.M - std::polar(1.0, -m.Omega * t) * (-P.Ae)));
        const State5 env = pack(to_rotating_frame(cur, m, t));
        out.distance = std::max(out.distance, distance_to_z2_segment(env, m, P, 0.0, beta).distance);
        last = env;
    };
    integrate_observed<5>(RhsKind::Full, pack(to_lab_frame(env0, m, 0.0)), 0.0, horizon, m, P, opt, observe);
    out.limit = std::abs(Complex{last[0], last[1]} + P.Ae);
    return out;
}

inline StableReport run_stable_asymptotics(const StableConfig& cfg, unsigned workers = 1) {
    struct Task {
        std::size_t case_index;
        ModelParams m;
        EnvelopeState state;
    };
    StableReport rep;
    std::vector<Task> tasks;
    for (double r : cfg.r_values) {
        const ModelParams probe = cfg.base.with_coupling(cfg.p, r);
        const double beta = z2_half_length(probe, cfg.pumping);
        const double s = cfg.s.value_or(beta / 8.0);
        const std::array<std::pair<double, double>, 3> grid{
            {{cfg.d, cfg.p}, {0.5 * cfg.d, cfg.p}, {cfg.d, cfg.p / 3.0}}};
        for (const auto& [d, p] : grid) {
            const ModelParams m = cfg.base.with_coupling(p, r);
            StableCase c;
            c.r = r;
            c.p = p;
            c.d = d;
            c.s = s;
            const std::size_t idx = rep.cases.size();
            rep.cases.push_back(c);
            for (const auto& st : sample_tubular(m, cfg.pumping, d, s, cfg.samples, cfg.seed))
                tasks.push_back({idx, m, st});
        }
    }
    const auto outcomes = parallel_map<SampleOutcome>(tasks.size(), workers, [&](std::size_t i) {
        return stable_sample(tasks[i].m, cfg.pumping, tasks[i].state, cfg.tol, cfg.points_per_period);
    });
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        auto& c = rep.cases[tasks[i].case_index];
        c.max_field_deviation = std::max(c.max_field_deviation, outcomes[i].field);
        c.max_distance = std::max(c.max_distance, outcomes[i].distance);
        c.max_limit_deviation = std::max(c.max_limit_deviation, outcomes[i].limit);
    }
    rep.limits_ok = true;
    rep.constant_stable = true;
    for (std::size_t k = 0; k < rep.cases.size(); ++k) {
        auto& c = rep.cases[k];
        const double scale = std::sqrt(c.p) + c.d;
        c.constant = c.max_field_deviation / scale;
        c.limit_ok = c.max_limit_deviation <= scale;
        rep.limits_ok = rep.limits_ok && c.limit_ok;
    }
    for (std::size_t k = 0; k + 2 < rep.cases.size(); k += 3) {
        const double sp = detail::spread({rep.cases[k].constant, rep.cases[k + 1].constant, rep.cases[k + 2].constant});
        rep.constant_spread.push_back(sp);
        rep.constant_stable = rep.constant_stable && sp <= 2.0;
    }
    rep.pass = rep.limits_ok && rep.constant_stable;
    return rep;
}

// ---------------------------------------------------------------------------
// Attraction along the averaged flow

struct AttractionConfig {
    ModelParams base;
    Pumping pumping{Complex{1.0, 0.0}, {}};
    double r = 2.0;
    double p = 1e-3;
    double d = 0.05;
    std::optional<double> s;
    std::size_t samples = 16;
    std::uint64_t seed = 1;
    double tol = 1e-10;
    std::size_t time_samples = 2000;
};

struct AttractionCase {
    double d = 0.0, s = 0.0;
    std::size_t samples = 0;
    double max_distance = 0.0;      ///< max over samples, t <= 1/p of distance to Z2+
    double constant = 0.0;          ///< max_distance / d
    double max_limit_deviation = 0.0;  ///< max over samples of |Me(1/p) + Ae|
    double max_normal_rate = 0.0;   ///< max of (d/dt normal d^2) / (p d^2) where checked
    std::size_t checked_points = 0;
    std::size_t monotone_violations = 0;
};

struct AttractionReport {
    std::vector<AttractionCase> cases;  ///< d and d/2
    double constant_ratio = 0.0;
    bool constant_stable = false;
    bool monotone = false;
    bool pass = false;
};

namespace detail {

struct AttractionOutcome {
    double distance = 0.0, limit = 0.0, rate = -std::numeric_limits<double>::infinity();
    std::size_t checked = 0, violations = 0;
};

inline AttractionOutcome attraction_sample(const ModelParams& m, const Pumping& P, const TubeCoordinates& tube,
                                           const State5& x0, double s, double tol, std::size_t time_samples) {
    const double horizon = 1.0 / m.p;
    const double beta = z2_half_length(m, P);
    IntegratorOptions opt = sampled_options(tol, horizon, horizon / static_cast<double>(time_samples), true);
    AttractionOutcome out;
    State5 last = x0;
    auto observe = [&](double, const State5& x) {
        out.distance = std::max(out.distance, distance_to_z2_segment(x, m, P, 0.0, beta).distance);
        last = x;
        if (!(x[4] >= s && x[4] <= beta - s)) return;
        // Directional derivative of the normal distance squared along the flow.
        const State5 f = averaged_rhs(x, m, P, RhsKind::Averaged);
        const double fn = norm(f);
        const double d2 = tube.normal_distance_squared(x);
        if (fn == 0.0 || d2 < 1e-20) return;
        const double h = 1e-6 / fn;
        const double rate =
            (tube.normal_distance_squared(x + h * f) - tube.normal_distance_squared(x + (-h) * f)) / (2.0 * h);
        const double normalised = rate / (m.p * d2);
        ++out.checked;
        out.rate = std::max(out.rate, normalised);
        if (normalised > 0.0) ++out.violations;
    };
    integrate_observed<5>(RhsKind::Averaged, x0, 0.0, horizon, m, P, opt, observe);
    out.limit = std::abs(Complex{last[0], last[1]} + P.Ae);
    return out;
}

}  // namespace detail

inline AttractionReport run_attraction(const AttractionConfig& cfg, unsigned workers = 1) {
    const ModelParams m = cfg.base.with_coupling(cfg.p, cfg.r);
    const double beta = z2_half_length(m, cfg.pumping);
    const double s = cfg.s.value_or(beta / 8.0);
    const TubeCoordinates tube(m, cfg.pumping);
    AttractionReport rep;
    for (double d : {cfg.d, 0.5 * cfg.d}) {
        const auto states = sample_tubular(m, cfg.pumping, d, s, cfg.samples, cfg.seed);
        const auto outs = parallel_map<detail::AttractionOutcome>(states.size(), workers, [&](std::size_t i) {
            return detail::attraction_sample(m, cfg.pumping, tube, pack(states[i]), s, cfg.tol, cfg.time_samples);
        });
        AttractionCase c;
        c.d = d;
        c.s = s;
        c.samples = states.size();
        c.max_normal_rate = -std::numeric_limits<double>::infinity();
        for (const auto& o : outs) {
            c.max_distance = std::max(c.max_distance, o.distance);
            c.max_limit_deviation = std::max(c.max_limit_deviation, o.limit);
            c.max_normal_rate = std::max(c.max_normal_rate, o.rate);
            c.checked_points += o.checked;
            c.monotone_violations += o.violations;
        }
        c.constant = c.max_distance / d;
        rep.cases.push_back(c);
    }
    rep.constant_ratio = detail::spread({rep.cases[0].constant, rep.cases[1].constant});
    rep.constant_stable = rep.constant_ratio <= 2.0;
    rep.monotone = rep.cases[0].monotone_violations == 0 && rep.cases[1].monotone_violations == 0 &&
                   rep.cases[0].checked_points > 0;
    rep.pass = rep.constant_stable && rep.monotone;
    return rep;
}

// ---------------------------------------------------------------------------
// Averaged versus interaction flow

struct AvgVsIntConfig {
    ModelParams base;
    Pumping pumping{Complex{1.0, 0.0}, {}};
    double r = 2.0;
    std::vector<double> p_values{1e-2, 1e-3};
    EnvelopeState initial{Complex{-0.5, 0.3}, {0.2, -0.1, 0.6}};
    double horizon_factor = 1.0;
    double tol = 1e-10;
    std::size_t time_samples = 2000;
};

struct AvgVsIntReport {
    std::vector<double> p_values;
    std::vector<double> max_difference;
    std::vector<double> ratios;  ///< max_difference / sqrt(p)
    bool pass = false;  ///< ratios non-increasing within factor 2 as p decreases
};

/// max over [0, horizon] of |interaction(t) - averaged(t)| from the same state.
inline double averaged_vs_interaction_difference(const ModelParams& m, const Pumping& P, const State5& x0,
                                                 RhsKind averaged_kind, double horizon, double tol,
                                                 std::size_t time_samples) {
    IntegratorOptions opt = detail::sampled_options(tol, horizon, horizon / static_cast<double>(time_samples), false);
    std::vector<State5> a, b;
    integrate_observed<5>(RhsKind::Interaction, x0, 0.0, horizon, m, P, opt,
                          [&](double, const State5& y) { a.push_back(y); });
    integrate_observed<5>(averaged_kind, x0, 0.0, horizon, m, P, opt,
                          [&](double, const State5& y) { b.push_back(y); });
    double worst = 0.0;
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) worst = std::max(worst, norm(a[i] - b[i]));
    return worst;
}

inline AvgVsIntReport run_averaged_vs_interaction(const AvgVsIntConfig& cfg, unsigned workers = 1) {
    for (std::size_t i = 0; i < cfg.p_values.size(); ++i)
        if (!(cfg.p_values[i] > 0.0) || (i > 0 && !(cfg.p_values[i] < cfg.p_values[i - 1])))
            throw Error(ErrorKind::InvalidParameter, "p values must be positive and strictly decreasing");
    const auto diffs = parallel_map<double>(cfg.p_values.size(), workers, [&](std::size_t i) {
        const ModelParams m = cfg.base.with_coupling(cfg.p_values[i], cfg.r);
        return averaged_vs_interaction_difference(m, cfg.pumping, pack(cfg.initial), RhsKind::Averaged,
                                                  cfg.horizon_factor / cfg.p_values[i], cfg.tol, cfg.time_samples);
    });
    AvgVsIntReport rep;
    rep.p_values = cfg.p_values;
    rep.max_difference = diffs;
    for (std::size_t i = 0; i < diffs.size(); ++i) rep.ratios.push_back(diffs[i] / std::sqrt(cfg.p_values[i]));
    rep.pass = !rep.ratios.empty();
    for (std::size_t i = 1; i < rep.ratios.size(); ++i)
        if (!(rep.ratios[i] <= 2.0 * rep.ratios[i - 1])) rep.pass = false;
    return rep;
}

struct NonResonantReport {
    double max_relative_deviation = 0.0;  ///< max_t | |Me(t)| / (exp(-gamma t / 2)|Me(0)|) - 1 |
    double max_bloch_drift = 0.0;          ///< max_t |Se(t) - Se(0)|
    bool pass = false;                     ///< relative deviation <= 5%
};

/// Off resonance the averaged envelope decays as exp(-gamma t / 2); compares
/// the interaction flow with that closed form over [0, horizon_factor / p].
inline NonResonantReport run_nonresonant_envelope(const ModelParams& m, const Pumping& P, const EnvelopeState& x0,
                                                  double horizon_factor, double tol, std::size_t time_samples = 2000) {
    check_averaging_kind(m, P, RhsKind::AveragedNonResonant);
    const double horizon = horizon_factor / m.p;
    const double m0 = std::abs(x0.Me);
    if (!(m0 > 0.0)) throw Error(ErrorKind::InvalidParameter, "initial envelope must have Me != 0");
    IntegratorOptions opt = detail::sampled_options(tol, horizon, horizon / static_cast<double>(time_samples), false);
    NonResonantReport rep;
    integrate_observed<5>(RhsKind::Interaction, pack(x0), 0.0, horizon, m, P, opt, [&](double t, const State5& y) {
        const double expected = std::exp(-0.5 * m.gamma * t) * m0;
        rep.max_relative_deviation =
            std::max(rep.max_relative_deviation, std::abs(std::hypot(y[0], y[1]) / expected - 1.0));
        rep.max_bloch_drift =
            std::max(rep.max_bloch_drift, norm(Vec3{y[2] - x0.Se[0], y[3] - x0.Se[1], y[4] - x0.Se[2]}));
    });
    rep.pass = rep.max_relative_deviation <= 0.05;
    return rep;
}

// ---------------------------------------------------------------------------
// KBM order function

/// v_r(x, t) = (f_r, g_r) at a frozen state as exact trigonometric sums.
inline std::array<TrigSeries, 5> interaction_series(const State5& x, const ModelParams& m, const Pumping& P) {
    const double W = m.Omega, w = m.omega();
    const double g1 = m.gamma1(), k1 = m.kappa1(), b = m.b();
    const double M1 = x[0], M2 = x[1], S1 = x[2], S2 = x[3], S3 = x[4];
    const TrigSeries cO = TrigSeries::cosine(W), sO = TrigSeries::sine(W);
    const TrigSeries cw = TrigSeries::cosine(w), sw = TrigSeries::sine(w);
    TrigSeries pump = TrigSeries::cosine(W, P.Ae.real()) + TrigSeries::sine(W, P.Ae.imag());
    for (const auto& mode : P.modes)
        pump += TrigSeries::cosine(mode.frequency, mode.amplitude.real()) +
                TrigSeries::sine(mode.frequency, mode.amplitude.imag());
    const TrigSeries bracket = g1 * (M2 * cO - M1 * sO) - k1 * ((-S1) * sw + S2 * cw);
    const TrigSeries field = M1 * cO + M2 * sO + pump;
    return {sO * bracket, (-1.0) * (cO * bracket), (-b * S3) * (field * cw), (-b * S3) * (field * sw),
            b * (field * (S1 * cw + S2 * sw))};
}

struct KbmConfig {
    ModelParams base;
    Pumping pumping{Complex{1.0, 0.0}, {}};
    double r = 2.0;
    std::vector<double> p_values{1e-2, 1e-3, 1e-4};
    State5 box_lo{-1.0, -1.0, -0.5, -0.5, -0.5};
    State5 box_hi{1.0, 1.0, 0.5, 0.5, 0.5};
    int grid = 3;
    int points_per_period = 64;
};

struct KbmReport {
    std::vector<double> p_values;
    std::vector<double> delta;
    std::vector<double> delta_over_p;
    double variation = 0.0;  ///< max / min of delta_over_p, minus 1
    double mean_mismatch = 0.0;  ///< max over grid of |series mean - averaged field / p|
    bool pass = false;           ///< variation < 10%
};

inline KbmReport run_kbm_order(const KbmConfig& cfg, unsigned workers = 1) {
    if (cfg.grid < 1) throw Error(ErrorKind::InvalidParameter, "grid needs at least one point per axis");
    std::vector<double> ps = cfg.p_values;
    for (double p : ps)
        if (!(p > 0.0)) throw Error(ErrorKind::InvalidParameter, "p values must be positive");
    // The rescaled field v_r depends on r only, so one parameter set serves all p.
    const ModelParams m = cfg.base.with_coupling(ps.front(), cfg.r);
    const RhsKind avg_kind = m.is_resonant() ? RhsKind::Averaged : RhsKind::AveragedNonResonant;
    check_averaging_kind(m, cfg.pumping, avg_kind);
    const double p_min = *std::min_element(ps.begin(), ps.end());
    const double horizon = 1.0 / p_min;
    std::vector<State5> states;
    std::size_t total = 1;
    for (int k = 0; k < 5; ++k) total *= static_cast<std::size_t>(cfg.grid);
    for (std::size_t idx = 0; idx < total; ++idx) {
        State5 x{};
        std::size_t rem = idx;
        for (std::size_t k = 0; k < 5; ++k) {
            const std::size_t j = rem % static_cast<std::size_t>(cfg.grid);
            rem /= static_cast<std::size_t>(cfg.grid);
            const double frac = cfg.grid == 1 ? 0.5 : static_cast<double>(j) / (cfg.grid - 1);
            x[k] = cfg.box_lo[k] + frac * (cfg.box_hi[k] - cfg.box_lo[k]);
        }
        states.push_back(x);
    }
    const double dt = detail::period(interaction_max_frequency(m, cfg.pumping)) / cfg.points_per_period;
    const auto n_t = static_cast<std::size_t>(std::floor(horizon / dt));

    // Every grid state yields the same frequency set, so the trigonometric
    // basis is evaluated once per T and shared.
    std::vector<double> freqs;
    auto index_of = [&](double nu) {
        for (std::size_t k = 0; k < freqs.size(); ++k)
            if (std::abs(freqs[k] - nu) <= 1e-13 * std::max(1.0, nu)) return k;
        freqs.push_back(nu);
        return freqs.size() - 1;
    };
    struct Coeffs {
        std::array<std::vector<double>, 5> c, s;
        std::array<double, 5> drift{};
    };
    KbmReport rep;
    std::vector<Coeffs> coeffs(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) {
        const auto series = interaction_series(states[i], m, cfg.pumping);
        const State5 vbar = (1.0 / m.p) * averaged_rhs(states[i], m, cfg.pumping, avg_kind);
        for (std::size_t k = 0; k < 5; ++k) {
            coeffs[i].drift[k] = series[k].mean() - vbar[k];
            rep.mean_mismatch = std::max(rep.mean_mismatch, std::abs(coeffs[i].drift[k]));
            for (const auto& term : series[k].terms()) {
                if (term.frequency == 0.0) continue;
                const std::size_t j = index_of(term.frequency);
                for (auto* v : {&coeffs[i].c[k], &coeffs[i].s[k]})
                    if (v->size() <= j) v->resize(j + 1, 0.0);
                coeffs[i].c[k][j] += term.cos_coef;
                coeffs[i].s[k][j] += term.sin_coef;
            }
        }
    }
    for (auto& co : coeffs)
        for (std::size_t k = 0; k < 5; ++k) {
            co.c[k].resize(freqs.size(), 0.0);
            co.s[k].resize(freqs.size(), 0.0);
        }

    constexpr std::size_t chunk = 4096;
    const std::size_t n_chunks = n_t / chunk + 1;
    const auto sups = parallel_map<std::vector<double>>(n_chunks, workers, [&](std::size_t ci) {
        std::vector<double> sup(ps.size(), 0.0);
        std::vector<double> sin_term(freqs.size()), cos_term(freqs.size());
        const std::size_t j_end = std::min(n_t + 1, (ci + 1) * chunk);
        for (std::size_t j = ci * chunk; j < j_end; ++j) {
            const double T = dt * static_cast<double>(j);
            // int_0^T cos(nu t) dt and int_0^T sin(nu t) dt
            for (std::size_t f = 0; f < freqs.size(); ++f) {
                sin_term[f] = std::sin(freqs[f] * T) / freqs[f];
                cos_term[f] = (1.0 - std::cos(freqs[f] * T)) / freqs[f];
            }
            double best = 0.0;
            for (const auto& co : coeffs) {
                double s2 = 0.0;
                for (std::size_t k = 0; k < 5; ++k) {
                    double v = co.drift[k] * T;
                    for (std::size_t f = 0; f < freqs.size(); ++f) v += co.c[k][f] * sin_term[f] + co.s[k][f] * cos_term[f];
                    s2 += v * v;
                }
                best = std::max(best, s2);
            }
            for (std::size_t q = 0; q < ps.size(); ++q)
                if (T <= 1.0 / ps[q]) sup[q] = std::max(sup[q], best);
        }
        return sup;
    });
    rep.p_values = ps;
    rep.delta.assign(ps.size(), 0.0);
    for (const auto& sup : sups)
        for (std::size_t q = 0; q < ps.size(); ++q) rep.delta[q] = std::max(rep.delta[q], std::sqrt(sup[q]));
    for (std::size_t q = 0; q < ps.size(); ++q) {
        rep.delta[q] *= ps[q];
        rep.delta_over_p.push_back(rep.delta[q] / ps[q]);
    }
    rep.variation = detail::spread(rep.delta_over_p) - 1.0;
    rep.pass = rep.variation < 0.1;
    return rep;
}

// ---------------------------------------------------------------------------
// A priori bounds

struct AprioriConfig {
    ModelParams base;
    Pumping pumping{Complex{1.0, 0.0}, {PumpMode{Complex{0.5, 0.0}, std::numbers::sqrt2}}};
    double r = 2.0;
    double p = 1e-2;
    std::vector<double> amplitudes{0.0, 0.5, 1.0, 2.0};  ///< initial A(0); B(0) = 0
    Vec3 S0{0.6, 0.0, 0.8};
    double horizon_factor = 10.0;  ///< horizon = horizon_factor / gamma
    double tol = 1e-11;
    double drift_limit = 1e-9;     ///< absolute, over the whole horizon
    int points_per_period = 20;
};

struct BoundRun {
    double initial_energy = 0.0;  ///< A(0)^2 + B(0)^2
    double sup_energy = 0.0;      ///< sup_t A^2 + B^2
    double final_energy = 0.0;
    double drift = 0.0;           ///< max_t | |S(t)| - |S(0)| |
    double max_trace_error = 0.0; ///< max_t |tr rho(t) - 1|
};

struct BoundReport {
    double horizon = 0.0;
    double fitted_constant = 0.0;  ///< C with sup <= E(0) + C r^2 on the base sweep
    std::vector<BoundRun> base;     ///< amplitudes as configured
    std::vector<BoundRun> doubled;  ///< amplitudes doubled, checked against the same C
    double max_drift = 0.0;
    bool bounded = false;
    bool drift_ok = false;
    bool trace_ok = false;
    bool pass = false;
};

inline BoundRun apriori_run(const ModelParams& m, const Pumping& P, double amplitude, const Vec3& S0, double horizon,
                            double tol, int points_per_period) {
    const IntegratorOptions opt =
        detail::sampled_options(tol, horizon, detail::period(m.Omega) / points_per_period, true);
    BoundRun run;
    run.initial_energy = amplitude * amplitude;
    const double s0 = norm(S0);
    const State5 x0{amplitude, 0.0, S0[0], S0[1], S0[2]};
    auto observe = [&](double, const State5& y) {
        const double A = y[0], B = m.Omega * y[1];
        const double e = A * A + B * B;
        run.sup_energy = std::max(run.sup_energy, e);
        run.final_energy = e;
        run.drift = std::max(run.drift, std::abs(bloch_norm(y) - s0));
        const double S = bloch_norm(y);
        if (S <= 1.0 + kTolBall) {
            const DensityMatrix rho = rho_from_bloch({y[2], y[3], y[4]});
            run.max_trace_error = std::max(run.max_trace_error, std::abs(rho.trace() - 1.0));
        } else {
            run.max_trace_error = std::numeric_limits<double>::infinity();
        }
    };
    IntegratorOptions o = opt;
    o.drift_budget = std::numeric_limits<double>::infinity();  // audited below
    integrate_observed<5>(RhsKind::Full, x0, 0.0, horizon, m, P, o, observe);
    return run;
}

inline BoundReport run_apriori_check(const AprioriConfig& cfg, unsigned workers = 1) {
    const ModelParams m = cfg.base.with_coupling(cfg.p, cfg.r);
    BoundReport rep;
    rep.horizon = cfg.horizon_factor / m.gamma;
    if (!(cfg.horizon_factor >= 10.0)) throw Error(ErrorKind::HorizonTooShort, "horizon must be at least 10 / gamma");
    const std::size_t n = cfg.amplitudes.size();
    const auto runs = parallel_map<BoundRun>(2 * n, workers, [&](std::size_t i) {
        const double a = i < n ? cfg.amplitudes[i] : 2.0 * cfg.amplitudes[i - n];
        return apriori_run(m, cfg.pumping, a, cfg.S0, rep.horizon, cfg.tol, cfg.points_per_period);
    });
    rep.base.assign(runs.begin(), runs.begin() + static_cast<std::ptrdiff_t>(n));
    rep.doubled.assign(runs.begin() + static_cast<std::ptrdiff_t>(n), runs.end());
    const double r2 = cfg.r * cfg.r;
    for (const auto& run : rep.base)
        rep.fitted_constant = std::max(rep.fitted_constant, (run.sup_energy - run.initial_energy) / r2);
    rep.bounded = true;
    rep.trace_ok = true;
    for (const auto& run : runs) {
        rep.max_drift = std::max(rep.max_drift, run.drift);
        if (!std::isfinite(run.sup_energy)) rep.bounded = false;
        if (run.max_trace_error != 0.0) rep.trace_ok = false;
    }
    for (const auto& run : rep.doubled)
        if (!(run.sup_energy <= run.initial_energy + rep.fitted_constant * r2)) rep.bounded = false;
    rep.drift_ok = rep.max_drift <= cfg.drift_limit;
    rep.pass = rep.bounded && rep.drift_ok && rep.trace_ok;
    return rep;
}

// ---------------------------------------------------------------------------
// Pure-state oracle

struct PureMixedConfig {
    ModelParams base;
    Pumping pumping{Complex{1.0, 0.0}, {}};
    double r = 2.0;
    double p = 1e-2;
    PureState C0{Complex{std::numbers::sqrt2 / 2, 0.0}, Complex{0.0, std::numbers::sqrt2 / 2}};
    Complex M0{0.3, 0.1};
    double horizon = 100.0;
    double tol = 1e-10;
    double sample_dt = 0.05;
};

struct PureMixedReport {
    double max_frobenius = 0.0;
    double max_current_difference = 0.0;
    bool pass = false;  ///< both below 1e-8
};

inline PureMixedReport run_pure_vs_mixed(const ModelParams& m, const Pumping& P, const PureState& C0, Complex M0,
                                         double horizon, double tol, double sample_dt = 0.05) {
    C0.validate();
    const DensityMatrix rho0 = rho_from_pure(C0);
    const Vec3 S0 = bloch_from_rho(rho0);
    IntegratorOptions opt = detail::sampled_options(tol, horizon, sample_dt, false);
    std::vector<State5> mixed;
    std::vector<State6> pure;
    integrate_observed<5>(RhsKind::Full, State5{M0.real(), M0.imag(), S0[0], S0[1], S0[2]}, 0.0, horizon, m, P, opt,
                          [&](double, const State5& y) { mixed.push_back(y); });
    const State6 y6{M0.real(), m.Omega * M0.imag(), C0.C1.real(), C0.C1.imag(), C0.C2.real(), C0.C2.imag()};
    integrate_observed<6>(RhsKind::PureState, y6, 0.0, horizon, m, P, opt,
                          [&](double, const State6& y) { pure.push_back(y); });
    PureMixedReport rep;
    for (std::size_t i = 0; i < std::min(mixed.size(), pure.size()); ++i) {
        const PureState c{{pure[i][2], pure[i][3]}, {pure[i][4], pure[i][5]}};
        // The pure flow conserves |C| only to integrator accuracy.
        const Mat2c rp{{{std::norm(c.C1), c.C1 * std::conj(c.C2)}, {c.C2 * std::conj(c.C1), std::norm(c.C2)}}};
        const Mat2c rm = rho_from_bloch({mixed[i][2], mixed[i][3], mixed[i][4]}, 1e-6).matrix();
        rep.max_frobenius = std::max(rep.max_frobenius, frobenius(rp - rm));
        const double j_pure = 2.0 * m.kappa() * (std::conj(c.C1) * c.C2).imag();
        const double j_mixed = 2.0 * m.kappa() * rm[1][0].imag();
        rep.max_current_difference = std::max(rep.max_current_difference, std::abs(j_pure - j_mixed));
    }
    rep.pass = rep.max_frobenius < 1e-8 && rep.max_current_difference < 1e-8;
    return rep;
}

inline PureMixedReport run_pure_vs_mixed(const PureMixedConfig& cfg) {
    const ModelParams m = cfg.p > 0.0 ? cfg.base.with_coupling(cfg.p, cfg.r) : [&] {
        ModelParams z = cfg.base;
        z.p = 0.0;
        z.gamma = 0.0;
        return z;
    }();
    return run_pure_vs_mixed(m, cfg.pumping, cfg.C0, cfg.M0, cfg.horizon, cfg.tol, cfg.sample_dt);
}

}  // namespace mbe
