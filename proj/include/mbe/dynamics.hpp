#pragma once

// Right-hand sides of the lab-frame, pure-state, interaction-picture and
// averaged systems, plus the `integrate` driver over them.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mbe/errors.hpp"
#include "mbe/integrator.hpp"
#include "mbe/io.hpp"
#include "mbe/model.hpp"
#include "mbe/quadrature.hpp"

namespace mbe {

enum class RhsKind { Full, PureState, Interaction, Averaged, AveragedNonResonant };

inline const char* to_string(RhsKind kind) {
    switch (kind) {
        case RhsKind::Full: return "full";
        case RhsKind::PureState: return "pure";
        case RhsKind::Interaction: return "interaction";
        case RhsKind::Averaged: return "averaged";
        case RhsKind::AveragedNonResonant: return "averaged-nonresonant";
    }
    return "unknown";
}

inline std::size_t state_dimension(RhsKind kind) { return kind == RhsKind::PureState ? 6 : 5; }

/// (A, B, Re C1, Im C1, Re C2, Im C2).
using State6 = Vec<6>;

/// Lab-frame system: M' = -i Omega M - i gamma Im M + i c kappa S2 / Omega,
/// S' = Theta(t) S with the so(3) generator
/// Theta = [[0, omega, -2a/hbar], [-omega, 0, 0], [2a/hbar, 0, 0]].
inline State5 full_rhs(double t, const State5& x, const ModelParams& m, const Pumping& P) {
    const double a = coupling(m, P, x[0], t);
    const double w = m.omega();
    const double twoa = 2.0 * a / m.hbar;
    const double s1 = x[2], s2 = x[3], s3 = x[4];
    State5 dx;
    // -i Omega M = Omega (Im M) - i Omega (Re M)
    dx[0] = m.Omega * x[1];
    dx[1] = -m.Omega * x[0] - m.gamma * x[1] + m.c * m.kappa() * s2 / m.Omega;
    dx[2] = w * s2 - twoa * s3;
    dx[3] = -w * s1;
    dx[4] = twoa * s1;
    return dx;
}

/// Pure-state system: A' = B, B' = -Omega^2 A - gamma B + c j,
/// i hbar C' = H(t) C, with j = 2 kappa Im[conj(C1) C2].
inline State6 pure_rhs(double t, const State6& x, const ModelParams& m, const Pumping& P) {
    const Complex C1{x[2], x[3]}, C2{x[4], x[5]};
    const double j = 2.0 * m.kappa() * (std::conj(C1) * C2).imag();
    const double a = coupling(m, P, x[0], t);
    const Complex minus_i_over_hbar{0.0, -1.0 / m.hbar};
    const Complex dC1 = minus_i_over_hbar * (m.hbar * m.omega1 * C1 + Complex{0.0, a} * C2);
    const Complex dC2 = minus_i_over_hbar * (m.hbar * m.omega2 * C2 - Complex{0.0, a} * C1);
    return {x[1], -m.Omega * m.Omega * x[0] - m.gamma * x[1] + m.c * j,
            dC1.real(), dC1.imag(), dC2.real(), dC2.imag()};
}

namespace detail {

/// Shared body of f_r, g_r with explicit coefficients so the same code
/// yields both p (f_r, g_r) and (f_r, g_r).
inline State5 interaction_terms(double t, const State5& x, const ModelParams& m, const Pumping& P,
                                double damp, double couple, double rot) {
    const double cO = std::cos(m.Omega * t), sO = std::sin(m.Omega * t);
    const double w = m.omega();
    const double cw = std::cos(w * t), sw = std::sin(w * t);
    const double M1 = x[0], M2 = x[1], S1 = x[2], S2 = x[3], S3 = x[4];
    const double bracket = damp * (M2 * cO - M1 * sO) - couple * (-S1 * sw + S2 * cw);
    const double field = M1 * cO + M2 * sO + P.eval(m.Omega, t);
    return {sO * bracket, -cO * bracket, -rot * field * S3 * cw, -rot * field * S3 * sw,
            rot * field * (S1 * cw + S2 * sw)};
}

}  // namespace detail

/// Interaction-picture field (Me', Se') = p (f_r, g_r).  Well defined at p = 0.
inline State5 interaction_rhs(double t, const State5& env, const ModelParams& m, const Pumping& P) {
    return detail::interaction_terms(t, env, m, P, m.gamma, m.p * m.kappa1(), m.p * m.b());
}

/// v_r = (f_r, g_r) without the p prefactor.  Needs p > 0.
inline State5 interaction_field(double t, const State5& env, const ModelParams& m, const Pumping& P) {
    return detail::interaction_terms(t, env, m, P, m.gamma1(), m.kappa1(), m.b());
}

/// Checks the frequency conditions of the requested averaged field.
inline void check_averaging_kind(const ModelParams& m, const Pumping& P, RhsKind kind) {
    if (kind == RhsKind::Averaged) {
        if (!m.is_resonant())
            throw Error(ErrorKind::ResonanceMismatch, "resonant averaging needs Omega == omega");
    } else if (kind == RhsKind::AveragedNonResonant) {
        if (!m.is_non_resonant())
            throw Error(ErrorKind::ResonanceMismatch, "non-resonant averaging needs Omega != omega");
        const double w = m.omega();
        for (const auto& mode : P.modes)
            if (std::abs(std::abs(mode.frequency) - w) < kSeparationRel * w)
                throw Error(ErrorKind::PumpResonantWithMolecule,
                            "a pump mode frequency equals the molecular frequency");
    } else {
        throw Error(ErrorKind::InvalidParameter, "not an averaged kind");
    }
}

/// Averaged vector field p (f_bar, g_bar).  Resonance:
///   Me' = -(1/2) [gamma (M1 + i M2) - p kappa1 (S1 + i S2)]
///   Se' = -(p b / 2) [S3 (e1 B1 + e2 B2) - e3 (S1 B1 + S2 B2)],  B = Me + Ae.
/// Non-resonance: Me' = -(gamma/2) Me, Se' = 0.
inline State5 averaged_rhs(const State5& x, const ModelParams& m, const Pumping& P, RhsKind kind) {
    check_averaging_kind(m, P, kind);
    if (kind == RhsKind::AveragedNonResonant) return {-0.5 * m.gamma * x[0], -0.5 * m.gamma * x[1], 0.0, 0.0, 0.0};
    const double pk1 = m.p * m.kappa1();
    const double pb = m.p * m.b();
    const double B1 = x[0] + P.Ae.real(), B2 = x[1] + P.Ae.imag();
    const double S1 = x[2], S2 = x[3], S3 = x[4];
    return {-0.5 * (m.gamma * x[0] - pk1 * S1), -0.5 * (m.gamma * x[1] - pk1 * S2), -0.5 * pb * S3 * B1,
            -0.5 * pb * S3 * B2, 0.5 * pb * (S1 * B1 + S2 * B2)};
}

/// Largest frequency appearing in v_r; fixes the quadrature step.
inline double interaction_max_frequency(const ModelParams& m, const Pumping& P) {
    return 2.0 * std::max(P.max_frequency(m.Omega), m.omega());
}

/// (1/T) int_0^T v_r(env, t) dt at a frozen envelope state.  Converges to
/// averaged_rhs / p as T grows.
inline State5 average_of_rhs_numeric(const State5& env, const ModelParams& m, const Pumping& P, double T,
                                     std::optional<double> T_min = std::nullopt) {
    const double tmin = T_min.value_or(default_min_horizon(m.Omega));
    if (!(T >= tmin)) throw Error(ErrorKind::HorizonTooShort, "T below minimum averaging horizon");
    const auto panels = trapezoid_panels(T, interaction_max_frequency(m, P));
    return trapezoid_average<State5>([&](double t) { return interaction_field(t, env, m, P); }, T, panels);
}

/// Time-stamped samples with provenance.
struct Trajectory {
    std::size_t dim = 5;
    std::vector<double> times;
    std::vector<double> data;  ///< row-major, dim values per sample

    struct Metadata {
        std::string params_hash;
        std::string rhs;
        double tol = 0.0;
        double drift_budget = 0.0;
    } meta;
    IntegratorStats stats;

    std::size_t size() const { return times.size(); }
    std::vector<double> state(std::size_t i) const {
        return {data.begin() + static_cast<std::ptrdiff_t>(i * dim),
                data.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim)};
    }
    double at(std::size_t i, std::size_t component) const { return data[i * dim + component]; }
};

/// Conserved quantity audited during integration: |C|^2 for pure states,
/// |S| otherwise.
template <std::size_t N>
double conserved_quantity(const Vec<N>& x) {
    if constexpr (N == 6)
        return x[2] * x[2] + x[3] * x[3] + x[4] * x[4] + x[5] * x[5];
    else
        return std::sqrt(x[2] * x[2] + x[3] * x[3] + x[4] * x[4]);
}

/// Streams the solution of the selected system to `observe(t, const Vec<N>&)`.
template <std::size_t N, class Observer>
IntegratorStats integrate_observed(RhsKind kind, const Vec<N>& y0, double t0, double t1, const ModelParams& m,
                                   const Pumping& P, const IntegratorOptions& opt, Observer&& observe) {
    m.validate();
    P.validate(m.Omega);
    auto inv = [](const Vec<N>& y) { return conserved_quantity(y); };
    if constexpr (N == 6) {
        if (kind != RhsKind::PureState) throw Error(ErrorKind::InvalidParameter, "6-component state needs pure kind");
        return dopri5<6>([&](double t, const State6& x) { return pure_rhs(t, x, m, P); }, t0, t1, y0, opt,
                         observe, inv);
    } else {
        static_assert(N == 5, "states have 5 or 6 components");
        switch (kind) {
            case RhsKind::Full:
                return dopri5<5>([&](double t, const State5& x) { return full_rhs(t, x, m, P); }, t0, t1, y0,
                                 opt, observe, inv);
            case RhsKind::Interaction:
                return dopri5<5>([&](double t, const State5& x) { return interaction_rhs(t, x, m, P); }, t0,
                                 t1, y0, opt, observe, inv);
            case RhsKind::Averaged:
            case RhsKind::AveragedNonResonant:
                check_averaging_kind(m, P, kind);
                return dopri5<5>([&](double, const State5& x) { return averaged_rhs(x, m, P, kind); }, t0,
                                 t1, y0, opt, observe, inv);
            case RhsKind::PureState: break;
        }
        throw Error(ErrorKind::InvalidParameter, "pure kind needs a 6-component state");
    }
}

/// Integrates `kind` from state0 over [t0, t1]; the trajectory holds the
/// initial point plus the requested samples (and accepted steps if enabled).
inline Trajectory integrate(RhsKind kind, const std::vector<double>& state0, double t0, double t1,
                            const ModelParams& m, const Pumping& P, const IntegratorOptions& opt) {
    Trajectory traj;
    traj.dim = state_dimension(kind);
    if (state0.size() != traj.dim)
        throw Error(ErrorKind::InvalidParameter, "state has " + std::to_string(state0.size()) +
                                                     " components, expected " + std::to_string(traj.dim));
    traj.meta = {params_hash(m, P), to_string(kind), opt.tol,
                 opt.drift_budget.value_or(default_drift_budget(opt.tol, t1 - t0))};
    auto record = [&](double t, const auto& y) {
        traj.times.push_back(t);
        traj.data.insert(traj.data.end(), y.begin(), y.end());
    };
    if (traj.dim == 6) {
        State6 y0;
        std::copy(state0.begin(), state0.end(), y0.begin());
        traj.stats = integrate_observed<6>(kind, y0, t0, t1, m, P, opt, record);
    } else {
        State5 y0;
        std::copy(state0.begin(), state0.end(), y0.begin());
        traj.stats = integrate_observed<5>(kind, y0, t0, t1, m, P, opt, record);
    }
    return traj;
}

/// Uniform sample grid t0 + k dt on (t0, t1], always including t1.
inline std::vector<double> uniform_samples(double t0, double t1, double dt) {
    std::vector<double> out;
    const auto n = static_cast<std::size_t>(std::ceil((t1 - t0) / dt - 1e-9));
    out.reserve(n);
    for (std::size_t k = 1; k < n; ++k) out.push_back(t0 + dt * static_cast<double>(k));
    out.push_back(t1);
    return out;
}

}  // namespace mbe
