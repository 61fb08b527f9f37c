#pragma once

// Parameters, pumping signals and state representations of the damped driven
// Maxwell-Bloch system for a single field mode and a two-level molecule.
//
// Lab frame:      M = A + i B / Omega,  rho = (E + S . sigma) / 2,  |S| <= 1.
// Rotating frame: M = exp(-i Omega t) Me,  S = R(omega, t) Se  with R the
//                 rotation about e3 generated by V_omega.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "mbe/errors.hpp"
#include "mbe/linalg.hpp"
#include "mbe/quadrature.hpp"

namespace mbe {

inline constexpr double kTolBall = 1e-9;
inline constexpr double kTolTrace = 1e-12;
/// Minimum relative separation |Omega_k| - Omega (in units of Omega).
inline constexpr double kSeparationRel = 1e-6;
/// Frequencies closer than this (relative) are treated as equal.
inline constexpr double kResonanceRel = 1e-12;

struct ModelParams {
    double omega1 = 0.0;
    double omega2 = 1.0;
    double Omega = 1.0;  ///< Maxwell mode frequency.
    double p = 1e-3;     ///< Dipole coupling.
    double gamma = 5e-4; ///< Field damping.
    double c = 1.0;
    double hbar = 1.0;

    /// Molecular transition frequency omega2 - omega1.
    double omega() const { return omega2 - omega1; }
    double kappa() const { return p * omega(); }

    double r() const {
        require_coupled("r");
        return p / gamma;
    }
    double gamma1() const {
        require_coupled("gamma1");
        return gamma / p;
    }
    double kappa1() const { return c * omega() / Omega; }
    double b() const { return 2.0 * omega() / (c * hbar); }
    double alpha_r() const { return gamma1() / kappa1(); }

    /// sqrt(1 - alpha_r^2 |Ae|^2); empty when the radicand is negative.
    std::optional<double> beta_r(Complex Ae) const {
        const double a = alpha_r() * std::abs(Ae);
        if (a > 1.0) return std::nullopt;
        return std::sqrt(1.0 - a * a);
    }

    bool is_resonant() const { return std::abs(Omega - omega()) <= kResonanceRel * Omega; }
    bool is_non_resonant() const { return std::abs(Omega - omega()) >= kSeparationRel * Omega; }

    /// Throws InvalidParameter naming the first violated invariant.
    void validate() const {
        auto finite = [](double x) { return std::isfinite(x); };
        if (!(finite(omega1) && finite(omega2) && finite(Omega) && finite(p) && finite(gamma) &&
              finite(c) && finite(hbar)))
            throw Error(ErrorKind::InvalidParameter, "all parameters must be finite");
        if (!(omega2 > omega1)) throw Error(ErrorKind::InvalidParameter, "omega2 > omega1 violated");
        if (!(Omega > 0.0)) throw Error(ErrorKind::InvalidParameter, "Omega > 0 violated");
        if (!(p >= 0.0)) throw Error(ErrorKind::InvalidParameter, "p >= 0 violated");
        if (!(gamma >= 0.0)) throw Error(ErrorKind::InvalidParameter, "gamma >= 0 violated");
        if (!(c > 0.0)) throw Error(ErrorKind::InvalidParameter, "c > 0 violated");
        if (!(hbar > 0.0)) throw Error(ErrorKind::InvalidParameter, "hbar > 0 violated");
    }

    /// Copy with coupling p and damping gamma = p / r.
    ModelParams with_coupling(double p_new, double r_new) const {
        ModelParams out = *this;
        out.p = p_new;
        out.gamma = p_new / r_new;
        return out;
    }

private:
    void require_coupled(const char* what) const {
        if (!(p > 0.0 && gamma > 0.0))
            throw Error(ErrorKind::InvalidParameter,
                        std::string(what) + " needs p > 0 and gamma > 0");
    }
};

struct PumpMode {
    Complex amplitude;
    double frequency = 0.0;
};

/// A^e(t) = Re[Ae exp(-i Omega t)] + sum_k Re[Ae_k exp(-i Omega_k t)].
struct Pumping {
    Complex Ae{0.0, 0.0};
    std::vector<PumpMode> modes;

    /// Every off-resonant mode must stay away from the resonant frequency.
    void validate(double Omega, double separation_rel = kSeparationRel) const {
        if (!(std::isfinite(Ae.real()) && std::isfinite(Ae.imag())))
            throw Error(ErrorKind::InvalidParameter, "pumping amplitude must be finite");
        for (std::size_t k = 0; k < modes.size(); ++k) {
            const auto& m = modes[k];
            if (!std::isfinite(m.frequency) || !std::isfinite(m.amplitude.real()) ||
                !std::isfinite(m.amplitude.imag()))
                throw Error(ErrorKind::InvalidParameter, "pump mode " + std::to_string(k) + " not finite");
            if (std::abs(std::abs(m.frequency) - Omega) < separation_rel * Omega)
                throw Error(ErrorKind::InvalidParameter,
                            "pump mode " + std::to_string(k) + " violates Omega_k != Omega");
        }
    }

    double eval(double Omega, double t) const {
        double v = (Ae * std::polar(1.0, -Omega * t)).real();
        for (const auto& m : modes) v += (m.amplitude * std::polar(1.0, -m.frequency * t)).real();
        return v;
    }

    double max_frequency(double Omega) const {
        double f = Omega;
        for (const auto& m : modes) f = std::max(f, std::abs(m.frequency));
        return f;
    }
};

struct FullState {
    Complex M;  ///< A + i B / Omega
    Vec3 S{};
};

struct EnvelopeState {
    Complex Me;
    Vec3 Se{};
};

/// Packed layout used by the integrators: (Re M, Im M, S1, S2, S3).
using State5 = Vec<5>;

inline State5 pack(const FullState& s) { return {s.M.real(), s.M.imag(), s.S[0], s.S[1], s.S[2]}; }
inline State5 pack(const EnvelopeState& s) {
    return {s.Me.real(), s.Me.imag(), s.Se[0], s.Se[1], s.Se[2]};
}
inline FullState unpack_full(const State5& x) { return {{x[0], x[1]}, {x[2], x[3], x[4]}}; }
inline EnvelopeState unpack_envelope(const State5& x) { return {{x[0], x[1]}, {x[2], x[3], x[4]}}; }

inline double bloch_norm(const State5& x) { return std::sqrt(x[2] * x[2] + x[3] * x[3] + x[4] * x[4]); }

/// Hermitian, unit-trace, positive semidefinite 2x2 matrix.
class DensityMatrix {
public:
    /// Validates Hermiticity and trace; positivity is checked through the
    /// Bloch vector by callers that need it.
    explicit DensityMatrix(const Mat2c& m, double tol_trace = kTolTrace) : m_(m) {
        const double herm = std::abs(m[0][1] - std::conj(m[1][0])) + std::abs(m[0][0].imag()) +
                            std::abs(m[1][1].imag());
        if (herm > tol_trace) throw Error(ErrorKind::NotDensityMatrix, "matrix is not Hermitian");
        const double tr = (m[0][0] + m[1][1]).real();
        if (std::abs(tr - 1.0) > tol_trace) throw Error(ErrorKind::NotDensityMatrix, "trace differs from 1");
    }

    const Mat2c& matrix() const { return m_; }
    Complex operator()(int i, int j) const { return m_[i][j]; }
    Complex trace() const { return m_[0][0] + m_[1][1]; }

    /// Eigenvalues in ascending order.
    std::array<double, 2> eigenvalues() const {
        const double a = m_[0][0].real(), d = m_[1][1].real();
        const double off = std::abs(m_[1][0]);
        const double mean = 0.5 * (a + d);
        const double rad = std::hypot(0.5 * (a - d), off);
        return {mean - rad, mean + rad};
    }

private:
    Mat2c m_;
};

/// rho = (1/2) [[1 + S3, S1 - i S2], [S1 + i S2, 1 - S3]].
inline DensityMatrix rho_from_bloch(const Vec3& S, double tol_ball = kTolBall) {
    const double n = norm(S);
    if (!(n <= 1.0 + tol_ball))
        throw Error(ErrorKind::BallViolation, "|S| = " + std::to_string(n) + " exceeds 1");
    Mat2c m{};
    m[0][0] = {0.5 * (1.0 + S[2]), 0.0};
    m[1][1] = {0.5 * (1.0 - S[2]), 0.0};
    m[0][1] = {0.5 * S[0], -0.5 * S[1]};
    m[1][0] = {0.5 * S[0], 0.5 * S[1]};
    return DensityMatrix(m);
}

inline Vec3 bloch_from_rho(const DensityMatrix& rho) {
    const Complex r21 = rho(1, 0);
    return {2.0 * r21.real(), 2.0 * r21.imag(), (rho(0, 0) - rho(1, 1)).real()};
}

struct PureState {
    Complex C1;
    Complex C2;

    double norm_squared() const { return std::norm(C1) + std::norm(C2); }

    void validate(double tol = 1e-12) const {
        if (std::abs(norm_squared() - 1.0) > tol)
            throw Error(ErrorKind::NormViolation, "|C1|^2 + |C2|^2 differs from 1");
    }
};

/// |C><C| = [[|C1|^2, C1 conj(C2)], [C2 conj(C1), |C2|^2]].  The trace is
/// exactly 1 only up to rounding, so the check uses the ball tolerance.
inline DensityMatrix rho_from_pure(const PureState& s) {
    Mat2c m{};
    m[0][0] = {std::norm(s.C1), 0.0};
    m[1][1] = {std::norm(s.C2), 0.0};
    m[0][1] = s.C1 * std::conj(s.C2);
    m[1][0] = s.C2 * std::conj(s.C1);
    return DensityMatrix(m, kTolBall);
}

/// Coupling a(t) = (kappa / c) (A + A^e(t)).
inline double coupling(const ModelParams& params, const Pumping& P, double A, double t) {
    return params.kappa() / params.c * (A + P.eval(params.Omega, t));
}

/// H(t) = [[hbar omega1, i a(t)], [-i a(t), hbar omega2]].
inline Mat2c hamiltonian(const ModelParams& params, const Pumping& P, double A, double t) {
    const double a = coupling(params, P, A, t);
    Mat2c h{};
    h[0][0] = {params.hbar * params.omega1, 0.0};
    h[1][1] = {params.hbar * params.omega2, 0.0};
    h[0][1] = {0.0, a};
    h[1][0] = {0.0, -a};
    return h;
}

/// exp(V_omega t): rotation about e3, [[cos, sin, 0], [-sin, cos, 0], [0, 0, 1]].
inline Mat3 rotation_so3(double omega, double t) {
    const double cs = std::cos(omega * t), sn = std::sin(omega * t);
    return {{{cs, sn, 0.0}, {-sn, cs, 0.0}, {0.0, 0.0, 1.0}}};
}

inline FullState to_lab_frame(const EnvelopeState& env, const ModelParams& params, double t) {
    return {std::polar(1.0, -params.Omega * t) * env.Me, rotation_so3(params.omega(), t) * env.Se};
}

inline EnvelopeState to_rotating_frame(const FullState& full, const ModelParams& params, double t) {
    return {std::polar(1.0, params.Omega * t) * full.M, rotation_so3(params.omega(), -t) * full.S};
}

/// Default shortest averaging horizon: 10^3 periods of the resonant mode.
inline double default_min_horizon(double Omega) { return 1e3 * 2.0 * std::numbers::pi / Omega; }

/// 2 (1/T) int_0^T A^e(t) exp(i Omega t) dt by the composite trapezoid rule.
inline Complex resonant_amplitude_numeric(const Pumping& P, double Omega, double T,
                                          std::optional<double> T_min = std::nullopt) {
    const double tmin = T_min.value_or(default_min_horizon(Omega));
    if (!(T >= tmin)) throw Error(ErrorKind::HorizonTooShort, "T below minimum averaging horizon");
    const auto panels = trapezoid_panels(T, P.max_frequency(Omega));
    const Vec<2> avg = trapezoid_average<Vec<2>>(
        [&](double t) {
            const Complex v = P.eval(Omega, t) * std::polar(1.0, Omega * t);
            return Vec<2>{v.real(), v.imag()};
        },
        T, panels);
    return {2.0 * avg[0], 2.0 * avg[1]};
}

}  // namespace mbe
