#pragma once

// Harmonic states (stationary points of the resonant averaged field), their
// linearisation and spectra, and geometry near the branches.
//
// Branch Z1: Me on the circle |Me + Ae/2| = |Ae|/2, Se = (alpha Me1, alpha Me2, 0).
// Branch Z2: Me = -Ae, Se = (-alpha Ae1, -alpha Ae2, S3), |S3| <= beta.
// Both are independent of p; they depend on r = p / gamma only.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "mbe/dynamics.hpp"
#include "mbe/eigen.hpp"
#include "mbe/errors.hpp"
#include "mbe/model.hpp"

namespace mbe {

enum class Branch { Z1, Z2 };

inline const char* to_string(Branch b) { return b == Branch::Z1 ? "Z1" : "Z2"; }

struct HarmonicState {
    Branch branch = Branch::Z1;
    double parameter = 0.0;  ///< theta on Z1, S3 on Z2
    Complex Me;
    Vec3 Se{};

    EnvelopeState envelope() const { return {Me, Se}; }
    State5 packed() const { return pack(envelope()); }
};

enum class SpectrumSource { ClosedForm, Numeric };

struct SpectrumReport {
    /// Eigenvalues of 2J, sorted by (Re, Im).
    std::array<Complex, 5> eigenvalues{};
    /// Eigenvalues of the linearised averaged system p J, i.e. p / 2 times the above.
    std::array<Complex, 5> linearised{};
    SpectrumSource source = SpectrumSource::ClosedForm;
    /// All eigenvalues other than the tangent zero have negative real part.
    bool stable_nonzero_modes = false;
    /// Intersection point of the branches: several eigenvalues collapse to 0.
    bool degenerate = false;
};

namespace detail {

inline void require_resonance(const ModelParams& m) {
    if (!m.is_resonant()) throw Error(ErrorKind::NotResonant, "harmonic states need Omega == omega");
}

inline void require_z2(const ModelParams& m, const Pumping& P) {
    require_resonance(m);
    const double cr = m.c * m.r();
    if (!(cr > std::abs(P.Ae)))
        throw Error(ErrorKind::BranchEmpty, "c r > |Ae| violated: c r = " + format_double(cr) +
                                                ", |Ae| = " + format_double(std::abs(P.Ae)));
}

inline std::array<Complex, 5> scaled(const std::array<Complex, 5>& ev, double s) {
    std::array<Complex, 5> out{};
    for (std::size_t i = 0; i < 5; ++i) out[i] = s * ev[i];
    return out;
}

}  // namespace detail

/// half-width of the Z2 segment; empty branch raises BranchEmpty.
inline double z2_half_length(const ModelParams& m, const Pumping& P) {
    detail::require_z2(m, P);
    const double a = m.alpha_r() * std::abs(P.Ae);
    return std::sqrt(1.0 - a * a);
}

inline HarmonicState harmonic_z1(const ModelParams& m, const Pumping& P, double theta) {
    detail::require_resonance(m);
    const double alpha = m.alpha_r();
    const Complex Me = -0.5 * P.Ae + 0.5 * std::abs(P.Ae) * std::polar(1.0, theta);
    if (alpha * std::abs(Me) > 1.0 + kTolBall)
        throw Error(ErrorKind::BallViolation, "alpha_r |M(theta)| exceeds 1");
    return {Branch::Z1, theta, Me, {alpha * Me.real(), alpha * Me.imag(), 0.0}};
}

inline HarmonicState harmonic_z2(const ModelParams& m, const Pumping& P, double s3) {
    const double beta = z2_half_length(m, P);
    if (!(std::abs(s3) <= beta))
        throw Error(ErrorKind::OutOfRange, "|S3| exceeds beta_r = " + format_double(beta));
    const double alpha = m.alpha_r();
    return {Branch::Z2, s3, -P.Ae, {-alpha * P.Ae.real(), -alpha * P.Ae.imag(), s3}};
}

/// || averaged_rhs / p || at the state.
inline double stationarity_residual(const HarmonicState& h, const ModelParams& m, const Pumping& P) {
    return norm(averaged_rhs(h.packed(), m, P, RhsKind::Averaged)) / m.p;
}

/// Derivative of the resonant averaged field divided by p, at any state.
inline Mat<5> jacobian(const State5& x, const ModelParams& m, const Pumping& P) {
    detail::require_resonance(m);
    const double g1 = m.gamma1(), k1 = m.kappa1(), b = m.b();
    const double B1 = x[0] + P.Ae.real(), B2 = x[1] + P.Ae.imag();
    const double S1 = x[2], S2 = x[3], S3 = x[4];
    Mat<5> J{{{-g1, 0, k1, 0, 0},
              {0, -g1, 0, k1, 0},
              {-b * S3, 0, 0, 0, -b * B1},
              {0, -b * S3, 0, 0, -b * B2},
              {b * S1, b * S2, b * B1, b * B2, 0}}};
    for (auto& row : J)
        for (double& v : row) v *= 0.5;
    return J;
}

/// Closed-form spectrum on Z1: 2J has {-gamma1, -gamma1, 0, +-i b |Me + Ae|}.
inline SpectrumReport spectrum_z1(const ModelParams& m, const Pumping& P, double theta) {
    const HarmonicState h = harmonic_z1(m, P, theta);
    const double g1 = m.gamma1();
    const double w = m.b() * std::abs(h.Me + P.Ae);
    SpectrumReport rep;
    rep.eigenvalues = {Complex{-g1, 0}, Complex{-g1, 0}, Complex{0, -w}, Complex{0, 0}, Complex{0, w}};
    std::sort(rep.eigenvalues.begin(), rep.eigenvalues.end(), complex_less);
    rep.linearised = detail::scaled(rep.eigenvalues, 0.5 * m.p);
    rep.source = SpectrumSource::ClosedForm;
    rep.degenerate = w <= 1e-12 * std::max(1.0, m.b() * std::abs(P.Ae));
    rep.stable_nonzero_modes = false;  // +-i b|B| are neutral
    return rep;
}

/// Closed-form spectrum on Z2: double roots of l^2 + gamma1 l + b kappa1 S3
/// and the tangent zero.  Nonzero modes are stable iff S3 > 0.
inline SpectrumReport spectrum_z2(const ModelParams& m, const Pumping& P, double s3) {
    harmonic_z2(m, P, s3);
    const double g1 = m.gamma1();
    const double bk1 = m.b() * m.kappa1();
    const Complex root = std::sqrt(Complex{g1 * g1 - 4.0 * bk1 * s3, 0.0});
    const Complex l12 = 0.5 * (-g1 + root), l34 = 0.5 * (-g1 - root);
    SpectrumReport rep;
    rep.eigenvalues = {l12, l12, l34, l34, Complex{0, 0}};
    std::sort(rep.eigenvalues.begin(), rep.eigenvalues.end(), complex_less);
    rep.linearised = detail::scaled(rep.eigenvalues, 0.5 * m.p);
    rep.source = SpectrumSource::ClosedForm;
    rep.degenerate = s3 == 0.0;
    rep.stable_nonzero_modes = s3 > 0.0;
    return rep;
}

namespace detail {

/// 2J at a harmonic state, evaluated in quad precision from the branch
/// parameter.  On Z1 the eigenvalue -gamma1 is defective, so a state rounded
/// to double already moves it by ~sqrt(eps); the quad matrix avoids that.
inline MatR<Quad, 5> jacobian2_quad(const HarmonicState& h, const ModelParams& m, const Pumping& P) {
    using std::cos, std::sin, std::sqrt;
    const Quad g1 = m.gamma1(), k1 = m.kappa1(), b = m.b();
    const Quad alpha = g1 / k1;
    const Quad a1 = P.Ae.real(), a2 = P.Ae.imag();
    Quad M1, M2, S1, S2, S3;
    if (h.branch == Branch::Z1) {
        const Quad th = h.parameter, half = sqrt(a1 * a1 + a2 * a2) / 2;
        M1 = -a1 / 2 + half * cos(th);
        M2 = -a2 / 2 + half * sin(th);
        S1 = alpha * M1;
        S2 = alpha * M2;
        S3 = 0;
    } else {
        M1 = -a1;
        M2 = -a2;
        S1 = -alpha * a1;
        S2 = -alpha * a2;
        S3 = h.parameter;
    }
    const Quad B1 = M1 + a1, B2 = M2 + a2;
    return {{{-g1, 0, k1, 0, 0},
             {0, -g1, 0, k1, 0},
             {-b * S3, 0, 0, 0, -b * B1},
             {0, -b * S3, 0, 0, -b * B2},
             {b * S1, b * S2, b * B1, b * B2, 0}}};
}

}  // namespace detail

/// Numeric spectrum of 2J at a harmonic state.
inline SpectrumReport numeric_spectrum_at(const HarmonicState& h, const ModelParams& m, const Pumping& P) {
    detail::require_resonance(m);
    const MatR<Quad, 5> J2q = detail::jacobian2_quad(h, m, P);
    Mat<5> J2{};
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) J2[i][j] = static_cast<double>(J2q[i][j]);
    SpectrumReport rep;
    rep.eigenvalues = numeric_spectrum<5>(J2q);
    rep.linearised = detail::scaled(rep.eigenvalues, 0.5 * m.p);
    rep.source = SpectrumSource::Numeric;
    // The tangent zero is the eigenvalue of smallest modulus.
    std::size_t zero = 0;
    for (std::size_t i = 1; i < 5; ++i)
        if (std::abs(rep.eigenvalues[i]) < std::abs(rep.eigenvalues[zero])) zero = i;
    const double scale = std::max(1.0, frobenius(J2));
    bool stable = true;
    int near_zero = 0;
    for (std::size_t i = 0; i < 5; ++i) {
        if (std::abs(rep.eigenvalues[i]) < 1e-7 * scale) ++near_zero;
        if (i != zero && !(rep.eigenvalues[i].real() < 0.0)) stable = false;
    }
    rep.stable_nonzero_modes = stable;
    rep.degenerate = near_zero > 1;
    return rep;
}

/// Largest difference between two multisets of eigenvalues, after pairing
/// each closed-form value greedily with its nearest unused numeric value.
inline double spectrum_distance(const std::array<Complex, 5>& a, const std::array<Complex, 5>& b) {
    std::array<bool, 5> used{};
    double worst = 0.0;
    for (const auto& x : a) {
        std::size_t best = 5;
        double dist = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < 5; ++j)
            if (!used[j] && std::abs(x - b[j]) < dist) {
                dist = std::abs(x - b[j]);
                best = j;
            }
        used[best] = true;
        worst = std::max(worst, dist);
    }
    return worst;
}

struct BranchDistance {
    double distance = 0.0;
    double parameter = 0.0;
};

/// Euclidean distance in R^5 to the segment {Z2(S3): S3 in [lo, hi]}.
inline BranchDistance distance_to_z2_segment(const State5& x, const ModelParams& m, const Pumping& P, double lo,
                                             double hi) {
    detail::require_z2(m, P);
    const double alpha = m.alpha_r();
    const double s3 = std::clamp(x[4], lo, hi);
    const State5 d{x[0] + P.Ae.real(), x[1] + P.Ae.imag(), x[2] + alpha * P.Ae.real(),
                   x[3] + alpha * P.Ae.imag(), x[4] - s3};
    return {norm(d), s3};
}

/// Euclidean distance to a branch, minimised over its parameter.  Z2 is
/// exact (projection onto the S3 segment); Z1 brackets the minimum over 128
/// theta cells, refines by golden section and polishes with Newton.
inline BranchDistance distance_to_branch(const State5& x, Branch branch, const ModelParams& m, const Pumping& P) {
    if (branch == Branch::Z2) {
        const double beta = z2_half_length(m, P);
        return distance_to_z2_segment(x, m, P, -beta, beta);
    }
    detail::require_resonance(m);
    const double alpha = m.alpha_r();
    const double radius = 0.5 * std::abs(P.Ae);
    const Complex center = -0.5 * P.Ae;
    // f(theta) = |x - z(theta)|^2 with z(theta) = (M, alpha M, 0), M = center + radius e^{i theta}.
    auto point = [&](double th) {
        const Complex M = center + radius * std::polar(1.0, th);
        return State5{M.real(), M.imag(), alpha * M.real(), alpha * M.imag(), 0.0};
    };
    auto f = [&](double th) {
        const State5 d = x - point(th);
        return dot(d, d);
    };
    constexpr int cells = 128;
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const double width = two_pi / cells;
    int best = 0;
    double fbest = f(0.0);
    for (int k = 1; k < cells; ++k) {
        const double v = f(k * width);
        if (v < fbest) {
            fbest = v;
            best = k;
        }
    }
    double lo = (best - 1) * width, hi = (best + 1) * width;
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = hi - invphi * (hi - lo), b = lo + invphi * (hi - lo);
    double fa = f(a), fb = f(b);
    for (int it = 0; it < 60; ++it) {
        if (fa < fb) {
            hi = b;
            b = a;
            fb = fa;
            a = hi - invphi * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + invphi * (hi - lo);
            fb = f(b);
        }
    }
    double th = 0.5 * (lo + hi);
    const double s2 = 1.0 + alpha * alpha;
    for (int it = 0; it < 8; ++it) {
        const State5 d = x - point(th);
        const double cs = std::cos(th), sn = std::sin(th);
        // dz/dth and d2z/dth2
        const State5 z1{-radius * sn, radius * cs, -alpha * radius * sn, alpha * radius * cs, 0.0};
        const State5 z2{-radius * cs, -radius * sn, -alpha * radius * cs, -alpha * radius * sn, 0.0};
        const double g = -2.0 * dot(d, z1);
        const double hess = 2.0 * s2 * radius * radius - 2.0 * dot(d, z2);
        if (!(hess > 0.0)) break;
        const double step = g / hess;
        th -= step;
        if (std::abs(step) < 1e-15) break;
    }
    th = std::fmod(th, two_pi);
    if (th < 0.0) th += two_pi;
    return {std::sqrt(f(th)), th};
}

/// Maps the harmonic states for pumping Ae onto those for e^{i phi} Ae:
/// Me -> e^{i phi} Me, (S1 + i S2) -> e^{i phi} (S1 + i S2), S3 fixed.
inline HarmonicState gauge_transform(const HarmonicState& h, double phi) {
    const Complex rot = std::polar(1.0, phi);
    const Complex planar = rot * Complex{h.Se[0], h.Se[1]};
    HarmonicState out = h;
    out.Me = rot * h.Me;
    out.Se = {planar.real(), planar.imag(), h.Se[2]};
    if (h.branch == Branch::Z1) out.parameter = h.parameter + phi;
    return out;
}

/// Pumping with the resonant amplitude rotated by phi.
inline Pumping gauge_pumping(const Pumping& P, double phi) {
    Pumping out = P;
    out.Ae = std::polar(1.0, phi) * P.Ae;
    return out;
}

/// Seeded, platform-independent random source (raw 64-bit draws only).
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : engine_(seed) {}
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double rad = std::sqrt(-2.0 * std::log(u1));
        spare_ = rad * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return rad * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Uniform samples of the tube U_d(2s, beta - 2s) around the stable part of
/// Z2: Z2(S3) + N with S3 ~ U[2s, beta - 2s] and N uniform in the 4-ball of
/// radius d spanned by the first four coordinates.
inline std::vector<EnvelopeState> sample_tubular(const ModelParams& m, const Pumping& P, double d, double s,
                                                 std::size_t count, std::uint64_t seed) {
    const double beta = z2_half_length(m, P);
    if (!(s > 0.0 && s < beta / 4.0))
        throw Error(ErrorKind::OutOfRange, "margin s must lie in (0, beta_r / 4)");
    if (!(d >= 0.0)) throw Error(ErrorKind::OutOfRange, "tube radius d must be non-negative");
    const double alpha = m.alpha_r();
    const double planar = alpha * std::abs(P.Ae) + d;
    const double top = beta - 2.0 * s;
    if (planar * planar + top * top > 1.0)
        throw Error(ErrorKind::OutOfRange, "tube radius d too large: samples would leave the Bloch ball");
    SeededRng rng(seed);
    std::vector<EnvelopeState> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double s3 = rng.uniform(2.0 * s, top);
        std::array<double, 4> n{};
        double len = 0.0;
        do {
            for (double& v : n) v = rng.normal();
            len = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2] + n[3] * n[3]);
        } while (len == 0.0);
        const double radius = d * std::pow(rng.uniform(), 0.25);
        for (double& v : n) v *= radius / len;
        const HarmonicState z = harmonic_z2(m, P, s3);
        out.push_back({z.Me + Complex{n[0], n[1]}, {z.Se[0] + n[2], z.Se[1] + n[3], s3}});
    }
    return out;
}

/// Coordinates adapted to Z2 near its stable part: x = (x1..x4, x5) with
/// state = Z2(x5) + sum_k x_k v_k(x5), where v_1..v_4 span the stable
/// invariant subspace of 2J at Z2(x5) in real canonical form.  In these
/// coordinates the linearised normal dynamics is a normal matrix, so the
/// normal distance d^2 = x1^2 + ... + x4^2 decays monotonically near Z2_+.
class TubeCoordinates {
public:
    TubeCoordinates(const ModelParams& m, const Pumping& P) : m_(m), P_(P) {
        detail::require_z2(m, P);
        alpha_ = m.alpha_r();
        g1_ = m.gamma1();
        k1_ = m.kappa1();
        b_ = m.b();
    }

    /// Basis of 2J's nonzero-eigenvalue subspace at S3 = s3 (columns), valid for s3 > 0.
    Mat<5> basis(double s3) const {
        // 2x2 block [[-g1, k1], [-b s3, 0]] acting on (M_i, S_i).
        const double disc = g1_ * g1_ - 4.0 * b_ * k1_ * s3;
        std::array<double, 2> u{}, w{};
        Mat<2> lam{};
        const double tiny = 1e-10 * std::max(1.0, g1_ * g1_);
        if (disc < -tiny) {
            const double re = -0.5 * g1_, im = 0.5 * std::sqrt(-disc);
            u = {k1_, g1_ + re};
            w = {0.0, im};
            lam = {{{re, im}, {-im, re}}};
        } else if (disc > tiny) {
            const double l1 = 0.5 * (-g1_ + std::sqrt(disc)), l2 = 0.5 * (-g1_ - std::sqrt(disc));
            u = {k1_, g1_ + l1};
            w = {k1_, g1_ + l2};
            lam = {{{l1, 0.0}, {0.0, l2}}};
        } else {
            // Jordan block, generalised vector scaled by eps.
            const double mu = -0.5 * g1_;
            const double eps = 1e-3 * std::max(std::abs(mu), 1e-12);
            u = {k1_, g1_ + mu};
            // (B - mu) g = u is solved by g = (0, 1).
            w = {0.0, eps};
            lam = {{{mu, eps}, {0.0, mu}}};
        }
        // 5th components: v5 Lambda = row5 V, row5 = (b S1, b S2, 0, 0, 0) on Z2.
        const double S1 = -alpha_ * P_.Ae.real(), S2 = -alpha_ * P_.Ae.imag();
        Mat<5> V{};
        const std::array<double, 2> planar{S1, S2};
        for (int blk = 0; blk < 2; ++blk) {
            const int col = 2 * blk;
            V[blk][col] = u[0];
            V[blk + 2][col] = u[1];
            V[blk][col + 1] = w[0];
            V[blk + 2][col + 1] = w[1];
            // rhs row vector r = b S_blk (u_m, w_m); v5 = r Lambda^{-1}
            const double r0 = b_ * planar[blk] * u[0], r1 = b_ * planar[blk] * w[0];
            const double det = lam[0][0] * lam[1][1] - lam[0][1] * lam[1][0];
            V[4][col] = (r0 * lam[1][1] - r1 * lam[1][0]) / det;
            V[4][col + 1] = (-r0 * lam[0][1] + r1 * lam[0][0]) / det;
        }
        V[4][4] = 1.0;
        return V;
    }

    /// Solves state = Z2(x5) + sum x_k v_k(x5) for x by fixed-point iteration on x5.
    Vec<5> coordinates(const State5& x) const {
        double x5 = x[4];
        Vec<5> y{};
        for (int it = 0; it < 50; ++it) {
            const Mat<5> V = basis(x5);
            const State5 diff{x[0] + P_.Ae.real(), x[1] + P_.Ae.imag(), x[2] + alpha_ * P_.Ae.real(),
                              x[3] + alpha_ * P_.Ae.imag(), x[4] - x5};
            Vec<5> sol{};
            solve<5>(V, diff, sol);
            y = sol;
            const double next = x5 + sol[4];
            const bool done = std::abs(next - x5) < 1e-15;
            x5 = next;
            if (done) break;
        }
        y[4] = x5;
        return y;
    }

    double normal_distance_squared(const State5& x) const {
        const Vec<5> y = coordinates(x);
        return y[0] * y[0] + y[1] * y[1] + y[2] * y[2] + y[3] * y[3];
    }

private:
    ModelParams m_;
    Pumping P_;
    double alpha_ = 0.0, g1_ = 0.0, k1_ = 0.0, b_ = 0.0;
};

/// Damped Gauss-Newton search for a zero of the averaged field of `kind`,
/// started from x0.  Returns the final iterate and whether the residual
/// dropped below tol.
struct NewtonResult {
    State5 state{};
    double residual = 0.0;
    bool converged = false;
};

inline NewtonResult find_stationary_newton(const State5& x0, const ModelParams& m, const Pumping& P, RhsKind kind,
                                           double tol = 1e-13, int max_iter = 50) {
    auto field = [&](const State5& x) { return (1.0 / m.p) * averaged_rhs(x, m, P, kind); };
    State5 x = x0;
    State5 F = field(x);
    for (int it = 0; it < max_iter && norm(F) > tol; ++it) {
        Mat<5> J{};
        for (std::size_t j = 0; j < 5; ++j) {
            const double h = 1e-7 * std::max(1.0, std::abs(x[j]));
            State5 xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            const State5 d = (0.5 / h) * (field(xp) - field(xm));
            for (std::size_t i = 0; i < 5; ++i) J[i][j] = d[i];
        }
        // (J^T J + mu I) dx = -J^T F
        Mat<5> A = transpose(J) * J;
        const Vec<5> g = transpose(J) * F;
        double mu = 1e-12;
        for (std::size_t i = 0; i < 5; ++i) mu = std::max(mu, 1e-12 * A[i][i]);
        for (std::size_t i = 0; i < 5; ++i) A[i][i] += mu;
        Vec<5> dx{};
        if (!solve<5>(A, (-1.0) * g, dx)) break;
        x = x + dx;
        F = field(x);
    }
    return {x, norm(F), norm(F) <= tol};
}

}  // namespace mbe
