#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "mbe/model.hpp"
#include "oracles.hpp"

using namespace mbe;
constexpr double kPi = std::numbers::pi;

namespace {

Vec3 random_ball_point(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (;;) {
        Vec3 v{u(rng), u(rng), u(rng)};
        if (norm(v) <= 1.0) return v;
    }
}

double max_abs_diff(const Mat2c& a, const Mat2c& b) {
    double m = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) m = std::max(m, std::abs(a[i][j] - b[i][j]));
    return m;
}

}  // namespace

TEST(ModelParams, DerivedConstants) {
    ModelParams m;
    m.p = 1e-3;
    m.gamma = 5e-4;
    m.c = 2.0;
    m.Omega = 1.0;
    EXPECT_DOUBLE_EQ(m.omega(), 1.0);
    EXPECT_DOUBLE_EQ(m.r(), 2.0);
    EXPECT_DOUBLE_EQ(m.gamma1(), 0.5);
    EXPECT_DOUBLE_EQ(m.kappa1(), 2.0);
    EXPECT_DOUBLE_EQ(m.b(), 1.0);
    EXPECT_DOUBLE_EQ(m.alpha_r(), 0.25);
    ASSERT_TRUE(m.beta_r(Complex{2.0, 0.0}).has_value());
    EXPECT_NEAR(*m.beta_r(Complex{2.0, 0.0}), std::sqrt(0.75), 1e-15);
    EXPECT_FALSE(m.beta_r(Complex{5.0, 0.0}).has_value());
}

TEST(ModelParams, ValidationNamesTheInvariant) {
    ModelParams m;
    m.omega2 = m.omega1;
    try {
        m.validate();
        FAIL() << "expected InvalidParameter";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidParameter);
        EXPECT_NE(std::string(e.what()).find("omega2 > omega1"), std::string::npos);
    }
    ModelParams neg;
    neg.p = -1.0;
    EXPECT_THROW(neg.validate(), Error);
    ModelParams zero;
    zero.p = 0.0;
    zero.gamma = 0.0;
    EXPECT_NO_THROW(zero.validate());
    EXPECT_THROW(zero.r(), Error);
}

TEST(ModelParams, ResonanceClassification) {
    ModelParams m;
    EXPECT_TRUE(m.is_resonant());
    m.Omega = 1.5;
    EXPECT_FALSE(m.is_resonant());
    EXPECT_TRUE(m.is_non_resonant());
}

TEST(BlochMap, SpecialPoints) {
    const auto center = rho_from_bloch({0, 0, 0});
    EXPECT_EQ(center(0, 0), Complex(0.5, 0));
    EXPECT_EQ(center(1, 1), Complex(0.5, 0));
    EXPECT_EQ(center(0, 1), Complex(0, 0));
    const auto up = rho_from_bloch({0, 0, 1});
    EXPECT_EQ(up(0, 0), Complex(1, 0));
    EXPECT_EQ(up(1, 1), Complex(0, 0));
    const auto x = rho_from_bloch({1, 0, 0});
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) EXPECT_EQ(x(i, j), Complex(0.5, 0));
    const Vec3 back = bloch_from_rho(up);
    EXPECT_EQ(back[0], 0.0);
    EXPECT_EQ(back[1], 0.0);
    EXPECT_EQ(back[2], 1.0);
    const Vec3 zero = bloch_from_rho(center);
    EXPECT_EQ(norm(zero), 0.0);
}

TEST(BlochMap, OutsideBallRejected) {
    EXPECT_THROW(rho_from_bloch({1.0, 0.1, 0.0}), Error);
    EXPECT_NO_THROW(rho_from_bloch({1.0 + 1e-10, 0.0, 0.0}));
}

TEST(BlochMap, RoundTripAndSpectrumProperty) {
    std::mt19937_64 rng(7);
    for (int k = 0; k < 1000; ++k) {
        const Vec3 v = random_ball_point(rng);
        const auto rho = rho_from_bloch(v);
        const Vec3 w = bloch_from_rho(rho);
        for (int i = 0; i < 3; ++i) EXPECT_NEAR(w[i], v[i], 1e-14);
        // Reverse composition.
        const auto rho2 = rho_from_bloch(w);
        EXPECT_LT(max_abs_diff(rho.matrix(), rho2.matrix()), 1e-14);
        // Structural trace.
        EXPECT_LE(std::abs(rho.trace().real() - 1.0), 1e-16);
        EXPECT_EQ(rho.trace().imag(), 0.0);
        // Eigenvalues (1 -+ |S|)/2, both non-negative inside the ball.
        const auto ev = rho.eigenvalues();
        EXPECT_NEAR(ev[0], 0.5 * (1.0 - norm(v)), 1e-14);
        EXPECT_NEAR(ev[1], 0.5 * (1.0 + norm(v)), 1e-14);
        EXPECT_GE(ev[0], -1e-15);
    }
}

TEST(DensityMatrix, RejectsNonHermitianAndWrongTrace) {
    Mat2c m{};
    m[0][0] = 0.5;
    m[1][1] = 0.5;
    m[0][1] = Complex{0.1, 0.0};
    EXPECT_THROW(DensityMatrix{m}, Error);
    m[0][1] = 0.0;
    m[1][1] = 0.6;
    EXPECT_THROW(DensityMatrix{m}, Error);
}

TEST(PureStates, OuterProductMatchesBloch) {
    const PureState s{Complex{0.6, 0.0}, Complex{0.0, 0.8}};
    EXPECT_NO_THROW(s.validate());
    const auto rho = rho_from_pure(s);
    const Vec3 S = bloch_from_rho(rho);
    EXPECT_NEAR(norm(S), 1.0, 1e-15);
    EXPECT_NEAR(S[2], 0.36 - 0.64, 1e-15);
    EXPECT_THROW((PureState{Complex{1.0, 0.0}, Complex{1.0, 0.0}}.validate()), Error);
}

TEST(Pumping, Evaluation) {
    const Pumping P{Complex{2.0, 0.0}, {}};
    EXPECT_DOUBLE_EQ(P.eval(1.0, 0.0), 2.0);
    EXPECT_NEAR(P.eval(1.0, kPi / 2), 0.0, 1e-15);
    const Pumping Q{Complex{1.0, 0.0}, {PumpMode{Complex{1.0, 0.0}, 3.0}}};
    EXPECT_DOUBLE_EQ(Q.eval(1.0, 0.0), 2.0);
}

TEST(Pumping, ModeTooCloseToResonanceRejected) {
    const Pumping P{Complex{1.0, 0.0}, {PumpMode{Complex{1.0, 0.0}, 1.0 + 1e-9}}};
    EXPECT_THROW(P.validate(1.0), Error);
    const Pumping Q{Complex{1.0, 0.0}, {PumpMode{Complex{1.0, 0.0}, 1.0 + 1e-3}}};
    EXPECT_NO_THROW(Q.validate(1.0));
}

TEST(ResonantAmplitude, PureResonantPumpIsRecovered) {
    const Pumping P{Complex{1.0, 0.0}, {}};
    const Complex a = resonant_amplitude_numeric(P, 1.0, 1000 * 2 * kPi);
    EXPECT_NEAR(a.real(), 1.0, 1e-12);
    EXPECT_NEAR(a.imag(), 0.0, 1e-12);
}

TEST(ResonantAmplitude, OffResonantModeAveragesOut) {
    const Pumping P{Complex{0.0, 0.0}, {PumpMode{Complex{1.0, 0.0}, 2.0}}};
    const double T = 1000 * 2 * kPi;
    const Complex a = resonant_amplitude_numeric(P, 1.0, T);
    EXPECT_LT(std::abs(a), 10.0 / T);
}

TEST(ResonantAmplitude, QuasiperiodicPumpConvergesLikeOneOverT) {
    const Pumping P{Complex{0.3, -0.4},
                    {PumpMode{Complex{0.5, 0.2}, std::numbers::sqrt2}, PumpMode{Complex{-0.3, 0.1}, std::numbers::phi}}};
    const Complex target{0.3, -0.4};
    const Complex a = resonant_amplitude_numeric(P, 1.0, 1e4 * 2 * kPi);
    EXPECT_LT(std::abs(a - target), 1e-3);
    // Error bounded by C / nT across horizons.
    double worst_scaled = 0.0;
    for (double n : {1e3, 2e3, 4e3, 8e3}) {
        const double err = std::abs(resonant_amplitude_numeric(P, 1.0, n * 2 * kPi) - target);
        worst_scaled = std::max(worst_scaled, err * n);
    }
    EXPECT_LT(worst_scaled, 5.0);
}

TEST(ResonantAmplitude, ShortHorizonRejected) {
    const Pumping P{Complex{1.0, 0.0}, {}};
    try {
        resonant_amplitude_numeric(P, 1.0, 10.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::HorizonTooShort);
    }
}

TEST(Hamiltonian, CouplingOffIsDiagonal) {
    ModelParams m;
    m.p = 0.0;
    m.omega1 = 0.2;
    m.omega2 = 1.2;
    const auto h = hamiltonian(m, Pumping{Complex{1.0, 0.0}, {}}, 0.7, 0.3);
    EXPECT_EQ(h[0][0], Complex(0.2, 0));
    EXPECT_EQ(h[1][1], Complex(1.2, 0));
    EXPECT_EQ(h[0][1], Complex(0, 0));
    EXPECT_EQ(h[1][0], Complex(0, 0));
}

TEST(Hamiltonian, FieldCancellingPumpIsDiagonal) {
    ModelParams m;
    const Pumping P{Complex{0.4, 0.3}, {}};
    const double t = 0.9;
    const auto h = hamiltonian(m, P, -P.eval(m.Omega, t), t);
    EXPECT_NEAR(std::abs(h[0][1]), 0.0, 1e-15);
}

TEST(Hamiltonian, DirectSubstitution) {
    ModelParams m;  // hbar = 1, omega1 = 0, omega2 = 1, c = 1
    m.p = 1.0;      // kappa / c = p omega / c = 1
    const Pumping P{Complex{0.0, 0.0}, {}};
    const auto h = hamiltonian(m, P, 0.5, 0.0);
    EXPECT_EQ(h[0][0], Complex(0.0, 0.0));
    EXPECT_EQ(h[0][1], Complex(0.0, 0.5));
    EXPECT_EQ(h[1][0], Complex(0.0, -0.5));
    EXPECT_EQ(h[1][1], Complex(1.0, 0.0));
}

TEST(Rotation, SpecialValuesAndGroupLaw) {
    const Mat3 id = rotation_so3(1.3, 0.0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_EQ(id[i][j], i == j ? 1.0 : 0.0);
    const Mat3 q = rotation_so3(1.0, kPi / 2);
    const Mat3 expect{{{0, 1, 0}, {-1, 0, 0}, {0, 0, 1}}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_NEAR(q[i][j], expect[i][j], 1e-15);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-20.0, 20.0);
    for (int k = 0; k < 200; ++k) {
        const double w = 0.1 * u(rng), t1 = u(rng), t2 = u(rng);
        const Mat3 a = rotation_so3(w, t1) * rotation_so3(w, t2);
        const Mat3 b = rotation_so3(w, t1 + t2);
        const Mat3 r = rotation_so3(w, t1);
        const Mat3 rtr = transpose(r) * r;
        double det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) -
                     r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0]) +
                     r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
        EXPECT_NEAR(det, 1.0, 1e-14);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                EXPECT_NEAR(a[i][j], b[i][j], 1e-13);
                EXPECT_NEAR(rtr[i][j], i == j ? 1.0 : 0.0, 1e-14);
            }
    }
}

TEST(Frames, IdentityAtZeroAndRoundTrip) {
    ModelParams m;
    m.Omega = 1.3;
    m.omega2 = 0.9;
    const EnvelopeState env{Complex{0.3, -0.2}, {0.1, 0.5, -0.4}};
    const FullState lab0 = to_lab_frame(env, m, 0.0);
    EXPECT_EQ(lab0.M, env.Me);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(lab0.S[i], env.Se[i]);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 500; ++k) {
        const EnvelopeState e{Complex{u(rng), u(rng)}, {u(rng), u(rng), u(rng)}};
        const double t = 50.0 * u(rng);
        const EnvelopeState back = to_rotating_frame(to_lab_frame(e, m, t), m, t);
        EXPECT_LT(std::abs(back.Me - e.Me), 1e-14);
        for (int i = 0; i < 3; ++i) EXPECT_NEAR(back.Se[i], e.Se[i], 1e-14);
    }
}

TEST(Frames, HalfPeriodFlipsField) {
    ModelParams m;
    m.Omega = 2.0;
    m.omega2 = 2.0;
    const FullState lab = to_lab_frame(EnvelopeState{Complex{1.0, 0.0}, {0, 0, 1}}, m, kPi / m.Omega);
    EXPECT_NEAR(lab.M.real(), -1.0, 1e-15);
    EXPECT_NEAR(lab.M.imag(), 0.0, 1e-15);
}
