#pragma once

// Independent reference computations used by the tests.  Nothing here calls
// the library code it is meant to check.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using Complex = std::complex<double>;
template <std::size_t N>
using Vec = std::array<double, N>;
template <std::size_t N>
using Mat = std::array<std::array<double, N>, N>;

/// Classical fixed-step RK4.
template <std::size_t N, class F>
Vec<N> rk4(F&& f, double t0, double t1, Vec<N> y, std::size_t steps) {
    const double h = (t1 - t0) / static_cast<double>(steps);
    auto axpy = [](const Vec<N>& a, double s, const Vec<N>& b) {
        Vec<N> out;
        for (std::size_t i = 0; i < N; ++i) out[i] = a[i] + s * b[i];
        return out;
    };
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = t0 + h * static_cast<double>(k);
        const Vec<N> k1 = f(t, y);
        const Vec<N> k2 = f(t + 0.5 * h, axpy(y, 0.5 * h, k1));
        const Vec<N> k3 = f(t + 0.5 * h, axpy(y, 0.5 * h, k2));
        const Vec<N> k4 = f(t + h, axpy(y, h, k3));
        for (std::size_t i = 0; i < N; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return y;
}

/// Central-difference Jacobian of f at x.
template <std::size_t N, class F>
Mat<N> fd_jacobian(F&& f, const Vec<N>& x, double h) {
    Mat<N> J{};
    for (std::size_t j = 0; j < N; ++j) {
        Vec<N> xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        const Vec<N> fp = f(xp), fm = f(xm);
        for (std::size_t i = 0; i < N; ++i) J[i][j] = (fp[i] - fm[i]) / (2.0 * h);
    }
    return J;
}

/// Characteristic polynomial det(lambda I - A) by Faddeev-LeVerrier;
/// coefficients from lambda^N down to the constant.
template <std::size_t N>
std::vector<double> char_poly(const Mat<N>& A) {
    Eigen::Matrix<double, N, N> a, m = Eigen::Matrix<double, N, N>::Zero(), id = Eigen::Matrix<double, N, N>::Identity();
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) a(i, j) = A[i][j];
    std::vector<double> c(N + 1, 0.0);
    c[0] = 1.0;
    for (std::size_t k = 1; k <= N; ++k) {
        m = a * m + c[k - 1] * id;
        c[k] = -(a * m).trace() / static_cast<double>(k);
    }
    return c;
}

inline Complex poly_eval(const std::vector<double>& c, Complex z) {
    Complex v = 0.0;
    for (double x : c) v = v * z + x;
    return v;
}

/// Eigenvalues by Eigen's real Schur solver.
template <std::size_t N>
std::vector<Complex> eigen_eigenvalues(const Mat<N>& A) {
    Eigen::Matrix<double, N, N> a;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) a(i, j) = A[i][j];
    Eigen::EigenSolver<Eigen::Matrix<double, N, N>> es(a, false);
    std::vector<Complex> out;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) out.push_back(es.eigenvalues()(i));
    return out;
}

/// Max over `a` of the distance to the nearest unused element of `b`.
template <class A, class B>
double multiset_distance(const A& a, const B& b) {
    std::vector<Complex> pool(b.begin(), b.end());
    double worst = 0.0;
    for (const Complex& x : a) {
        auto it = std::min_element(pool.begin(), pool.end(),
                                   [&](const Complex& u, const Complex& v) { return std::abs(u - x) < std::abs(v - x); });
        worst = std::max(worst, std::abs(*it - x));
        pool.erase(it);
    }
    return worst;
}

/// Resonant averaged field divided by p, written out from scratch.
struct AveragedField {
    double gamma1, kappa1, b;
    Complex Ae;

    Vec<5> operator()(const Vec<5>& x) const {
        const double B1 = x[0] + Ae.real(), B2 = x[1] + Ae.imag();
        return {0.5 * (-gamma1 * x[0] + kappa1 * x[2]), 0.5 * (-gamma1 * x[1] + kappa1 * x[3]),
                -0.5 * b * x[4] * B1, -0.5 * b * x[4] * B2, 0.5 * b * (x[2] * B1 + x[3] * B2)};
    }
};

/// Points of Z1 and Z2 from their defining formulas.
inline Vec<5> z1_point(double alpha, Complex Ae, double theta) {
    const Complex M = -0.5 * Ae + 0.5 * std::abs(Ae) * std::polar(1.0, theta);
    return {M.real(), M.imag(), alpha * M.real(), alpha * M.imag(), 0.0};
}

inline Vec<5> z2_point(double alpha, Complex Ae, double s3) {
    return {-Ae.real(), -Ae.imag(), -alpha * Ae.real(), -alpha * Ae.imag(), s3};
}

/// Brute-force distance to Z1 over a fine theta grid with local refinement.
inline double z1_distance_brute(const Vec<5>& x, double alpha, Complex Ae) {
    auto d = [&](double th) {
        const Vec<5> z = z1_point(alpha, Ae, th);
        double s = 0.0;
        for (int i = 0; i < 5; ++i) s += (x[i] - z[i]) * (x[i] - z[i]);
        return std::sqrt(s);
    };
    const int n = 20000;
    double best = d(0.0), arg = 0.0;
    for (int k = 1; k < n; ++k) {
        const double th = 2.0 * std::numbers::pi * k / n;
        if (d(th) < best) {
            best = d(th);
            arg = th;
        }
    }
    double h = 2.0 * std::numbers::pi / n;
    for (int it = 0; it < 200; ++it) {
        h *= 0.7;
        for (double th : {arg - h, arg + h})
            if (d(th) < best) {
                best = d(th);
                arg = th;
            }
    }
    return best;
}

}  // namespace oracle
