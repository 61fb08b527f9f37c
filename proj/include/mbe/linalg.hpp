#pragma once

// Small fixed-size vector and matrix helpers shared by every module.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>

namespace mbe {

using Complex = std::complex<double>;
using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;
using Mat2c = std::array<std::array<Complex, 2>, 2>;

template <std::size_t N>
using Vec = std::array<double, N>;

template <std::size_t N>
using Mat = std::array<std::array<double, N>, N>;

template <std::size_t N>
constexpr double dot(const Vec<N>& a, const Vec<N>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) s += a[i] * b[i];
    return s;
}

template <std::size_t N>
double norm(const Vec<N>& a) {
    return std::sqrt(dot(a, a));
}

template <std::size_t N>
constexpr Vec<N> operator+(Vec<N> a, const Vec<N>& b) {
    for (std::size_t i = 0; i < N; ++i) a[i] += b[i];
    return a;
}

template <std::size_t N>
constexpr Vec<N> operator-(Vec<N> a, const Vec<N>& b) {
    for (std::size_t i = 0; i < N; ++i) a[i] -= b[i];
    return a;
}

template <std::size_t N>
constexpr Vec<N> operator*(double s, Vec<N> a) {
    for (auto& x : a) x *= s;
    return a;
}

template <std::size_t N>
constexpr Vec<N>& operator+=(Vec<N>& a, const Vec<N>& b) {
    for (std::size_t i = 0; i < N; ++i) a[i] += b[i];
    return a;
}

template <std::size_t N>
constexpr Vec<N>& operator*=(Vec<N>& a, double s) {
    for (auto& x : a) x *= s;
    return a;
}

constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

template <std::size_t N>
constexpr Vec<N> operator*(const Mat<N>& m, const Vec<N>& v) {
    Vec<N> out{};
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) out[i] += m[i][j] * v[j];
    return out;
}

template <std::size_t N>
constexpr Mat<N> operator*(const Mat<N>& a, const Mat<N>& b) {
    Mat<N> out{};
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t k = 0; k < N; ++k)
            for (std::size_t j = 0; j < N; ++j) out[i][j] += a[i][k] * b[k][j];
    return out;
}

template <std::size_t N>
constexpr Mat<N> transpose(const Mat<N>& a) {
    Mat<N> out{};
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) out[i][j] = a[j][i];
    return out;
}

template <std::size_t N>
constexpr Mat<N> identity() {
    Mat<N> out{};
    for (std::size_t i = 0; i < N; ++i) out[i][i] = 1.0;
    return out;
}

/// Frobenius norm.
template <std::size_t N>
double frobenius(const Mat<N>& a) {
    double s = 0.0;
    for (const auto& row : a)
        for (double x : row) s += x * x;
    return std::sqrt(s);
}

inline double frobenius(const Mat2c& a) {
    double s = 0.0;
    for (const auto& row : a)
        for (const auto& x : row) s += std::norm(x);
    return std::sqrt(s);
}

/// Solves A x = b by Gaussian elimination with partial pivoting.  Returns
/// false when a pivot vanishes.
template <std::size_t N>
bool solve(Mat<N> a, Vec<N> b, Vec<N>& x) {
    for (std::size_t col = 0; col < N; ++col) {
        std::size_t piv = col;
        for (std::size_t i = col + 1; i < N; ++i)
            if (std::abs(a[i][col]) > std::abs(a[piv][col])) piv = i;
        if (a[piv][col] == 0.0) return false;
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t i = col + 1; i < N; ++i) {
            const double f = a[i][col] / a[col][col];
            for (std::size_t j = col; j < N; ++j) a[i][j] -= f * a[col][j];
            b[i] -= f * b[col];
        }
    }
    for (std::size_t i = N; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < N; ++j) s -= a[i][j] * x[j];
        x[i] = s / a[i][i];
    }
    return true;
}

inline Mat2c operator-(Mat2c a, const Mat2c& b) {
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) a[i][j] -= b[i][j];
    return a;
}

inline Mat2c operator*(const Mat2c& a, const Mat2c& b) {
    Mat2c out{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
    return out;
}

inline Mat2c commutator(const Mat2c& a, const Mat2c& b) { return a * b - b * a; }

}  // namespace mbe
