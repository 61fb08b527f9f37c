#pragma once

// Eigenvalues of small dense real matrices: balancing, reduction to upper
// Hessenberg form by stabilized elementary similarity transforms, and the
// Francis double-shift QR iteration.  The iteration runs in quad precision:
// defective eigenvalues (which the equilibrium Jacobians have) are only
// resolved to about sqrt(eps), so double precision gives ~1e-8 there.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <limits>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "mbe/errors.hpp"
#include "mbe/io.hpp"
#include "mbe/linalg.hpp"

namespace mbe {

/// Lexicographic (Re, Im) order.
inline bool complex_less(const Complex& a, const Complex& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
}

namespace detail {

using Quad = boost::multiprecision::cpp_bin_float_quad;

template <class Real, std::size_t N>
using MatR = std::array<std::array<Real, N>, N>;

template <class Real, std::size_t N>
void balance(MatR<Real, N>& a) {
    using std::abs;
    const Real radix = 2, sqrdx = radix * radix;
    bool done = false;
    while (!done) {
        done = true;
        for (std::size_t i = 0; i < N; ++i) {
            Real r = 0, c = 0;
            for (std::size_t j = 0; j < N; ++j)
                if (j != i) {
                    c += abs(a[j][i]);
                    r += abs(a[i][j]);
                }
            if (c == 0 || r == 0) continue;
            Real g = r / radix, f = 1;
            const Real s = c + r;
            while (c < g) {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= sqrdx;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                g = 1 / f;
                for (std::size_t j = 0; j < N; ++j) a[i][j] *= g;
                for (std::size_t j = 0; j < N; ++j) a[j][i] *= f;
            }
        }
    }
}

template <class Real, std::size_t N>
void hessenberg(MatR<Real, N>& a) {
    using std::abs;
    for (std::size_t m = 1; m + 1 < N; ++m) {
        Real x = 0;
        std::size_t piv = m;
        for (std::size_t j = m; j < N; ++j)
            if (abs(a[j][m - 1]) > abs(x)) {
                x = a[j][m - 1];
                piv = j;
            }
        if (piv != m) {
            for (std::size_t j = m - 1; j < N; ++j) std::swap(a[piv][j], a[m][j]);
            for (std::size_t j = 0; j < N; ++j) std::swap(a[j][piv], a[j][m]);
        }
        if (x != 0) {
            for (std::size_t i = m + 1; i < N; ++i) {
                Real y = a[i][m - 1];
                if (y == 0) continue;
                y /= x;
                a[i][m - 1] = y;
                for (std::size_t j = m; j < N; ++j) a[i][j] -= y * a[m][j];
                for (std::size_t j = 0; j < N; ++j) a[j][m] += y * a[j][i];
            }
        }
    }
    for (std::size_t i = 2; i < N; ++i)
        for (std::size_t j = 0; j + 1 < i; ++j) a[i][j] = 0;
}

template <class Real>
Real sign_of(const Real& a, const Real& b) {
    using std::abs;
    return b >= 0 ? Real(abs(a)) : Real(-abs(a));
}

template <std::size_t N>
std::string matrix_hash(const Mat<N>& a) {
    std::string s;
    for (const auto& row : a)
        for (double x : row) s += format_double(x) + ",";
    return hex64(fnv1a64(s));
}

/// Eigenvalues of an upper Hessenberg matrix (destroyed on exit).
template <class Real, std::size_t N>
std::array<Complex, N> hqr(MatR<Real, N> a, const std::string& hash) {
    using std::abs, std::sqrt;
    const Real eps = std::numeric_limits<Real>::epsilon();
    std::array<Complex, N> w{};
    const int n = static_cast<int>(N);
    Real anorm = 0;
    for (int i = 0; i < n; ++i)
        for (int j = std::max(i - 1, 0); j < n; ++j) anorm += abs(a[i][j]);

    int nn = n - 1;
    Real t = 0;
    Real p = 0, q = 0, r = 0, s = 0, x = 0, y = 0, z = 0, ww = 0;
    while (nn >= 0) {
        int its = 0;
        int l = 0;
        do {
            for (l = nn; l > 0; --l) {
                s = abs(a[l - 1][l - 1]) + abs(a[l][l]);
                if (s == 0) s = anorm;
                if (abs(a[l][l - 1]) <= eps * s) {
                    a[l][l - 1] = 0;
                    break;
                }
            }
            x = a[nn][nn];
            if (l == nn) {
                w[nn--] = Complex(static_cast<double>(x + t), 0.0);
            } else {
                y = a[nn - 1][nn - 1];
                ww = a[nn][nn - 1] * a[nn - 1][nn];
                if (l == nn - 1) {
                    p = 0.5 * (y - x);
                    q = p * p + ww;
                    z = sqrt(abs(q));
                    x += t;
                    if (q >= 0) {
                        z = p + sign_of(z, p);
                        w[nn - 1] = w[nn] = Complex(static_cast<double>(x + z), 0.0);
                        if (z != 0) w[nn] = Complex(static_cast<double>(x - ww / z), 0.0);
                    } else {
                        w[nn] = Complex(static_cast<double>(x + p), static_cast<double>(-z));
                        w[nn - 1] = std::conj(w[nn]);
                    }
                    nn -= 2;
                } else {
                    if (its == 60)
                        throw Error(ErrorKind::NoConvergence, "QR iteration did not converge for matrix " + hash);
                    if (its == 10 || its == 20 || its == 40) {
                        t += x;
                        for (int i = 0; i <= nn; ++i) a[i][i] -= x;
                        s = abs(a[nn][nn - 1]) + abs(a[nn - 1][nn - 2]);
                        y = x = 0.75 * s;
                        ww = -0.4375 * s * s;
                    }
                    ++its;
                    int m = nn - 2;
                    for (; m >= l; --m) {
                        z = a[m][m];
                        r = x - z;
                        s = y - z;
                        p = (r * s - ww) / a[m + 1][m] + a[m][m + 1];
                        q = a[m + 1][m + 1] - z - r - s;
                        r = a[m + 2][m + 1];
                        s = abs(p) + abs(q) + abs(r);
                        p /= s;
                        q /= s;
                        r /= s;
                        if (m == l) break;
                        const Real u = abs(a[m][m - 1]) * (abs(q) + abs(r));
                        const Real v =
                            abs(p) * (abs(a[m - 1][m - 1]) + abs(z) + abs(a[m + 1][m + 1]));
                        if (u <= eps * v) break;
                    }
                    for (int i = m; i < nn - 1; ++i) {
                        a[i + 2][i] = 0;
                        if (i != m) a[i + 2][i - 1] = 0;
                    }
                    for (int k = m; k < nn; ++k) {
                        if (k != m) {
                            p = a[k][k - 1];
                            q = a[k + 1][k - 1];
                            r = 0;
                            if (k + 1 != nn) r = a[k + 2][k - 1];
                            if ((x = abs(p) + abs(q) + abs(r)) != 0) {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        if ((s = sign_of(sqrt(p * p + q * q + r * r), p)) != 0) {
                            if (k == m) {
                                if (l != m) a[k][k - 1] = -a[k][k - 1];
                            } else {
                                a[k][k - 1] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for (int j = k; j <= nn; ++j) {
                                p = a[k][j] + q * a[k + 1][j];
                                if (k + 1 != nn) {
                                    p += r * a[k + 2][j];
                                    a[k + 2][j] -= p * z;
                                }
                                a[k + 1][j] -= p * y;
                                a[k][j] -= p * x;
                            }
                            const int mmin = nn < k + 3 ? nn : k + 3;
                            for (int i = l; i <= mmin; ++i) {
                                p = x * a[i][k] + y * a[i][k + 1];
                                if (k + 1 != nn) {
                                    p += z * a[i][k + 2];
                                    a[i][k + 2] -= p * r;
                                }
                                a[i][k + 1] -= p * q;
                                a[i][k] -= p;
                            }
                        }
                    }
                }
            }
        } while (l + 1 < nn);
    }
    return w;
}

}  // namespace detail

using Quad = detail::Quad;

template <class Real, std::size_t N>
using MatR = detail::MatR<Real, N>;

/// All eigenvalues of a real N x N matrix given in quad precision, sorted by
/// (Re, Im).  Use this when the entries are known beyond double precision.
template <std::size_t N>
std::array<Complex, N> numeric_spectrum(const MatR<Quad, N>& J) {
    Mat<N> rounded{};
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) {
            rounded[i][j] = static_cast<double>(J[i][j]);
            if (!std::isfinite(rounded[i][j]))
                throw Error(ErrorKind::InvalidParameter, "matrix has non-finite entries");
        }
    MatR<Quad, N> a = J;
    detail::balance(a);
    detail::hessenberg(a);
    auto w = detail::hqr(a, detail::matrix_hash(rounded));
    std::sort(w.begin(), w.end(), complex_less);
    return w;
}

/// All eigenvalues of a real N x N matrix, sorted by (Re, Im).
template <std::size_t N>
std::array<Complex, N> numeric_spectrum(const Mat<N>& J) {
    MatR<Quad, N> a;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) a[i][j] = J[i][j];
    return numeric_spectrum<N>(a);
}

}  // namespace mbe
