#pragma once

// Finite real trigonometric sums  sum_k c_k cos(nu_k t) + s_k sin(nu_k t)
// with exact products and closed-form antiderivatives.

#include <algorithm>
#include <cmath>
#include <vector>

namespace mbe {

struct Sinusoid {
    double frequency = 0.0;  ///< nu >= 0
    double cos_coef = 0.0;
    double sin_coef = 0.0;
};

class TrigSeries {
public:
    static constexpr double kZeroFrequency = 1e-12;

    TrigSeries() = default;

    static TrigSeries constant(double value) { return TrigSeries{}.add(0.0, value, 0.0); }
    static TrigSeries cosine(double nu, double amp = 1.0) { return TrigSeries{}.add(nu, amp, 0.0); }
    static TrigSeries sine(double nu, double amp = 1.0) { return TrigSeries{}.add(nu, 0.0, amp); }

    /// Adds c cos(nu t) + s sin(nu t); negative nu is folded onto |nu| and
    /// |nu| below kZeroFrequency counts as a constant.
    TrigSeries& add(double nu, double c, double s) {
        if (nu < 0.0) {
            nu = -nu;
            s = -s;
        }
        if (nu < kZeroFrequency) {
            nu = 0.0;
            s = 0.0;
        }
        for (auto& term : terms_)
            if (same_frequency(term.frequency, nu)) {
                term.cos_coef += c;
                term.sin_coef += s;
                return *this;
            }
        terms_.push_back({nu, c, s});
        return *this;
    }

    const std::vector<Sinusoid>& terms() const { return terms_; }

    /// Mean value: the coefficient of the zero frequency.
    double mean() const {
        for (const auto& term : terms_)
            if (term.frequency == 0.0) return term.cos_coef;
        return 0.0;
    }

    double operator()(double t) const {
        double s = 0.0;
        for (const auto& term : terms_)
            s += term.cos_coef * std::cos(term.frequency * t) + term.sin_coef * std::sin(term.frequency * t);
        return s;
    }

    /// int_0^T of the oscillatory part (the mean is excluded).
    double oscillatory_integral(double T) const {
        double s = 0.0;
        for (const auto& term : terms_) {
            if (term.frequency == 0.0) continue;
            const double nu = term.frequency;
            s += term.cos_coef * std::sin(nu * T) / nu + term.sin_coef * (1.0 - std::cos(nu * T)) / nu;
        }
        return s;
    }

    TrigSeries& operator+=(const TrigSeries& o) {
        for (const auto& term : o.terms_) add(term.frequency, term.cos_coef, term.sin_coef);
        return *this;
    }

    TrigSeries& operator*=(double k) {
        for (auto& term : terms_) {
            term.cos_coef *= k;
            term.sin_coef *= k;
        }
        return *this;
    }

    friend TrigSeries operator+(TrigSeries a, const TrigSeries& b) { return a += b; }
    friend TrigSeries operator-(TrigSeries a, TrigSeries b) { return a += (b *= -1.0); }
    friend TrigSeries operator*(double k, TrigSeries a) { return a *= k; }

    /// Exact product via the product-to-sum identities.
    friend TrigSeries operator*(const TrigSeries& a, const TrigSeries& b) {
        TrigSeries out;
        for (const auto& x : a.terms_)
            for (const auto& y : b.terms_) {
                const double sum = x.frequency + y.frequency, diff = x.frequency - y.frequency;
                const double cc = 0.5 * x.cos_coef * y.cos_coef, ss = 0.5 * x.sin_coef * y.sin_coef;
                const double cs = 0.5 * x.cos_coef * y.sin_coef, sc = 0.5 * x.sin_coef * y.cos_coef;
                // cos a cos b = [cos(a-b) + cos(a+b)]/2, sin a sin b = [cos(a-b) - cos(a+b)]/2
                // cos a sin b = [sin(a+b) - sin(a-b)]/2, sin a cos b = [sin(a+b) + sin(a-b)]/2
                out.add(diff, cc + ss, sc - cs);
                out.add(sum, cc - ss, cs + sc);
            }
        return out;
    }

private:
    static bool same_frequency(double a, double b) {
        return std::abs(a - b) <= 1e-13 * std::max({1.0, std::abs(a), std::abs(b)});
    }

    std::vector<Sinusoid> terms_;
};

}  // namespace mbe
