#include "trafficgas/specfun.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace trafficgas::specfun {

namespace {

constexpr double kEps = 1e-16;

struct K01 {
    double k0;  // e^x K0(x)
    double k1;  // e^x K1(x)
};

// Power series about the origin; accurate for 0 < x < 2.
K01 k01_series(double x) {
    const double q = 0.25 * x * x;
    const double log_half = std::log(0.5 * x);

    double term0 = 1.0;  // (x^2/4)^k / (k!)^2
    double term1 = 1.0;  // (x^2/4)^k / (k! (k+1)!)
    double psi_k1 = -std::numbers::egamma;  // psi(k+1)
    double i0 = 0.0, i1 = 0.0, s0 = 0.0, s1 = 0.0;
    for (int k = 0; k < 200; ++k) {
        const double psi_k2 = psi_k1 + 1.0 / (k + 1);
        i0 += term0;
        i1 += term1;
        s0 += psi_k1 * term0;
        s1 += (psi_k1 + psi_k2) * term1;
        if (term0 < kEps * i0 && term1 < kEps * i1) break;
        term0 *= q / ((k + 1.0) * (k + 1.0));
        term1 *= q / ((k + 1.0) * (k + 2.0));
        psi_k1 = psi_k2;
    }
    const double k0 = -log_half * i0 + s0;
    const double k1 = 1.0 / x + log_half * 0.5 * x * i1 - 0.25 * x * s1;
    const double scale = std::exp(x);
    return {k0 * scale, k1 * scale};
}

// Steed's continued fraction (CF2) for order 0 and 1, exponentially scaled.
K01 k01_continued_fraction(double x) {
    const double a1 = 0.25;
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d;
    double delh = d;
    double q1 = 0.0, q2 = 1.0;
    double q = a1, c = a1, a = -a1;
    double s = 1.0 + q * delh;
    for (int i = 1; i < 100000; ++i) {
        a -= 2 * i;
        c = -a * c / (i + 1.0);
        const double qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        const double dels = q * delh;
        s += dels;
        if (std::abs(dels / s) < kEps) break;
    }
    h *= a1;
    const double k0 = std::sqrt(std::numbers::pi / (2.0 * x)) / s;
    const double k1 = k0 * (x + 0.5 - h) / x;
    return {k0, k1};
}

}  // namespace

double ScaledBessel::value() const { return std::exp(log_value()); }

ScaledBessel bessel_k(int order, double x) {
    if (!(x > 0.0) || !std::isfinite(x))
        throw std::domain_error("bessel_k: argument must be positive and finite, got " + std::to_string(x));
    if (order < 0) throw std::domain_error("bessel_k: order must be non-negative");

    const K01 base = x < 2.0 ? k01_series(x) : k01_continued_fraction(x);
    if (order == 0) return {0, x, std::log(base.k0)};

    // Upward recurrence K_{v+1} = K_{v-1} + (2v/x) K_v is stable for K.
    // Values are renormalised whenever they grow large; the shift is
    // accumulated in log_offset.
    double prev = base.k0;
    double cur = base.k1;
    double log_offset = 0.0;
    constexpr double kRescaleAt = 1e250;
    for (int v = 1; v < order; ++v) {
        const double next = prev + (2.0 * v / x) * cur;
        prev = cur;
        cur = next;
        if (cur > kRescaleAt) {
            log_offset += std::log(cur);
            prev /= cur;
            cur = 1.0;
        }
    }
    return {order, x, std::log(cur) + log_offset};
}

double log_gamma_int(int n) {
    if (n < 1) throw std::domain_error("log_gamma_int: n must be >= 1");
    static const std::vector<double> table = [] {
        std::vector<double> t(4097);
        t[1] = 0.0;
        for (std::size_t i = 2; i < t.size(); ++i) t[i] = t[i - 1] + std::log(static_cast<double>(i - 1));
        return t;
    }();
    if (static_cast<std::size_t>(n) < table.size()) return table[static_cast<std::size_t>(n)];
    // Stirling series; truncation error below 1e-20 for n > 4096.
    const double z = n;
    return (z - 0.5) * std::log(z) - z + 0.5 * std::log(2.0 * std::numbers::pi) + 1.0 / (12.0 * z) -
           1.0 / (360.0 * z * z * z);
}

}  // namespace trafficgas::specfun
