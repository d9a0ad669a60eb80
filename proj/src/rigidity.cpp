#include "trafficgas/rigidity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "trafficgas/kernels.hpp"
#include "trafficgas/specfun.hpp"

namespace trafficgas::rigidity {

double chi_coefficient(double beta) {
    const double B = gas::interaction_constant(beta);
    const double s = std::sqrt(B * beta);
    return (2.0 + s) / (2.0 * B * (1.0 + s));
}

double gamma_coefficient(double beta) {
    const double B = gas::interaction_constant(beta);
    const double s = std::sqrt(B * beta);
    const double s2 = s * s;
    const double d = (1.0 + s) * (1.0 + s);
    return (6.0 * s + s2 * (21.0 + 4.0 * s2 + 16.0 * s)) / (24.0 * d * d);
}

AsymptoticCoefficients asymptotic_coefficients(double beta) {
    return {chi_coefficient(beta), gamma_coefficient(beta), beta};
}

double number_variance_asymptotic(double beta, double L) {
    if (!(L > 0.0)) throw std::domain_error("number_variance_asymptotic: L must be positive");
    return chi_coefficient(beta) * L + gamma_coefficient(beta);
}

// ---------------------------------------------------------------------------
// Cluster function

ClusterFunction::ClusterFunction(double beta, double tol, double r_max)
    : beta_(beta), B_(gas::interaction_constant(beta)), tol_(tol) {
    if (!(tol > 0.0)) throw std::domain_error("ClusterFunction: tol must be positive");
    const int n_cache = static_cast<int>(10.0 * std::max(r_max, 0.0)) + 201;
    log_norms_.reserve(static_cast<std::size_t>(n_cache));
    for (int n = 0; n < n_cache; ++n) log_norms_.push_back(gas::NthSpacingDensity(n, beta).log_N());
}

double ClusterFunction::log_norm(int n) const {
    if (static_cast<std::size_t>(n) < log_norms_.size()) return log_norms_[static_cast<std::size_t>(n)];
    return gas::NthSpacingDensity(n, beta_).log_N();
}

double ClusterFunction::asymptotic_level() const {
    return 2.0 * B_ / (1.0 + std::sqrt(1.0 + 4.0 * B_ * beta_));
}

double ClusterFunction::operator()(double r) const {
    if (!(r > 0.0)) return 0.0;
    const int n_cap = static_cast<int>(10.0 * r) + 200;
    const double log_r = std::log(r);
    double sum = 0.0;
    double prev = -std::numeric_limits<double>::infinity();
    for (int n = 0; n <= n_cap; ++n) {
        const double m = n + 1.0;
        const double log_term = log_norm(n) + n * log_r - beta_ * m * m / r - B_ * r;
        const double term = std::exp(log_term);
        sum += term;
        if (n > 0) {
            const double ratio = std::exp(log_term - prev);
            if (ratio < 1.0 && term * ratio / (1.0 - ratio) < tol_) return sum;
        }
        prev = log_term;
    }
    std::ostringstream msg;
    msg << "cluster_function: tail above tol=" << tol_ << " at r=" << r << " after " << n_cap << " terms";
    throw TruncationError(msg.str());
}

double cluster_function(double beta, double r, double tol) { return ClusterFunction(beta, tol, r)(r); }

RenewalClusterFunction::RenewalClusterFunction(double beta, double x_max, double step) : step_(step) {
    if (!(step > 0.0) || !(x_max > 0.0)) throw std::domain_error("RenewalClusterFunction: bad grid");
    const gas::GasParameters params = gas::make_gas(beta);
    mean_ = gas::moment(params, 1);
    const auto size = static_cast<std::size_t>(std::ceil(x_max * mean_ / step)) + 2;

    std::vector<double> p(size);
    for (std::size_t i = 0; i < size; ++i) p[i] = gas::clearance_pdf(params, static_cast<double>(i) * step);
    p[0] = beta == 0.0 ? params.A() : 0.0;
    std::vector<double> p_reversed(p.rbegin(), p.rend());

    // Trapezoid rule for R = p + R * p, implicit in the R[i] p[0] end term.
    values_.assign(size, 0.0);
    values_[0] = p[0];
    const double diagonal = 1.0 - 0.5 * step * p[0];
    for (std::size_t i = 1; i < size; ++i) {
        const std::span<const double> past(values_.data() + 1, i - 1);
        const std::span<const double> kernel(p_reversed.data() + (size - i), i - 1);
        values_[i] = (p[i] + step * (kernels::dot(past, kernel) + 0.5 * values_[0] * p[i])) / diagonal;
    }
}

double RenewalClusterFunction::operator()(double x) const {
    if (!(x > 0.0)) return 0.0;
    const double pos = x * mean_ / step_;
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= values_.size()) throw std::out_of_range("RenewalClusterFunction: x beyond tabulated range");
    const double frac = pos - static_cast<double>(i);
    return mean_ * ((1.0 - frac) * values_[i] + frac * values_[i + 1]);
}

double number_variance_integral(const std::function<double(double)>& cluster, double L, double tol) {
    if (!(L > 0.0)) throw std::domain_error("number_variance_integral: L must be positive");
    const specfun::QuadratureOptions opts{std::max(tol, 1e-10) * L, 1e-9, 30};
    const double integral =
        specfun::integrate([&](double r) { return (L - r) * (1.0 - cluster(r)); }, 0.0, L, opts).value;
    return L - 2.0 * integral;
}

double number_variance_integral(double beta, double L, double tol) {
    const ClusterFunction cluster(beta, tol, L);
    return number_variance_integral([&](double r) { return cluster(r); }, L, tol);
}

// ---------------------------------------------------------------------------
// Inversion and oracle

double invert_chi(double chi_hat, double beta_cap) {
    const double chi_cap = chi_coefficient(beta_cap);
    if (!std::isfinite(chi_hat) || chi_hat > 1.0 || chi_hat <= chi_cap) {
        std::ostringstream msg;
        msg << "invert_chi: chi_hat=" << chi_hat << " outside the invertible interval (" << chi_cap << ", 1]"
            << " for beta in [0, " << beta_cap << "]";
        throw OutOfRange(msg.str(), chi_cap, 1.0);
    }
    if (chi_hat == 1.0) return 0.0;

    // chi must be strictly decreasing on the bracket for bisection to be valid.
    const int grid = std::max(100, static_cast<int>(beta_cap / 0.01));
    double last = chi_coefficient(0.0);
    for (int i = 1; i <= grid; ++i) {
        const double c = chi_coefficient(beta_cap * i / grid);
        if (!(c < last)) throw std::logic_error("invert_chi: chi(beta) not strictly decreasing on the bracket");
        last = c;
    }

    double lo = 0.0, hi = beta_cap;
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (chi_coefficient(mid) > chi_hat)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

RenewalSlope renewal_slope_oracle(double beta) {
    const gas::GasParameters params = gas::make_gas(beta);
    const specfun::QuadratureOptions opts{1e-14, 1e-12, 30};
    const double m1 =
        specfun::integrate_semiinfinite([&](double r) { return r * gas::clearance_pdf(params, r); }, opts).value;
    const double m2 =
        specfun::integrate_semiinfinite([&](double r) { return r * r * gas::clearance_pdf(params, r); }, opts).value;
    const double slope = (m2 - m1 * m1) / (m1 * m1 * m1);
    const double chi = chi_coefficient(beta);
    return {slope, chi, (slope - chi) / chi};
}

}  // namespace trafficgas::rigidity
