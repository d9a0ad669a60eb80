#pragma once

#include <functional>
#include <stdexcept>

namespace trafficgas::specfun {

/// Mac-Donald function K_order(x) stored as log(e^x K_order(x)).
///
/// Raw values span hundreds of decades for the orders used by the
/// nearest-neighbour densities, so callers combine these in log space and
/// only exponentiate final ratios.
struct ScaledBessel {
    int order = 0;
    double argument = 0.0;
    double log_scaled_value = 0.0;

    /// log K_order(x)
    [[nodiscard]] double log_value() const noexcept { return log_scaled_value - argument; }
    /// K_order(x); may underflow to 0 or overflow to inf for extreme inputs.
    [[nodiscard]] double value() const;
};

/// Modified Bessel function of the second kind at integer order.
/// Throws std::domain_error for x <= 0 or order < 0.
[[nodiscard]] ScaledBessel bessel_k(int order, double x);

/// log Gamma(n) for integer n >= 1, i.e. log((n-1)!).
[[nodiscard]] double log_gamma_int(int n);

class QuadratureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct QuadratureOptions {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    /// Maximum number of bisections applied to any one subinterval.
    int max_depth = 30;
};

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int evaluations = 0;
};

/// Adaptive Gauss-Kronrod (7/15) integration over [a, b].
/// Throws QuadratureError when the tolerance cannot be met within max_depth.
[[nodiscard]] QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                                         const QuadratureOptions& opts = {});

/// Integral over (0, inf) using r = scale * u / (1 - u). `scale` should be
/// of the order of the integrand's characteristic length.
[[nodiscard]] QuadratureResult integrate_semiinfinite(const std::function<double(double)>& f,
                                                      const QuadratureOptions& opts = {},
                                                      double scale = 1.0);

[[nodiscard]] inline double integrate_semiinfinite(const std::function<double(double)>& f,
                                                   double abs_tol, double rel_tol) {
    return integrate_semiinfinite(f, QuadratureOptions{abs_tol, rel_tol, 30}).value;
}

}  // namespace trafficgas::specfun
