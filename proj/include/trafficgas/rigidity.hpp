#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "trafficgas/gas.hpp"

namespace trafficgas::rigidity {

/// Large-L number variance Delta_N(L) ~ chi * L + gamma_shift.
struct AsymptoticCoefficients {
    double chi = 1.0;
    double gamma_shift = 0.0;
    double beta = 0.0;
};

/// chi(beta) = (2 + sqrt(B beta)) / (2 B (1 + sqrt(B beta))).
[[nodiscard]] double chi_coefficient(double beta);

/// gamma(beta) = (6 s + s^2 (21 + 4 s^2 + 16 s)) / (24 (1 + s)^4), s = sqrt(B beta).
/// Rises from 0 at beta = 0 towards 1/6.
[[nodiscard]] double gamma_coefficient(double beta);

[[nodiscard]] AsymptoticCoefficients asymptotic_coefficients(double beta);

/// chi(beta) L + gamma(beta). Only meaningful for large L: the exact
/// variance vanishes at L = 0 while this tends to gamma(beta).
[[nodiscard]] double number_variance_asymptotic(double beta, double L);

class TruncationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two-point cluster function R(r) = sum_n p_n(r) over the saddle-point
/// nearest-neighbour densities.
///
/// Terms are summed until the remaining tail, bounded by a geometric series
/// with the current term ratio (terms are log-concave in n once past their
/// peak), falls below `tol`. Normalisations are cached for r <= r_max.
class ClusterFunction {
public:
    explicit ClusterFunction(double beta, double tol = 1e-6, double r_max = 64.0);

    /// Throws TruncationError if the tail bound is not met by n = 10 r + 200.
    [[nodiscard]] double operator()(double r) const;

    [[nodiscard]] double beta() const noexcept { return beta_; }
    [[nodiscard]] double tol() const noexcept { return tol_; }

    /// Large-r limit of the saddle-point sum, 2B / (1 + sqrt(1 + 4 B beta)).
    [[nodiscard]] double asymptotic_level() const;

private:
    [[nodiscard]] double log_norm(int n) const;

    double beta_;
    double B_;
    double tol_;
    std::vector<double> log_norms_;
};

[[nodiscard]] double cluster_function(double beta, double r, double tol = 1e-6);

/// Renewal density of the clearance law (sum of exact convolution powers),
/// unfolded to unit density. Solves R = p + R * p on a uniform grid.
class RenewalClusterFunction {
public:
    RenewalClusterFunction(double beta, double x_max, double step = 0.002);

    [[nodiscard]] double operator()(double x) const;  // linear interpolation; x in unfolded units

private:
    double step_;
    double mean_;
    std::vector<double> values_;  // raw renewal density at r = i * step_
};

/// Delta_N(L) = L - 2 int_0^L (L - r)(1 - R(r)) dr for a supplied R.
[[nodiscard]] double number_variance_integral(const std::function<double(double)>& cluster, double L,
                                              double tol = 1e-6);

/// Same, with the saddle-point ClusterFunction for `beta`.
[[nodiscard]] double number_variance_integral(double beta, double L, double tol = 1e-6);

enum class VarianceKind { number_variance, timegap_variance };

struct VariancePoint {
    double scale = 0.0;      // L or N
    double variance = 0.0;   // Delta_N(L) or Delta_T(N)
    std::size_t windows = 0; // floor(Q/L) or Q-N+1
    bool flagged = false;    // too few windows to trust
};

struct VarianceCurve {
    VarianceKind kind = VarianceKind::number_variance;
    std::vector<VariancePoint> points;
    std::size_t sample_count = 0;  // Q
};

/// Disjoint-window number variance of an unfolded sequence. Windows are
/// [(k-1)L, kL) over positions 0, r_1, r_1+r_2, ...; a point on an edge
/// belongs to the window on its right. Points with fewer than 10 windows
/// are flagged.
[[nodiscard]] VarianceCurve empirical_number_variance(const gas::SpacingSequence& seq,
                                                      std::span<const double> L_grid);

/// Overlapping-window variance of N-gap moving averages about the global mean.
/// Requires gaps.size() >= 10 * max(N_grid).
[[nodiscard]] VarianceCurve timegap_variance(std::span<const double> gaps, std::span<const std::size_t> N_grid);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // RMS
    std::size_t points_used = 0;
};

/// OLS over unflagged points with scale >= L_min; needs at least 4.
[[nodiscard]] LinearFit fit_linear_tail(const VarianceCurve& curve, double L_min);

struct PowerLawFit {
    double exponent = 0.0;
    double prefactor = 0.0;
};

/// OLS in log-log coordinates; every variance must be strictly positive.
[[nodiscard]] PowerLawFit fit_power_law(const VarianceCurve& curve);

class OutOfRange : public std::out_of_range {
public:
    OutOfRange(const std::string& what, double lower, double upper)
        : std::out_of_range(what), lower_(lower), upper_(upper) {}
    [[nodiscard]] double lower() const noexcept { return lower_; }
    [[nodiscard]] double upper() const noexcept { return upper_; }

private:
    double lower_, upper_;
};

inline constexpr double kDefaultBetaCap = 64.0;

/// beta with chi(beta) = chi_hat by bisection on [0, beta_cap], to 1e-8 in beta.
/// Throws OutOfRange unless chi(beta_cap) < chi_hat <= 1.
[[nodiscard]] double invert_chi(double chi_hat, double beta_cap = kDefaultBetaCap);

struct RenewalSlope {
    double slope = 1.0;  // Var(r) / E(r)^3 from quadrature moments
    double chi = 1.0;
    double relative_gap = 0.0;  // (slope - chi) / chi
};

/// Large-L number-variance slope of a renewal process with the clearance law.
[[nodiscard]] RenewalSlope renewal_slope_oracle(double beta);

}  // namespace trafficgas::rigidity
