#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace trafficgas::gas {

/// Parameters of the clearance law
///   p(r) = A * Theta(r) * exp(-beta / r) * exp(-B r).
/// Immutable once built by make_gas().
struct GasParameters {
    double beta = 0.0;
    double B = 1.0;
    double log_A = 0.0;

    [[nodiscard]] double A() const;
};

/// B(beta) = beta + (3 - exp(-sqrt(beta))) / 2.
[[nodiscard]] double interaction_constant(double beta);

/// Throws std::domain_error for negative or non-finite beta.
[[nodiscard]] GasParameters make_gas(double beta);

/// Clearance density; exactly 0 for r <= 0.
[[nodiscard]] double clearance_pdf(const GasParameters& params, double r);
/// log of clearance_pdf; -inf for r <= 0.
[[nodiscard]] double log_clearance_pdf(const GasParameters& params, double r);

/// E[r^k] from the Bessel closed form A * 2 (beta/B)^{(k+1)/2} K_{k+1}(2 sqrt(B beta)).
[[nodiscard]] double moment(const GasParameters& params, int k);

/// Saddle-point density of the distance spanned by n+2 consecutive vehicles,
///   p_n(r) = N_n r^n exp(-beta (n+1)^2 / r) exp(-B r),
/// with N_n normalising it to unit mass. n = 0 reproduces the clearance law.
class NthSpacingDensity {
public:
    NthSpacingDensity(int n, double beta);

    [[nodiscard]] int n() const noexcept { return n_; }
    [[nodiscard]] double beta() const noexcept { return beta_; }
    [[nodiscard]] double B() const noexcept { return B_; }
    [[nodiscard]] double log_N() const noexcept { return log_N_; }

    [[nodiscard]] double log_density(double r) const;
    [[nodiscard]] double operator()(double r) const;
    /// First moment of this density (Bessel ratio).
    [[nodiscard]] double mean() const;

private:
    int n_;
    double beta_;
    double B_;
    double log_N_;
};

[[nodiscard]] double nth_pdf(int n, double beta, double r);

/// Density tabulated on r_i = i * step, i = 0 .. size-1. values[0] holds
/// the right limit at r = 0. mass() is the trapezoid sum.
struct GridDensity {
    double step = 0.0;
    std::vector<double> values;

    [[nodiscard]] double r(std::size_t i) const { return static_cast<double>(i) * step; }
    [[nodiscard]] double mass() const;
};

class GridTooCoarse : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// n-fold self-convolution of the clearance law by iterated trapezoid-rule
/// convolution. Throws GridTooCoarse when the clearance mass beyond
/// grid_max exceeds 1e-10 or the tabulated mass is off by more than 1e-6.
[[nodiscard]] GridDensity convolution_oracle(int n, double beta, double grid_step, double grid_max);

/// All convolution powers 0..n_max sharing one grid (index k holds p_0^{*(k+1)}).
[[nodiscard]] std::vector<GridDensity> convolution_powers(int n_max, double beta, double grid_step,
                                                          double grid_max);

/// L1 distance between a tabulated density and the saddle-point p_n.
[[nodiscard]] double l1_distance(const GridDensity& grid, const NthSpacingDensity& density);

/// Ordered clearances. Unfolded sequences have sum == size().
class SpacingSequence {
public:
    SpacingSequence() = default;
    explicit SpacingSequence(std::vector<double> spacings);

    [[nodiscard]] std::span<const double> values() const noexcept { return spacings_; }
    [[nodiscard]] std::size_t size() const noexcept { return spacings_.size(); }
    [[nodiscard]] bool empty() const noexcept { return spacings_.empty(); }
    [[nodiscard]] double sum() const;
    [[nodiscard]] double mean() const;
    [[nodiscard]] bool is_unfolded(double tol = 1e-9) const;

    /// Positions 0, r_1, r_1 + r_2, ..., sum (size() + 1 points).
    [[nodiscard]] std::vector<double> positions() const;

private:
    std::vector<double> spacings_;
};

/// Rescale to unit mean. Throws std::invalid_argument on an empty or
/// non-positive sequence.
[[nodiscard]] SpacingSequence unfold(const SpacingSequence& seq);
[[nodiscard]] SpacingSequence unfold(std::vector<double> spacings);

/// Rejection sampler for the clearance law.
///
/// Envelope: a flat cap at the mode value on (0, t] joined to the tangent
/// exponential of log p at a point right of the mode. log p is concave, so
/// the tangent bounds it from above everywhere; the tangent point is chosen
/// to minimise envelope mass.
class ClearanceSampler {
public:
    explicit ClearanceSampler(const GasParameters& params);

    /// Draw one clearance using 53-bit uniforms from a 64-bit engine.
    template <class Engine>
    double operator()(Engine& engine);

    /// Envelope acceptance probability (target mass / envelope mass).
    [[nodiscard]] double acceptance_rate() const noexcept { return acceptance_; }
    [[nodiscard]] std::uint64_t proposals() const noexcept { return proposals_; }
    [[nodiscard]] std::uint64_t accepted() const noexcept { return accepted_; }

private:
    [[nodiscard]] double log_kernel(double r) const;  // unnormalised log density

    GasParameters params_;
    double cap_end_ = 0.0;     // t
    double log_cap_ = 0.0;     // log kernel at the mode
    double tail_rate_ = 1.0;   // |slope| of the tangent
    double cap_weight_ = 0.0;  // probability of proposing from the cap
    double acceptance_ = 1.0;
    std::uint64_t proposals_ = 0;
    std::uint64_t accepted_ = 0;
};

[[nodiscard]] inline double to_unit_interval(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline double ClearanceSampler::log_kernel(double r) const {
    return r > 0.0 ? -params_.beta / r - params_.B * r : -HUGE_VAL;
}

template <class Engine>
double ClearanceSampler::operator()(Engine& engine) {
    for (;;) {
        ++proposals_;
        const double u_piece = to_unit_interval(engine());
        double r;
        double log_envelope;
        if (u_piece < cap_weight_) {
            r = cap_end_ * (1.0 - to_unit_interval(engine()));  // (0, t]
            log_envelope = log_cap_;
        } else {
            r = cap_end_ - std::log1p(-to_unit_interval(engine())) / tail_rate_;
            log_envelope = log_cap_ - tail_rate_ * (r - cap_end_);
        }
        const double u_accept = to_unit_interval(engine());
        if (std::log1p(-u_accept) <= log_kernel(r) - log_envelope) {
            ++accepted_;
            return r;
        }
    }
}

/// `count` i.i.d. clearances (not unfolded); identical for identical seeds.
[[nodiscard]] SpacingSequence sample_spacings(const GasParameters& params, std::size_t count, std::uint64_t seed);

}  // namespace trafficgas::gas
