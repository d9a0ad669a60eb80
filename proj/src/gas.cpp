#include "trafficgas/gas.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "trafficgas/kernels.hpp"
#include "trafficgas/specfun.hpp"

namespace trafficgas::gas {

namespace {

void require_beta(double beta) {
    if (!(beta >= 0.0) || !std::isfinite(beta))
        throw std::domain_error("inverse temperature must be finite and non-negative, got " + std::to_string(beta));
}

}  // namespace

double interaction_constant(double beta) {
    require_beta(beta);
    return beta + 0.5 * (3.0 - std::exp(-std::sqrt(beta)));
}

double GasParameters::A() const { return std::exp(log_A); }

GasParameters make_gas(double beta) {
    const double B = interaction_constant(beta);
    if (beta == 0.0) return {0.0, B, std::log(B)};
    const double z = 2.0 * std::sqrt(B * beta);
    const double log_norm = std::log(2.0) + 0.5 * std::log(beta / B) + specfun::bessel_k(1, z).log_value();
    return {beta, B, -log_norm};
}

double log_clearance_pdf(const GasParameters& params, double r) {
    if (!(r > 0.0)) return -std::numeric_limits<double>::infinity();
    return params.log_A - params.beta / r - params.B * r;
}

double clearance_pdf(const GasParameters& params, double r) {
    if (!(r > 0.0)) return 0.0;
    return std::exp(log_clearance_pdf(params, r));
}

double moment(const GasParameters& params, int k) {
    if (k < 1) throw std::domain_error("moment: order must be >= 1");
    if (params.beta == 0.0) return std::exp(specfun::log_gamma_int(k + 1) - k * std::log(params.B));
    const double z = 2.0 * std::sqrt(params.B * params.beta);
    return std::exp(0.5 * k * std::log(params.beta / params.B) + specfun::bessel_k(k + 1, z).log_scaled_value -
                    specfun::bessel_k(1, z).log_scaled_value);
}

NthSpacingDensity::NthSpacingDensity(int n, double beta) : n_(n), beta_(beta), B_(interaction_constant(beta)) {
    if (n < 0) throw std::domain_error("NthSpacingDensity: n must be non-negative");
    const double m = n + 1.0;
    if (beta == 0.0) {
        log_N_ = m * std::log(B_) - specfun::log_gamma_int(n + 1);
    } else {
        const double z = 2.0 * m * std::sqrt(B_ * beta);
        log_N_ = -(std::log(2.0) + m * std::log(m * std::sqrt(beta / B_)) + specfun::bessel_k(n + 1, z).log_value());
    }
}

double NthSpacingDensity::log_density(double r) const {
    if (!(r > 0.0)) return -std::numeric_limits<double>::infinity();
    const double m = n_ + 1.0;
    return log_N_ + n_ * std::log(r) - beta_ * m * m / r - B_ * r;
}

double NthSpacingDensity::operator()(double r) const {
    if (!(r > 0.0)) return 0.0;
    return std::exp(log_density(r));
}

double NthSpacingDensity::mean() const {
    const double m = n_ + 1.0;
    if (beta_ == 0.0) return m / B_;
    const double z = 2.0 * m * std::sqrt(B_ * beta_);
    return m * std::sqrt(beta_ / B_) *
           std::exp(specfun::bessel_k(n_ + 2, z).log_scaled_value - specfun::bessel_k(n_ + 1, z).log_scaled_value);
}

double nth_pdf(int n, double beta, double r) { return NthSpacingDensity(n, beta)(r); }

double GridDensity::mass() const {
    if (values.empty()) return 0.0;
    return step * (std::accumulate(values.begin(), values.end(), 0.0) - 0.5 * (values.front() + values.back()));
}

std::vector<GridDensity> convolution_powers(int n_max, double beta, double grid_step, double grid_max) {
    if (n_max < 0) throw std::domain_error("convolution_powers: n must be non-negative");
    if (!(grid_step > 0.0) || !(grid_max > grid_step))
        throw std::domain_error("convolution_powers: need 0 < grid_step < grid_max");
    const GasParameters params = make_gas(beta);

    const double tail = specfun::integrate_semiinfinite(
                            [&](double s) { return clearance_pdf(params, grid_max + s); },
                            specfun::QuadratureOptions{1e-16, 1e-8, 30}, 1.0 / params.B)
                            .value;
    if (tail > 1e-10) {
        std::ostringstream msg;
        msg << "convolution_oracle: clearance mass beyond grid_max=" << grid_max << " is " << tail
            << " (> 1e-10); enlarge the grid";
        throw GridTooCoarse(msg.str());
    }

    const auto size = static_cast<std::size_t>(std::ceil(grid_max / grid_step)) + 1;
    GridDensity base{grid_step, std::vector<double>(size)};
    for (std::size_t i = 0; i < size; ++i) base.values[i] = clearance_pdf(params, base.r(i));
    base.values[0] = params.beta == 0.0 ? params.A() : 0.0;
    if (const double mass = base.mass(); std::abs(mass - 1.0) > 1e-6) {
        std::ostringstream msg;
        msg << "convolution_oracle: tabulated clearance mass " << mass << " deviates from 1 by more than 1e-6; "
            << "grid_step=" << grid_step << " is too coarse";
        throw GridTooCoarse(msg.str());
    }

    std::vector<GridDensity> powers;
    powers.reserve(static_cast<std::size_t>(n_max) + 1);
    powers.push_back(base);
    for (int k = 1; k <= n_max; ++k) {
        GridDensity next{grid_step, std::vector<double>(size)};
        const auto& prev = powers.back().values;
        kernels::convolve(prev, base.values, grid_step, next.values);
        for (std::size_t i = 0; i < size; ++i)
            next.values[i] -= 0.5 * grid_step * (prev[0] * base.values[i] + prev[i] * base.values[0]);
        powers.push_back(std::move(next));
    }
    return powers;
}

GridDensity convolution_oracle(int n, double beta, double grid_step, double grid_max) {
    return std::move(convolution_powers(n, beta, grid_step, grid_max).back());
}

double l1_distance(const GridDensity& grid, const NthSpacingDensity& density) {
    double sum = 0.0;
    for (std::size_t i = 0; i < grid.values.size(); ++i) sum += std::abs(grid.values[i] - density(grid.r(i)));
    return grid.step * sum;
}

SpacingSequence::SpacingSequence(std::vector<double> spacings) : spacings_(std::move(spacings)) {
    for (const double r : spacings_)
        if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("SpacingSequence: spacings must be positive");
}

double SpacingSequence::sum() const {
    // Neumaier summation.
    double s = 0.0, c = 0.0;
    for (const double v : spacings_) {
        const double t = s + v;
        c += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
        s = t;
    }
    return s + c;
}

double SpacingSequence::mean() const { return empty() ? 0.0 : sum() / static_cast<double>(size()); }

bool SpacingSequence::is_unfolded(double tol) const { return !empty() && std::abs(mean() - 1.0) <= tol; }

std::vector<double> SpacingSequence::positions() const {
    std::vector<double> x(spacings_.size() + 1);
    x[0] = 0.0;
    std::partial_sum(spacings_.begin(), spacings_.end(), x.begin() + 1);
    return x;
}

SpacingSequence unfold(std::vector<double> spacings) {
    if (spacings.empty()) throw std::invalid_argument("unfold: empty sequence");
    SpacingSequence raw(std::move(spacings));
    const double inv_mean = 1.0 / raw.mean();
    std::vector<double> scaled(raw.values().begin(), raw.values().end());
    for (double& r : scaled) r *= inv_mean;
    return SpacingSequence(std::move(scaled));
}

SpacingSequence unfold(const SpacingSequence& seq) {
    return unfold(std::vector<double>(seq.values().begin(), seq.values().end()));
}

}  // namespace trafficgas::gas
