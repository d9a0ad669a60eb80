#include <cmath>
#include <random>

#include "trafficgas/gas.hpp"

namespace trafficgas::gas {

ClearanceSampler::ClearanceSampler(const GasParameters& params) : params_(params) {
    const double beta = params.beta;
    const double B = params.B;
    if (beta == 0.0) {
        // Pure exponential: the tangent envelope is exact.
        cap_end_ = 0.0;
        log_cap_ = 0.0;
        tail_rate_ = B;
        cap_weight_ = 0.0;
        acceptance_ = 1.0;
        return;
    }

    const double mode = std::sqrt(beta / B);
    log_cap_ = log_kernel(mode);

    // Envelope mass in units of exp(log_cap_) for a tangent at p > mode.
    struct Shape {
        double cap_end, rate, mass;
    };
    auto shape_at = [&](double p) {
        const double rate = B - beta / (p * p);
        const double cap_end = p - (log_cap_ - log_kernel(p)) / rate;
        return Shape{cap_end, rate, cap_end + 1.0 / rate};
    };

    // Golden-section search over log(p - mode).
    const double width = mode * std::sqrt(mode / (2.0 * beta));  // ~ 1/sqrt(-(log p)'' at the mode)
    double lo = std::log(1e-3 * width);
    double hi = std::log(50.0 * width + 10.0 / B);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    auto mass_at = [&](double s) { return shape_at(mode + std::exp(s)).mass; };
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = mass_at(x1), f2 = mass_at(x2);
    for (int it = 0; it < 80; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = mass_at(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = mass_at(x2);
        }
    }
    const Shape best = shape_at(mode + std::exp(0.5 * (lo + hi)));
    cap_end_ = best.cap_end;
    tail_rate_ = best.rate;
    cap_weight_ = best.cap_end / best.mass;
    // Target mass is exp(-log_A); envelope mass is exp(log_cap_) * best.mass.
    acceptance_ = std::exp(-params.log_A - log_cap_) / best.mass;
}

SpacingSequence sample_spacings(const GasParameters& params, std::size_t count, std::uint64_t seed) {
    std::mt19937_64 engine(seed);
    ClearanceSampler sampler(params);
    std::vector<double> draws(count);
    for (double& r : draws) r = sampler(engine);
    return SpacingSequence(std::move(draws));
}

}  // namespace trafficgas::gas
