#include <cmath>
#include <sstream>

#include "trafficgas/kernels.hpp"
#include "trafficgas/rigidity.hpp"

namespace trafficgas::rigidity {

namespace {

template <class T>
void require_increasing(std::span<const T> grid, const char* what) {
    if (grid.empty()) throw std::invalid_argument(std::string(what) + ": empty grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > T{0})) throw std::invalid_argument(std::string(what) + ": grid values must be positive");
        if (i > 0 && !(grid[i] > grid[i - 1]))
            throw std::invalid_argument(std::string(what) + ": grid must be strictly increasing");
    }
}

struct Ols {
    double slope, intercept, rms;
};

Ols least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("least squares: abscissae are all equal");
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (slope * x[i] + intercept);
        ss += e * e;
    }
    return {slope, intercept, std::sqrt(ss / n)};
}

}  // namespace

VarianceCurve empirical_number_variance(const gas::SpacingSequence& seq, std::span<const double> L_grid) {
    if (!seq.is_unfolded()) {
        std::ostringstream msg;
        msg << "empirical_number_variance: sequence is not unfolded (mean spacing " << seq.mean() << ")";
        throw std::invalid_argument(msg.str());
    }
    require_increasing(L_grid, "empirical_number_variance");

    const std::vector<double> positions = seq.positions();
    const auto Q = static_cast<double>(seq.size());
    VarianceCurve curve{VarianceKind::number_variance, {}, seq.size()};
    curve.points.reserve(L_grid.size());
    std::vector<double> counts;
    for (const double L : L_grid) {
        const auto windows = static_cast<std::size_t>(std::floor(Q / L));
        VariancePoint point{L, 0.0, windows, windows < 10};
        if (windows > 0) {
            counts.assign(windows, 0.0);
            for (const double x : positions) {
                const auto k = static_cast<std::size_t>(std::floor(x / L));
                if (k < windows) counts[k] += 1.0;
            }
            point.variance = kernels::sum_squared_deviation(counts, L) / static_cast<double>(windows);
        }
        curve.points.push_back(point);
    }
    return curve;
}

VarianceCurve timegap_variance(std::span<const double> gaps, std::span<const std::size_t> N_grid) {
    require_increasing(N_grid, "timegap_variance");
    const std::size_t Q = gaps.size();
    if (Q < 10 * N_grid.back()) {
        std::ostringstream msg;
        msg << "timegap_variance: " << Q << " gaps cannot support N=" << N_grid.back()
            << " (need at least 10 gaps per sample size)";
        throw std::invalid_argument(msg.str());
    }

    std::vector<long double> prefix(Q + 1, 0.0L);
    for (std::size_t i = 0; i < Q; ++i) prefix[i + 1] = prefix[i] + gaps[i];
    const auto mean = static_cast<double>(prefix[Q] / static_cast<long double>(Q));

    VarianceCurve curve{VarianceKind::timegap_variance, {}, Q};
    std::vector<double> averages;
    for (const std::size_t N : N_grid) {
        const std::size_t windows = Q - N + 1;
        averages.resize(windows);
        for (std::size_t k = 0; k < windows; ++k)
            averages[k] = static_cast<double>((prefix[k + N] - prefix[k]) / static_cast<long double>(N));
        const double var = kernels::sum_squared_deviation(averages, mean) / static_cast<double>(windows);
        curve.points.push_back({static_cast<double>(N), var, windows, false});
    }
    return curve;
}

LinearFit fit_linear_tail(const VarianceCurve& curve, double L_min) {
    std::vector<double> x, y;
    for (const auto& p : curve.points) {
        if (p.flagged || p.scale < L_min) continue;
        x.push_back(p.scale);
        y.push_back(p.variance);
    }
    if (x.size() < 4) {
        std::ostringstream msg;
        msg << "fit_linear_tail: " << x.size() << " usable points with L >= " << L_min << " (need 4)";
        throw std::invalid_argument(msg.str());
    }
    const Ols fit = least_squares(x, y);
    return {fit.slope, fit.intercept, fit.rms, x.size()};
}

PowerLawFit fit_power_law(const VarianceCurve& curve) {
    std::vector<double> x, y;
    for (const auto& p : curve.points) {
        if (p.flagged) continue;
        if (!(p.variance > 0.0) || !(p.scale > 0.0)) {
            std::ostringstream msg;
            msg << "fit_power_law: non-positive variance at scale " << p.scale
                << "; trim zero-variance points before a log-log fit";
            throw std::invalid_argument(msg.str());
        }
        x.push_back(std::log(p.scale));
        y.push_back(std::log(p.variance));
    }
    if (x.size() < 2) throw std::invalid_argument("fit_power_law: need at least 2 points");
    const Ols fit = least_squares(x, y);
    return {fit.slope, std::exp(fit.intercept)};
}

}  // namespace trafficgas::rigidity
