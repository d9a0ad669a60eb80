#include "trafficgas/kernels.hpp"

#include <stdexcept>
#include <vector>

namespace trafficgas::kernels::scalar {

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

double sum_squared_deviation(std::span<const double> x, double center) {
    double sum = 0.0;
    for (const double v : x) {
        const double d = v - center;
        sum += d * d;
    }
    return sum;
}

void convolve(std::span<const double> f, std::span<const double> g, double step, std::span<double> out) {
    const std::size_t n = out.size();
    if (f.size() < n || g.size() < n) throw std::invalid_argument("convolve: inputs shorter than output");
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j <= i; ++j) sum += f[j] * g[i - j];
        out[i] = step * sum;
    }
}

}  // namespace trafficgas::kernels::scalar
