#include "trafficgas/specfun.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <sstream>
#include <vector>

namespace trafficgas::specfun {

namespace {

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a, b;
    double value, error;
    int depth;
    bool operator<(const Segment& o) const { return error < o.error; }
};

Segment gauss_kronrod(const std::function<double(double)>& f, double a, double b, int depth, int& evals) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = fc * kWgk[7];
    double gauss = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kXgk[static_cast<std::size_t>(j)];
        const double f1 = f(center - dx);
        const double f2 = f(center + dx);
        kronrod += kWgk[static_cast<std::size_t>(j)] * (f1 + f2);
        if (j % 2 == 1) gauss += kWg[static_cast<std::size_t>(j / 2)] * (f1 + f2);
    }
    evals += 15;
    const double value = kronrod * half;
    if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << "integrate: non-finite integrand on [" << a << ", " << b << "]";
        throw QuadratureError(msg.str());
    }
    return {a, b, value, std::abs((kronrod - gauss) * half), depth};
}

QuadratureResult adaptive(const std::function<double(double)>& f, double a, double b, int initial_pieces,
                          const QuadratureOptions& opts) {
    std::priority_queue<Segment> heap;
    int evals = 0;
    double total = 0.0, total_err = 0.0;
    const double width = (b - a) / initial_pieces;
    for (int i = 0; i < initial_pieces; ++i) {
        const double lo = a + i * width;
        const double hi = i + 1 == initial_pieces ? b : lo + width;
        Segment s = gauss_kronrod(f, lo, hi, 0, evals);
        total += s.value;
        total_err += s.error;
        heap.push(s);
    }

    constexpr std::size_t kMaxSegments = 1u << 16;
    while (total_err > std::max(opts.abs_tol, opts.rel_tol * std::abs(total))) {
        Segment worst = heap.top();
        if (worst.depth >= opts.max_depth || heap.size() >= kMaxSegments) {
            std::ostringstream msg;
            msg << "integrate: tolerance not reached (estimate " << total << ", error " << total_err
                << ") after refining to depth " << worst.depth;
            throw QuadratureError(msg.str());
        }
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        Segment left = gauss_kronrod(f, worst.a, mid, worst.depth + 1, evals);
        Segment right = gauss_kronrod(f, mid, worst.b, worst.depth + 1, evals);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    // Re-sum to shed the drift of the running updates.
    double sum = 0.0, err = 0.0;
    while (!heap.empty()) {
        sum += heap.top().value;
        err += heap.top().error;
        heap.pop();
    }
    return {sum, err, evals};
}

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureOptions& opts) {
    if (!(b > a)) {
        if (a == b) return {};
        throw std::domain_error("integrate: upper limit below lower limit");
    }
    return adaptive(f, a, b, 2, opts);
}

QuadratureResult integrate_semiinfinite(const std::function<double(double)>& f, const QuadratureOptions& opts,
                                        double scale) {
    if (!(scale > 0.0)) throw std::domain_error("integrate_semiinfinite: scale must be positive");
    auto mapped = [&](double u) {
        const double w = 1.0 - u;
        const double r = scale * u / w;
        if (!std::isfinite(r)) return 0.0;
        const double fr = f(r);
        if (fr == 0.0) return 0.0;
        return fr * scale / (w * w);
    };
    return adaptive(mapped, 0.0, 1.0, 8, opts);
}

}  // namespace trafficgas::specfun
