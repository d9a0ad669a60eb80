#include "trafficgas/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace trafficgas::kernels::avx2 {

namespace {

inline double horizontal_sum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d pair = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

// Two independent accumulators hide the FMA latency.
double dot_raw(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    double sum = horizontal_sum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
    return dot_raw(a.data(), b.data(), a.size());
}

double sum_squared_deviation(std::span<const double> x, double center) {
    const __m256d c = _mm256_set1_pd(center);
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    const double* p = x.data();
    const std::size_t n = x.size();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(p + i), c);
        const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(p + i + 4), c);
        acc0 = _mm256_fmadd_pd(d0, d0, acc0);
        acc1 = _mm256_fmadd_pd(d1, d1, acc1);
    }
    double sum = horizontal_sum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        const double d = p[i] - center;
        sum += d * d;
    }
    return sum;
}

void convolve(std::span<const double> f, std::span<const double> g, double step, std::span<double> out) {
    const std::size_t n = out.size();
    if (f.size() < n || g.size() < n) throw std::invalid_argument("convolve: inputs shorter than output");
    // out[i] = sum_j f[j] g[i-j] is a contiguous dot product against g reversed.
    std::vector<double> reversed(n);
    std::reverse_copy(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(n), reversed.begin());
    for (std::size_t i = 0; i < n; ++i) out[i] = step * dot_raw(f.data(), reversed.data() + (n - 1 - i), i + 1);
}

}  // namespace trafficgas::kernels::avx2
