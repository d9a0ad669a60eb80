#include "trafficgas/kernels.hpp"

#include <cstdlib>
#include <string>

namespace trafficgas::kernels {

std::string_view isa_name(Isa isa) noexcept { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_available(Isa isa) noexcept {
    switch (isa) {
        case Isa::scalar:
            return true;
        case Isa::avx2:
#if defined(TRAFFICGAS_HAVE_AVX2)
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
    }
    return false;
}

Isa detect_isa() noexcept { return isa_available(Isa::avx2) ? Isa::avx2 : Isa::scalar; }

Isa active_isa() noexcept {
    static const Isa isa = [] {
        if (const char* forced = std::getenv("TRAFFICGAS_ISA"); forced && std::string(forced) == "scalar")
            return Isa::scalar;
        return detect_isa();
    }();
    return isa;
}

double dot(std::span<const double> a, std::span<const double> b) {
#if defined(TRAFFICGAS_HAVE_AVX2)
    if (active_isa() == Isa::avx2) return avx2::dot(a, b);
#endif
    return scalar::dot(a, b);
}

double sum_squared_deviation(std::span<const double> x, double center) {
#if defined(TRAFFICGAS_HAVE_AVX2)
    if (active_isa() == Isa::avx2) return avx2::sum_squared_deviation(x, center);
#endif
    return scalar::sum_squared_deviation(x, center);
}

void convolve(std::span<const double> f, std::span<const double> g, double step, std::span<double> out) {
#if defined(TRAFFICGAS_HAVE_AVX2)
    if (active_isa() == Isa::avx2) return avx2::convolve(f, g, step, out);
#endif
    scalar::convolve(f, g, step, out);
}

}  // namespace trafficgas::kernels
