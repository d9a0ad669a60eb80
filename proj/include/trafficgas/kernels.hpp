#pragma once

#include <span>
#include <string_view>

// Data-parallel inner loops. Each kernel has a scalar reference and, on
// x86-64 builds, an AVX2/FMA variant; the dispatching entry points pick
// one at first use based on the running CPU.
namespace trafficgas::kernels {

enum class Isa { scalar, avx2 };

[[nodiscard]] std::string_view isa_name(Isa isa) noexcept;

/// Best instruction set compiled in and supported by this CPU.
[[nodiscard]] Isa detect_isa() noexcept;

/// ISA used by the dispatching kernels. Defaults to detect_isa(); the
/// environment variable TRAFFICGAS_ISA=scalar forces the reference path.
[[nodiscard]] Isa active_isa() noexcept;

/// True when `isa` can run on this machine.
[[nodiscard]] bool isa_available(Isa isa) noexcept;

/// sum_i a[i] * b[i]; sizes must match.
[[nodiscard]] double dot(std::span<const double> a, std::span<const double> b);

/// sum_i (x[i] - center)^2
[[nodiscard]] double sum_squared_deviation(std::span<const double> x, double center);

/// Truncated discrete convolution on a uniform grid:
///   out[i] = step * sum_{j=0..i} f[j] * g[i-j],  i < out.size().
/// f and g must be at least out.size() long.
void convolve(std::span<const double> f, std::span<const double> g, double step, std::span<double> out);

namespace scalar {
double dot(std::span<const double> a, std::span<const double> b);
double sum_squared_deviation(std::span<const double> x, double center);
void convolve(std::span<const double> f, std::span<const double> g, double step, std::span<double> out);
}  // namespace scalar

#if defined(TRAFFICGAS_HAVE_AVX2)
namespace avx2 {
double dot(std::span<const double> a, std::span<const double> b);
double sum_squared_deviation(std::span<const double> x, double center);
void convolve(std::span<const double> f, std::span<const double> g, double step, std::span<double> out);
}  // namespace avx2
#endif

}  // namespace trafficgas::kernels
