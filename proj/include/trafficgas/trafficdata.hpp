#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trafficgas/gas.hpp"
#include "trafficgas/rigidity.hpp"

namespace trafficgas::trafficdata {

inline constexpr double kMaxSpeedKmh = 250.0;

/// One detector passage.
struct VehicleRecord {
    double timestamp = 0.0;  // s
    int lane = 0;
    double speed = 0.0;      // km/h
    std::optional<double> length;  // m

    friend bool operator==(const VehicleRecord&, const VehicleRecord&) = default;
};

/// Column layout of a delimiter-separated record file (0-based columns).
struct FormatSpec {
    char delimiter = ',';
    int timestamp_column = 0;
    int lane_column = 1;
    int speed_column = 2;
    int length_column = 3;  // < 0: ignore lengths
    double max_malformed_fraction = 0.01;
};

struct LoadResult {
    std::vector<VehicleRecord> records;  // sorted by (lane, timestamp)
    std::size_t malformed = 0;
    std::vector<std::size_t> malformed_lines;  // 1-based
};

/// Parse a record file. Blank lines and lines starting with '#' are
/// skipped; a first line whose timestamp field is not numeric is a header.
/// Throws std::runtime_error if the file cannot be read or more than
/// max_malformed_fraction of the data lines are rejected.
[[nodiscard]] LoadResult load_records(const std::filesystem::path& path, const FormatSpec& format = {});
[[nodiscard]] LoadResult parse_records(std::istream& in, const FormatSpec& format = {});

/// Write records in the default layout (`timestamp_s,lane_id,speed_kmh[,length_m]`)
/// with shortest round-trip number formatting.
void write_records(std::ostream& out, std::span<const VehicleRecord> records);

void sort_records(std::vector<VehicleRecord>& records);

struct AggregationWindow {
    double start = 0.0;  // s
    double end = 0.0;    // s
    int lane = 0;
    std::size_t count = 0;
    double flow = 0.0;        // veh/h
    double mean_speed = 0.0;  // km/h, harmonic mean
    double density = 0.0;     // veh/km
};

/// Per-lane tumbling windows aligned to multiples of window_seconds.
/// Empty windows are not emitted. Records must be sorted by (lane, timestamp).
[[nodiscard]] std::vector<AggregationWindow> aggregate(std::span<const VehicleRecord> records, double window_seconds);

struct Gap {
    int lane = 0;
    double timestamp = 0.0;  // follower's passage time, s
    double timegap = 0.0;    // s
    double clearance = 0.0;  // m, timegap x follower speed
};

struct GapExtraction {
    std::vector<Gap> gaps;     // lane-major, time-ordered
    std::size_t dropped = 0;   // non-positive time gaps
};

[[nodiscard]] GapExtraction extract_gaps(std::span<const VehicleRecord> records);

enum BinFlag : std::uint32_t {
    kBinOk = 0,
    kBinUnreliable = 1u << 0,  // fewer gaps than the minimum
    kBinClampedLow = 1u << 1,  // chi_hat above 1, beta_hat clamped to 0
    kBinClampedHigh = 1u << 2, // chi_hat below chi(beta_cap), beta_hat clamped to the cap
    kBinFitFailed = 1u << 3,
};

[[nodiscard]] std::string flags_to_string(std::uint32_t flags);

struct DensityBin {
    double rho_lo = 0.0;
    double rho_hi = 0.0;
    int lane = -1;  // -1 when lanes are pooled
    std::vector<double> timegaps;
    std::vector<double> clearances;  // m
    gas::SpacingSequence clearances_unfolded;
    double flow_mean = 0.0;  // veh/h over the windows in this bin
    std::size_t window_count = 0;
    std::size_t record_count = 0;  // gaps in this bin
    double chi_hat = 0.0;
    double gamma_hat = 0.0;
    double beta_hat = 0.0;
    double fit_residual = 0.0;
    rigidity::VarianceCurve curve;
    std::uint32_t flags = kBinOk;

    [[nodiscard]] double rho_center() const { return 0.5 * (rho_lo + rho_hi); }
    [[nodiscard]] bool analyzed() const { return !curve.points.empty(); }
};

struct BinningOptions {
    double bin_width = 1.0;  // veh/km/lane
    double rho_max = 85.0;
    std::size_t min_gaps = 1000;
    bool pool_lanes = true;
};

struct BinningResult {
    std::vector<DensityBin> bins;  // ordered by (lane, rho_lo); all bins, populated or not
    std::size_t unattributed = 0;  // gaps outside every window
    std::size_t out_of_range = 0;  // gaps in windows with density >= rho_max
};

/// Assign each gap to the density bin of the window containing it and
/// unfold each bin's clearances to unit mean.
[[nodiscard]] BinningResult bin_by_density(std::span<const Gap> gaps, std::span<const AggregationWindow> windows,
                                           const BinningOptions& options = {});

/// Number variance of the bin's unfolded clearances, linear tail fit and
/// chi inversion. Throws std::invalid_argument for an unreliable bin.
[[nodiscard]] DensityBin analyze_bin(DensityBin bin, std::span<const double> L_grid, double L_min,
                                     double beta_cap = rigidity::kDefaultBetaCap);

struct FundamentalDiagram {
    struct Point {
        double rho;  // veh/km/lane, bin centre
        double flow; // veh/h
        std::size_t windows;
    };
    struct Slope {
        double rho;
        double flow_derivative;  // km/h
    };
    std::vector<Point> points;
    std::vector<Slope> derivative;
};

/// Mean flow per populated density bin and its derivative (central
/// differences, one-sided at the ends). Throws with fewer than 2 bins.
[[nodiscard]] FundamentalDiagram fundamental_diagram(std::span<const AggregationWindow> windows, double bin_width,
                                                     double rho_max = 85.0);

// ---------------------------------------------------------------------------
// Synthetic streams

struct SynthLevel {
    double rho = 0.0;   // veh/km/lane
    double beta = 0.0;
};

struct SynthOptions {
    double free_speed = 110.0;   // km/h
    double jam_density = 100.0;  // veh/km, speed reaches 0
    double rho_max = 85.0;
};

/// Speed assigned to a density level by the linear speed-density relation.
[[nodiscard]] double synth_speed(double rho, const SynthOptions& options = {});

/// Each lane runs through the levels in order, spending duration/levels
/// seconds on each. Headways are clearance-law draws rescaled so that the
/// mean headway is 3600 / (rho v). Output is sorted by (lane, timestamp)
/// and depends only on the arguments.
[[nodiscard]] std::vector<VehicleRecord> synth_generate(std::span<const SynthLevel> levels, double duration,
                                                        int lanes, std::uint64_t seed,
                                                        const SynthOptions& options = {});

/// Parse "rho:beta[,rho:beta...]". Throws std::invalid_argument.
[[nodiscard]] std::vector<SynthLevel> parse_profile(const std::string& text);

// ---------------------------------------------------------------------------
// End-to-end analysis

struct AnalysisConfig {
    double window_seconds = 60.0;
    int bins = 85;
    double rho_max = 85.0;
    double l_min = 1.0;
    double l_max = 20.0;
    double l_step = 0.5;
    double l_fit_min = 10.0;
    std::size_t min_bin_gaps = 1000;
    bool pool_lanes = true;
    double beta_cap = rigidity::kDefaultBetaCap;

    [[nodiscard]] double bin_width() const { return rho_max / bins; }
    [[nodiscard]] std::vector<double> L_grid() const;
};

struct AnalysisResult {
    std::size_t record_count = 0;
    std::size_t gap_count = 0;
    std::size_t dropped_gaps = 0;
    std::size_t unattributed_gaps = 0;
    std::size_t out_of_range_gaps = 0;
    std::vector<AggregationWindow> windows;
    std::vector<DensityBin> bins;  // populated bins only, ordered by (lane, rho)
    std::optional<FundamentalDiagram> diagram;
    std::vector<std::string> warnings;
};

/// Full pipeline: aggregate, extract gaps, bin, analyse each reliable bin.
/// Bin-level failures are recorded as flags; throws only on invalid
/// configuration or empty input.
[[nodiscard]] AnalysisResult run_analysis(std::span<const VehicleRecord> records, const AnalysisConfig& config);

}  // namespace trafficgas::trafficdata
