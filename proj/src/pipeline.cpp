#include <cmath>
#include <sstream>

#include "trafficgas/trafficdata.hpp"

namespace trafficgas::trafficdata {

std::vector<double> AnalysisConfig::L_grid() const {
    if (!(l_min > 0.0) || !(l_max >= l_min) || !(l_step > 0.0))
        throw std::invalid_argument("analysis: need 0 < l_min <= l_max and l_step > 0");
    std::vector<double> grid;
    const auto steps = static_cast<long>(std::floor((l_max - l_min) / l_step + 1e-9));
    for (long i = 0; i <= steps; ++i) grid.push_back(l_min + static_cast<double>(i) * l_step);
    return grid;
}

AnalysisResult run_analysis(std::span<const VehicleRecord> records, const AnalysisConfig& config) {
    if (records.empty()) throw std::runtime_error("analysis: input contains no vehicle records");
    if (config.bins < 1 || !(config.rho_max > 0.0)) throw std::invalid_argument("analysis: invalid binning");
    const std::vector<double> L_grid = config.L_grid();

    AnalysisResult result;
    result.record_count = records.size();
    result.windows = aggregate(records, config.window_seconds);
    const GapExtraction gaps = extract_gaps(records);
    result.gap_count = gaps.gaps.size();
    result.dropped_gaps = gaps.dropped;

    BinningOptions options;
    options.bin_width = config.bin_width();
    options.rho_max = config.rho_max;
    options.min_gaps = config.min_bin_gaps;
    options.pool_lanes = config.pool_lanes;
    BinningResult binned = bin_by_density(gaps.gaps, result.windows, options);
    result.unattributed_gaps = binned.unattributed;
    result.out_of_range_gaps = binned.out_of_range;

    // Bins are independent; results keep the binning order.
    for (auto& bin : binned.bins) {
        if (bin.record_count == 0) continue;
        if (!(bin.flags & kBinUnreliable)) {
            try {
                bin = analyze_bin(bin, L_grid, config.l_fit_min, config.beta_cap);
            } catch (const std::exception& e) {
                bin.flags |= kBinFitFailed;
                std::ostringstream msg;
                msg << "bin rho=" << bin.rho_center() << ": " << e.what();
                result.warnings.push_back(msg.str());
            }
        }
        result.bins.push_back(std::move(bin));
    }

    try {
        result.diagram = fundamental_diagram(result.windows, config.bin_width(), config.rho_max);
    } catch (const std::invalid_argument& e) {
        result.warnings.emplace_back(e.what());
    }
    return result;
}

}  // namespace trafficgas::trafficdata
