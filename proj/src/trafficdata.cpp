#include "trafficgas/trafficdata.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string_view>

namespace trafficgas::trafficdata {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, char delimiter) {
    std::vector<std::string_view> fields;
    std::size_t begin = 0;
    for (;;) {
        const auto pos = line.find(delimiter, begin);
        fields.push_back(trim(line.substr(begin, pos == std::string_view::npos ? pos : pos - begin)));
        if (pos == std::string_view::npos) break;
        begin = pos + 1;
    }
    return fields;
}

template <class T>
std::optional<T> parse_number(std::string_view s) {
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    T value{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

std::optional<VehicleRecord> parse_line(const std::vector<std::string_view>& fields, const FormatSpec& format) {
    auto field = [&](int column) -> std::optional<std::string_view> {
        if (column < 0 || static_cast<std::size_t>(column) >= fields.size()) return std::nullopt;
        return fields[static_cast<std::size_t>(column)];
    };
    const auto ts = field(format.timestamp_column);
    const auto lane = field(format.lane_column);
    const auto speed = field(format.speed_column);
    if (!ts || !lane || !speed) return std::nullopt;

    VehicleRecord rec;
    const auto t = parse_number<double>(*ts);
    const auto l = parse_number<int>(*lane);
    const auto v = parse_number<double>(*speed);
    if (!t || !l || !v) return std::nullopt;
    if (!std::isfinite(*t) || !(*v > 0.0) || !(*v <= kMaxSpeedKmh)) return std::nullopt;
    rec.timestamp = *t;
    rec.lane = *l;
    rec.speed = *v;
    if (const auto len = field(format.length_column); len && !len->empty()) {
        const auto x = parse_number<double>(*len);
        if (!x || !std::isfinite(*x) || *x < 0.0) return std::nullopt;
        rec.length = *x;
    }
    return rec;
}

void append_number(std::string& out, double value) {
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    out.append(buf.data(), ptr);
}

}  // namespace

void sort_records(std::vector<VehicleRecord>& records) {
    std::stable_sort(records.begin(), records.end(), [](const VehicleRecord& a, const VehicleRecord& b) {
        return a.lane != b.lane ? a.lane < b.lane : a.timestamp < b.timestamp;
    });
}

LoadResult parse_records(std::istream& in, const FormatSpec& format) {
    LoadResult result;
    std::string line;
    std::size_t line_no = 0;
    std::size_t data_lines = 0;
    bool first_data_line = true;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = trim(line);
        if (view.empty() || view.front() == '#') continue;
        const auto fields = split(view, format.delimiter);
        if (first_data_line) {
            first_data_line = false;
            const auto col = static_cast<std::size_t>(std::max(format.timestamp_column, 0));
            if (col < fields.size() && !parse_number<double>(fields[col])) continue;  // header
        }
        ++data_lines;
        if (auto rec = parse_line(fields, format)) {
            result.records.push_back(*rec);
        } else {
            ++result.malformed;
            result.malformed_lines.push_back(line_no);
        }
    }
    if (data_lines > 0 &&
        static_cast<double>(result.malformed) > format.max_malformed_fraction * static_cast<double>(data_lines)) {
        std::ostringstream msg;
        msg << result.malformed << " of " << data_lines << " data lines are malformed (limit "
            << 100.0 * format.max_malformed_fraction << "%); lines:";
        const std::size_t shown = std::min<std::size_t>(result.malformed_lines.size(), 20);
        for (std::size_t i = 0; i < shown; ++i) msg << ' ' << result.malformed_lines[i];
        if (shown < result.malformed_lines.size()) msg << " ...";
        throw std::runtime_error(msg.str());
    }
    sort_records(result.records);
    return result;
}

LoadResult load_records(const std::filesystem::path& path, const FormatSpec& format) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read record file " + path.string());
    return parse_records(in, format);
}

void write_records(std::ostream& out, std::span<const VehicleRecord> records) {
    const bool lengths = std::any_of(records.begin(), records.end(), [](const auto& r) { return r.length.has_value(); });
    out << "timestamp_s,lane_id,speed_kmh" << (lengths ? ",length_m" : "") << '\n';
    std::string line;
    for (const auto& r : records) {
        line.clear();
        append_number(line, r.timestamp);
        line += ',';
        line += std::to_string(r.lane);
        line += ',';
        append_number(line, r.speed);
        if (lengths) {
            line += ',';
            if (r.length) append_number(line, *r.length);
        }
        line += '\n';
        out << line;
    }
}

std::vector<AggregationWindow> aggregate(std::span<const VehicleRecord> records, double window_seconds) {
    if (!(window_seconds > 0.0)) throw std::invalid_argument("aggregate: window_seconds must be positive");
    const bool sorted = std::is_sorted(records.begin(), records.end(), [](const auto& a, const auto& b) {
        return a.lane != b.lane ? a.lane < b.lane : a.timestamp < b.timestamp;
    });
    if (!sorted) throw std::invalid_argument("aggregate: records are not sorted by (lane, timestamp)");
    std::vector<AggregationWindow> windows;
    std::size_t i = 0;
    while (i < records.size()) {
        const int lane = records[i].lane;
        const double index = std::floor(records[i].timestamp / window_seconds);
        std::size_t count = 0;
        double inverse_speed_sum = 0.0;
        std::size_t j = i;
        for (; j < records.size() && records[j].lane == lane &&
               std::floor(records[j].timestamp / window_seconds) == index;
             ++j) {
            ++count;
            inverse_speed_sum += 1.0 / records[j].speed;
        }
        AggregationWindow w;
        w.start = index * window_seconds;
        w.end = w.start + window_seconds;
        w.lane = lane;
        w.count = count;
        w.flow = static_cast<double>(count) * 3600.0 / window_seconds;
        w.mean_speed = static_cast<double>(count) / inverse_speed_sum;
        w.density = w.flow / w.mean_speed;
        windows.push_back(w);
        i = j;
    }
    return windows;
}

GapExtraction extract_gaps(std::span<const VehicleRecord> records) {
    GapExtraction out;
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& lead = records[i - 1];
        const auto& follower = records[i];
        if (follower.lane != lead.lane) {
            if (follower.lane < lead.lane) throw std::invalid_argument("extract_gaps: records not sorted by lane");
            continue;
        }
        const double dt = follower.timestamp - lead.timestamp;
        if (dt < 0.0) throw std::invalid_argument("extract_gaps: records not sorted by timestamp");
        if (dt == 0.0) {
            ++out.dropped;
            continue;
        }
        out.gaps.push_back({follower.lane, follower.timestamp, dt, dt * follower.speed / 3.6});
    }
    return out;
}

std::string flags_to_string(std::uint32_t flags) {
    if (flags == kBinOk) return "ok";
    std::string s;
    auto add = [&](std::uint32_t bit, const char* name) {
        if (!(flags & bit)) return;
        if (!s.empty()) s += '|';
        s += name;
    };
    add(kBinUnreliable, "unreliable");
    add(kBinClampedLow, "clamped_low");
    add(kBinClampedHigh, "clamped_high");
    add(kBinFitFailed, "fit_failed");
    return s;
}

BinningResult bin_by_density(std::span<const Gap> gaps, std::span<const AggregationWindow> windows,
                             const BinningOptions& options) {
    if (!(options.bin_width > 0.0) || !(options.rho_max > options.bin_width))
        throw std::invalid_argument("bin_by_density: need 0 < bin_width < rho_max");
    const auto bin_count = static_cast<std::size_t>(std::llround(options.rho_max / options.bin_width));

    std::map<int, std::vector<const AggregationWindow*>> by_lane;
    for (const auto& w : windows) by_lane[w.lane].push_back(&w);
    for (auto& [lane, list] : by_lane)
        std::sort(list.begin(), list.end(), [](auto* a, auto* b) { return a->start < b->start; });

    auto bin_index = [&](double rho) -> std::optional<std::size_t> {
        if (!(rho >= 0.0) || rho >= options.rho_max) return std::nullopt;
        return std::min(static_cast<std::size_t>(rho / options.bin_width), bin_count - 1);
    };

    // Bins keyed by (lane or -1, density index).
    std::map<std::pair<int, std::size_t>, DensityBin> bins;
    auto bin_for = [&](int lane, std::size_t index) -> DensityBin& {
        const int key_lane = options.pool_lanes ? -1 : lane;
        auto [it, inserted] = bins.try_emplace({key_lane, index});
        if (inserted) {
            it->second.lane = key_lane;
            it->second.rho_lo = static_cast<double>(index) * options.bin_width;
            it->second.rho_hi = static_cast<double>(index + 1) * options.bin_width;
        }
        return it->second;
    };
    // Every bin is materialised for pooled output so the table is complete.
    if (options.pool_lanes)
        for (std::size_t k = 0; k < bin_count; ++k) bin_for(-1, k);

    for (const auto& w : windows) {
        if (const auto k = bin_index(w.density)) {
            DensityBin& bin = bin_for(w.lane, *k);
            bin.flow_mean += w.flow;
            ++bin.window_count;
        }
    }

    BinningResult result;
    for (const auto& gap : gaps) {
        const auto lane_it = by_lane.find(gap.lane);
        const AggregationWindow* window = nullptr;
        if (lane_it != by_lane.end()) {
            const auto& list = lane_it->second;
            auto it = std::upper_bound(list.begin(), list.end(), gap.timestamp,
                                       [](double t, const AggregationWindow* w) { return t < w->start; });
            if (it != list.begin() && gap.timestamp < (*std::prev(it))->end) window = *std::prev(it);
        }
        if (!window) {
            ++result.unattributed;
            continue;
        }
        const auto k = bin_index(window->density);
        if (!k) {
            ++result.out_of_range;
            continue;
        }
        DensityBin& bin = bin_for(gap.lane, *k);
        bin.timegaps.push_back(gap.timegap);
        bin.clearances.push_back(gap.clearance);
    }

    for (auto& [key, bin] : bins) {
        if (bin.window_count > 0) bin.flow_mean /= static_cast<double>(bin.window_count);
        bin.record_count = bin.clearances.size();
        if (!bin.clearances.empty()) bin.clearances_unfolded = gas::unfold(bin.clearances);
        if (bin.record_count < options.min_gaps) bin.flags |= kBinUnreliable;
        result.bins.push_back(std::move(bin));
    }
    return result;
}

DensityBin analyze_bin(DensityBin bin, std::span<const double> L_grid, double L_min, double beta_cap) {
    if (bin.flags & kBinUnreliable) {
        std::ostringstream msg;
        msg << "analyze_bin: bin [" << bin.rho_lo << ", " << bin.rho_hi << ") has only " << bin.record_count
            << " gaps and is flagged unreliable";
        throw std::invalid_argument(msg.str());
    }
    bin.curve = rigidity::empirical_number_variance(bin.clearances_unfolded, L_grid);
    const rigidity::LinearFit fit = rigidity::fit_linear_tail(bin.curve, L_min);
    bin.chi_hat = fit.slope;
    bin.gamma_hat = fit.intercept;
    bin.fit_residual = fit.residual;
    if (fit.slope > 1.0) {
        bin.beta_hat = 0.0;
        bin.flags |= kBinClampedLow;
    } else if (fit.slope <= rigidity::chi_coefficient(beta_cap)) {
        bin.beta_hat = beta_cap;
        bin.flags |= kBinClampedHigh;
    } else {
        bin.beta_hat = rigidity::invert_chi(fit.slope, beta_cap);
    }
    return bin;
}

FundamentalDiagram fundamental_diagram(std::span<const AggregationWindow> windows, double bin_width, double rho_max) {
    if (!(bin_width > 0.0)) throw std::invalid_argument("fundamental_diagram: bin_width must be positive");
    std::map<std::size_t, std::pair<double, std::size_t>> sums;
    for (const auto& w : windows) {
        if (!(w.density >= 0.0) || w.density >= rho_max) continue;
        auto& [flow, n] = sums[static_cast<std::size_t>(w.density / bin_width)];
        flow += w.flow;
        ++n;
    }
    if (sums.size() < 2)
        throw std::invalid_argument("fundamental_diagram: need at least 2 populated density bins, got " +
                                    std::to_string(sums.size()));

    FundamentalDiagram fd;
    for (const auto& [index, acc] : sums)
        fd.points.push_back({(static_cast<double>(index) + 0.5) * bin_width, acc.first / static_cast<double>(acc.second),
                             acc.second});
    const std::size_t n = fd.points.size();
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i == 0 ? 0 : i - 1;
        const std::size_t hi = i + 1 == n ? n - 1 : i + 1;
        const double slope =
            (fd.points[hi].flow - fd.points[lo].flow) / (fd.points[hi].rho - fd.points[lo].rho);
        fd.derivative.push_back({fd.points[i].rho, slope});
    }
    return fd;
}

}  // namespace trafficgas::trafficdata
