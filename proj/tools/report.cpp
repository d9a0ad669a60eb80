#include "report.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <ostream>

namespace trafficgas::cli {

using nlohmann::json;
using trafficdata::AnalysisResult;
using trafficdata::DensityBin;

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return {buf.data(), ptr};
}

std::string config_hash(const json& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : config.dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::array<char, 17> buf{};
    for (int i = 15; i >= 0; --i) {
        buf[static_cast<std::size_t>(i)] = "0123456789abcdef"[h & 0xf];
        h >>= 4;
    }
    return {buf.data(), 16};
}

void write_table_header(std::ostream& out, const std::string& command, const std::string& hash,
                        const std::vector<Column>& columns, const std::string& extra) {
    out << "# trafficgas " << TRAFFICGAS_VERSION << " " << command << "\n";
    out << "# config_hash: " << hash << "\n";
    if (!extra.empty()) out << "# " << extra << "\n";
    out << "# columns:";
    for (std::size_t i = 0; i < columns.size(); ++i)
        out << (i ? ", " : " ") << columns[i].name << " [" << columns[i].unit << "]";
    out << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i].name;
    out << "\n";
}

void write_row(std::ostream& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << "\n";
}

const char* regime_label(double rho) {
    if (rho < 15.0) return "free";
    if (rho > 35.0) return "congested";
    return "transitional";
}

namespace {

double or_nan(const DensityBin& bin, double value) {
    return bin.analyzed() && !(bin.flags & trafficdata::kBinFitFailed) ? value : std::nan("");
}

json number_or_null(double value) { return std::isfinite(value) ? json(value) : json(nullptr); }

}  // namespace

void write_bin_table(std::ostream& out, const AnalysisResult& result, const std::string& hash) {
    write_table_header(out, "analyze", hash,
                       {{"rho_center", "veh/km/lane"},
                        {"record_count", "gaps"},
                        {"chi_hat", "1"},
                        {"gamma_hat", "1"},
                        {"beta_hat", "1"},
                        {"J_mean", "veh/h"},
                        {"flags", "text"}});
    for (const auto& bin : result.bins) {
        write_row(out, {format_number(bin.rho_center()), std::to_string(bin.record_count),
                        format_number(or_nan(bin, bin.chi_hat)), format_number(or_nan(bin, bin.gamma_hat)),
                        format_number(or_nan(bin, bin.beta_hat)), format_number(bin.flow_mean),
                        trafficdata::flags_to_string(bin.flags)});
    }
}

json analysis_to_json(const AnalysisResult& result) {
    json bins = json::array();
    for (const auto& bin : result.bins) {
        bins.push_back({{"rho_lo", bin.rho_lo},
                        {"rho_hi", bin.rho_hi},
                        {"lane", bin.lane},
                        {"regime", regime_label(bin.rho_center())},
                        {"record_count", bin.record_count},
                        {"window_count", bin.window_count},
                        {"chi_hat", number_or_null(or_nan(bin, bin.chi_hat))},
                        {"gamma_hat", number_or_null(or_nan(bin, bin.gamma_hat))},
                        {"beta_hat", number_or_null(or_nan(bin, bin.beta_hat))},
                        {"fit_residual", number_or_null(or_nan(bin, bin.fit_residual))},
                        {"J_mean", bin.flow_mean},
                        {"flags", trafficdata::flags_to_string(bin.flags)}});
    }
    json doc = {{"input",
                 {{"records", result.record_count},
                  {"gaps", result.gap_count},
                  {"dropped_gaps", result.dropped_gaps},
                  {"unattributed_gaps", result.unattributed_gaps},
                  {"out_of_range_gaps", result.out_of_range_gaps},
                  {"windows", result.windows.size()}}},
                {"bins", bins},
                {"warnings", result.warnings}};
    if (result.diagram) {
        json points = json::array();
        for (std::size_t i = 0; i < result.diagram->points.size(); ++i) {
            const auto& p = result.diagram->points[i];
            points.push_back({{"rho", p.rho},
                              {"J", p.flow},
                              {"windows", p.windows},
                              {"J_prime", result.diagram->derivative[i].flow_derivative}});
        }
        doc["fundamental_diagram"] = points;
    } else {
        doc["fundamental_diagram"] = nullptr;
    }
    return doc;
}

void write_plot_bundle(const std::filesystem::path& table_path, const AnalysisResult& result, const std::string& hash) {
    auto sibling = [&](const char* suffix) {
        std::filesystem::path p = table_path;
        p.replace_extension(suffix);
        return p;
    };
    const auto curves_path = sibling(".curves.csv");
    const auto fd_path = sibling(".fd.csv");
    const auto script_path = sibling(".gp");

    // Up to six analysed bins spread over the density range.
    std::vector<const DensityBin*> analysed;
    for (const auto& bin : result.bins)
        if (bin.analyzed()) analysed.push_back(&bin);
    std::vector<const DensityBin*> selected;
    const std::size_t want = std::min<std::size_t>(6, analysed.size());
    for (std::size_t i = 0; i < want; ++i)
        selected.push_back(analysed[want == 1 ? 0 : i * (analysed.size() - 1) / (want - 1)]);

    {
        std::ofstream out(curves_path);
        if (!out) throw std::runtime_error("cannot write " + curves_path.string());
        write_table_header(out, "analyze curves", hash,
                           {{"rho_center", "veh/km/lane"}, {"L", "1"}, {"delta_n", "1"}, {"windows", "count"}});
        for (const auto* bin : selected) {
            for (const auto& p : bin->curve.points)
                write_row(out, {format_number(bin->rho_center()), format_number(p.scale), format_number(p.variance),
                                std::to_string(p.windows)});
            out << "\n\n";  // gnuplot index separator
        }
    }
    {
        std::ofstream out(fd_path);
        if (!out) throw std::runtime_error("cannot write " + fd_path.string());
        write_table_header(out, "analyze fundamental-diagram", hash,
                           {{"rho", "veh/km/lane"}, {"J", "veh/h"}, {"J_prime", "km/h"}});
        if (result.diagram)
            for (std::size_t i = 0; i < result.diagram->points.size(); ++i)
                write_row(out, {format_number(result.diagram->points[i].rho),
                                format_number(result.diagram->points[i].flow),
                                format_number(result.diagram->derivative[i].flow_derivative)});
    }

    std::ofstream gp(script_path);
    if (!gp) throw std::runtime_error("cannot write " + script_path.string());
    const std::string table = table_path.filename().string();
    const std::string curves = curves_path.filename().string();
    const std::string fd = fd_path.filename().string();
    const std::string stem = table_path.stem().string();
    gp << "# gnuplot script generated by trafficgas " << TRAFFICGAS_VERSION << " (config " << hash << ")\n"
       << "set datafile separator ','\n"
       << "set datafile commentschars '#'\n"
       << "set key top left\n"
       << "set terminal pngcairo size 900,600\n\n"
       << "set output '" << stem << "_number_variance.png'\n"
       << "set xlabel 'L'\nset ylabel 'Delta_N(L)'\n"
       << "plot";
    for (std::size_t i = 0; i < selected.size(); ++i)
        gp << (i ? ", \\\n    " : " ") << "'" << curves << "' index " << i << " every ::1 using 2:3 with points title 'rho="
           << format_number(selected[i]->rho_center()) << "'";
    if (selected.empty()) gp << " 0 notitle";
    gp << "\n\n"
       << "set output '" << stem << "_chi_beta.png'\n"
       << "set multiplot layout 2,1\n"
       << "set xlabel 'rho [veh/km/lane]'\nset ylabel 'chi'\n"
       << "plot '" << table << "' every ::1 using 1:3 with points pt 4 title 'chi_hat'\n"
       << "set ylabel 'beta'\n"
       << "plot '" << table << "' every ::1 using 1:5 with points pt 4 title 'beta_hat'\n"
       << "unset multiplot\n\n"
       << "set output '" << stem << "_flow_beta.png'\n"
       << "set ylabel 'J [1000 veh/h]'\nset y2label 'beta'\nset y2tics\n"
       << "plot '" << fd << "' every ::1 using 1:($2/1000) with points pt 1 title 'J', \\\n"
       << "     '" << table << "' every ::1 using 1:5 axes x1y2 with points pt 4 title 'beta_hat'\n\n"
       << "set output '" << stem << "_derivative_beta.png'\n"
       << "set ylabel \"J' [km/h]\"\n"
       << "plot '" << fd << "' every ::1 using 1:3 with points pt 1 title \"J'\", \\\n"
       << "     '" << table << "' every ::1 using 1:5 axes x1y2 with points pt 4 title 'beta_hat'\n";
}

}  // namespace trafficgas::cli
