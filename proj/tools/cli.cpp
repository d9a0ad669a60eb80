#include "cli.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "report.hpp"
#include "trafficgas/gas.hpp"
#include "trafficgas/kernels.hpp"
#include "trafficgas/rigidity.hpp"
#include "trafficgas/trafficdata.hpp"

namespace trafficgas::cli {

namespace {

using nlohmann::json;

double parse_double(const std::string& text, const char* what) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value))
        throw UsageError(std::string(what) + ": '" + text + "' is not a number");
    return value;
}

/// "b", "b1,b2,..." or "start:stop:step".
std::vector<double> parse_beta_list(const std::string& text) {
    std::vector<double> betas;
    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() != 3) throw UsageError("--beta range must be start:stop:step");
        const double start = parse_double(parts[0], "--beta"), stop = parse_double(parts[1], "--beta"),
                     step = parse_double(parts[2], "--beta");
        if (!(step > 0.0) || stop < start) throw UsageError("--beta range needs step > 0 and stop >= start");
        const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
        for (long i = 0; i <= n; ++i) betas.push_back(start + static_cast<double>(i) * step);
    } else {
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ',');) betas.push_back(parse_double(p, "--beta"));
    }
    if (betas.empty()) throw UsageError("--beta is empty");
    for (const double b : betas)
        if (b < 0.0) throw UsageError("--beta values must be non-negative");
    return betas;
}

std::vector<double> make_grid(double lo, double hi, double step, const char* what) {
    if (!(lo > 0.0) || !(hi >= lo) || !(step > 0.0))
        throw UsageError(std::string(what) + ": need 0 < min <= max and step > 0");
    std::vector<double> grid;
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long i = 0; i <= n; ++i) grid.push_back(lo + static_cast<double>(i) * step);
    return grid;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed) {
    if (seed) return *seed;
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

/// Writes to --output if set, else to the caller's stream.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw std::runtime_error("cannot write " + path);
        }
        stream_ = path.empty() ? &fallback : &file_;
    }
    std::ostream& stream() { return *stream_; }

private:
    std::ofstream file_;
    std::ostream* stream_;
};

void write_json(const std::string& path, const json& doc) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << doc.dump(2) << "\n";
}

json envelope(const std::string& command, const json& config, const std::string& hash) {
    return {{"tool", "trafficgas"}, {"version", TRAFFICGAS_VERSION}, {"command", command},
            {"config", config},     {"config_hash", hash}};
}

struct Options {
    std::string beta = "1";
    double l_min = 1.0, l_max = 20.0, l_step = 1.0;
    double tol = 1e-6;
    bool no_integral = false;
    long long count = 1000000;
    std::optional<std::uint64_t> seed;
    std::string input, output, summary, spacings_out;
    double window_seconds = 60.0;
    int bins = 85;
    double rho_max = 85.0;
    double l_fit_min = 10.0;
    long long min_bin_gaps = 1000;
    bool emit_plot = false;
    bool per_lane = false;
    std::string delimiter = ",";
    int timestamp_col = 0, lane_col = 1, speed_col = 2, length_col = 3;
    std::string profile;
    double duration = 3600.0;
    int lanes = 1;
    std::size_t n_max = 100;
};

// ---------------------------------------------------------------------------

int cmd_exact(const Options& o, std::ostream& out) {
    const std::vector<double> betas = parse_beta_list(o.beta);
    const std::vector<double> Ls = make_grid(o.l_min, o.l_max, o.l_step, "--l-min/--l-max/--l-step");
    const json config = {{"command", "exact"}, {"beta", betas}, {"l_min", o.l_min}, {"l_max", o.l_max},
                         {"l_step", o.l_step}, {"tol", o.tol},  {"integral", !o.no_integral}};
    const std::string hash = config_hash(config);

    Sink sink(o.output, out);
    write_table_header(sink.stream(), "exact", hash,
                       {{"beta", "1"},
                        {"L", "mean spacings"},
                        {"delta_n_asymptotic", "vehicles^2"},
                        {"delta_n_integral", "vehicles^2"},
                        {"chi", "1"},
                        {"gamma", "1"}});
    for (const double beta : betas) {
        const double chi = rigidity::chi_coefficient(beta);
        const double gamma = rigidity::gamma_coefficient(beta);
        std::optional<rigidity::ClusterFunction> cluster;
        if (!o.no_integral) cluster.emplace(beta, o.tol, Ls.back());
        for (const double L : Ls) {
            const double integral =
                cluster ? rigidity::number_variance_integral([&](double r) { return (*cluster)(r); }, L, o.tol)
                        : std::nan("");
            write_row(sink.stream(), {format_number(beta), format_number(L),
                                      format_number(rigidity::number_variance_asymptotic(beta, L)),
                                      format_number(integral), format_number(chi), format_number(gamma)});
        }
    }
    if (!o.summary.empty()) write_json(o.summary, envelope("exact", config, hash));
    return kExitOk;
}

int cmd_sample(const Options& o, std::ostream& out) {
    if (o.count < 1) throw UsageError("--count must be at least 1");
    const double beta = parse_double(o.beta, "--beta");
    if (beta < 0.0) throw UsageError("--beta must be non-negative");
    const std::vector<double> Ls = make_grid(o.l_min, o.l_max, o.l_step, "--l-min/--l-max/--l-step");
    const std::uint64_t seed = resolve_seed(o.seed);
    const json config = {{"command", "sample"}, {"beta", beta},       {"count", o.count},
                         {"seed", seed},        {"l_min", o.l_min},   {"l_max", o.l_max},
                         {"l_step", o.l_step},  {"l_fit_min", o.l_fit_min}};
    const std::string hash = config_hash(config);

    const gas::GasParameters params = gas::make_gas(beta);
    const gas::SpacingSequence raw = gas::sample_spacings(params, static_cast<std::size_t>(o.count), seed);
    if (!o.spacings_out.empty()) {
        std::ofstream sp(o.spacings_out);
        if (!sp) throw std::runtime_error("cannot write " + o.spacings_out);
        sp << "# trafficgas " << TRAFFICGAS_VERSION << " sample beta=" << format_number(beta) << " seed=" << seed
           << " config_hash: " << hash << "\n";
        for (const double r : raw.values()) sp << format_number(r) << "\n";
    }
    const rigidity::VarianceCurve curve = rigidity::empirical_number_variance(gas::unfold(raw), Ls);
    const double chi = rigidity::chi_coefficient(beta);
    std::optional<rigidity::LinearFit> fit;
    try {
        fit = rigidity::fit_linear_tail(curve, o.l_fit_min);
    } catch (const std::invalid_argument&) {
    }

    Sink sink(o.output, out);
    write_table_header(sink.stream(), "sample", hash,
                       {{"L", "mean spacings"},
                        {"delta_n_empirical", "vehicles^2"},
                        {"window_count", "count"},
                        {"flagged", "0/1"},
                        {"fit_slope", "1"},
                        {"chi_exact", "1"}},
                       "seed: " + std::to_string(seed));
    const double slope = fit ? fit->slope : std::nan("");
    for (const auto& p : curve.points)
        write_row(sink.stream(), {format_number(p.scale), format_number(p.variance), std::to_string(p.windows),
                                  p.flagged ? "1" : "0", format_number(slope), format_number(chi)});

    if (!o.summary.empty()) {
        json doc = envelope("sample", config, hash);
        doc["seed"] = seed;
        doc["chi_exact"] = chi;
        doc["gamma_exact"] = rigidity::gamma_coefficient(beta);
        if (fit) doc["fit"] = {{"slope", fit->slope}, {"intercept", fit->intercept}, {"residual", fit->residual}};
        write_json(o.summary, doc);
    }
    return kExitOk;
}

std::vector<double> read_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto last = line.find_last_not_of(" \t\r");
        const std::string token = line.substr(first, last - first + 1);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec != std::errc{} || ptr != token.data() + token.size() || !(v > 0.0))
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected a positive number");
        values.push_back(v);
    }
    if (values.empty()) throw std::runtime_error(path + ": no values");
    return values;
}

int cmd_variance(const Options& o, std::ostream& out) {
    if (o.input.empty()) throw UsageError("variance requires --input");
    const std::vector<double> Ls = make_grid(o.l_min, o.l_max, o.l_step, "--l-min/--l-max/--l-step");
    const std::vector<double> values = read_values(o.input);
    const json config = {{"command", "variance"}, {"input", o.input},       {"l_min", o.l_min},
                         {"l_max", o.l_max},      {"l_step", o.l_step},     {"l_fit_min", o.l_fit_min},
                         {"n_max", o.n_max}};
    const std::string hash = config_hash(config);

    const auto nv = rigidity::empirical_number_variance(gas::unfold(values), Ls);
    std::vector<std::size_t> Ns;
    const std::size_t n_cap = std::min<std::size_t>(o.n_max, values.size() / 10);
    if (n_cap < 1) throw std::runtime_error("variance: too few values for a time-gap variance");
    for (double n = 1; n <= static_cast<double>(n_cap); n *= 1.25) {
        const auto k = static_cast<std::size_t>(std::lround(n));
        if (Ns.empty() || k > Ns.back()) Ns.push_back(k);
    }
    const auto tv = rigidity::timegap_variance(values, Ns);

    std::string fits;
    try {
        const auto f = rigidity::fit_linear_tail(nv, o.l_fit_min);
        fits += "number_variance_fit: slope=" + format_number(f.slope) + " intercept=" + format_number(f.intercept) +
                " beta_hat=";
        try {
            fits += format_number(rigidity::invert_chi(f.slope));
        } catch (const rigidity::OutOfRange&) {
            fits += "out_of_range";
        }
    } catch (const std::invalid_argument& e) {
        fits += std::string("number_variance_fit: ") + e.what();
    }
    try {
        const auto p = rigidity::fit_power_law(tv);
        fits += "; timegap_power_law: exponent=" + format_number(p.exponent) +
                " prefactor=" + format_number(p.prefactor);
    } catch (const std::invalid_argument& e) {
        fits += std::string("; timegap_power_law: ") + e.what();
    }

    Sink sink(o.output, out);
    write_table_header(sink.stream(), "variance", hash,
                       {{"kind", "text"}, {"scale", "L or N"}, {"variance", "1"}, {"windows", "count"},
                        {"flagged", "0/1"}},
                       fits);
    for (const auto* curve : {&nv, &tv}) {
        const char* kind = curve->kind == rigidity::VarianceKind::number_variance ? "number" : "timegap";
        for (const auto& p : curve->points)
            write_row(sink.stream(), {kind, format_number(p.scale), format_number(p.variance),
                                      std::to_string(p.windows), p.flagged ? "1" : "0"});
    }
    if (!o.summary.empty()) {
        json doc = envelope("variance", config, hash);
        doc["fits"] = fits;
        write_json(o.summary, doc);
    }
    return kExitOk;
}

int cmd_analyze(const Options& o, std::ostream& out, std::ostream& err) {
    if (o.input.empty()) throw UsageError("analyze requires --input");
    if (o.delimiter.size() != 1) throw UsageError("--delimiter must be a single character");
    if (o.bins < 1 || !(o.rho_max > 0.0) || !(o.window_seconds > 0.0) || o.min_bin_gaps < 1)
        throw UsageError("analyze: --bins, --rho-max, --window-seconds and --min-bin-gaps must be positive");
    if (o.emit_plot && o.output.empty()) throw UsageError("--emit-plot needs --output");

    trafficdata::FormatSpec format;
    format.delimiter = o.delimiter[0];
    format.timestamp_column = o.timestamp_col;
    format.lane_column = o.lane_col;
    format.speed_column = o.speed_col;
    format.length_column = o.length_col;

    trafficdata::AnalysisConfig config;
    config.window_seconds = o.window_seconds;
    config.bins = o.bins;
    config.rho_max = o.rho_max;
    config.l_min = o.l_min;
    config.l_max = o.l_max;
    config.l_step = o.l_step;
    config.l_fit_min = o.l_fit_min;
    config.min_bin_gaps = static_cast<std::size_t>(o.min_bin_gaps);
    config.pool_lanes = !o.per_lane;

    const json config_doc = {{"command", "analyze"},
                             {"input", o.input},
                             {"window_seconds", config.window_seconds},
                             {"bins", config.bins},
                             {"rho_max", config.rho_max},
                             {"l_min", config.l_min},
                             {"l_max", config.l_max},
                             {"l_step", config.l_step},
                             {"l_fit_min", config.l_fit_min},
                             {"min_bin_gaps", config.min_bin_gaps},
                             {"pool_lanes", config.pool_lanes},
                             {"beta_cap", config.beta_cap},
                             {"format",
                              {{"delimiter", o.delimiter},
                               {"timestamp_col", o.timestamp_col},
                               {"lane_col", o.lane_col},
                               {"speed_col", o.speed_col},
                               {"length_col", o.length_col}}}};
    const std::string hash = config_hash(config_doc);

    const trafficdata::LoadResult loaded = trafficdata::load_records(o.input, format);
    if (loaded.malformed > 0) err << "analyze: skipped " << loaded.malformed << " malformed lines\n";
    const trafficdata::AnalysisResult result = trafficdata::run_analysis(loaded.records, config);
    for (const auto& w : result.warnings) err << "analyze: " << w << "\n";

    {
        Sink sink(o.output, out);
        write_bin_table(sink.stream(), result, hash);
    }
    std::string summary = o.summary;
    if (summary.empty() && !o.output.empty()) summary = o.output + ".json";
    if (!summary.empty()) {
        json doc = envelope("analyze", config_doc, hash);
        doc["seed"] = nullptr;
        doc["malformed_lines"] = loaded.malformed;
        doc.update(analysis_to_json(result));
        write_json(summary, doc);
    }
    if (o.emit_plot) write_plot_bundle(o.output, result, hash);
    return kExitOk;
}

int cmd_synth(const Options& o, std::ostream& out) {
    if (o.profile.empty()) throw UsageError("synth requires --profile rho:beta[,rho:beta...]");
    std::vector<trafficdata::SynthLevel> levels;
    try {
        levels = trafficdata::parse_profile(o.profile);
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("--profile: ") + e.what());
    }
    for (const auto& level : levels) {
        if (!(level.rho > 0.0) || level.rho > o.rho_max)
            throw UsageError("--profile: density " + format_number(level.rho) + " outside (0, " +
                             format_number(o.rho_max) + "]");
        if (level.beta < 0.0) throw UsageError("--profile: beta must be non-negative");
    }
    if (!(o.duration > 0.0) || o.lanes < 1) throw UsageError("synth: --duration and --lanes must be positive");
    const std::uint64_t seed = resolve_seed(o.seed);

    json profile = json::array();
    for (const auto& l : levels) profile.push_back({{"rho", l.rho}, {"beta", l.beta}});
    const json config = {{"command", "synth"}, {"profile", profile}, {"duration", o.duration},
                         {"lanes", o.lanes},   {"seed", seed},       {"rho_max", o.rho_max}};
    const std::string hash = config_hash(config);

    trafficdata::SynthOptions options;
    options.rho_max = o.rho_max;
    const auto records = trafficdata::synth_generate(levels, o.duration, o.lanes, seed, options);

    Sink sink(o.output, out);
    sink.stream() << "# trafficgas " << TRAFFICGAS_VERSION << " synth\n"
                  << "# config_hash: " << hash << "\n"
                  << "# seed: " << seed << "\n"
                  << "# columns: timestamp_s [s], lane_id [id], speed_kmh [km/h]\n";
    trafficdata::write_records(sink.stream(), records);
    if (!o.summary.empty()) {
        json doc = envelope("synth", config, hash);
        doc["seed"] = seed;
        doc["records"] = records.size();
        write_json(o.summary, doc);
    }
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Traffic-gas rigidity toolkit: exact number variance, sampling and single-vehicle data analysis",
                 "trafficgas"};
    app.set_version_flag("--version", std::string(TRAFFICGAS_VERSION));
    app.require_subcommand(1);
    Options o;

    auto add_l_grid = [&](CLI::App* sub, double step_default) {
        o.l_step = step_default;
        sub->add_option("--l-min", o.l_min, "Smallest window length L")->capture_default_str();
        sub->add_option("--l-max", o.l_max, "Largest window length L")->capture_default_str();
        sub->add_option("--l-step", o.l_step, "Window length step")->capture_default_str();
    };
    auto add_io = [&](CLI::App* sub) {
        sub->add_option("--output,-o", o.output, "Output table path (default: stdout)");
        sub->add_option("--summary", o.summary, "Run summary JSON path");
    };

    auto* exact = app.add_subcommand("exact", "Asymptotic and integral number variance of the gas model");
    exact->add_option("--beta", o.beta, "Inverse temperature: value, list a,b,c or range start:stop:step")
        ->capture_default_str();
    add_l_grid(exact, 1.0);
    exact->add_option("--tol", o.tol, "Cluster-function truncation tolerance")->capture_default_str();
    exact->add_flag("--no-integral", o.no_integral, "Skip the cluster-function integral column");
    add_io(exact);

    auto* sample = app.add_subcommand("sample", "Monte Carlo number variance of sampled clearances");
    sample->add_option("--beta", o.beta, "Inverse temperature")->capture_default_str();
    sample->add_option("--count", o.count, "Number of sampled spacings")->capture_default_str();
    sample->add_option("--seed", o.seed, "RNG seed (random if omitted; recorded in the output)");
    add_l_grid(sample, 1.0);
    sample->add_option("--l-fit-min", o.l_fit_min, "Smallest L used in the tail fit")->capture_default_str();
    sample->add_option("--spacings-out", o.spacings_out, "Also write the raw spacings, one per line");
    add_io(sample);

    auto* variance = app.add_subcommand("variance", "Number and time-gap variance of a spacing file");
    variance->add_option("--input,-i", o.input, "File with one positive value per line")->required();
    add_l_grid(variance, 1.0);
    variance->add_option("--l-fit-min", o.l_fit_min, "Smallest L used in the tail fit")->capture_default_str();
    variance->add_option("--n-max", o.n_max, "Largest time-gap sample size N")->capture_default_str();
    add_io(variance);

    auto* analyze = app.add_subcommand("analyze", "Density-binned rigidity analysis of single-vehicle records");
    analyze->add_option("--input,-i", o.input, "Record file: timestamp_s,lane_id,speed_kmh[,length_m]")->required();
    analyze->add_option("--window-seconds", o.window_seconds, "Aggregation window")->capture_default_str();
    analyze->add_option("--bins", o.bins, "Number of density bins")->capture_default_str();
    analyze->add_option("--rho-max", o.rho_max, "Upper density bound [veh/km/lane]")->capture_default_str();
    add_l_grid(analyze, 0.5);
    analyze->add_option("--l-fit-min", o.l_fit_min, "Smallest L used in the tail fit")->capture_default_str();
    analyze->add_option("--min-bin-gaps", o.min_bin_gaps, "Gaps needed before a bin is analysed")
        ->capture_default_str();
    analyze->add_flag("--per-lane", o.per_lane, "Analyse lanes separately instead of pooling them");
    analyze->add_flag("--emit-plot", o.emit_plot, "Write curve data and a gnuplot script next to --output");
    analyze->add_option("--delimiter", o.delimiter, "Field delimiter")->capture_default_str();
    analyze->add_option("--timestamp-col", o.timestamp_col, "0-based timestamp column")->capture_default_str();
    analyze->add_option("--lane-col", o.lane_col, "0-based lane column")->capture_default_str();
    analyze->add_option("--speed-col", o.speed_col, "0-based speed column")->capture_default_str();
    analyze->add_option("--length-col", o.length_col, "0-based length column (-1: none)")->capture_default_str();
    add_io(analyze);

    auto* synth = app.add_subcommand("synth", "Generate synthetic single-vehicle records");
    synth->add_option("--profile", o.profile, "Density levels as rho:beta[,rho:beta...]")->required();
    synth->add_option("--duration", o.duration, "Total duration per lane [s]")->capture_default_str();
    synth->add_option("--lanes", o.lanes, "Number of lanes")->capture_default_str();
    synth->add_option("--seed", o.seed, "RNG seed (random if omitted; recorded in the output)");
    synth->add_option("--rho-max", o.rho_max, "Largest admissible density")->capture_default_str();
    add_io(synth);

    o.l_step = 0.0;

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << TRAFFICGAS_VERSION << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "trafficgas: " << e.what() << "\n" << "Run with --help for usage.\n";
        return kExitUsage;
    }

    try {
        auto step_for = [&](CLI::App* sub, double fallback) {
            return sub->count("--l-step") ? o.l_step : fallback;
        };
        if (exact->parsed()) {
            o.l_step = step_for(exact, 1.0);
            return cmd_exact(o, out);
        }
        if (sample->parsed()) {
            o.l_step = step_for(sample, 1.0);
            return cmd_sample(o, out);
        }
        if (variance->parsed()) {
            o.l_step = step_for(variance, 1.0);
            return cmd_variance(o, out);
        }
        if (analyze->parsed()) {
            o.l_step = step_for(analyze, 0.5);
            return cmd_analyze(o, out, err);
        }
        if (synth->parsed()) return cmd_synth(o, out);
    } catch (const UsageError& e) {
        err << "trafficgas: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "trafficgas: error: " << e.what() << "\n";
        return kExitFailure;
    }
    err << "trafficgas: no command given\n";
    return kExitUsage;
}

}  // namespace trafficgas::cli
