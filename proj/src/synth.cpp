#include <charconv>
#include <cmath>
#include <random>
#include <sstream>

#include "trafficgas/trafficdata.hpp"

namespace trafficgas::trafficdata {

namespace {

// splitmix64 finaliser; decorrelates per-lane engine seeds.
std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void validate_level(const SynthLevel& level, const SynthOptions& options) {
    std::ostringstream msg;
    if (!(level.rho > 0.0) || level.rho > options.rho_max) {
        msg << "synth: density " << level.rho << " outside (0, " << options.rho_max << "] veh/km/lane";
        throw std::invalid_argument(msg.str());
    }
    if (!(level.beta >= 0.0) || !std::isfinite(level.beta)) {
        msg << "synth: beta " << level.beta << " must be finite and non-negative";
        throw std::invalid_argument(msg.str());
    }
    const double v = synth_speed(level.rho, options);
    if (!(v > 0.0) || v > kMaxSpeedKmh) {
        msg << "synth: density " << level.rho << " implies infeasible speed " << v << " km/h";
        throw std::invalid_argument(msg.str());
    }
}

}  // namespace

double synth_speed(double rho, const SynthOptions& options) {
    return options.free_speed * (1.0 - rho / options.jam_density);
}

std::vector<VehicleRecord> synth_generate(std::span<const SynthLevel> levels, double duration, int lanes,
                                          std::uint64_t seed, const SynthOptions& options) {
    if (levels.empty()) throw std::invalid_argument("synth: empty profile");
    if (!(duration > 0.0)) throw std::invalid_argument("synth: duration must be positive");
    if (lanes < 1) throw std::invalid_argument("synth: need at least one lane");
    for (const auto& level : levels) validate_level(level, options);

    struct LevelPlan {
        gas::GasParameters params;
        double speed;
        double headway_scale;  // seconds per unit of raw clearance draw
    };
    std::vector<LevelPlan> plans;
    for (const auto& level : levels) {
        const gas::GasParameters params = gas::make_gas(level.beta);
        const double speed = synth_speed(level.rho, options);
        const double mean_headway = 3600.0 / (level.rho * speed);
        plans.push_back({params, speed, mean_headway / gas::moment(params, 1)});
    }

    const double block = duration / static_cast<double>(levels.size());
    std::vector<VehicleRecord> records;
    for (int lane = 0; lane < lanes; ++lane) {
        std::mt19937_64 engine(mix_seed(seed ^ mix_seed(static_cast<std::uint64_t>(lane))));
        for (std::size_t l = 0; l < plans.size(); ++l) {
            const auto& plan = plans[l];
            gas::ClearanceSampler sampler(plan.params);
            const double begin = block * static_cast<double>(l);
            const double end = begin + block;
            for (double t = begin + sampler(engine) * plan.headway_scale; t < end;
                 t += sampler(engine) * plan.headway_scale)
                records.push_back({t, lane, plan.speed, std::nullopt});
        }
    }
    sort_records(records);
    return records;
}

std::vector<SynthLevel> parse_profile(const std::string& text) {
    std::vector<SynthLevel> levels;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw std::invalid_argument("profile entry '" + item + "' is not of the form rho:beta");
        SynthLevel level;
        const std::string rho = item.substr(0, colon), beta = item.substr(colon + 1);
        const auto r1 = std::from_chars(rho.data(), rho.data() + rho.size(), level.rho);
        const auto r2 = std::from_chars(beta.data(), beta.data() + beta.size(), level.beta);
        if (r1.ec != std::errc{} || r1.ptr != rho.data() + rho.size() || r2.ec != std::errc{} ||
            r2.ptr != beta.data() + beta.size())
            throw std::invalid_argument("profile entry '" + item + "' has a non-numeric value");
        levels.push_back(level);
    }
    if (levels.empty()) throw std::invalid_argument("profile is empty");
    return levels;
}

}  // namespace trafficgas::trafficdata
