// Acceptance suite: one PASS/FAIL line per criterion AC-1 .. AC-9.
//
// Usage: acceptance [--allow-fail AC-3,AC-5] [--only AC-4]
// Exit status is 0 when every failing criterion is listed in --allow-fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "trafficgas/gas.hpp"
#include "trafficgas/rigidity.hpp"
#include "trafficgas/specfun.hpp"

using namespace trafficgas;

namespace {

struct Outcome {
    bool pass = true;
    std::vector<std::string> details;

    void require(bool ok, const std::string& what) {
        pass = pass && ok;
        details.push_back(std::string(ok ? "ok   " : "MISS ") + what);
    }
    void note(const std::string& what) { details.push_back("info " + what); }
};

struct Criterion {
    std::string id;
    std::string title;
    std::function<Outcome()> run;
};

std::string fmt(double x, int precision = 6) {
    std::ostringstream s;
    s << std::setprecision(precision) << x;
    return s.str();
}

std::string pct(double x) { return fmt(100.0 * x, 3) + "%"; }

double quad(const std::function<double(double)>& f, double scale) {
    return specfun::integrate_semiinfinite(f, specfun::QuadratureOptions{1e-14, 1e-12, 30}, scale).value;
}

rigidity::LinearFit fit_curve(const std::function<double(double)>& variance, double lo, double hi, double step) {
    rigidity::VarianceCurve curve;
    for (double L = lo; L <= hi + 1e-9; L += step) curve.points.push_back({L, variance(L), 1000, false});
    return rigidity::fit_linear_tail(curve, lo);
}

std::vector<double> grid(double lo, double hi, double step) {
    std::vector<double> g;
    for (double x = lo; x <= hi + 1e-9; x += step) g.push_back(x);
    return g;
}

// ---------------------------------------------------------------------------

Outcome ac1() {
    Outcome o;
    const double chi = rigidity::chi_coefficient(0.0), gamma = rigidity::gamma_coefficient(0.0);
    o.require(std::abs(chi - 1.0) <= 1e-12, "chi(0) = " + fmt(chi, 17));
    o.require(std::abs(gamma) <= 1e-12, "gamma(0) = " + fmt(gamma, 17));
    return o;
}

Outcome ac2() {
    Outcome o;
    const double g = rigidity::gamma_coefficient(1000.0);
    o.require(std::abs(g - 1.0 / 6.0) <= 1e-3, "gamma(1000) = " + fmt(g, 10) + ", |gamma - 1/6| = " +
                                                     fmt(std::abs(g - 1.0 / 6.0), 3));
    bool monotone = true;
    double last = rigidity::gamma_coefficient(0.0);
    for (int i = 1; i <= 6400; ++i) {
        const double next = rigidity::gamma_coefficient(0.01 * i);
        monotone = monotone && next > last;
        last = next;
    }
    o.require(monotone, "gamma strictly increasing on beta = 0, 0.01, ..., 64");
    return o;
}

Outcome ac3() {
    Outcome o;
    for (const double beta : {0.5, 1.0, 2.0, 4.0}) {
        const rigidity::ClusterFunction cluster(beta, 1e-6, 20.0);
        const auto fit = fit_curve(
            [&](double L) { return rigidity::number_variance_integral([&](double r) { return cluster(r); }, L); },
            10.0, 20.0, 1.0);
        const double chi = rigidity::chi_coefficient(beta), gamma = rigidity::gamma_coefficient(beta);
        const double gap = fit.slope / chi - 1.0;
        o.require(std::abs(gap) <= 0.02 && std::abs(fit.intercept - gamma) <= 0.05,
                  "beta=" + fmt(beta) + ": slope " + fmt(fit.slope) + " vs chi " + fmt(chi) + " (" + pct(gap) +
                      "), intercept " + fmt(fit.intercept) + " vs gamma " + fmt(gamma));
    }
    o.note("saddle-point cluster sum levels off at 2B/(1+sqrt(1+4B beta)) instead of 1, so the integral grows "
           "quadratically");
    for (const double beta : {0.5, 1.0, 2.0, 4.0}) {
        const rigidity::RenewalClusterFunction renewal(beta, 21.0);
        const auto fit = fit_curve(
            [&](double L) { return rigidity::number_variance_integral([&](double x) { return renewal(x); }, L); },
            10.0, 20.0, 1.0);
        const double chi = rigidity::chi_coefficient(beta);
        o.note("renewal cluster function, beta=" + fmt(beta) + ": slope " + fmt(fit.slope) + " (" +
               pct(fit.slope / chi - 1.0) + " vs chi), intercept " + fmt(fit.intercept) + " vs gamma " +
               fmt(rigidity::gamma_coefficient(beta)));
    }
    return o;
}

Outcome ac4() {
    Outcome o;
    const auto Ls = grid(1.0, 20.0, 0.5);
    std::uint64_t seed = 20240601;
    for (const double beta : {0.5, 1.0, 2.0, 4.0}) {
        const auto seq = gas::unfold(gas::sample_spacings(gas::make_gas(beta), 1000000, seed++));
        const auto fit = rigidity::fit_linear_tail(rigidity::empirical_number_variance(seq, Ls), 10.0);
        const double chi = rigidity::chi_coefficient(beta);
        const double gap = fit.slope / chi - 1.0;
        o.require(std::abs(gap) <= 0.05, "beta=" + fmt(beta) + ": slope " + fmt(fit.slope) + " vs chi " + fmt(chi) +
                                             " (" + pct(gap) + "); renewal slope " +
                                             fmt(rigidity::renewal_slope_oracle(beta).slope));
    }
    return o;
}

Outcome ac5() {
    Outcome o;
    double worst_norm = 0.0, worst_mean = 0.0;
    for (const double beta : {0.0, 0.1, 0.5, 1.0, 2.0, 4.0, 8.0}) {
        const auto p = gas::make_gas(beta);
        worst_norm = std::max(worst_norm, std::abs(quad([&](double r) { return gas::clearance_pdf(p, r); }, 1.0) - 1.0));
        worst_mean =
            std::max(worst_mean, std::abs(quad([&](double r) { return r * gas::clearance_pdf(p, r); }, 1.0) - 1.0));
    }
    o.require(worst_norm <= 1e-8, "clearance normalization, worst |int p - 1| = " + fmt(worst_norm, 3));
    o.require(worst_mean <= 2e-2, "clearance unit mean, worst |int r p - 1| = " + fmt(worst_mean, 3));

    double worst_n_norm = 0.0, worst_n_mean = 0.0, at_beta = 0.0;
    int at_n = 0;
    for (double beta = 0.25; beta <= 4.0 + 1e-9; beta += 0.25) {
        for (int n = 0; n <= 10; ++n) {
            const gas::NthSpacingDensity d(n, beta);
            worst_n_norm = std::max(worst_n_norm, std::abs(quad([&](double r) { return d(r); }, n + 1.0) - 1.0));
            const double rel = quad([&](double r) { return r * d(r); }, n + 1.0) / (n + 1.0) - 1.0;
            if (std::abs(rel) > std::abs(worst_n_mean)) {
                worst_n_mean = rel;
                at_beta = beta;
                at_n = n;
            }
        }
    }
    o.require(worst_n_norm <= 1e-8, "p_n normalization (n <= 10, beta in [0.25, 4]), worst = " + fmt(worst_n_norm, 3));
    o.require(std::abs(worst_n_mean) <= 0.05, "p_n mean vs n+1, worst " + pct(worst_n_mean) + " at beta=" +
                                                  fmt(at_beta) + ", n=" + std::to_string(at_n));
    o.note("the saddle-point p_n means fall short of n+1 by more than 5% for small beta and larger n");
    return o;
}

Outcome ac6() {
    // Regression constants established on the first run (step 0.002, grid to 60).
    struct Frozen {
        double beta;
        int n;
        double l1;
    };
    const std::vector<Frozen> frozen{{1.0, 1, 0.10272509},  {1.0, 2, 0.16666844}, {1.0, 3, 0.21557903},
                                     {2.0, 1, 0.093495102}, {2.0, 2, 0.1524686},  {2.0, 3, 0.19779221}};
    Outcome o;
    for (const double beta : {1.0, 2.0}) {
        const auto powers = gas::convolution_powers(3, beta, 0.002, 60.0);
        for (int n = 1; n <= 3; ++n) {
            const double l1 = gas::l1_distance(powers[static_cast<std::size_t>(n)], gas::NthSpacingDensity(n, beta));
            const auto it = std::find_if(frozen.begin(), frozen.end(),
                                         [&](const Frozen& f) { return f.beta == beta && f.n == n; });
            o.require(std::abs(l1 - it->l1) <= 1e-3, "beta=" + fmt(beta) + ", n=" + std::to_string(n) + ": L1 " +
                                                         fmt(l1, 8) + " (frozen " + fmt(it->l1, 8) + ")");
        }
    }
    return o;
}

Outcome ac7() {
    Outcome o;
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "trafficgas_acceptance";
    fs::create_directories(dir);
    std::uint64_t seed = 7001;
    for (const double beta : {0.0, 1.0, 2.0, 4.0}) {
        const fs::path records = dir / ("synth_beta" + fmt(beta) + ".csv");
        const fs::path table = dir / ("bins_beta" + fmt(beta) + ".csv");
        std::ostringstream sink, err;
        const std::string profile = "30.5:" + fmt(beta);
        int code = cli::run({"synth", "--profile", profile, "--duration", "240000", "--lanes", "2", "--seed",
                             std::to_string(seed++), "--output", records.string()},
                            sink, err);
        if (code == 0)
            code = cli::run({"analyze", "--input", records.string(), "--window-seconds", "14400", "--output",
                             table.string()},
                            sink, err);
        if (code != 0) {
            o.require(false, "beta=" + fmt(beta) + ": command failed: " + err.str());
            continue;
        }
        std::ifstream in(table);
        std::string line;
        bool header = true, found = false;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            if (header) {
                header = false;
                continue;
            }
            std::vector<std::string> cells;
            std::istringstream ls(line);
            for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
            if (cells.size() < 7 || cells[0] != "30.5") continue;
            found = true;
            const double gaps = std::stod(cells[1]), chi_hat = std::stod(cells[2]), beta_hat = std::stod(cells[4]);
            const double err_rel = std::abs(beta_hat - beta) / std::max(beta, 1.0);
            o.require(gaps >= 1e5 && err_rel <= 0.15, "beta=" + fmt(beta) + ": bin 30.5 has " + fmt(gaps, 8) +
                                                          " gaps, chi_hat " + fmt(chi_hat) + ", beta_hat " +
                                                          fmt(beta_hat) + " (error " + pct(err_rel) + ", flags " +
                                                          cells[6] + ")");
        }
        if (!found) o.require(false, "beta=" + fmt(beta) + ": no row for the 30.5 bin");
    }
    o.note("synthetic level rho=30.5 veh/km/lane, 2 lanes x 240000 s, 4 h aggregation windows");
    return o;
}

Outcome ac8() {
    Outcome o;
    std::vector<std::size_t> Ns;
    for (std::size_t n = 1; n <= 1000; n = n * 3 / 2 + 1) Ns.push_back(n);
    std::mt19937_64 rng(808);
    std::exponential_distribution<double> e(1.0 / 2.5);
    std::vector<double> gaps(500000);
    for (auto& g : gaps) g = e(rng);
    const auto fit = rigidity::fit_power_law(rigidity::timegap_variance(gaps, Ns));
    o.require(std::abs(fit.exponent + 1.0) <= 0.1, "i.i.d. exponential gaps: exponent " + fmt(fit.exponent) +
                                                       ", prefactor " + fmt(fit.prefactor) + " (variance 6.25)");
    o.note("the congested-regime exponent of about -2/3 needs the original detector data; not reproduced");
    return o;
}

Outcome ac9() {
    Outcome o;
    const gas::SpacingSequence lattice(std::vector<double>(100000, 1.0));
    std::vector<double> Ls;
    for (int L = 1; L <= 200; ++L) Ls.push_back(L);
    const auto curve = rigidity::empirical_number_variance(lattice, Ls);
    double worst = 0.0;
    for (const auto& p : curve.points) worst = std::max(worst, std::abs(p.variance));
    o.require(worst == 0.0, "unit lattice, L = 1..200: max |Delta_N| = " + fmt(worst));
    return o;
}

std::set<std::string> split_ids(const std::string& s) {
    std::set<std::string> ids;
    std::istringstream in(s);
    for (std::string id; std::getline(in, id, ',');)
        if (!id.empty()) ids.insert(id);
    return ids;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<std::string> allowed, only;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--allow-fail" && i + 1 < argc)
            allowed = split_ids(argv[++i]);
        else if (arg == "--only" && i + 1 < argc)
            only = split_ids(argv[++i]);
        else {
            std::cerr << "usage: acceptance [--allow-fail AC-x,...] [--only AC-x,...]\n";
            return 2;
        }
    }

    const std::vector<Criterion> criteria{
        {"AC-1", "Poisson endpoint of chi and gamma", ac1},
        {"AC-2", "gamma tends to 1/6 and increases monotonically", ac2},
        {"AC-3", "variance integral slope/intercept vs chi/gamma", ac3},
        {"AC-4", "Monte Carlo number-variance slope vs chi", ac4},
        {"AC-5", "normalizations of p and p_n", ac5},
        {"AC-6", "saddle-point L1 audit against the convolution oracle", ac6},
        {"AC-7", "end-to-end beta recovery from synthetic records", ac7},
        {"AC-8", "time-gap variance law for i.i.d. gaps", ac8},
        {"AC-9", "rigid lattice has zero number variance", ac9},
    };

    std::vector<std::string> failed, unexpected;
    int passed = 0, ran = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        ++ran;
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = c.run();
        } catch (const std::exception& e) {
            outcome.require(false, std::string("exception: ") + e.what());
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << c.id << " " << (outcome.pass ? "PASS" : "FAIL") << "  " << c.title << "  [" << fmt(seconds, 3)
                  << " s]\n";
        for (const auto& d : outcome.details) std::cout << "      " << d << "\n";
        std::cout.flush();
        if (outcome.pass) {
            ++passed;
        } else {
            failed.push_back(c.id);
            if (!allowed.count(c.id)) unexpected.push_back(c.id);
        }
    }

    std::cout << "SUMMARY " << passed << "/" << ran << " PASS";
    if (!failed.empty()) {
        std::cout << "; FAIL:";
        for (const auto& id : failed) std::cout << " " << id;
    }
    if (!allowed.empty()) {
        std::cout << "; allowed to fail:";
        for (const auto& id : allowed) std::cout << " " << id;
    }
    std::cout << "\n";
    return unexpected.empty() ? 0 : 1;
}
