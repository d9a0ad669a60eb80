#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "trafficgas/gas.hpp"
#include "trafficgas/specfun.hpp"

using namespace trafficgas;
using namespace trafficgas::gas;

namespace {

const std::vector<double> kBetaGrid{0.0, 0.1, 0.5, 1.0, 2.0, 4.0, 8.0};

double integral(const std::function<double(double)>& f, double scale = 1.0) {
    return specfun::integrate_semiinfinite(f, specfun::QuadratureOptions{1e-14, 1e-12, 30}, scale).value;
}

// Cumulative distribution of the clearance law tabulated by Simpson panels
// on a fine grid; linear interpolation between nodes.
struct TabulatedCdf {
    double h;
    std::vector<double> F;

    TabulatedCdf(const GasParameters& p, double r_max, std::size_t panels) : h(r_max / panels), F(panels + 1, 0.0) {
        for (std::size_t i = 0; i < panels; ++i) {
            const double a = i * h, m = a + 0.5 * h, b = a + h;
            F[i + 1] = F[i] + h / 6.0 * (clearance_pdf(p, a) + 4.0 * clearance_pdf(p, m) + clearance_pdf(p, b));
        }
    }
    double operator()(double r) const {
        const double x = r / h;
        const auto i = static_cast<std::size_t>(x);
        if (i + 1 >= F.size()) return F.back();
        return F[i] + (x - i) * (F[i + 1] - F[i]);
    }
};

}  // namespace

TEST_CASE("make_gas examples") {
    const auto g0 = make_gas(0.0);
    CHECK(g0.B == 1.0);
    CHECK(g0.A() == 1.0);
    CHECK(std::abs(make_gas(1.0).B - (1.0 + (3.0 - std::exp(-1.0)) / 2.0)) < 1e-15);
    CHECK(std::abs(make_gas(1.0).B - 2.3161) < 1e-4);
    CHECK(make_gas(4.0).B == doctest::Approx(4.0 + (3.0 - std::exp(-2.0)) / 2.0).epsilon(1e-15));
    CHECK_THROWS_AS((void)make_gas(-0.1), std::domain_error);
    CHECK_THROWS_AS((void)make_gas(std::nan("")), std::domain_error);
    CHECK_THROWS_AS((void)make_gas(HUGE_VAL), std::domain_error);
}

TEST_CASE("clearance_pdf support and values") {
    CHECK(clearance_pdf(make_gas(0.0), 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    for (const double beta : kBetaGrid) {
        const auto p = make_gas(beta);
        CHECK(clearance_pdf(p, -1.0) == 0.0);
        if (beta > 0.0) CHECK(clearance_pdf(p, 0.0) == 0.0);
        CHECK(clearance_pdf(p, 1e-3) >= 0.0);
        CHECK(clearance_pdf(p, 0.5) > 0.0);
    }
    const auto p1 = make_gas(1.0);
    const double A = 1.0 / integral([&](double r) { return std::exp(-1.0 / r - p1.B * r); });
    CHECK(clearance_pdf(p1, 1.0) == doctest::Approx(A * std::exp(-1.0 - p1.B)).epsilon(1e-10));
}

TEST_CASE("normalization and unit mean on the beta grid") {
    for (const double beta : kBetaGrid) {
        const auto p = make_gas(beta);
        CAPTURE(beta);
        CHECK(std::abs(integral([&](double r) { return clearance_pdf(p, r); }) - 1.0) < 1e-8);
        CHECK(std::abs(integral([&](double r) { return r * clearance_pdf(p, r); }) - 1.0) < 2e-2);
    }
}

TEST_CASE("log density is concave") {
    for (const double beta : {0.1, 1.0, 8.0}) {
        const auto p = make_gas(beta);
        const double h = 1e-3;
        for (double r = 0.01; r < 20.0; r += 0.01) {
            const double second = log_clearance_pdf(p, r + h) - 2.0 * log_clearance_pdf(p, r) +
                                  log_clearance_pdf(p, r - h);
            CHECK(second < 0.0);
        }
    }
}

TEST_CASE("moments") {
    CHECK(moment(make_gas(0.0), 1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(moment(make_gas(0.0), 2) == doctest::Approx(2.0).epsilon(1e-15));
    for (const double beta : {0.1, 1.0, 4.0}) {
        const auto p = make_gas(beta);
        for (const int k : {1, 2, 3}) {
            const double q = integral([&](double r) { return std::pow(r, k) * clearance_pdf(p, r); });
            CHECK(moment(p, k) == doctest::Approx(q).epsilon(1e-9));
        }
    }
    const auto p1 = make_gas(1.0);
    CHECK(std::abs(moment(p1, 1) - 1.0) < 2e-2);
    const double var = moment(p1, 2) - moment(p1, 1) * moment(p1, 1);
    CHECK(var == doctest::Approx(0.2939).epsilon(1e-3));
    CHECK_THROWS_AS((void)moment(p1, 0), std::domain_error);
}

TEST_CASE("nth_pdf") {
    for (const double beta : {0.0, 0.3, 1.0, 5.0})
        for (const double r : {1e-3, 0.2, 1.0, 3.7, 25.0}) {
            const double a = nth_pdf(0, beta, r), b = clearance_pdf(make_gas(beta), r);
            CHECK(std::abs(a - b) <= 1e-12 * b);
        }
    NthSpacingDensity d1(1, 1.0);
    CHECK(std::abs(integral([&](double r) { return d1(r); }, 2.0) - 1.0) < 1e-8);
    CHECK(nth_pdf(2, 1.0, 0.0) == 0.0);
    CHECK(nth_pdf(2, 1.0, -3.0) == 0.0);

    // Unimodality of p_3 at beta = 2 on a 1e4-point grid.
    NthSpacingDensity d3(3, 2.0);
    std::vector<double> v(10000);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = d3((i + 1) * 1e-3);
    const auto peak = std::max_element(v.begin(), v.end()) - v.begin();
    CHECK(peak > 0);
    CHECK(peak < static_cast<long>(v.size()) - 1);
    for (long i = 1; i <= peak; ++i) CHECK(v[i] >= v[i - 1]);
    for (std::size_t i = peak + 1; i < v.size(); ++i) CHECK(v[i] <= v[i - 1]);
}

TEST_CASE("nth densities are normalized and their mean matches quadrature") {
    for (const double beta : {0.25, 1.0, 4.0})
        for (const int n : {0, 1, 5, 10}) {
            NthSpacingDensity d(n, beta);
            CAPTURE(beta);
            CAPTURE(n);
            CHECK(std::abs(integral([&](double r) { return d(r); }, n + 1.0) - 1.0) < 1e-8);
            CHECK(d.mean() ==
                  doctest::Approx(integral([&](double r) { return r * d(r); }, n + 1.0)).epsilon(1e-9));
        }
    // Large n stays finite in log space.
    NthSpacingDensity big(500, 2.0);
    CHECK(std::isfinite(big.log_N()));
    CHECK(big(400.0) > 0.0);
}

TEST_CASE("convolution oracle") {
    const auto g0 = convolution_oracle(0, 1.0, 0.01, 40.0);
    const auto p = make_gas(1.0);
    for (std::size_t i = 0; i < g0.values.size(); i += 97) CHECK(g0.values[i] == clearance_pdf(p, g0.r(i)));

    const auto gamma2 = convolution_oracle(1, 0.0, 0.001, 40.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < gamma2.values.size(); ++i) {
        const double r = gamma2.r(i);
        worst = std::max(worst, std::abs(gamma2.values[i] - r * std::exp(-r)));
    }
    CHECK(worst < 1e-3);

    const auto p2 = convolution_oracle(2, 1.0, 0.005, 40.0);
    CHECK(std::abs(p2.mass() - 1.0) < 1e-4);
    const double l1 = l1_distance(p2, NthSpacingDensity(2, 1.0));
    MESSAGE("L1(p_2 saddle, exact), beta=1: " << l1);
    CHECK(std::abs(l1 - 0.16667) < 1e-3);

    CHECK_THROWS_AS((void)convolution_oracle(1, 1.0, 0.01, 5.0), GridTooCoarse);
    CHECK_THROWS_AS((void)convolution_oracle(1, 1.0, 2.0, 40.0), GridTooCoarse);
}

TEST_CASE("unfolding and spacing sequences") {
    const auto u = unfold(std::vector<double>{2.0, 4.0, 6.0});
    REQUIRE(u.size() == 3);
    CHECK(u.values()[0] == 0.5);
    CHECK(u.values()[1] == 1.0);
    CHECK(u.values()[2] == 1.5);
    CHECK(u.sum() == 3.0);
    CHECK(u.is_unfolded());
    const auto pos = u.positions();
    REQUIRE(pos.size() == 4);
    CHECK(pos.front() == 0.0);
    CHECK(pos.back() == 3.0);
    CHECK_THROWS_AS((void)unfold(std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS(SpacingSequence(std::vector<double>{1.0, -1.0}), std::invalid_argument);

    std::mt19937_64 rng(1);
    std::exponential_distribution<double> e(0.37);
    std::vector<double> many(1000003);
    for (auto& x : many) x = e(rng);
    const auto big = unfold(many);
    CHECK(std::abs(big.sum() - static_cast<double>(big.size())) <= 1e-12 * big.size());
}

TEST_CASE("sampler: Poisson limit moments") {
    const std::size_t n = 1000000;
    const auto s = sample_spacings(make_gas(0.0), n, 42);
    double mean = 0.0;
    for (const double x : s.values()) mean += x;
    mean /= n;
    double var = 0.0;
    for (const double x : s.values()) var += (x - mean) * (x - mean);
    var /= (n - 1);
    CHECK(std::abs(mean - 1.0) < 3.0 / std::sqrt(double(n)));
    CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(8.0 / n));  // Var of sample variance: (mu4 - 1)/n, mu4 = 9
}

TEST_CASE("sampler: Kolmogorov-Smirnov at beta = 2") {
    const std::size_t n = 1000000;
    const auto p = make_gas(2.0);
    auto s = sample_spacings(p, n, 2024);
    std::vector<double> v(s.values().begin(), s.values().end());
    std::sort(v.begin(), v.end());
    const TabulatedCdf cdf(p, 30.0, 600000);
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double F = cdf(v[i]);
        d = std::max({d, F - double(i) / n, double(i + 1) / n - F});
    }
    MESSAGE("KS distance: " << d);
    CHECK(d < 1.628 / std::sqrt(double(n)));
}

TEST_CASE("sampler: mean converges to the first moment") {
    for (const double beta : {0.5, 4.0}) {
        const auto p = make_gas(beta);
        const std::size_t n = 400000;
        const auto s = sample_spacings(p, n, 7);
        const double sd = std::sqrt(moment(p, 2) - moment(p, 1) * moment(p, 1));
        CHECK(std::abs(s.mean() - moment(p, 1)) < 4.0 * sd / std::sqrt(double(n)));
    }
}

TEST_CASE("sampler: determinism") {
    const auto a = sample_spacings(make_gas(2.0), 1000000, 99);
    const auto b = sample_spacings(make_gas(2.0), 1000000, 99);
    CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin(), b.values().end()));
    const auto c = sample_spacings(make_gas(2.0), 1000, 100);
    CHECK_FALSE(std::equal(c.values().begin(), c.values().end(), a.values().begin()));
}

TEST_CASE("sampler: acceptance rate at least 20% on [0, 8]") {
    for (double beta = 0.0; beta <= 8.0 + 1e-12; beta += 0.25) {
        ClearanceSampler sampler(make_gas(beta));
        std::mt19937_64 rng(5);
        for (int i = 0; i < 20000; ++i) (void)sampler(rng);
        const double empirical = double(sampler.accepted()) / double(sampler.proposals());
        CAPTURE(beta);
        CHECK(sampler.acceptance_rate() >= 0.2);
        CHECK(empirical >= 0.2);
        CHECK(std::abs(empirical - sampler.acceptance_rate()) < 0.02);
    }
}
