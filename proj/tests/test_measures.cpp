#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "drlab/errors.hpp"
#include "drlab/measures.hpp"
#include "drlab/stats.hpp"

using namespace drlab;
using Catch::Approx;

// Reference values evaluated with mpmath at 30 digits.
constexpr double kCdf02_2_1 = 0.891731773410709846;
constexpr double kGamma2Shift1 = 0.264241117657115357;

TEST_CASE("cdf") {
    CHECK(cdf(ExpMixture(0.5, 1.0), 0.0) == 0.5);
    CHECK(cdf(ExpMixture(0.0, 1.0), INFINITY) == 1.0);
    CHECK(cdf(ExpMixture(0.2, 2.0), 1.0) == Approx(kCdf02_2_1).epsilon(1e-14));
    CHECK_THROWS_AS(cdf(ExpMixture(0.2, 2.0), -1.0), DomainError);
    // lambda = 0 is allowed only here
    CHECK(cdf(ExpMixture(0.3, 0.0), 5.0) == 0.3);
}

TEST_CASE("quantile") {
    CHECK(quantile(ExpMixture(0.5, 1.0), 0.3) == 0.0);
    CHECK(quantile(ExpMixture(0.0, 1.0), 1.0 - std::exp(-1.0)) == Approx(1.0).epsilon(1e-14));
    CHECK(quantile(ExpMixture(0.2, 2.0), kCdf02_2_1) == Approx(1.0).margin(1e-9));
    CHECK_THROWS_AS(quantile(ExpMixture(0.2, 2.0), 1.0), DomainError);
    CHECK_THROWS_AS(quantile(ExpMixture(0.2, 0.0), 0.5), DomainError);
}

TEST_CASE("sample") {
    Rng rng(11);
    ExpMixture atom(1.0, 3.0);
    for (int i = 0; i < 1000; ++i) REQUIRE(sample(atom, rng) == 0.0);

    const int n = 1000000;
    double s = 0.0;
    ExpMixture e(0.0, 1.0);
    for (int i = 0; i < n; ++i) s += sample(e, rng);
    CHECK(std::fabs(s / n - 1.0) < 0.004);

    int zeros = 0;
    ExpMixture h(0.5, 2.0);
    for (int i = 0; i < n; ++i) zeros += sample(h, rng) == 0.0;
    CHECK(std::fabs(double(zeros) / n - 0.5) < 0.0016);
    CHECK_THROWS_AS(sample(ExpMixture(0.5, 0.0), rng), DomainError);
}

TEST_CASE("convolve_self") {
    auto g1 = convolve_self(ExpMixture(1.0, 2.0));
    CHECK(g1.atom == 1.0);
    CHECK(g1.components.empty());

    auto g2 = convolve_self(ExpMixture(0.0, 1.0));
    CHECK(g2.atom == 0.0);
    CHECK(cdf(g2, 1.0) == Approx(1.0 - 2.0 * std::exp(-1.0)).epsilon(1e-14));

    auto g3 = convolve_self(ExpMixture(0.5, 1.0));
    CHECK(g3.atom == 0.25);
    CHECK(g3.components[0].weight == 0.5);
    CHECK(g3.components[1].weight == 0.25);
    CHECK(mean(g3) == Approx(1.0).epsilon(1e-14));
    g3.validate();
}

TEST_CASE("shift_cdf") {
    auto g = convolve_self(ExpMixture(0.3, 1.7));
    for (double x : {0.0, 0.4, 2.0}) CHECK(shift_cdf(g, 0.0, x) == cdf(g, x));
    AtomGammaMixture delta;
    CHECK(shift_cdf(delta, 3.0, 0.0) == 1.0);
    auto gamma2 = convolve_self(ExpMixture(0.0, 1.0));
    CHECK(shift_cdf(gamma2, 1.0, 0.0) == Approx(kGamma2Shift1).epsilon(1e-14));

    // closed-form shifted mixture agrees with CDF_g(x + s) and keeps mass 1
    for (double s : {0.0, 0.3, 2.5}) {
        auto sh = shift(g, s);
        CHECK(total_mass(sh) == Approx(1.0).margin(1e-14));
        CHECK(sh.atom == Approx(cdf(g, s)).margin(1e-15));
        for (double x : {0.0, 0.1, 1.0, 4.0}) CHECK(cdf(sh, x) == Approx(shift_cdf(g, s, x)).margin(1e-14));
    }
}

TEST_CASE("ks_distance") {
    CHECK(ks_distance(EmpiricalSample(std::vector<double>(50, 0.0)), ExpMixture(1.0, 2.0)) == 0.0);
    CHECK(ks_distance(EmpiricalSample({0.0}), ExpMixture(0.0, 1.0)) == 1.0);
    CHECK_THROWS(ks_distance(EmpiricalSample(), ExpMixture(0.0, 1.0)));

    // sampled from the law itself: pass the 1% test in the vast majority of runs
    const ExpMixture m(0.35, 1.3);
    int pass = 0;
    const int runs = 40, n = 100000;
    const double crit = ks_critical_one(0.01, n);
    CHECK(crit == Approx(1.6276 / std::sqrt(double(n))).epsilon(1e-3));
    Rng root(5);
    for (int r = 0; r < runs; ++r) {
        Rng rng = root.split(r);
        std::vector<double> v(n);
        for (auto& x : v) x = sample(m, rng);
        pass += ks_distance(EmpiricalSample(std::move(v)), m) < crit;
    }
    CHECK(pass >= 38);
}

TEST_CASE("ks with atom uses both one-sided limits") {
    // half zeros, half large: model with atom 0.5 matches at 0
    std::vector<double> v(100, 0.0);
    for (int i = 0; i < 100; ++i) v.push_back(1000.0 + i);
    const double d = ks_distance(EmpiricalSample(v), ExpMixture(0.5, 1.0));
    CHECK(d == Approx(0.5).margin(1e-12));
}
