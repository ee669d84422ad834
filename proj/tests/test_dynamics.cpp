#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "drlab/dynamics.hpp"

using namespace drlab;
using Catch::Approx;

constexpr double kE = std::numbers::e;

TEST_CASE("conserved_H and critical_p") {
    CHECK(conserved_H({0.0, kE}) == Approx(1.0).epsilon(1e-15));
    CHECK(conserved_H({0.5, 0.5}) == Approx(0.306852819440054691).epsilon(1e-14));
    CHECK(conserved_H({0.5, 2.0}) == Approx(0.943147180559945309).epsilon(1e-14));
    CHECK_THROWS_AS(conserved_H({0.5, 0.0}), DomainError);

    CHECK(critical_p(1.0) == 1.0);
    CHECK(critical_p(kE) == Approx(0.0).margin(1e-15));
    CHECK(critical_p(2.0) == Approx(0.613705638880109381).epsilon(1e-14));
    CHECK_THROWS_AS(critical_p(0.0), DomainError);
}

TEST_CASE("classify_phase") {
    CHECK(classify_phase({0.5, 0.5}) == Phase::Pinned);
    CHECK(classify_phase({0.0, kE}) == Phase::Critical);
    CHECK(classify_phase({0.9, 2.0}) == Phase::Unpinned);
    CHECK(classify_phase({0.613705638880109381, 2.0}) == Phase::Critical);
    CHECK(classify_phase({0.6, 2.0}) == Phase::Pinned);
    CHECK(classify_phase({0.3, 1.0}) == Phase::Pinned);
    CHECK(classify_phase({1.0 - 1e-12, 1.0}) == Phase::DegenerateBoundary);
    CHECK(classify_phase({0.2, 0.0}) == Phase::Pinned);
    CHECK_THROWS_AS(PhasePoint(1.0, 2.0), DomainError);
}

TEST_CASE("trajectory matches an independent high-precision integration") {
    // mpmath odefun (Taylor series, 25 digits) on the original (p, lambda) system
    struct Ref {
        double p0, l0, t, p, lam;
    };
    const Ref refs[] = {
        {0.3, 2.2, 1, 0.77734649589284534346, 1.5035020756456629858},
        {0.3, 2.2, 5, 0.92667182099380434509, 0.96886660202672191368},
        {0.0, kE, 3, 0.93728440499006429041, 1.3745026742894134653},
        {0.0, kE, 10, 0.98928584122732067147, 1.1499135801509661778},
        {0.0, 1.0, 3, 0.25868047692610507768, 0.12384719690822045665},
        {0.0, 1.0, 5, 0.087720862619068456155, 0.023346814347301814864},
        {0.5, 1.0, 2, 0.579876739017280635, 0.43584091663408940873},
        {0.9, 2.0, 5, 0.99867181301048917911, 1.8021945373165784287},
    };
    for (const auto& r : refs) {
        auto tr = integrate_dynamics({r.p0, r.l0}, r.t);
        CHECK(tr.p_at(r.t) == Approx(r.p).epsilon(1e-9));
        CHECK(tr.lambda_at(r.t) == Approx(r.lam).epsilon(1e-9));
        CHECK(tr.q_at(r.t) == Approx(1.0 - r.p).epsilon(1e-7));
    }
}

TEST_CASE("lambda = 0 boundary uses the logistic formula") {
    auto tr = integrate_dynamics({0.2, 0.0}, 4.0);
    for (double s : {0.0, 1.0, 2.5, 4.0}) {
        CHECK(tr.p_at(s) == Approx(1.0 / ((1.0 / 0.2 - 1.0) * std::exp(s) + 1.0)).epsilon(1e-15));
        CHECK(tr.rho_at(s) == 0.0);
    }
}

TEST_CASE("critical asymptotics") {
    auto tr = integrate_dynamics({0.0, kE}, 1000.0);
    const double t = 1000.0;
    const double lam = tr.lambda_at(t);
    const double pred = 1.0 + 2.0 / t - (8.0 / 3.0) * std::log(t) / (t * t);
    CHECK(lam == Approx(pred).epsilon(1e-5));
    const double ratio = (lam - 1.0 - 2.0 / t) * t * t / std::log(t);
    CHECK(std::fabs(ratio / (-8.0 / 3.0) - 1.0) < 0.25);
    // rho(s) s^2 -> 2
    CHECK(tr.rho_at(t) * t * t == Approx(2.0).epsilon(0.01 + 16.0 / 3.0 * std::log(t) / t));
}

TEST_CASE("unpinned convergence rate") {
    const PhasePoint pt(0.9, 2.0);
    const double x = equilibrium_lambda(conserved_H(pt));
    auto tr = integrate_dynamics(pt, 30.0);
    const double r1 = std::log(tr.lambda_at(10.0) - x), r2 = std::log(tr.lambda_at(20.0) - x);
    CHECK((r2 - r1) / 10.0 == Approx(-(x - 1.0)).epsilon(1e-3));
    CHECK(tr.lambda_at(30.0) == Approx(x).epsilon(1e-6));
}

TEST_CASE("equilibrium_lambda") {
    CHECK(equilibrium_lambda((1.0 + kE) / kE) == Approx(kE).epsilon(1e-12));
    CHECK_THROWS_AS(equilibrium_lambda(1.0), DomainError);
    const double x = equilibrium_lambda(1.2);
    CHECK(x == Approx(2.02741295970667748).epsilon(1e-12));
    CHECK(std::fabs(1.2 * x - x * std::log(x) - 1.0) < 1e-12);
}

TEST_CASE("trajectory invariants") {
    for (auto pt : {PhasePoint(0.3, 2.2), PhasePoint(0.0, kE), PhasePoint(0.9, 2.0), PhasePoint(0.5, 0.5)}) {
        auto tr = integrate_dynamics(pt, 50.0);
        for (std::size_t k = 0; k < tr.t.size(); ++k) {
            REQUIRE(tr.p[k] >= 0.0);
            REQUIRE(tr.p[k] <= 1.0);
            if (k) REQUIRE(tr.lambda[k] <= tr.lambda[k - 1]);
            const double lam = tr.lambda[k];
            REQUIRE(std::fabs(tr.p[k] - (tr.H * lam - lam * std::log(lam))) < 1e-10 * std::max(1.0, tr.H));
        }
    }
}

TEST_CASE("rho interpolation error below 1e-8 relative") {
    for (auto pt : {PhasePoint(0.3, 0.5), PhasePoint(0.0, kE), PhasePoint(0.9, 2.0), PhasePoint(0.6, 2.0)}) {
        const double T = 60.0;
        auto tr = integrate_dynamics(pt, T);
        double worst = 0.0;
        for (std::size_t k = 0; k + 1 < tr.t.size(); k += 7) {
            const double s = 0.5 * (tr.t[k] + tr.t[k + 1]);
            auto fine = integrate_dynamics(pt, s);
            const double exact = fine.rho[fine.rho.size() - 1];
            worst = std::max(worst, std::fabs(tr.rho_at(s) - exact) / exact);
        }
        INFO("p=" << pt.p << " lambda=" << pt.lambda);
        CHECK(worst < 1e-8);
    }
}

TEST_CASE("free energy: oracle, cross-method and trichotomy") {
    // mpmath quad of the same integral at 30 digits
    auto fq = free_energy_quadrature({0.3, 0.5});
    CHECK(fq.value == Approx(0.697480328192242092).epsilon(1e-12));
    auto fo = free_energy_ode_limit({0.3, 0.5}, 40.0);
    CHECK(fo.value == Approx(fq.value).epsilon(1e-6));
    CHECK(free_energy_quadrature({0.9, 2.0}).value == 0.0);
    CHECK(free_energy_quadrature({0.0, kE}).value == 0.0);
    CHECK(free_energy_ode_limit({0.4, 0.0}, 10.0).value == 0.0);
    CHECK_THROWS_AS(free_energy_ode_limit({0.3, 0.5}, 5.0), NumericalError);
    CHECK(fq.value <= 0.7 / 0.5);

    // F decreases to 0 as p -> p_c along lambda near e
    const double lam = 2.6;
    double prev = INFINITY;
    for (double gap : {0.1, 0.05, 0.02, 0.01}) {
        const double F = free_energy_quadrature({critical_p(lam) - gap, lam}).value;
        CHECK(F < prev);
        CHECK(F > 0.0);
        prev = F;
    }
}

TEST_CASE("free energy near the critical curve matches mpmath") {
    // mpmath quad with breakpoints at y=1, 30 digits
    CHECK(std::log(free_energy_quadrature({critical_p(2.0) - 0.0025, 2.0}).value) ==
          Approx(-123.029551690130124).epsilon(1e-10));
}

TEST_CASE("asymptote shapes") {
    const double d = 0.01;
    CHECK(asymptote_prediction(2.0, critical_p(2.0) - d) == Approx(std::exp(-2 * std::numbers::pi / std::sqrt(d))).epsilon(1e-10));
    CHECK(asymptote_prediction(1.0, 1.0 - d) ==
          Approx(std::pow(d, 2.0 / 3.0) * std::exp(-std::numbers::pi / std::sqrt(2.0) / std::sqrt(d))).epsilon(1e-12));
    CHECK(asymptote_prediction(0.5, 1.0 - d) == Approx(d * d).epsilon(1e-12));
    CHECK_THROWS_AS(asymptote_prediction(kE, 0.1), DomainError);
}

TEST_CASE("fixed point and weak PDE residuals") {
    CHECK(verify_fixed_point({0.5, 1.0}, 0.0) == 0.0);
    CHECK(verify_fixed_point({0.5, 1.0}, 2.0) < 1e-6);
    CHECK(verify_fixed_point({0.0, kE}, 5.0) < 1e-6);
    CHECK(verify_fixed_point({0.4, 0.0}, 3.0) < 1e-9);

    CHECK(verify_pde_weak({0.4, 0.0}, 0.7, 3.0) < 1e-9);
    CHECK(verify_pde_weak({0.5, 1.0}, 1.0, 3.0) < 1e-7);
    CHECK(verify_pde_weak({0.0, kE}, 0.5, 10.0) < 1e-7);
    // residual shrinks under grid refinement
    DynamicsOptions coarse;
    coarse.atol = 1e-6;
    coarse.rtol = 1e-6;
    coarse.h_max_rel = 0.5;
    CHECK(verify_pde_weak({0.5, 1.0}, 1.0, 3.0) <= verify_pde_weak({0.5, 1.0}, 1.0, 3.0, coarse));
}
