#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "drlab/redtree.hpp"
#include "drlab/stats.hpp"

using namespace drlab;
using Catch::Approx;

namespace {

const double kE = std::exp(1.0);

const Trajectory& critical_traj() {
    static const Trajectory traj = integrate_dynamics(PhasePoint(0.0, kE), 1000.0);
    return traj;
}

double limit_cdf(double r, double x) { return r >= 1.0 ? 1.0 : 1.0 - first_branching_survival(r, x); }

}  // namespace

TEST_CASE("rho along trajectories") {
    const auto& traj = critical_traj();
    CHECK(traj.rho_at(0.0) == Approx(kE).epsilon(1e-15));
    const double s = 1000.0;
    const double rho = traj.rho_at(s);
    // leading order 2/s^2 with the first log correction of lambda - 1 and 1 - p
    CHECK(rho * s * s == Approx(2.0).epsilon(0.03));
    const double corrected = 2.0 / (s * s) * (1.0 + 2.0 / s - (8.0 / 3.0) * std::log(s) / s);
    CHECK(rho == Approx(corrected).epsilon(0.01));

    const auto pin = integrate_dynamics(PhasePoint(0.3, 0.5), 30.0);
    CHECK(pin.rho_at(30.0) == Approx(pin.lambda_at(30.0)).epsilon(1e-9));
    CHECK_THROWS_AS(pin.rho_at(31.0), DomainError);
}

TEST_CASE("rho table bounds dominate rho") {
    const auto& traj = critical_traj();
    const RhoTable tab(traj, 200.0);
    Rng rng(3);
    for (int k = 0; k < 2000; ++k) {
        double a = 200.0 * rng.uniform(), b = 200.0 * rng.uniform();
        if (a > b) std::swap(a, b);
        const double bound = tab.sup(a, b);
        for (int j = 0; j <= 8; ++j) CHECK(tab.at(a + (b - a) * j / 8.0) <= bound);
    }
}

TEST_CASE("red tree with rho identically zero is a single branch") {
    const auto traj = integrate_dynamics(PhasePoint(0.5, 0.0), 10.0);
    const RhoTable tab(traj, 10.0);
    Rng rng(1);
    const auto tree = simulate_red_tree(2.0, 10.0, tab, rng);
    REQUIRE(tree.nodes.size() == 1);
    const auto st = leaf_stats(tree);
    CHECK(st.N == 1);
    CHECK(st.M == 12.0);
    const auto th = theta_solve(traj, 0.3, 0.2, 10.0);
    CHECK(th.theta_t() == Approx(0.3 + 0.2 * 10.0).epsilon(1e-15));
}

TEST_CASE("red tree mass bookkeeping") {
    const auto& traj = critical_traj();
    const RhoTable tab(traj, 60.0);
    Rng root(5);
    for (int r = 0; r < 200; ++r) {
        Rng rng = root.split(static_cast<std::uint64_t>(r));
        const double x0 = r % 2 ? 0.0 : 3.0;
        const auto tree = simulate_red_tree(x0, 60.0, tab, rng);
        double len = 0.0;
        for (const auto& n : tree.nodes) {
            len += n.death - n.birth;
            if (n.leaf()) {
                CHECK(n.death == 60.0);
            } else {
                const auto& c0 = tree.nodes[static_cast<std::size_t>(n.child[0])];
                const auto& c1 = tree.nodes[static_cast<std::size_t>(n.child[1])];
                CHECK(c0.birth == n.death);
                CHECK(c1.birth == n.death);
                CHECK(c0.mass_birth + c1.mass_birth == Approx(n.mass_death()).epsilon(1e-14));
            }
        }
        const auto st = leaf_stats(tree);
        CHECK(st.N >= 1);
        CHECK(st.M <= x0 + len + 1e-9);
    }
}

TEST_CASE("streaming statistics agree with stored trees") {
    const auto& traj = critical_traj();
    const RhoTable tab(traj, 40.0);
    for (std::uint64_t r = 0; r < 50; ++r) {
        Rng a = Rng(9).split(r), b = Rng(9).split(r);
        const auto full = leaf_stats(simulate_red_tree(1.0, 40.0, tab, a));
        const auto fast = simulate_red_tree_stats(1.0, 40.0, tab, b);
        CHECK(full.N == fast.N);
        CHECK(full.M == Approx(fast.M).epsilon(1e-13));
        CHECK(full.first_branch == fast.first_branch);
    }
}

TEST_CASE("first split fraction is uniform") {
    const auto& traj = critical_traj();
    const RhoTable tab(traj, 50.0);
    Rng root(11);
    std::vector<double> frac;
    for (std::uint64_t r = 0; r < 5000; ++r) {
        Rng rng = root.split(r);
        const auto tree = simulate_red_tree(5.0, 50.0, tab, rng);
        if (tree.nodes[0].leaf()) continue;
        const auto& c = tree.nodes[static_cast<std::size_t>(tree.nodes[0].child[0])];
        frac.push_back(c.mass_birth / tree.nodes[0].mass_death());
    }
    std::sort(frac.begin(), frac.end());
    const auto F = [](double u) { return std::clamp(u, 0.0, 1.0); };
    CHECK(ks_one_sample(frac, F, F) < ks_critical_one(0.01, frac.size()));
}

TEST_CASE("first branching survival closed form") {
    CHECK(first_branching_survival(0.0, 0.0) == 1.0);
    CHECK(first_branching_survival(0.5, 0.0) == Approx(4.0 * std::exp(-2.0)).epsilon(1e-15));
    CHECK(first_branching_survival(0.5, 1.0) == Approx(4.0 * std::exp(-4.0)).epsilon(1e-15));
    // against the integrated hazard by composite Simpson
    for (double x : {0.0, 0.3, 2.0}) {
        for (double r : {1e-6, 0.1, 0.5, 0.9}) {
            const int n = 20000;
            const double h = r / n;
            double acc = 0.0;
            for (int k = 0; k <= n; ++k) {
                const double v = k * h;
                const double f = 2.0 * (x + v) / ((1.0 - v) * (1.0 - v));
                acc += (k == 0 || k == n ? 1.0 : (k % 2 ? 4.0 : 2.0)) * f;
            }
            const double hazard = acc * h / 3.0;
            CHECK(limit_hazard(x, 1.0, r) == Approx(hazard).epsilon(1e-10).margin(1e-22));
        }
    }
    // closed form at x = 0
    for (double r : {0.05, 0.25, 0.5, 0.75, 0.95}) {
        const double closed = 1.0 - std::exp(-2.0 * r / (1.0 - r)) / ((1.0 - r) * (1.0 - r));
        CHECK(limit_cdf(r, 0.0) == Approx(closed).epsilon(1e-14));
    }
    CHECK_THROWS_AS(first_branching_survival(1.0, 0.0), DomainError);
}

TEST_CASE("limit first branch sampler") {
    const std::size_t n = 100000;
    Rng root(21);
    std::vector<double> r(n);
    double survive = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        Rng rng = root.split(k);
        r[k] = limit_first_branch(0.0, rng);
        survive += r[k] > 0.5;
    }
    const double p = 4.0 * std::exp(-2.0);
    CHECK(std::abs(survive / n - p) < 3.0 * std::sqrt(p * (1 - p) / n));
    std::sort(r.begin(), r.end());
    const auto F = [](double v) { return v <= 0.0 ? 0.0 : limit_cdf(v, 0.0); };
    CHECK(ks_one_sample(r, F, F) < ks_critical_one(0.01, n));

    // negative control: freezing the 1/(1-s)^2 factor gives hazard v^2,
    // which the KS test must reject
    std::vector<double> frozen(n);
    Rng ctl(22);
    for (auto& v : frozen) v = std::sqrt(ctl.exponential());
    std::sort(frozen.begin(), frozen.end());
    CHECK(ks_one_sample(frozen, F, F) > ks_critical_one(0.01, n));
}

TEST_CASE("limit tree") {
    const std::size_t n = 100000;
    Rng root(31);
    double survive = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        Rng rng = root.split(k);
        const auto tree = simulate_limit_tree(0.0, 0.5, rng);
        survive += tree.nodes[0].leaf();
    }
    const double p = first_branching_survival(0.5, 0.0);
    CHECK(std::abs(survive / n - p) < 3.0 * std::sqrt(p * (1 - p) / n));

    Rng rng(32);
    for (int k = 0; k < 200; ++k) {
        const auto tree = simulate_limit_tree(0.7, 0.05, rng);
        for (const auto& nd : tree.nodes) {
            if (nd.leaf()) {
                CHECK(nd.death == Approx(0.95).epsilon(1e-15));
                continue;
            }
            const auto& c0 = tree.nodes[static_cast<std::size_t>(nd.child[0])];
            const auto& c1 = tree.nodes[static_cast<std::size_t>(nd.child[1])];
            CHECK(c0.mass_birth + c1.mass_birth == Approx(nd.mass_death()).epsilon(1e-14));
        }
    }
}

TEST_CASE("rescaled first branch converges to the limit") {
    const auto& traj = critical_traj();
    const std::size_t n = 100000;
    double prev = 1.0;
    const auto F = [](double v) { return v <= 0.0 ? 0.0 : limit_cdf(v, 0.0); };
    for (double t : {10.0, 50.0, 200.0}) {
        const RhoTable tab(traj, t);
        const Rng root(41);
        std::vector<double> r(n);
        for (std::size_t k = 0; k < n; ++k) {
            Rng rng = root.split(k);
            r[k] = red_tree_first_branch(0.0, t, tab, rng) / t;
        }
        std::sort(r.begin(), r.end());
        const double d = ks_one_sample(r, F, F);
        CHECK(d < prev);
        prev = d;
    }
    // finite-t bias is still visible at t = 200 (about log t / t)
    CHECK(prev < 0.05);
}

TEST_CASE("theta equation") {
    const auto& traj = critical_traj();
    const auto zero = theta_solve(traj, 0.0, 0.0, 30.0);
    for (double v : zero.theta) CHECK(v == 0.0);

    const auto th = theta_solve(traj, 0.1, 0.05, 30.0);
    for (std::size_t k = 0; k < th.s.size(); ++k) {
        CHECK(th.theta[k] > 0.0);
        CHECK(th.dtheta[k] > 0.0);
        if (k) CHECK(th.dtheta[k] >= th.dtheta[k - 1]);  // convex
    }
    // small data: Theta_eps / eps approaches the linearized solution. The
    // gap is second order, about 0.1 a(t) eps, so 10 eps is met at t = 10.
    double prev_gap = INFINITY;
    for (double eps : {1e-3, 1e-4, 1e-5}) {
        const auto small = theta_solve(traj, eps * 0.5, eps * 0.25, 10.0);
        const auto lin = linearized_value(traj, 10.0, 0.5, 0.25);
        const double gap = std::abs(small.theta_t() / eps - lin.first) / lin.first;
        CHECK(gap < 10.0 * eps);
        CHECK(gap < 0.2 * prev_gap);
        prev_gap = gap;
    }
    // comparison principle
    const auto lo = theta_solve(traj, 0.05, 0.01, 30.0);
    const auto hi = theta_solve(traj, 0.06, 0.02, 30.0);
    CHECK(lo.theta_t() < hi.theta_t());
    CHECK(lo.dtheta_t() < hi.dtheta_t());
}

TEST_CASE("laplace phi") {
    const auto& traj = critical_traj();
    CHECK(laplace_phi(traj, 30.0, 1.0, 0.0, 0.0) == 1.0);
    const double base = laplace_phi(traj, 30.0, 0.5, 0.1, 0.05);
    CHECK(laplace_phi(traj, 30.0, 0.5, 0.2, 0.05) < base);
    CHECK(laplace_phi(traj, 30.0, 0.5, 0.1, 0.1) < base);
    CHECK(laplace_phi(traj, 30.0, 1.0, 0.1, 0.05) < base);
}

TEST_CASE("laplace phi matches red tree Monte Carlo") {
    const auto& traj = critical_traj();
    const RhoTable tab(traj, 30.0);
    const std::size_t n = 20000;
    const auto stats = red_tree_replicas(0.0, 30.0, tab, n, 51);
    std::vector<double> v(n), N(n), M(n);
    for (std::size_t k = 0; k < n; ++k) {
        v[k] = std::exp(-0.01 * static_cast<double>(stats[k].N));
        N[k] = static_cast<double>(stats[k].N);
        M[k] = stats[k].M;
    }
    const auto ms = mean_sd(v);
    CHECK(std::abs(ms.mean - laplace_phi(traj, 30.0, 0.0, 0.01, 0.0)) < 3.0 * ms.se);
    const auto lin = linearized_solve(traj, 30.0);
    const auto mn = mean_sd(N), mm = mean_sd(M);
    CHECK(std::abs(mn.mean - lin.mean_N(0.0)) < 3.0 * mn.se);
    CHECK(std::abs(mm.mean - lin.mean_M(0.0)) < 3.0 * mm.se);

    // with initial mass x = 2 the means pick up x a'(t)
    const auto sx = red_tree_replicas(2.0, 30.0, tab, n, 52);
    std::vector<double> Nx(n);
    for (std::size_t k = 0; k < n; ++k) Nx[k] = static_cast<double>(sx[k].N);
    const auto mx = mean_sd(Nx);
    CHECK(std::abs(mx.mean - lin.mean_N(2.0)) < 3.0 * mx.se);
}

TEST_CASE("linearized equation") {
    const auto& traj = critical_traj();
    const auto lin = linearized_solve(traj, 50.0);
    const auto mix = linearized_value(traj, 50.0, 0.7, 1.3);
    CHECK(mix.first == Approx(0.7 * lin.a1 + 1.3 * lin.a2).epsilon(1e-10));
    CHECK(mix.second == Approx(0.7 * lin.da1 + 1.3 * lin.da2).epsilon(1e-10));

    const auto g1 = linearized_gammas(traj, 1e4);
    const auto g2 = linearized_gammas(traj, 2e4);
    CHECK(g1.gamma1 > 0.0);
    CHECK(g1.gamma2 > 0.0);
    CHECK(g1.gamma1 == Approx(g2.gamma1).epsilon(0.005));
    CHECK(g1.gamma2 == Approx(g2.gamma2).epsilon(0.005));
    CHECK(g1.plateau_error < 0.01);
    CHECK_THROWS_AS(linearized_gammas(traj, 20.0), NumericalError);
    CHECK_THROWS_AS(linearized_gammas(integrate_dynamics(PhasePoint(0.3, 0.5), 1.0), 10.0), DomainError);
}

TEST_CASE("limit laplace transform") {
    CHECK(limit_laplace(0.0, 0.0) == 1.0);
    CHECK(limit_laplace(1.0, 0.0) == Approx(0.400279573678727530).epsilon(1e-14));
    // series and closed form meet smoothly at c = 1e-4
    CHECK(limit_laplace(1e-4 * (1 - 1e-12), 0.3) == Approx(limit_laplace(1e-4 * (1 + 1e-12), 0.3)).epsilon(1e-14));
    // -d/dc at 0 is E[eta] = 1 (x = 0) and 1 + 2x in general
    const double h = 1e-6;
    CHECK((1.0 - limit_laplace(h, 0.0)) / h == Approx(1.0).epsilon(1e-5));
    CHECK((1.0 - limit_laplace(h, 0.5)) / h == Approx(2.0).epsilon(1e-5));
    CHECK(limit_laplace(400.0, 0.0) > 0.0);
}

TEST_CASE("bessel bridge functional") {
    Rng rng(61);
    const auto b = bessel_eta_sample(0.7, 500, rng);
    REQUIRE(b.r.size() == 501);
    CHECK(b.r.front() == 0.0);
    CHECK(b.r.back() == 2.0 * std::sqrt(0.7));
    CHECK(b.eta >= 0.0);

    const std::size_t n = 20000;
    std::vector<double> eta(n), lap(n), lapx(n);
    Rng root(62);
    for (std::size_t k = 0; k < n; ++k) {
        Rng r = root.split(k);
        eta[k] = bessel_eta(0.0, 400, r);
        lap[k] = std::exp(-eta[k]);
        lapx[k] = std::exp(-0.5 * bessel_eta(0.5, 400, r));
    }
    const auto me = mean_sd(eta), ml = mean_sd(lap), mx = mean_sd(lapx);
    CHECK(std::abs(me.mean - 1.0) < 3.0 * me.se);
    CHECK(std::abs(ml.mean - limit_laplace(1.0, 0.0)) < 3.0 * ml.se);
    CHECK(std::abs(mx.mean - limit_laplace(0.5, 0.5)) < 3.0 * mx.se);
    CHECK_THROWS_AS(bessel_eta(0.0, 10, rng), DomainError);
}

TEST_CASE("leaf limit check reports the finite-t oracle") {
    const auto& traj = critical_traj();
    const GammaConstants g = linearized_gammas(traj, 1e4);
    const auto rep = leaf_limit_check(traj, 50.0, 4000, 1.0, 0.0, 0.0, 71, g);
    CHECK(std::abs(rep.mc_mean - rep.ode_phi) < 3.0 * rep.mc_se);
    CHECK(rep.limit == Approx(limit_laplace(g.gamma1, 0.0)));
    const auto zero = leaf_limit_check(traj, 50.0, 100, 0.0, 0.0, 0.0, 72, g);
    CHECK(zero.mc_mean == 1.0);
    CHECK(zero.limit == 1.0);
    CHECK(zero.to_json()["pass"] == true);
}
