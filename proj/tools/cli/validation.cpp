#include "validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "drlab/csv.hpp"
#include "drlab/dynamics.hpp"
#include "drlab/errors.hpp"
#include "drlab/measures.hpp"
#include "drlab/painting.hpp"
#include "drlab/redtree.hpp"
#include "drlab/stats.hpp"
#include "properties.hpp"

namespace drlab {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::uint64_t sub_seed(std::uint64_t seed, int id, int k = 0) {
    return splitmix64(splitmix64(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(id))) +
                      static_cast<std::uint64_t>(k));
}

std::string f(double v, int digits = 6) {
    std::ostringstream os;
    os.precision(digits);
    os << v;
    return os.str();
}

CriterionResult named(int id, std::string name) {
    CriterionResult r;
    r.id = id;
    r.name = std::move(name);
    return r;
}

const double e_ = std::numbers::e;
const double pi_ = std::numbers::pi;

// ----------------------------------------------------------------- ODE

CriterionResult c1_h_conservation(const ValidationOptions&) {
    CriterionResult r = named(1, "H conservation");
    const PhasePoint pt(0.3, 2.2);
    const Trajectory tr = integrate_dynamics(pt, 50.0);
    const double H0 = conserved_H(pt);
    double err = 0.0;
    for (std::size_t k = 0; k < tr.t.size(); ++k)
        err = std::max(err, std::fabs(tr.p[k] / tr.lambda[k] + std::log(tr.lambda[k]) - H0));
    r.measured = {{"max_abs_H_error", err}, {"grid_points", tr.t.size()}};
    r.pass = err < 1e-10;
    r.detail = "max|H(t)-H(0)| = " + f(err, 3) + " over " + std::to_string(tr.t.size()) + " grid points";
    return r;
}

CriterionResult c2_critical_asymptotics(const ValidationOptions&) {
    CriterionResult r = named(2, "critical ODE asymptotics");
    const double T = 1000.0;
    const Trajectory tr = integrate_dynamics({0.0, e_}, T);
    const double lt = std::log(T);
    const double lam_stat = (tr.lambda_at(T) - 1.0 - 2.0 / T) * T * T / lt;
    // p - (1 - 2/t^2) written through 1 - p to keep digits
    const double p_stat = (2.0 / (T * T) - tr.q_at(T)) * T * T * T / lt;
    const double lam_rel = std::fabs(lam_stat / (-8.0 / 3.0) - 1.0);
    const double p_rel = std::fabs(p_stat / (16.0 / 3.0) - 1.0);
    r.measured = {{"lambda_statistic", lam_stat}, {"lambda_target", -8.0 / 3.0}, {"lambda_rel_error", lam_rel},
                  {"p_statistic", p_stat},        {"p_target", 16.0 / 3.0},    {"p_rel_error", p_rel}};
    r.pass = lam_rel < 0.25 && p_rel < 0.25;
    r.detail = "(lambda-1-2/t)t^2/log t = " + f(lam_stat) + " (" + f(100 * lam_rel, 3) +
               "% from -8/3), (p-1+2/t^2)t^3/log t = " + f(p_stat) + " (" + f(100 * p_rel, 3) + "% from 16/3)";
    return r;
}

const std::vector<double> ladder{0.04, 0.02, 0.01, 0.005, 0.0025};

/// Slope fit of the free-energy asymptotics for one lambda over the gaps.
json free_energy_fit(double lam, const std::vector<double>& gaps, double& slope) {
    std::vector<double> xs, ys;
    json rows = json::array();
    for (double g : gaps) {
        const double p = lam > 1.0 ? critical_p(lam) - g : 1.0 - g;
        const auto F = free_energy_quadrature({p, lam});
        double x, y;
        if (lam > 1.0) {
            x = 1.0 / std::sqrt(g);
            y = F.log_value;
        } else if (lam == 1.0) {
            x = 1.0 / std::sqrt(g);
            y = F.log_value - (2.0 / 3.0) * std::log(g);
        } else {
            x = std::log(g);
            y = F.log_value;
        }
        xs.push_back(x);
        ys.push_back(y);
        rows.push_back({{"gap", g}, {"p", p}, {"F", F.value}, {"log_F", F.log_value}});
    }
    const LinearFit lf = linear_fit(xs, ys);
    slope = lf.slope;
    return {{"rows", rows}, {"slope", lf.slope}, {"intercept", lf.intercept}, {"r2", lf.r2}};
}

CriterionResult slope_criterion(int id, const std::string& name, double lam, double target, double tol) {
    CriterionResult r = named(id, name);
    double slope = 0.0;
    r.measured = free_energy_fit(lam, ladder, slope);
    const double rel = std::fabs(slope / target - 1.0);
    r.measured["target"] = target;
    r.measured["relative_error"] = rel;
    r.measured["tolerance"] = tol;
    r.pass = rel < tol;
    r.detail = "slope " + f(slope) + " vs " + f(target) + " (" + f(100 * rel, 3) + "%, tolerance " +
               f(100 * tol, 2) + "%)";
    return r;
}

CriterionResult c5_loglog(const ValidationOptions&) {
    CriterionResult r = slope_criterion(5, "free energy case iii (lambda=0.5)", 0.5, 2.0, 0.02);
    // supplementary: the exponent is approached slowly; a deeper ladder shows it
    double deep = 0.0;
    r.measured["supplementary_deep_ladder"] = free_energy_fit(0.5, {1e-3, 1e-4, 1e-5, 1e-6}, deep);
    r.detail += "; deeper ladder 1e-3..1e-6 slope " + f(deep) + " (supplementary)";
    return r;
}

// ------------------------------------------------------------ painting

CriterionResult c6_painting(const ValidationOptions& o) {
    CriterionResult r = named(6, "painting exactness");
    const std::size_t n = o.fast ? 20000 : 100000;
    const PhasePoint pt(0.0, 1.0);
    const ExpMixture law = integrate_dynamics(pt, 3.0).law_at(3.0);
    const auto res = monte_carlo_root_law(pt.law(), 3.0, n, sub_seed(o.seed, 6), o.workers);
    const double ks = ks_distance(res.sample, law);
    const double crit = 1.63 / std::sqrt(static_cast<double>(n));
    const double zf = res.summary.zero_fraction();
    const double sd = std::sqrt(law.p * (1 - law.p) / static_cast<double>(n));
    const double z = (zf - law.p) / sd;
    r.measured = {{"trees", n},           {"law", {law.p, law.lambda}}, {"ks", ks},  {"ks_bound", crit},
                  {"zero_fraction", zf}, {"p_t", law.p},               {"zero_z", z}};
    r.pass = ks < crit && std::fabs(z) < 3.0;
    r.detail = "KS " + f(ks, 4) + " vs bound " + f(crit, 4) + ", zero fraction " + f(zf, 5) + " vs p(3) " + f(law.p, 5) +
               " (z " + f(z, 3) + ")";
    return r;
}

CriterionResult c7_particles(const ValidationOptions& o) {
    CriterionResult r = named(7, "particle system");
    const std::size_t n = o.fast ? 20000 : 100000;
    const PhasePoint pt(0.0, 1.0);
    const double t = 5.0;
    const ExpMixture law = integrate_dynamics(pt, t).law_at(t);
    Rng rng(sub_seed(o.seed, 7));
    const auto t0 = Clock::now();
    const ParticleSystem sys = simulate_particles(pt.law(), n, t, rng);
    const double part_sec = std::chrono::duration<double>(Clock::now() - t0).count();
    auto xs = sys.x;
    std::sort(xs.begin(), xs.end());
    const auto paint = monte_carlo_root_law(pt.law(), t, n, sub_seed(o.seed, 7, 1), o.workers);
    const double ks = ks_two_sample(xs, paint.sample.values);
    const double crit = ks_critical_two(0.01, n, n);
    const MeanSd ms = mean_sd(xs);
    const double exact = mean(law);
    const double se = sys.mean_se_correlated();
    const double z = (ms.mean - exact) / se;
    r.measured = {{"N", n},           {"ks_two_sample", ks}, {"ks_critical_1pct", crit}, {"mean", ms.mean},
                  {"exact_mean", exact}, {"se_correlated", se}, {"se_naive", ms.se},     {"z_correlated", z},
                  {"z_naive", (ms.mean - exact) / ms.se}, {"particle_seconds", part_sec}};
    r.pass = ks < crit && std::fabs(z) < 3.0;
    r.detail = "two-sample KS " + f(ks, 4) + " vs " + f(crit, 4) + ", mean " + f(ms.mean) + " vs " + f(exact) +
               " (z " + f(z, 3) + " with correlated SE " + f(se, 3) + "; naive SE " + f(ms.se, 3) + ")";
    return r;
}

CriterionResult c8_discrete(const ValidationOptions&) {
    CriterionResult r = named(8, "discrete criticality");
    const DiscretePmf mu = DiscretePmf::from_map({{0, 0.8}, {2, 0.2}});
    const CegmResult cg = cegm_criterion(mu);
    std::vector<double> scaled;
    DiscretePmf cur = mu;
    bool decreasing = true;
    for (int n = 0; n <= 12; ++n) {
        if (n > 0) cur = discrete_parking_iterate(cur, 1);
        scaled.push_back(std::ldexp(cur.mean(), -n));
        if (n > 0 && !(scaled[static_cast<std::size_t>(n)] < scaled[static_cast<std::size_t>(n) - 1]))
            decreasing = false;
    }
    const CegmResult d2 = cegm_criterion(DiscretePmf::dirac(2));
    r.measured = {{"weighted", cg.weighted},     {"mass", cg.mass},
                  {"equality", cg.equality},     {"verdict", to_string(cg.verdict)},
                  {"scaled_means", scaled},      {"strictly_decreasing", decreasing},
                  {"dirac2_verdict", to_string(d2.verdict)}};
    r.pass = cg.equality && cg.weighted == 1.6 && cg.mass == 1.6 && decreasing &&
             d2.verdict == CegmResult::Verdict::pinned;
    r.detail = "sum x2^x mu = " + f(cg.weighted, 17) + ", sum 2^x mu = " + f(cg.mass, 17) +
               (cg.equality ? " (equality)" : "") + ", 2^-n E X_n decreasing to n=12: " +
               (decreasing ? "yes" : "no") + " (" + f(scaled.back(), 6) + "), delta_2 " + to_string(d2.verdict);
    return r;
}

CriterionResult c13_diagnostics(const ValidationOptions& o) {
    CriterionResult r = named(13, "subcritical diagnostics");
    const std::size_t n = o.fast ? 20000 : 100000;
    const double t = 10.0;
    const PhasePoint crit(0.0, e_);
    const ExpMixture law = integrate_dynamics(crit, t).law_at(t);

    auto all_hold = [](const SubcriticalReport& rep) {
        for (auto v : rep.point)
            if (v != Verdict::holds) return false;
        return true;
    };
    // exact critical law at t = 10 and the particle system from (0, e)
    Rng rng(sub_seed(o.seed, 13));
    std::vector<double> xs(n);
    for (auto& x : xs) x = sample(law, rng);
    const auto rep_exact = subcritical_diagnostics(EmpiricalSample(xs), t, sub_seed(o.seed, 13, 1));
    Rng prng(sub_seed(o.seed, 13, 2));
    const auto sys = simulate_particles(crit.law(), n, t, prng);
    const auto rep_part = subcritical_diagnostics(sys.sample(), t, sub_seed(o.seed, 13, 3));

    const PhasePoint pin(0.3, 0.5);
    const ExpMixture plaw = integrate_dynamics(pin, t).law_at(t);
    std::vector<double> ps(n);
    for (auto& x : ps) x = sample(plaw, rng);
    const auto rep_pin = subcritical_diagnostics(EmpiricalSample(ps), t, sub_seed(o.seed, 13, 4));
    // E[(1 - X) e^X] under the exact mixture; -inf once lambda(t) <= 1
    const double L = plaw.lambda;
    const double oracle = L > 1.0 ? plaw.p + (1 - plaw.p) * L * (L - 2.0) / ((L - 1.0) * (L - 1.0))
                                  : -std::numeric_limits<double>::infinity();

    auto points = [](const SubcriticalReport& rep) {
        json a = json::array();
        for (auto v : rep.point) a.push_back(to_string(v));
        return a;
    };
    r.measured = {{"critical_exact_points", points(rep_exact)},
                  {"critical_particle_points", points(rep_part)},
                  {"pinned_points", points(rep_pin)},
                  {"pinned_lambda_t", L},
                  {"pinned_point4_exact", oracle},
                  {"pinned_report", rep_pin.to_json()}};
    const bool pin_ok = rep_pin.point[3] == Verdict::violated && oracle < 0.0;
    r.pass = all_hold(rep_exact) && all_hold(rep_part) && pin_ok;
    auto s = [](const SubcriticalReport& rep) {
        std::string x;
        for (auto v : rep.point) x += (x.empty() ? "" : "/") + to_string(v);
        return x;
    };
    r.detail = "critical exact " + s(rep_exact) + "; critical particles " + s(rep_part) + "; pinned point 4 " +
               to_string(rep_pin.point[3]) + " (exact E[(1-X)e^X] = " + f(oracle) + ")";
    return r;
}

CriterionResult c14_exponential(const ValidationOptions& o) {
    CriterionResult r = named(14, "exponential limit");
    const std::size_t n = o.fast ? 20000 : 100000;
    const PhasePoint pin(0.3, 0.5);
    const double t = 25.0;
    Rng rng(sub_seed(o.seed, 14));
    const ParticleSystem sys = simulate_particles(pin.law(), n, t, rng);
    const auto s = sys.sample();
    const double m = mean_sd(s.values).mean;
    const auto rep = rescaled_limit_check(pin.law(), t, s, 0.01, m > 0 ? sys.mean_se_correlated() / m : 0.0);
    bool ratios = true;
    std::string rs;
    for (int k = 0; k < 3; ++k) {
        const double z = (rep.ratio[k] - 1.0) / rep.ratio_se_total[k];
        ratios = ratios && std::fabs(z) < 3.0;
        rs += (k ? ", " : "") + f(rep.ratio[k], 5) + " (z " + f(z, 3) + ")";
    }
    r.measured = rep.to_json();
    r.pass = rep.ks_pass && ratios;
    r.detail = "KS " + f(rep.ks, 4) + " vs " + f(rep.ks_critical, 4) + ", moment ratios " + rs;
    return r;
}

// -------------------------------------------------------------- redtree

CriterionResult c9_first_branch(const ValidationOptions& o) {
    CriterionResult r = named(9, "red tree first branching");
    const std::size_t n = 100000;
    const Rng root(sub_seed(o.seed, 9));
    std::vector<double> e(n);
    double below = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        Rng rng = root.split(k);
        e[k] = limit_first_branch(0.0, rng);
        below += e[k] <= 0.5;
    }
    const double target = 1.0 - 4.0 * std::exp(-2.0);
    const double frac = below / static_cast<double>(n);
    const double sd = std::sqrt(target * (1 - target) / static_cast<double>(n));
    std::sort(e.begin(), e.end());
    const auto F = [](double v) { return v <= 0.0 ? 0.0 : v >= 1.0 ? 1.0 : 1.0 - first_branching_survival(v, 0.0); };
    const double ks = ks_one_sample(e, F, F);
    const double crit = ks_critical_one(0.01, n);
    r.measured = {{"P_e_le_half", frac}, {"target", target}, {"z", (frac - target) / sd}, {"ks", ks},
                  {"ks_critical_1pct", crit}};
    r.pass = std::fabs(frac - target) < 3 * sd && ks < crit;
    r.detail = "P(e<=1/2) = " + f(frac) + " vs " + f(target) + " (z " + f((frac - target) / sd, 3) + "), KS " + f(ks, 4) +
               " vs " + f(crit, 4);
    return r;
}

CriterionResult c10_theta_mc(const ValidationOptions& o) {
    CriterionResult r = named(10, "Theta vs Monte Carlo");
    const std::size_t n = o.fast ? 20000 : 100000;
    const double t = 30.0, e1 = 0.1, e2 = 0.05;
    const Trajectory tr = integrate_dynamics({0.0, e_}, t);
    const RhoTable rho(tr, t);
    const auto stats = red_tree_replicas(0.0, t, rho, n, sub_seed(o.seed, 10), o.workers);
    std::vector<double> v(n);
    for (std::size_t k = 0; k < n; ++k) v[k] = std::exp(-e1 * static_cast<double>(stats[k].N) - e2 * stats[k].M);
    const MeanSd ms = mean_sd(v);
    const double phi = laplace_phi(tr, t, 0.0, e1, e2);
    const double z = (ms.mean - phi) / ms.se;
    r.measured = {{"replicas", n}, {"mc", ms.mean}, {"mc_se", ms.se}, {"ode", phi}, {"z", z}};
    r.pass = std::fabs(z) < 3.0;
    r.detail = "MC " + f(ms.mean, 7) + " +- " + f(ms.se, 2) + " vs exp(-(Theta + x Theta')) " + f(phi, 7) + " (z " +
               f(z, 3) + ")";
    return r;
}

CriterionResult c11_gammas(const ValidationOptions&) {
    CriterionResult r = named(11, "linearized constants");
    const Trajectory tr = integrate_dynamics({0.0, e_}, 1.0);
    const GammaConstants a = linearized_gammas(tr, 1e4, 1.0), b = linearized_gammas(tr, 2e4, 1.0);
    const double d1 = std::fabs(a.gamma1 / b.gamma1 - 1.0), d2 = std::fabs(a.gamma2 / b.gamma2 - 1.0);
    r.measured = {{"T1e4", a.to_json()}, {"T2e4", b.to_json()}, {"rel_diff_gamma1", d1}, {"rel_diff_gamma2", d2}};
    r.pass = d1 < 0.005 && d2 < 0.005 && a.gamma1 > 0 && a.gamma2 > 0 && a.plateau_error < 0.01 &&
             b.plateau_error < 0.01;
    r.detail = "gamma1 " + f(a.gamma1) + " / " + f(b.gamma1) + ", gamma2 " + f(a.gamma2) + " / " + f(b.gamma2) +
               " (T = 1e4 / 2e4), plateau errors " + f(a.plateau_error, 3) + ", " + f(b.plateau_error, 3);
    return r;
}

CriterionResult c12_bessel(const ValidationOptions& o) {
    CriterionResult r = named(12, "Bessel bridge limit");
    const std::size_t n = o.fast ? 10000 : 100000;
    const int K = 2000;
    std::vector<double> eta(n), ex(n);
    const Rng root(sub_seed(o.seed, 12));
    parallel_blocks(n, o.workers, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t k = lo; k < hi; ++k) {
            Rng rng = root.split(k);
            eta[k] = bessel_eta(0.0, K, rng);
            ex[k] = std::exp(-eta[k]);
        }
    });
    const MeanSd me = mean_sd(eta), mx = mean_sd(ex);
    const double lim = limit_laplace(1.0, 0.0);
    const double tol_x = std::max(3 * mx.se, 0.01 * lim);

    const Trajectory tr = integrate_dynamics({0.0, e_}, 200.0);
    const GammaConstants gc = linearized_gammas(tr, 1e4);
    const std::size_t reps = o.fast ? 2000 : 30000;
    const LeafLimitReport leaf = leaf_limit_check(tr, 200.0, reps, 1.0, 0.0, 0.0, sub_seed(o.seed, 12, 1), gc, o.workers);

    r.measured = {{"bridges", n},         {"K", K},          {"eta_mean", me.mean},   {"eta_se", me.se},
                  {"laplace_mc", mx.mean}, {"laplace_se", mx.se}, {"laplace_limit", lim}, {"leaf_limit", leaf.to_json()}};
    const bool eta_ok = std::fabs(me.mean - 1.0) <= 0.01;
    const bool lap_ok = std::fabs(mx.mean - lim) <= tol_x;
    r.pass = eta_ok && lap_ok && leaf.pass;
    r.detail = "E eta = " + f(me.mean, 5) + ", E e^-eta = " + f(mx.mean, 5) + " vs " + f(lim, 6) +
               "; t=200 leaf check " + f(leaf.mc_mean, 5) + " vs " + f(leaf.limit, 5) + " (gap " + f(leaf.gap, 3) +
               ", tolerance " + f(leaf.tolerance, 3) + ", " + std::to_string(reps) + " trees)";
    return r;
}

// ----------------------------------------------------------- properties

CriterionResult c15_properties(const ValidationOptions& o) {
    CriterionResult r = named(15, "property suites");
    PropertyOptions po;
    po.seed = o.seed;
    po.workers = o.workers;
    po.fast = o.fast;
    po.cases = 200;
    const auto res = run_properties("all", po);
    json arr = json::array();
    int failed = 0;
    std::string names;
    for (const auto& p : res) {
        arr.push_back(p.to_json());
        if (!p.pass) {
            ++failed;
            names += (names.empty() ? "" : ", ") + p.module + "/" + p.name + " (" + std::to_string(p.failures) + "/" +
                     std::to_string(p.cases) + ", allowed " + std::to_string(p.allowed) + ")";
        }
    }
    r.measured = {{"properties", arr}, {"failed", failed}};
    r.pass = failed == 0;
    r.detail = std::to_string(res.size() - static_cast<std::size_t>(failed)) + "/" + std::to_string(res.size()) +
               " properties pass" + (names.empty() ? "" : "; failing: " + names);
    return r;
}

struct Criterion {
    int id;
    double runtime_limit;  // seconds, 0 = none
    CriterionResult (*fn)(const ValidationOptions&);
};

const Criterion criteria[] = {
    {1, 1.0, c1_h_conservation},
    {2, 5.0, c2_critical_asymptotics},
    {3, 30.0, [](const ValidationOptions&) { return slope_criterion(3, "free energy case i (lambda=2)", 2.0, -2 * pi_, 0.02); }},
    {4, 0.0, [](const ValidationOptions&) { return slope_criterion(4, "free energy case ii (lambda=1)", 1.0, -pi_ / std::sqrt(2.0), 0.03); }},
    {5, 0.0, c5_loglog},
    {6, 120.0, c6_painting},
    {7, 120.0, c7_particles},
    {8, 0.0, c8_discrete},
    {9, 60.0, c9_first_branch},
    {10, 180.0, c10_theta_mc},
    {11, 0.0, c11_gammas},
    {12, 600.0, c12_bessel},
    {13, 0.0, c13_diagnostics},
    {14, 0.0, c14_exponential},
    {15, 0.0, c15_properties},
};

}  // namespace

nlohmann::json CriterionResult::to_json() const {
    return {{"id", id}, {"name", name}, {"pass", pass}, {"seconds", seconds}, {"detail", detail}, {"measured", measured}};
}

std::vector<std::string> suite_names() { return {"ode", "free-energy", "painting", "redtree", "properties", "all"}; }

std::vector<int> suite_criteria(const std::string& suite) {
    if (suite == "ode") return {1, 2};
    if (suite == "free-energy") return {3, 4, 5};
    if (suite == "painting") return {6, 7, 8, 13, 14};
    if (suite == "redtree") return {9, 10, 11, 12};
    if (suite == "properties") return {15};
    if (suite == "all") return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
    throw UsageError("unknown suite '" + suite + "' (ode, free-energy, painting, redtree, properties, all)");
}

CriterionResult run_criterion(int id, const ValidationOptions& opt) {
    for (const auto& c : criteria) {
        if (c.id != id) continue;
        const auto t0 = Clock::now();
        CriterionResult r;
        try {
            r = c.fn(opt);
        } catch (const std::exception& e) {
            r.id = id;
            r.pass = false;
            r.detail = std::string("error: ") + e.what();
        }
        r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        r.measured["seconds"] = r.seconds;
        if (c.runtime_limit > 0.0) {
            r.measured["runtime_limit"] = c.runtime_limit;
            if (r.seconds >= c.runtime_limit) {
                r.pass = false;
                r.detail += "; runtime " + f(r.seconds, 3) + " s exceeds " + f(c.runtime_limit, 3) + " s";
            }
        }
        return r;
    }
    throw UsageError("unknown criterion " + std::to_string(id));
}

std::vector<CriterionResult> run_suite(const std::string& suite, const ValidationOptions& opt) {
    const auto ids = suite_criteria(suite);
    const auto t0 = Clock::now();
    std::vector<CriterionResult> out;
    for (int id : ids) {
        CriterionResult r = run_criterion(id, opt);
        if (id == 15 && suite == "all") {
            // the whole run, criterion 15 included, must fit in 30 minutes
            const double total = std::chrono::duration<double>(Clock::now() - t0).count();
            r.measured["validate_total_seconds"] = total;
            if (total >= 1800.0) {
                r.pass = false;
                r.detail += "; full run " + f(total, 4) + " s exceeds 1800 s";
            }
        }
        if (opt.on_result) opt.on_result(r);
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace drlab
