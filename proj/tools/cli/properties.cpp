#include "properties.hpp"

#include <algorithm>
#include <chrono>
#include <cfloat>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <unistd.h>

#include "commands.hpp"
#include "drlab/dynamics.hpp"
#include "drlab/errors.hpp"
#include "drlab/measures.hpp"
#include "drlab/painting.hpp"
#include "drlab/redtree.hpp"
#include "drlab/stats.hpp"
#include "manifest.hpp"

namespace drlab {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

using CaseFn = std::function<bool(Rng& rng, json& note)>;

std::uint64_t name_hash(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
    return h;
}

int allowed_for(int cases, double alpha) { return binomial_upper(cases, alpha, 1e-3); }

double unif(Rng& rng, double a, double b) { return a + (b - a) * rng.uniform(); }

PropertyResult run_property(const std::string& module, const std::string& name, const PropertyOptions& opt,
                            int allowed, const CaseFn& fn) {
    PropertyResult r;
    r.module = module;
    r.name = name;
    r.cases = opt.cases;
    r.allowed = allowed;
    const Rng base = Rng(opt.seed).split(name_hash(module + "/" + name));
    const auto t0 = std::chrono::steady_clock::now();
    json failed = json::array();
    for (int i = 0; i < opt.cases; ++i) {
        Rng rng = base.split(static_cast<std::uint64_t>(i));
        json note = json::object();
        bool ok = false;
        try {
            ok = fn(rng, note);
        } catch (const std::exception& e) {
            note["error"] = e.what();
        }
        if (!ok) {
            ++r.failures;
            note["case"] = i;
            if (failed.size() < 5) failed.push_back(note);
        }
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.pass = r.failures <= r.allowed;
    if (!failed.empty()) r.detail["first_failures"] = failed;
    if (opt.on_result) opt.on_result(r);
    return r;
}

/// Emits `r` after the caller has added aggregate details.
PropertyResult finish(PropertyResult r, const PropertyOptions& opt) {
    if (opt.on_result) opt.on_result(r);
    return r;
}

PropertyOptions quiet(const PropertyOptions& opt) {
    PropertyOptions o = opt;
    o.on_result = nullptr;
    return o;
}

ExpMixture random_mixture(Rng& rng) { return {unif(rng, 0.0, 0.98), std::exp(unif(rng, std::log(0.05), std::log(20.0)))}; }

PhasePoint random_point(Rng& rng, double lam_lo = 0.05, double lam_hi = 3.0) {
    return {unif(rng, 0.0, 0.98), unif(rng, lam_lo, lam_hi)};
}

/// Pinned point at distance >= min_gap below the critical curve.
PhasePoint random_pinned(Rng& rng, double min_gap) {
    for (;;) {
        const double lam = unif(rng, 0.05, std::numbers::e - 0.01);
        const double pc = lam > 1.0 ? critical_p(lam) : 1.0;
        if (pc - min_gap <= 0.0) continue;
        return {unif(rng, 0.0, std::min(0.98, pc - min_gap)), lam};
    }
}

// ------------------------------------------------------------- measures

std::vector<PropertyResult> measures_properties(const PropertyOptions& opt) {
    std::vector<PropertyResult> out;
    const std::string mod = "measures";

    out.push_back(run_property(mod, "quantile_cdf_galois", opt, 0, [](Rng& rng, json& note) {
        const ExpMixture m = random_mixture(rng);
        note["law"] = {m.p, m.lambda};
        for (int k = 0; k < 64; ++k) {
            const double u = k == 0 ? 0.0 : k == 1 ? m.p : k == 2 ? std::nextafter(m.p, 1.0) : rng.uniform();
            if (!(cdf(m, quantile(m, u)) >= u)) return (note["u"] = u), false;
            const double x = k == 0 ? 0.0 : rng.exponential() / m.lambda * 3.0;
            if (!(quantile(m, cdf(m, x)) <= x)) return (note["x"] = x), false;
        }
        return true;
    }));

    out.push_back(run_property(mod, "convolve_mean_additive", opt, 0, [](Rng& rng, json& note) {
        const ExpMixture m = random_mixture(rng);
        const double want = 2.0 * mean(m), got = mean(convolve_self(m));
        note["mean"] = {want, got};
        return std::fabs(got - want) <= 1e-12 * std::max(1.0, want);
    }));

    out.push_back(run_property(mod, "shift_mass_conservation", opt, 0, [](Rng& rng, json& note) {
        const auto g = convolve_self(random_mixture(rng));
        const double s = rng.uniform() < 0.1 ? 0.0 : unif(rng, 0.0, 20.0);
        const double mass = total_mass(shift(g, s));
        note["s"] = s;
        note["mass"] = mass;
        return std::fabs(mass - 1.0) <= 1e-12;
    }));

    const std::size_t n = opt.fast ? 10000 : 100000;
    out.push_back(run_property(mod, "sampling_ks", opt, allowed_for(opt.cases, 0.01), [n](Rng& rng, json& note) {
        const ExpMixture m = random_mixture(rng);
        std::vector<double> v(n);
        for (auto& x : v) x = sample(m, rng);
        const double ks = ks_distance(EmpiricalSample(std::move(v)), m);
        note["ks"] = ks;
        return ks < ks_critical_one(0.01, n);
    }));
    out.back().detail["samples_per_case"] = n;
    return out;
}

// ------------------------------------------------------------- dynamics

std::vector<PropertyResult> dynamics_properties(const PropertyOptions& opt) {
    std::vector<PropertyResult> out;
    const std::string mod = "dynamics";

    double worst_h = 0.0;
    auto r = run_property(mod, "H_conservation", quiet(opt), 0, [&](Rng& rng, json& note) {
        const PhasePoint pt = random_point(rng);
        const Trajectory tr = integrate_dynamics(pt, 50.0);
        double e = 0.0;
        for (std::size_t k = 0; k < tr.t.size(); ++k)
            e = std::max(e, std::fabs(tr.p[k] / tr.lambda[k] + std::log(tr.lambda[k]) - tr.H));
        worst_h = std::max(worst_h, e);
        note["point"] = {pt.p, pt.lambda};
        note["err"] = e;
        return e < 1e-10;
    });
    r.detail["max_error"] = worst_h;
    out.push_back(finish(r, opt));

    out.push_back(run_property(mod, "monotonicity", opt, 0, [](Rng& rng, json& note) {
        const PhasePoint pt = random_point(rng);
        const Trajectory tr = integrate_dynamics(pt, 50.0);
        note["point"] = {pt.p, pt.lambda};
        for (std::size_t k = 1; k < tr.t.size(); ++k)
            if (tr.lambda[k] > tr.lambda[k - 1]) return (note["lambda_up_at"] = tr.t[k]), false;
        if (classify_phase(pt) == Phase::Unpinned) {
            // eventually non-decreasing: no decrease of 1 - p on the last 40%
            for (std::size_t k = 1; k < tr.t.size(); ++k)
                if (tr.t[k - 1] >= 30.0 && tr.one_minus_p[k] > tr.one_minus_p[k - 1])
                    return (note["p_down_at"] = tr.t[k]), false;
        }
        return true;
    }));

    out.push_back(run_property(mod, "phase_consistency", opt, 0, [](Rng& rng, json& note) {
        const PhasePoint pt = random_pinned(rng, 1e-6);
        const Trajectory tr = integrate_dynamics(pt, 50.0);
        note["point"] = {pt.p, pt.lambda};
        for (std::size_t k = 0; k < tr.t.size(); ++k)
            if (classify_phase(PhasePoint(tr.p[k], tr.lambda[k])) != Phase::Pinned)
                return (note["left_at"] = tr.t[k]), false;
        return true;
    }));

    double worst_osc = 0.0;
    r = run_property(mod, "lambda_e_t_converges", quiet(opt), 0, [&](Rng& rng, json& note) {
        // the plateau near p = 1 lasts longer the closer the point is to the
        // critical curve, so the window starts once p has left it
        const PhasePoint pt = random_pinned(rng, 0.01);
        const Trajectory tr = integrate_dynamics(pt, 400.0);
        double t0 = 30.0;
        while (t0 <= 380.0 && tr.p_at(t0) >= 1e-6) t0 += 0.5;
        note["window_start"] = t0;
        if (t0 > 380.0) return false;
        double lo = INFINITY, hi = -INFINITY, sum = 0.0;
        int cnt = 0;
        for (int k = 0; k <= 200; ++k) {
            const double s = t0 + 0.1 * k;
            const double v = std::exp(tr.log_lambda_at(s) + s);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            sum += v;
            ++cnt;
        }
        const double osc = (hi - lo) / (sum / cnt);
        worst_osc = std::max(worst_osc, osc);
        note["point"] = {pt.p, pt.lambda};
        note["oscillation"] = osc;
        return osc < 1e-3;
    });
    r.detail["max_oscillation"] = worst_osc;
    r.detail["domain"] = "pinned, p_c - p >= 0.01, window [t0, t0 + 20] with t0 = max(30, first t with p < 1e-6)";
    out.push_back(finish(r, opt));

    out.push_back(run_property(mod, "free_energy_trichotomy", opt, 0, [](Rng& rng, json& note) {
        PhasePoint pt = random_point(rng);
        const double pc = pt.lambda > 1.0 ? critical_p(pt.lambda) : 1.0;
        if (std::fabs(pt.p - pc) < 1e-4) pt.p = std::max(0.0, pc - 1e-3);
        const double F = free_energy_quadrature(pt).value;
        const Phase ph = classify_phase(pt);
        note["point"] = {pt.p, pt.lambda};
        note["F"] = F;
        note["phase"] = to_string(ph);
        return (F > 0.0) == (ph == Phase::Pinned);
    }));

    double worst_rel = 0.0;
    r = run_property(mod, "free_energy_cross_method", quiet(opt), 0, [&](Rng& rng, json& note) {
        const PhasePoint pt = random_pinned(rng, 0.05);
        const double a = free_energy_quadrature(pt).value;
        const double b = free_energy_ode_limit(pt, 200.0).value;
        const double rel = std::fabs(a - b) / a;
        worst_rel = std::max(worst_rel, rel);
        note["point"] = {pt.p, pt.lambda};
        note["rel"] = rel;
        return rel < 1e-5;
    });
    r.detail["max_relative_difference"] = worst_rel;
    out.push_back(finish(r, opt));
    return out;
}

// ------------------------------------------------------------- painting

std::vector<PropertyResult> painting_properties(const PropertyOptions& opt) {
    std::vector<PropertyResult> out;
    const std::string mod = "painting";

    out.push_back(run_property(mod, "conservation", opt, 0, [](Rng& rng, json& note) {
        const ExpMixture m = random_mixture(rng);
        const double t = unif(rng, 0.0, 4.0);
        const PaintedTree pt = paint_tree(generate_yule(t, default_node_budget, rng), m, rng);
        double leaf_sum = 0.0;
        for (std::size_t i = 0; i < pt.tree.nodes.size(); ++i)
            if (pt.tree.nodes[i].leaf()) leaf_sum += pt.leaf_value[i];
        const double len = pt.tree.total_length();
        const double slack = 1e-12 * std::max(1.0, leaf_sum);
        note["root"] = pt.root_value;
        note["leaf_sum"] = leaf_sum;
        note["length"] = len;
        return pt.root_value <= leaf_sum + slack && pt.root_value >= std::max(0.0, leaf_sum - len) - slack;
    }));

    const std::size_t reps = opt.fast ? 500 : 2000;
    out.push_back(run_property(mod, "marginal_exactness", opt, allowed_for(opt.cases, 0.01),
                               [&](Rng& rng, json& note) {
                                   const PhasePoint pt = random_point(rng, 0.2, 3.0);
                                   const double t = unif(rng, 0.0, 6.0);
                                   const ExpMixture law = integrate_dynamics(pt, std::max(t, 1e-9)).law_at(t);
                                   const auto res = monte_carlo_root_law(pt.law(), t, reps, rng.next_u64(), opt.workers);
                                   const double ks = ks_distance(res.sample, law);
                                   note["point"] = {pt.p, pt.lambda, t};
                                   note["ks"] = ks;
                                   return ks < ks_critical_one(0.01, reps);
                               }));
    out.back().detail["replicas_per_case"] = reps;

    // Particle vs painting: raw two-sample KS decides; the shape variant
    // (each sample divided by its own mean) is reported alongside because
    // the particle system's law carries a common random scale.
    int shape_rejects = 0, band_rejects[3] = {0, 0, 0}, band_cases[3] = {0, 0, 0};
    auto r = run_property(mod, "particle_painting_agreement", quiet(opt), allowed_for(opt.cases, 0.01),
                          [&](Rng& rng, json& note) {
                              const PhasePoint pt = random_point(rng, 0.2, 3.0);
                              const double t = unif(rng, 0.0, 6.0);
                              auto paint = monte_carlo_root_law(pt.law(), t, reps, rng.next_u64(), opt.workers).sample.values;
                              Rng prng = rng.split(1);
                              auto part = simulate_particles(pt.law(), reps, t, prng).x;
                              std::sort(part.begin(), part.end());
                              const double crit = ks_critical_two(0.01, paint.size(), part.size());
                              const double ks = ks_two_sample(paint, part);
                              auto scaled = [](std::vector<double> v) {
                                  double m = 0.0;
                                  for (double x : v) m += x;
                                  m /= static_cast<double>(v.size());
                                  if (m > 0.0)
                                      for (auto& x : v) x /= m;
                                  return v;
                              };
                              const double ks_shape = ks_two_sample(scaled(paint), scaled(part));
                              shape_rejects += ks_shape >= crit;
                              const int band = t <= 1.0 ? 0 : t <= 3.0 ? 1 : 2;
                              band_cases[band]++;
                              band_rejects[band] += ks >= crit;
                              note["point"] = {pt.p, pt.lambda, t};
                              note["ks"] = ks;
                              note["critical"] = crit;
                              return ks < crit;
                          });
    r.detail["samples_per_case"] = reps;
    r.detail["shape_normalized_rejections"] = shape_rejects;
    r.detail["rejections_by_t"] = {{"t<=1", {band_rejects[0], band_cases[0]}},
                                   {"1<t<=3", {band_rejects[1], band_cases[1]}},
                                   {"3<t<=6", {band_rejects[2], band_cases[2]}}};
    out.push_back(finish(r, opt));

    // Each case compares every value with expected count >= 5 plus the
    // merged tail; the per-case false alarm rate is bounded by a union bound.
    const std::size_t dreps = opt.fast ? 300 : 1000;
    const int max_buckets = 16;
    const double per_case = std::min(1.0, max_buckets * 0.0027);
    out.push_back(run_property(mod, "discrete_exact_vs_sampled", opt, allowed_for(opt.cases, per_case),
                               [&](Rng& rng, json& note) {
                                   const int support = 1 + static_cast<int>(rng.below(4));
                                   std::vector<double> w(static_cast<std::size_t>(support + 1));
                                   double tot = 0.0;
                                   for (auto& x : w) tot += (x = rng.exponential());
                                   for (auto& x : w) x /= tot;
                                   double s = 0.0;
                                   for (std::size_t k = 0; k + 1 < w.size(); ++k) s += w[k];
                                   w.back() = 1.0 - s;
                                   const DiscretePmf pmf(w);
                                   const int n = 1 + static_cast<int>(rng.below(12));
                                   const DiscretePmf exact = discrete_parking_iterate(pmf, n);
                                   const auto smp = discrete_parking_sample(pmf, n, dreps, rng.next_u64(), opt.workers);
                                   std::vector<double> counts(exact.support_size() + 1, 0.0);
                                   for (double v : smp.values)
                                       counts[std::min(static_cast<std::size_t>(v), exact.support_size())] += 1.0;
                                   const double N = static_cast<double>(dreps);
                                   double tail_p = 0.0, tail_obs = 0.0, worst = 0.0;
                                   int buckets = 0;
                                   auto check = [&](double pk, double obs) {
                                       const double sd = std::sqrt(N * pk * (1.0 - pk));
                                       const double z = sd > 0.0 ? std::fabs(obs - N * pk) / sd : (obs == N * pk ? 0.0 : INFINITY);
                                       worst = std::max(worst, z);
                                       ++buckets;
                                   };
                                   for (std::size_t k = 0; k < counts.size(); ++k) {
                                       const double pk = exact.at(k);
                                       if (N * pk >= 5.0 && buckets < max_buckets - 1)
                                           check(pk, counts[k]);
                                       else
                                           tail_p += pk, tail_obs += counts[k];
                                   }
                                   if (tail_p > 0.0 || tail_obs > 0.0) check(std::min(1.0, tail_p), tail_obs);
                                   note["pmf"] = w;
                                   note["n"] = n;
                                   note["max_z"] = worst;
                                   return worst <= 3.0;
                               }));
    out.back().detail["replicas_per_case"] = dreps;

    out.push_back(run_property(mod, "determinism", opt, 0, [&](Rng& rng, json& note) {
        const PhasePoint pt = random_point(rng, 0.2, 3.0);
        const double t = unif(rng, 0.0, 3.0);
        const std::uint64_t seed = rng.next_u64();
        const auto a = monte_carlo_root_law(pt.law(), t, 300, seed, 1);
        const auto b = monte_carlo_root_law(pt.law(), t, 300, seed, 2);
        note["point"] = {pt.p, pt.lambda, t};
        if (a.sample.values != b.sample.values || !(a.summary == b.summary)) return (note["what"] = "paint"), false;
        Rng r1(seed), r2(seed);
        if (simulate_particles(pt.law(), 200, t, r1).x != simulate_particles(pt.law(), 200, t, r2).x)
            return (note["what"] = "particles"), false;
        const DiscretePmf pmf = DiscretePmf::from_map({{0, 0.8}, {2, 0.2}});
        if (discrete_parking_sample(pmf, 6, 200, seed, 1).values != discrete_parking_sample(pmf, 6, 200, seed, 2).values)
            return (note["what"] = "discrete"), false;
        return true;
    }));
    return out;
}

// -------------------------------------------------------------- redtree

std::vector<PropertyResult> redtree_properties(const PropertyOptions& opt) {
    std::vector<PropertyResult> out;
    const std::string mod = "redtree";
    const Trajectory crit = integrate_dynamics({0.0, std::numbers::e}, 30.0);
    const RhoTable crit_rho(crit, 30.0);

    auto traj_for = [](Rng& rng, double t) {
        // half the cases on the critical point, the rest anywhere
        const PhasePoint pt = rng.uniform() < 0.5 ? PhasePoint(0.0, std::numbers::e) : random_point(rng, 0.5, 3.0);
        return integrate_dynamics(pt, t);
    };

    out.push_back(run_property(mod, "mass_bookkeeping", opt, 0, [&](Rng& rng, json& note) {
        const double t = unif(rng, 0.1, 30.0), x0 = unif(rng, 0.0, 3.0);
        const Trajectory tr = traj_for(rng, t);
        const RhoTable rho(tr, t);
        const RedTree tree = simulate_red_tree(x0, t, rho, rng);
        note["start"] = {tr.start.p, tr.start.lambda, t, x0};
        if (tree.nodes.empty() || tree.nodes[0].mass_birth != x0 || tree.nodes[0].birth != 0.0) return false;
        for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
            const auto& n = tree.nodes[i];
            if (n.leaf()) {
                if (n.death != t) return (note["node"] = i), false;
                continue;
            }
            const auto& a = tree.nodes[static_cast<std::size_t>(n.child[0])];
            const auto& b = tree.nodes[static_cast<std::size_t>(n.child[1])];
            const double m = n.mass_death();
            if (a.birth != n.death || b.birth != n.death || a.parent != static_cast<std::int64_t>(i) ||
                b.parent != static_cast<std::int64_t>(i))
                return (note["node"] = i), false;
            if (std::fabs(a.mass_birth + b.mass_birth - m) > 1e-14 * std::max(1.0, m) || a.mass_birth < 0.0 ||
                b.mass_birth < 0.0)
                return (note["split_node"] = i), false;
        }
        return true;
    }));

    const int trees = opt.fast ? 100 : 300;
    out.push_back(run_property(mod, "uniform_split", opt, allowed_for(opt.cases, 0.01), [&](Rng& rng, json& note) {
        const double t = unif(rng, 2.0, 20.0), x0 = unif(rng, 0.0, 2.0);
        const Trajectory tr = traj_for(rng, t);
        const RhoTable rho(tr, t);
        std::vector<double> frac;
        for (int k = 0; k < trees; ++k) {
            const RedTree tree = simulate_red_tree(x0, t, rho, rng);
            const auto& root = tree.nodes[0];
            if (root.leaf()) continue;
            frac.push_back(tree.nodes[static_cast<std::size_t>(root.child[0])].mass_birth / root.mass_death());
        }
        note["start"] = {tr.start.p, tr.start.lambda, t, x0};
        note["splits"] = frac.size();
        if (frac.size() < 20) return true;  // too few splits to test
        std::sort(frac.begin(), frac.end());
        const auto U = [](double v) { return std::clamp(v, 0.0, 1.0); };
        const double ks = ks_one_sample(frac, U, U);
        note["ks"] = ks;
        return ks < ks_critical_one(0.01, frac.size());
    }));

    out.push_back(run_property(mod, "theta_comparison", opt, 0, [&](Rng& rng, json& note) {
        const double t = unif(rng, 1.0, 30.0);
        const Trajectory tr = traj_for(rng, t);
        const double e1 = unif(rng, 0.0, 0.5), e2 = unif(rng, 0.0, 0.5);
        const double f1 = e1 + (rng.uniform() < 0.3 ? 0.0 : unif(rng, 0.0, 0.2));
        const double f2 = e2 + unif(rng, 1e-4, 0.2);
        note["start"] = {tr.start.p, tr.start.lambda, t};
        note["eps"] = {e1, e2, f1, f2};
        for (int k = 1; k <= 8; ++k) {
            const double s = t * k / 8.0;
            const auto lo = theta_solve(tr, e1, e2, s), hi = theta_solve(tr, f1, f2, s);
            const double tol = 1e-10 * (1.0 + hi.theta_t());
            if (lo.theta_t() > hi.theta_t() + tol || lo.dtheta_t() > hi.dtheta_t() + tol)
                return (note["s"] = s), false;
        }
        return true;
    }));

    // MC vs ODE decides; ODE vs limit is the finite-t gap, reported by t band
    const std::size_t reps = opt.fast ? 500 : 2000;
    double gap_lo = 0.0, gap_hi = 0.0, mc_lim_lo = 0.0, mc_lim_hi = 0.0;
    int n_lo = 0, n_hi = 0;
    const GammaConstants gc = linearized_gammas(crit, 1e4);
    auto r = run_property(mod, "consistency_triangle", quiet(opt), allowed_for(opt.cases, 0.0027),
                          [&](Rng& rng, json& note) {
                              const double t = unif(rng, 5.0, 30.0), x = unif(rng, 0.0, 1.0);
                              const double th1 = unif(rng, 0.2, 2.0), th2 = unif(rng, 0.0, 1.0);
                              const auto stats = red_tree_replicas(x * t, t, crit_rho, reps,
                                                                   rng.next_u64(), opt.workers);
                              std::vector<double> v(reps);
                              const double t2 = t * t;
                              for (std::size_t k = 0; k < reps; ++k)
                                  v[k] = std::exp(-(th1 * static_cast<double>(stats[k].N) + th2 * stats[k].M) / t2);
                              const MeanSd ms = mean_sd(v);
                              const double phi = laplace_phi(crit, t, x * t, th1 / t2, th2 / t2);
                              const double lim = limit_laplace(gc.gamma1 * th1 + gc.gamma2 * th2, x);
                              if (t < 17.5) {
                                  gap_lo += std::fabs(phi - lim), mc_lim_lo += std::fabs(ms.mean - lim), ++n_lo;
                              } else {
                                  gap_hi += std::fabs(phi - lim), mc_lim_hi += std::fabs(ms.mean - lim), ++n_hi;
                              }
                              note["t_x_theta"] = {t, x, th1, th2};
                              note["mc"] = {ms.mean, ms.se};
                              note["ode"] = phi;
                              return std::fabs(ms.mean - phi) < 3.0 * ms.se;
                          });
    const double ode_lim_lo = n_lo ? gap_lo / n_lo : 0.0, ode_lim_hi = n_hi ? gap_hi / n_hi : 0.0;
    r.detail["replicas_per_case"] = reps;
    r.detail["mean_abs_ode_minus_limit"] = {{"5<=t<17.5", ode_lim_lo}, {"17.5<=t<=30", ode_lim_hi}};
    r.detail["mean_abs_mc_minus_limit"] = {{"5<=t<17.5", n_lo ? mc_lim_lo / n_lo : 0.0},
                                          {"17.5<=t<=30", n_hi ? mc_lim_hi / n_hi : 0.0}};
    // the ODE-to-limit gap must shrink as t grows
    r.pass = r.pass && ode_lim_hi < ode_lim_lo;
    out.push_back(finish(r, opt));

    double worst = 0.0;
    r = run_property(mod, "first_branching_closed_form", quiet(opt), 0, [&](Rng& rng, json& note) {
        const double u = rng.uniform_open();
        const double rr = rng.uniform() < 0.1 ? 1.0 - std::pow(u, 4.0) : u;
        const double closed = std::exp(-2.0 * rr / (1.0 - rr)) / ((1.0 - rr) * (1.0 - rr));
        const double got = first_branching_survival(rr, 0.0);
        const double rel = std::fabs(got - closed) / std::max(closed, 1e-300);
        worst = std::max(worst, closed > 0.0 ? rel : 0.0);
        note["r"] = rr;
        note["rel"] = rel;
        // exp(-A) turns an ulp of A into a relative error of about A ulps
        const double cond = 1.0 + 2.0 * rr / (1.0 - rr);
        note["condition"] = cond;
        return closed == 0.0 ? got == 0.0 : rel <= 16.0 * DBL_EPSILON * cond;
    });
    r.detail["max_relative_difference"] = worst;
    out.push_back(finish(r, opt));
    return out;
}

// ------------------------------------------------------------------ cli

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("drlab-prop-" + std::to_string(::getpid()) + "-" + tag + "-" + std::to_string(counter++));
        fs::remove_all(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

std::string num(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

/// A small random command line (without --out).
std::vector<std::string> random_command(Rng& rng) {
    std::vector<std::string> a{"drlab", "--seed", std::to_string(rng.below(1000000)), "--workers",
                               std::to_string(1 + rng.below(2))};
    const PhasePoint pt = random_point(rng, 0.3, 2.6);
    switch (rng.below(7)) {
        case 0:
            a.insert(a.end(), {"phase", "--lambda-steps", std::to_string(1 + rng.below(6)), "--p-steps",
                               std::to_string(1 + rng.below(6)), "--lambda-max", num(unif(rng, 1.0, 2.7))});
            if (rng.uniform() < 0.5) a.push_back("--svg");
            break;
        case 1:
            a.insert(a.end(), {"trajectory", "--p", num(pt.p), "--lambda", num(pt.lambda), "--t-max",
                               num(unif(rng, 1.0, 20.0)), "--points", std::to_string(rng.below(30))});
            break;
        case 2: {
            const double lam = unif(rng, 0.3, 2.5);
            a.insert(a.end(), {"free-energy", "--lambda", num(lam), "--gaps", "0.2,0.1,0.05"});
            break;
        }
        case 3:
            a.insert(a.end(), {"simulate", "--kind", "paint", "--p", num(pt.p), "--lambda", num(pt.lambda), "--t",
                               num(unif(rng, 0.0, 2.0)), "--replicas", std::to_string(50 + rng.below(200))});
            if (rng.uniform() < 0.5) a.push_back("--samples");
            break;
        case 4:
            a.insert(a.end(), {"simulate", "--kind", "particles", "--p", num(pt.p), "--lambda", num(pt.lambda), "--t",
                               num(unif(rng, 0.0, 3.0)), "--particles", std::to_string(50 + rng.below(500))});
            if (rng.uniform() < 0.5) a.push_back("--samples");
            break;
        case 5:
            a.insert(a.end(), {"simulate", "--kind", "discrete", "--pmf", "0:0.8,2:0.2", "--height",
                               std::to_string(rng.below(8)), "--replicas", std::to_string(50 + rng.below(200))});
            break;
        default:
            a.insert(a.end(), {"redtree", "--p", num(pt.p), "--lambda", num(pt.lambda), "--t",
                               num(unif(rng, 1.0, 10.0)), "--x0", num(unif(rng, 0.0, 2.0)), "--replicas",
                               std::to_string(20 + rng.below(80))});
            if (rng.uniform() < 0.3) a.push_back("--svg");
            break;
    }
    return a;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

int run_into(std::vector<std::string> args, const fs::path& dir) {
    args.insert(args.begin() + 1, {"--out", dir.string()});
    std::ostringstream sink;
    return run_cli(args, sink, sink);
}

std::vector<PropertyResult> cli_properties(const PropertyOptions& opt) {
    std::vector<PropertyResult> out;
    const std::string mod = "cli";

    out.push_back(run_property(mod, "reproducibility", opt, 0, [](Rng& rng, json& note) {
        const auto args = random_command(rng);
        note["argv"] = args;
        TempDir a("a"), b("b");
        const int ca = run_into(args, a.path), cb = run_into(args, b.path);
        note["exit"] = {ca, cb};
        if (ca != 0 || cb != 0) return false;
        const RunManifest ma = read_manifest(a.path), mb = read_manifest(b.path);
        if (ma.checksums != mb.checksums || ma.checksums.empty()) return (note["what"] = "checksums"), false;
        for (const auto& [file, sum] : ma.checksums) {
            (void)sum;
            if (slurp(a.path / file) != slurp(b.path / file)) return (note["file"] = file), false;
        }
        return true;
    }));

    out.push_back(run_property(mod, "manifest_reruns", opt, 0, [](Rng& rng, json& note) {
        const auto args = random_command(rng);
        note["argv"] = args;
        TempDir a("m"), b("r");
        if (run_into(args, a.path) != 0) return (note["what"] = "first run"), false;
        const RunManifest m = read_manifest(a.path);
        for (const auto& [file, sum] : m.checksums)
            if (sha256_hex(slurp(a.path / file)) != sum) return (note["file"] = file), false;
        if (m.generator != Rng::generator_id || m.config.argv.empty()) return (note["what"] = "fields"), false;
        // re-run from the manifest alone
        if (run_into(m.config.argv, b.path) != 0) return (note["what"] = "rerun"), false;
        if (read_manifest(b.path).checksums != m.checksums) return (note["what"] = "rerun checksums"), false;
        return true;
    }));
    return out;
}

}  // namespace

nlohmann::json PropertyResult::to_json() const {
    return {{"module", module}, {"name", name},   {"cases", cases},     {"failures", failures},
            {"allowed", allowed}, {"pass", pass}, {"seconds", seconds}, {"detail", detail}};
}

std::vector<std::string> property_modules() { return {"measures", "dynamics", "painting", "redtree", "cli"}; }

std::vector<PropertyResult> run_properties(const std::string& module, const PropertyOptions& opt) {
    if (opt.cases < 1) throw UsageError("properties: need at least one case");
    std::vector<PropertyResult> all;
    auto add = [&](std::vector<PropertyResult> v) { all.insert(all.end(), v.begin(), v.end()); };
    bool known = false;
    if (module == "all" || module == "measures") known = true, add(measures_properties(opt));
    if (module == "all" || module == "dynamics") known = true, add(dynamics_properties(opt));
    if (module == "all" || module == "painting") known = true, add(painting_properties(opt));
    if (module == "all" || module == "redtree") known = true, add(redtree_properties(opt));
    if (module == "all" || module == "cli") known = true, add(cli_properties(opt));
    if (!known) throw UsageError("properties: unknown module '" + module + "'");
    return all;
}

}  // namespace drlab
