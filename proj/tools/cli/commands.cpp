#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <map>
#include <new>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "drlab/csv.hpp"
#include "drlab/dynamics.hpp"
#include "drlab/errors.hpp"
#include "drlab/painting.hpp"
#include "drlab/redtree.hpp"
#include "drlab/stats.hpp"
#include "drlab/summary.hpp"
#include "manifest.hpp"
#include "svg.hpp"
#include "validation.hpp"

namespace drlab {

namespace {

using nlohmann::json;

struct Globals {
    std::uint64_t seed = 1;
    std::string out;
    int workers = 1;
};

struct PhaseOpts {
    double lam_min = 0.05, lam_max = 2.7, p_min = 0.0, p_max = 0.99;
    int lam_steps = 54, p_steps = 100;
    double tol = -1.0;  // < 0: half the p spacing
    bool svg = false;
};

struct TrajectoryOpts {
    double p = 0.0, lambda = std::numbers::e, t_max = 50.0;
    int points = 0;
};

struct FreeEnergyOpts {
    double lambda = 2.0;
    std::vector<double> gaps{0.04, 0.02, 0.01, 0.005, 0.0025};
    std::vector<double> ps;
};

struct SimulateOpts {
    std::string kind = "paint";
    double p = 0.0, lambda = 1.0, t = 3.0;
    std::string pmf, pmf_file;
    std::size_t replicas = 10000, particles = 10000;
    int height = 6, bins = 50;
    bool samples = false;
};

struct RedtreeOpts {
    double p = 0.0, lambda = std::numbers::e, t = 30.0, x0 = 0.0;
    std::size_t replicas = 1000;
    double theta1 = 1.0, theta2 = 0.0, gamma_horizon = 1e4;
    bool svg = false;
};

struct ValidateOpts {
    std::string suite = "all";
    bool fast = false;
};

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
    return s;
}

/// Canonical argv from resolved parameters; keys are long option names.
std::vector<std::string> canonical_argv(const std::string& sub, const json& params, std::uint64_t seed) {
    std::vector<std::string> a{"drlab", "--seed", std::to_string(seed), sub};
    for (const auto& [k, v] : params.items()) {
        if (v.is_boolean()) {
            if (v.get<bool>()) a.push_back("--" + k);
            continue;
        }
        if (v.is_string() && v.get<std::string>().empty()) continue;
        if (v.is_array() && v.empty()) continue;
        a.push_back("--" + k);
        if (v.is_array())
            a.push_back(join(v.get<std::vector<double>>()));
        else if (v.is_number_float())
            a.push_back(format_double(v.get<double>()));
        else if (v.is_string())
            a.push_back(v.get<std::string>());
        else
            a.push_back(v.dump());
    }
    return a;
}

std::vector<double> grid(double lo, double hi, int steps) {
    std::vector<double> g(static_cast<std::size_t>(steps));
    for (int k = 0; k < steps; ++k) g[static_cast<std::size_t>(k)] = steps == 1 ? lo : lo + (hi - lo) * k / (steps - 1);
    return g;
}

DiscretePmf parse_pmf(const std::string& spec, const std::string& file) {
    std::map<std::int64_t, double> m;
    if (!file.empty()) {
        for (auto [k, w] : read_pmf_csv(file)) m[k] += w;
    } else {
        std::stringstream ss(spec);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto colon = item.find(':');
            if (colon == std::string::npos) throw UsageError("--pmf expects value:prob pairs, got '" + item + "'");
            try {
                m[std::stoll(item.substr(0, colon))] += std::stod(item.substr(colon + 1));
            } catch (const std::logic_error&) {
                throw UsageError("--pmf: cannot parse '" + item + "'");
            }
        }
    }
    if (m.empty()) throw UsageError("empty pmf");
    return DiscretePmf::from_map(m);
}

json law_json(const ExpMixture& m) { return {{"p", m.p}, {"lambda", m.lambda}}; }

// ------------------------------------------------------------------ phase

json phase_params(const PhaseOpts& o) {
    json j{{"lambda-min", o.lam_min}, {"lambda-max", o.lam_max}, {"lambda-steps", o.lam_steps},
           {"p-min", o.p_min},        {"p-max", o.p_max},        {"p-steps", o.p_steps},
           {"svg", o.svg}};
    if (o.tol >= 0.0) j["tol"] = o.tol;
    return j;
}

void cmd_phase(const PhaseOpts& o, OutputDir& dir, std::ostream& out) {
    if (o.lam_steps < 1 || o.p_steps < 1) throw UsageError("phase: empty grid (steps must be >= 1)");
    if (!(o.lam_min <= o.lam_max) || !(o.p_min <= o.p_max)) throw UsageError("phase: grid bounds out of order");
    if (!(o.lam_min >= 0.0) || !(o.p_min >= 0.0) || !(o.p_max < 1.0))
        throw UsageError("phase: need lambda >= 0 and 0 <= p < 1");
    const auto lams = grid(o.lam_min, o.lam_max, o.lam_steps);
    const auto ps = grid(o.p_min, o.p_max, o.p_steps);
    const double tol = o.tol >= 0.0 ? o.tol
                       : o.p_steps > 1 ? 0.5 * (o.p_max - o.p_min) / (o.p_steps - 1)
                                       : tol::phase;
    std::ostringstream csv;
    CsvWriter w(csv, {"lambda", "p", "phase", "H"});
    std::vector<PhaseCell> cells;
    std::map<std::string, int> counts;
    for (double lam : lams)
        for (double p : ps) {
            const PhasePoint pt(p, lam);
            const Phase ph = classify_phase(pt, tol);
            w.cell(lam).cell(p).cell(to_string(ph)).cell(conserved_H(pt));
            w.end_row();
            cells.push_back({lam, p, ph});
            counts[to_string(ph)]++;
        }
    dir.write("phase.csv", csv.str());
    if (o.svg) dir.write("phase.svg", phase_svg(cells, o.lam_min, o.lam_max, o.p_min, o.p_max));
    out << "phase: " << cells.size() << " points, tol " << format_double(tol);
    for (const auto& [k, v] : counts) out << ", " << k << " " << v;
    out << '\n';
}

// ------------------------------------------------------------- trajectory

json trajectory_params(const TrajectoryOpts& o) {
    return {{"p", o.p}, {"lambda", o.lambda}, {"t-max", o.t_max}, {"points", o.points}};
}

void cmd_trajectory(const TrajectoryOpts& o, OutputDir& dir, std::ostream& out) {
    if (!(o.t_max > 0.0) || !std::isfinite(o.t_max)) throw UsageError("trajectory: --t-max must be positive");
    if (o.points < 0) throw UsageError("trajectory: --points must be >= 0");
    const PhasePoint pt(o.p, o.lambda);
    const Trajectory tr = integrate_dynamics(pt, o.t_max);
    std::vector<double> ts = tr.t;
    if (o.points > 0) ts = grid(0.0, o.t_max, o.points + 1);

    std::ostringstream csv;
    CsvWriter w(csv, {"t", "p", "lambda", "rho", "H_error"});
    double max_err = 0.0;
    for (double s : ts) {
        const double p = tr.p_at(s), lam = tr.lambda_at(s);
        const double err = tr.degenerate() ? std::nan("") : p / lam + std::log(lam) - tr.H;
        if (!tr.degenerate()) max_err = std::max(max_err, std::fabs(err));
        w.cell(s).cell(p).cell(lam).cell(tr.rho_at(s)).cell(err);
        w.end_row();
    }
    dir.write("trajectory.csv", csv.str());

    const Phase ph = classify_phase(pt);
    const double T = o.t_max;
    json j{{"start", {{"p", o.p}, {"lambda", o.lambda}}},
           {"phase", to_string(ph)},
           {"H", tr.degenerate() ? json(nullptr) : json(tr.H)},
           {"max_abs_H_error", max_err},
           {"rows", ts.size()},
           {"end", {{"t", T}, {"p", tr.p_at(T)}, {"lambda", tr.lambda_at(T)}, {"rho", tr.rho_at(T)}}}};
    if (ph == Phase::Pinned && o.lambda > 0.0) j["lambda_e_t"] = std::exp(tr.log_lambda_at(T) + T);
    if (ph == Phase::Critical) j["critical_tail"] = {{"t_times_lambda_minus_1", T * (tr.lambda_at(T) - 1.0)},
                                                      {"predicted", 2.0}};
    if (ph == Phase::Unpinned && tr.H > 1.0) {
        const double eq = equilibrium_lambda(tr.H);
        j["equilibrium_lambda"] = eq;
        j["plateau_gap"] = std::fabs(tr.lambda_at(T) - eq);
    }
    dir.write("trajectory.json", j.dump(2) + "\n");
    out << "trajectory: " << to_string(ph) << ", " << ts.size() << " rows, max |H error| "
        << format_double(max_err) << '\n';
    if (max_err >= 1e-10) throw NumericalError("trajectory: H drift " + format_double(max_err) + " >= 1e-10");
}

// ------------------------------------------------------------ free energy

json free_energy_params(const FreeEnergyOpts& o) {
    return {{"lambda", o.lambda}, {"gaps", o.ps.empty() ? o.gaps : std::vector<double>{}}, {"p", o.ps}};
}

void cmd_free_energy(const FreeEnergyOpts& o, OutputDir& dir, std::ostream& out) {
    const double lam = o.lambda;
    if (!(lam > 0.0 && lam < std::numbers::e)) throw UsageError("free-energy: lambda must lie in (0, e)");
    const bool above = lam > 1.0;
    const double pc = above ? critical_p(lam) : 1.0;
    std::vector<double> ps = o.ps;
    if (ps.empty())
        for (double g : o.gaps) ps.push_back(pc - g);
    if (ps.empty()) throw UsageError("free-energy: empty sweep");

    std::ostringstream csv;
    CsvWriter w(csv, {"p", "gap", "F", "asymptote_shape"});
    std::vector<double> fx, fy;
    int zero_rows = 0;
    for (double p : ps) {
        if (!(p >= 0.0 && p < 1.0)) throw UsageError("free-energy: p = " + format_double(p) + " outside [0,1)");
        const PhasePoint pt(p, lam);
        const double gap = pc - p;
        const auto F = free_energy_quadrature(pt);
        const bool pinned = classify_phase(pt) == Phase::Pinned;
        const double shape = pinned && gap > 0.0 ? asymptote_prediction(lam, p) : 0.0;
        w.cell(p).cell(gap).cell(F.value).cell(shape);
        w.end_row();
        if (F.value > 0.0) {
            const double g = 1.0 - p;
            if (above) {
                fx.push_back(1.0 / std::sqrt(gap));
                fy.push_back(F.log_value);
            } else if (lam == 1.0) {
                fx.push_back(1.0 / std::sqrt(g));
                fy.push_back(F.log_value - (2.0 / 3.0) * std::log(g));
            } else {
                fx.push_back(std::log(g));
                fy.push_back(F.log_value);
            }
        } else {
            ++zero_rows;
        }
    }
    dir.write("free_energy.csv", csv.str());

    const double pi = std::numbers::pi;
    json fit{{"lambda", lam}, {"points", fx.size()}, {"zero_rows", zero_rows}};
    if (above) {
        fit["case"] = "i";
        fit["x"] = "(p_c - p)^(-1/2)";
        fit["y"] = "log F";
        fit["expected_slope"] = -pi * std::sqrt(2.0 * lam);
    } else if (lam == 1.0) {
        fit["case"] = "ii";
        fit["x"] = "(1 - p)^(-1/2)";
        fit["y"] = "log(F (1 - p)^(-2/3))";
        fit["expected_slope"] = -pi / std::sqrt(2.0);
    } else {
        fit["case"] = "iii";
        fit["x"] = "log(1 - p)";
        fit["y"] = "log F";
        fit["expected_slope"] = 1.0 / (1.0 - lam);
    }
    if (fx.size() >= 2) {
        const LinearFit lf = linear_fit(fx, fy);
        const double e = fit["expected_slope"].get<double>();
        fit["slope"] = lf.slope;
        fit["intercept"] = lf.intercept;
        fit["r2"] = lf.r2;
        fit["relative_error"] = std::fabs(lf.slope - e) / std::fabs(e);
        out << "free-energy: case " << fit["case"].get<std::string>() << ", slope " << format_double(lf.slope)
            << " (expected " << format_double(e) << "), R^2 " << format_double(lf.r2) << '\n';
    } else {
        fit["slope"] = nullptr;
        out << "free-energy: fewer than two pinned points, no fit\n";
    }
    dir.write("fit.json", fit.dump(2) + "\n");
}

// --------------------------------------------------------------- simulate

json simulate_params(const SimulateOpts& o) {
    json j{{"kind", o.kind}, {"t", o.t}, {"samples", o.samples}, {"bins", o.bins}};
    const bool from_pmf = !o.pmf.empty() || !o.pmf_file.empty();
    if (o.kind == "discrete" || (o.kind == "particles" && from_pmf)) {
        j["pmf"] = o.pmf;
        j["pmf-file"] = o.pmf_file;
    } else {
        j["p"] = o.p;
        j["lambda"] = o.lambda;
    }
    if (o.kind == "particles")
        j["particles"] = o.particles;
    else
        j["replicas"] = o.replicas;
    if (o.kind == "discrete") {
        j["height"] = o.height;
        j.erase("t");
    }
    return j;
}

std::string samples_csv(const std::vector<double>& v) {
    std::ostringstream os;
    CsvWriter w(os, {"value"});
    for (double x : v) {
        w.cell(x);
        w.end_row();
    }
    return os.str();
}

/// KS and zero-atom comparison of a sorted sample against the exact law.
json exact_comparison(const EmpiricalSample& s, const ExpMixture& law) {
    const double ks = ks_distance(s, law);
    const double crit = ks_critical_one(0.01, s.count());
    const double n = static_cast<double>(s.count());
    const double zeros = static_cast<double>(std::upper_bound(s.values.begin(), s.values.end(), 0.0) - s.values.begin());
    const double sd = std::sqrt(law.p * (1.0 - law.p) / n);
    return {{"law", law_json(law)},
            {"ks", ks},
            {"ks_critical_1pct", crit},
            {"ks_pass", ks < crit},
            {"zero_fraction", zeros / n},
            {"zero_expected", law.p},
            {"zero_z", sd > 0 ? (zeros / n - law.p) / sd : 0.0},
            {"mean_expected", law.p < 1.0 && law.lambda > 0 ? mean(law) : 0.0}};
}

HistogramSpec hist_for(const ExpMixture& law, int bins) {
    if (bins <= 0) return {};
    const double hi = law.p < 1.0 && law.lambda > 0.0 ? quantile(law, 0.999) : 0.0;
    return {0.0, hi > 0.0 ? hi : 1.0, bins};
}

void cmd_simulate(const SimulateOpts& o, const Globals& g, OutputDir& dir, std::ostream& out) {
    if (o.bins < 0) throw UsageError("simulate: --bins must be >= 0");
    json j{{"kind", o.kind}};
    if (o.kind == "paint") {
        if (o.replicas < 1) throw UsageError("simulate: --replicas must be >= 1");
        const PhasePoint pt(o.p, o.lambda);
        const ExpMixture law = integrate_dynamics(pt, std::max(o.t, 1e-9)).law_at(o.t);
        auto res = monte_carlo_root_law(pt.law(), o.t, o.replicas, g.seed, g.workers, default_node_budget,
                                        hist_for(law, o.bins));
        j["t"] = o.t;
        j["initial"] = law_json(pt.law());
        j["summary"] = res.summary.to_json();
        j["exact"] = exact_comparison(res.sample, law);
        if (o.samples) dir.write("samples.csv", samples_csv(res.sample.values));
        out << "simulate paint: " << o.replicas << " trees, KS " << format_double(j["exact"]["ks"].get<double>())
            << (j["exact"]["ks_pass"].get<bool>() ? " (pass)" : " (reject)") << " at 1%\n";
    } else if (o.kind == "particles") {
        const bool from_pmf = !o.pmf.empty() || !o.pmf_file.empty();
        InitialLaw mu0;
        std::optional<ExpMixture> law;
        if (from_pmf) {
            const DiscretePmf pmf = parse_pmf(o.pmf, o.pmf_file);
            j["initial"] = pmf.to_json();
            mu0 = pmf;
        } else {
            const PhasePoint pt(o.p, o.lambda);
            j["initial"] = law_json(pt.law());
            mu0 = pt.law();
            law = integrate_dynamics(pt, std::max(o.t, 1e-9)).law_at(o.t);
        }
        Rng rng(g.seed);
        const ParticleSystem sys = simulate_particles(mu0, o.particles, o.t, rng);
        ReplicaSummary sum(law ? hist_for(*law, o.bins) : HistogramSpec{});
        for (double x : sys.x) sum.add(x);
        const EmpiricalSample s = sys.sample(g.seed);
        j["t"] = o.t;
        j["events"] = sys.events;
        j["summary"] = sum.to_json();
        j["mean_se_correlated"] = sys.mean_se_correlated();
        j["mean_se_naive"] = std::sqrt(sum.variance() / static_cast<double>(sys.count()));
        if (law) {
            j["exact"] = exact_comparison(s, *law);
            const double se = sys.mean_se_correlated();
            j["exact"]["mean_z_correlated"] = se > 0 ? (sum.mean() - mean(*law)) / se : 0.0;
        } else {
            j["exact"] = nullptr;
        }
        if (o.samples) dir.write("samples.csv", samples_csv(s.values));
        out << "simulate particles: N " << o.particles << ", " << sys.events << " events, mean "
            << format_double(sum.mean()) << ", zero fraction " << format_double(sum.zero_fraction()) << '\n';
    } else if (o.kind == "discrete") {
        const DiscretePmf pmf = parse_pmf(o.pmf, o.pmf_file);
        if (o.height < 0) throw UsageError("simulate: --height must be >= 0");
        const CegmResult cg = cegm_criterion(pmf);
        const DiscretePmf exact = discrete_parking_iterate(pmf, o.height);
        j["initial"] = pmf.to_json();
        j["height"] = o.height;
        j["cegm"] = {{"verdict", to_string(cg.verdict)},
                     {"weighted", cg.weighted},
                     {"mass", cg.mass},
                     {"equality", cg.equality}};
        j["exact_mean"] = exact.mean();
        j["exact_scaled_mean"] = std::ldexp(exact.mean(), -o.height);
        j["exact_zero"] = exact.at(0);
        if (o.replicas > 0) {
            const auto s = discrete_parking_sample(pmf, o.height, o.replicas, g.seed, g.workers);
            std::map<std::uint64_t, std::uint64_t> counts;
            for (double v : s.values) counts[static_cast<std::uint64_t>(v)]++;
            const double n = static_cast<double>(o.replicas);
            json freq = json::array();
            double max_z = 0.0;
            for (std::size_t k = 0; k < exact.support_size() && k < 64; ++k) {
                const double pk = exact.at(k);
                const double obs = static_cast<double>(counts.count(k) ? counts[k] : 0);
                const double sd = std::sqrt(n * pk * (1.0 - pk));
                const double z = sd > 0 ? (obs - n * pk) / sd : (obs == n * pk ? 0.0 : INFINITY);
                if (n * pk >= 5.0) max_z = std::max(max_z, std::fabs(z));
                freq.push_back({{"value", k}, {"observed", obs}, {"expected", n * pk}, {"z", z}});
            }
            j["replicas"] = o.replicas;
            j["frequencies"] = freq;
            j["max_abs_z"] = max_z;
            if (o.samples) dir.write("samples.csv", samples_csv(s.values));
        }
        out << "simulate discrete: cegm " << to_string(cg.verdict) << (cg.equality ? " (equality)" : "")
            << ", 2^-n E X_n = " << format_double(j["exact_scaled_mean"].get<double>()) << '\n';
    } else {
        throw UsageError("simulate: --kind must be paint, particles or discrete");
    }
    dir.write("summary.json", j.dump(2) + "\n");
}

// ---------------------------------------------------------------- redtree

json redtree_params(const RedtreeOpts& o) {
    return {{"p", o.p},           {"lambda", o.lambda}, {"t", o.t},
            {"x0", o.x0},         {"replicas", o.replicas}, {"theta1", o.theta1},
            {"theta2", o.theta2}, {"gamma-horizon", o.gamma_horizon}, {"svg", o.svg}};
}

void cmd_redtree(const RedtreeOpts& o, const Globals& g, OutputDir& dir, std::ostream& out) {
    if (!(o.t > 0.0) || !std::isfinite(o.t)) throw UsageError("redtree: --t must be positive");
    if (!(o.x0 >= 0.0)) throw UsageError("redtree: --x0 must be >= 0");
    if (o.replicas < 1) throw UsageError("redtree: --replicas must be >= 1");
    const PhasePoint pt(o.p, o.lambda);
    const Trajectory tr = integrate_dynamics(pt, o.t);
    const RhoTable rho(tr, o.t);
    const auto stats = red_tree_replicas(o.x0, o.t, rho, o.replicas, g.seed, g.workers);

    std::ostringstream csv;
    CsvWriter w(csv, {"replica", "N", "M", "first_branch_time"});
    const double t2 = o.t * o.t;
    std::vector<double> Ns, Ms, lap, fb;
    for (std::size_t r = 0; r < stats.size(); ++r) {
        const auto& s = stats[r];
        w.cell(static_cast<std::uint64_t>(r)).cell(s.N).cell(s.M).cell(s.first_branch);
        w.end_row();
        Ns.push_back(static_cast<double>(s.N));
        Ms.push_back(s.M);
        lap.push_back(std::exp(-(o.theta1 * static_cast<double>(s.N) + o.theta2 * s.M) / t2));
        fb.push_back(s.first_branch / o.t);
    }
    dir.write("replicas.csv", csv.str());

    const MeanSd mn = mean_sd(Ns), mm = mean_sd(Ms), ml = mean_sd(lap);
    const LinearizedSolution lin = linearized_solve(tr, o.t);
    json j{{"start", {{"p", o.p}, {"lambda", o.lambda}}},
           {"phase", to_string(classify_phase(pt))},
           {"t", o.t},
           {"x0", o.x0},
           {"replicas", o.replicas},
           {"N", {{"mean", mn.mean}, {"se", mn.se}, {"linearized", lin.mean_N(o.x0)}}},
           {"M", {{"mean", mm.mean}, {"se", mm.se}, {"linearized", lin.mean_M(o.x0)}}},
           {"N_over_t2_mean", mn.mean / t2}};
    json lp{{"theta1", o.theta1}, {"theta2", o.theta2}, {"mc", ml.mean}, {"mc_se", ml.se}};
    lp["ode_phi"] = laplace_phi(tr, o.t, o.x0, o.theta1 / t2, o.theta2 / t2);
    if (classify_phase(pt) == Phase::Critical) {
        const GammaConstants gc = linearized_gammas(tr, o.gamma_horizon);
        const double x = o.x0 / o.t;
        j["gammas"] = gc.to_json();
        lp["limit"] = limit_laplace(gc.gamma1 * o.theta1 + gc.gamma2 * o.theta2, x);

        // N/t^2 histogram on [0, 6 gamma1)
        const int bins = 30;
        std::vector<std::uint64_t> h(bins, 0);
        for (double v : Ns) {
            const auto b = static_cast<std::size_t>(v / t2 / (6.0 * gc.gamma1) * bins);
            if (b < h.size()) h[b]++;
        }
        j["N_over_t2_histogram"] = {{"lo", 0.0}, {"hi", 6.0 * gc.gamma1}, {"counts", h}};

        std::sort(fb.begin(), fb.end());
        const auto F = [x](double r) { return r <= 0.0 ? 0.0 : r >= 1.0 ? 1.0 : 1.0 - first_branching_survival(r, x); };
        j["first_branch_ks"] = {{"ks", ks_one_sample(fb, F, F)}, {"ks_critical_1pct", ks_critical_one(0.01, fb.size())}};
    }
    j["laplace"] = lp;
    dir.write("summary.json", j.dump(2) + "\n");

    if (o.svg) {
        Rng rng = Rng(g.seed).split(0);
        dir.write("tree.svg", red_tree_svg(simulate_red_tree(o.x0, o.t, rho, rng)));
    }
    out << "redtree: " << o.replicas << " replicas, E N = " << format_double(mn.mean) << " (linearized "
        << format_double(lin.mean_N(o.x0)) << ")";
    if (j.contains("gammas")) out << ", N/t^2 mean " << format_double(mn.mean / t2) << " vs gamma1 "
                                  << format_double(j["gammas"]["gamma1"].get<double>());
    out << '\n';
}

// --------------------------------------------------------------- validate

void strip_timings(json& j) {
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end();) {
            if (it.key().ends_with("seconds"))
                it = j.erase(it);
            else
                strip_timings(*it++);
        }
    } else if (j.is_array()) {
        for (auto& v : j) strip_timings(v);
    }
}

json validate_params(const ValidateOpts& o) { return {{"suite", o.suite}, {"fast", o.fast}}; }

bool cmd_validate(const ValidateOpts& o, const Globals& g, OutputDir& dir, std::ostream& out) {
    suite_criteria(o.suite);  // usage check before any work
    ValidationOptions vo;
    vo.seed = g.seed;
    vo.workers = g.workers;
    vo.fast = o.fast;
    vo.on_result = [&out](const CriterionResult& r) {
        out << (r.pass ? "[PASS] " : "[FAIL] ") << r.id << ' ' << r.name << ": " << r.detail << " ["
            << format_double(std::round(r.seconds * 10) / 10) << " s]\n";
        out.flush();
    };
    const auto results = run_suite(o.suite, vo);
    json arr = json::array();
    bool ok = true;
    for (const auto& r : results) {
        json rj = r.to_json();
        strip_timings(rj);  // keep the file reproducible
        arr.push_back(rj);
        ok = ok && r.pass;
    }
    dir.write("validation.json", json{{"suite", o.suite}, {"fast", o.fast}, {"pass", ok}, {"criteria", arr}}.dump(2) + "\n");
    return ok;
}

std::string default_out() {
    const char* env = std::getenv(out_dir_env);
    return env && *env ? env : "drlab-out";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Simulation and validation toolkit for Derrida-Retaux type recursions", "drlab"};
    app.set_config("--config", "", "TOML file with option values; command-line flags take precedence");
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    g.out = default_out();
    g.workers = default_workers();
    app.add_option("--seed", g.seed, "Root seed of the random stream")->capture_default_str();
    app.add_option("--out", g.out, std::string("Output directory (default from ") + out_dir_env + ")")
        ->capture_default_str();
    app.add_option("--workers", g.workers, "Worker threads for replica loops")->check(CLI::Range(1, 1024));

    PhaseOpts ph;
    auto* c_phase = app.add_subcommand("phase", "Classify a (lambda, p) grid");
    c_phase->add_option("--lambda-min", ph.lam_min)->capture_default_str();
    c_phase->add_option("--lambda-max", ph.lam_max)->capture_default_str();
    c_phase->add_option("--lambda-steps", ph.lam_steps)->capture_default_str();
    c_phase->add_option("--p-min", ph.p_min)->capture_default_str();
    c_phase->add_option("--p-max", ph.p_max)->capture_default_str();
    c_phase->add_option("--p-steps", ph.p_steps)->capture_default_str();
    c_phase->add_option("--tol", ph.tol, "Critical band half-width (default: half the p spacing)");
    c_phase->add_flag("--svg", ph.svg, "Also write phase.svg");

    TrajectoryOpts tj;
    auto* c_traj = app.add_subcommand("trajectory", "Integrate the (p, lambda) flow");
    c_traj->add_option("--p", tj.p)->capture_default_str();
    c_traj->add_option("--lambda", tj.lambda)->capture_default_str();
    c_traj->add_option("--t-max", tj.t_max)->capture_default_str();
    c_traj->add_option("--points", tj.points, "Uniform output points (0: solver grid)")->capture_default_str();

    FreeEnergyOpts fe;
    auto* c_fe = app.add_subcommand("free-energy", "Free energy sweep and asymptotic fit");
    c_fe->add_option("--lambda", fe.lambda)->capture_default_str();
    c_fe->add_option("--gaps", fe.gaps, "Distances below p_c (or below 1 when lambda <= 1)")->delimiter(',');
    c_fe->add_option("--p", fe.ps, "Explicit p values; overrides --gaps")->delimiter(',');

    SimulateOpts sm;
    auto* c_sim = app.add_subcommand("simulate", "Painting, particle or discrete parking simulation");
    c_sim->add_option("--kind", sm.kind)->check(CLI::IsMember({"paint", "particles", "discrete"}))->capture_default_str();
    c_sim->add_option("--p", sm.p)->capture_default_str();
    c_sim->add_option("--lambda", sm.lambda)->capture_default_str();
    c_sim->add_option("--t", sm.t)->capture_default_str();
    c_sim->add_option("--pmf", sm.pmf, "Initial pmf as value:prob pairs, e.g. 0:0.8,2:0.2");
    c_sim->add_option("--pmf-file", sm.pmf_file, "CSV with header and value,prob rows");
    c_sim->add_option("--replicas", sm.replicas)->capture_default_str();
    c_sim->add_option("--particles", sm.particles)->capture_default_str();
    c_sim->add_option("--height", sm.height, "Generations n of the discrete recursion")->capture_default_str();
    c_sim->add_option("--bins", sm.bins, "Histogram bins in the summary")->capture_default_str();
    c_sim->add_flag("--samples", sm.samples, "Also write samples.csv");

    RedtreeOpts rt;
    auto* c_rt = app.add_subcommand("redtree", "Red tree replicas and limit comparisons");
    c_rt->add_option("--p", rt.p)->capture_default_str();
    c_rt->add_option("--lambda", rt.lambda)->capture_default_str();
    c_rt->add_option("--t", rt.t)->capture_default_str();
    c_rt->add_option("--x0", rt.x0)->capture_default_str();
    c_rt->add_option("--replicas", rt.replicas)->capture_default_str();
    c_rt->add_option("--theta1", rt.theta1)->capture_default_str();
    c_rt->add_option("--theta2", rt.theta2)->capture_default_str();
    c_rt->add_option("--gamma-horizon", rt.gamma_horizon)->capture_default_str();
    c_rt->add_flag("--svg", rt.svg, "Render replica 0 to tree.svg");

    ValidateOpts va;
    auto* c_val = app.add_subcommand("validate", "Run acceptance checks");
    c_val->add_option("--suite", va.suite, "ode, free-energy, painting, redtree, properties or all")->capture_default_str();
    c_val->add_flag("--fast", va.fast, "Reduced replica counts");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();  // program name
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::usage);
    }

    const auto t0 = std::chrono::steady_clock::now();
    try {
        RunConfig cfg;
        cfg.seed = g.seed;
        cfg.out_dir = g.out;
        cfg.workers = g.workers;
        cfg.formats = {"csv", "json"};
        bool ok = true;
        auto run = [&](const std::string& name, json params, auto&& body) {
            cfg.subcommand = name;
            cfg.params = std::move(params);
            cfg.argv = canonical_argv(name, cfg.params, g.seed);
            OutputDir dir(g.out);
            body(dir);
            for (const auto& [file, sum] : dir.checksums()) {
                (void)sum;
                if (file.ends_with(".svg") &&
                    std::find(cfg.formats.begin(), cfg.formats.end(), "svg") == cfg.formats.end())
                    cfg.formats.push_back("svg");
            }
            RunManifest m;
            m.config = cfg;
            m.generator = std::string(Rng::generator_id);
            m.checksums = dir.checksums();
            m.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            write_manifest(dir, m);
        };
        if (c_phase->parsed())
            run("phase", phase_params(ph), [&](OutputDir& d) { cmd_phase(ph, d, out); });
        else if (c_traj->parsed())
            run("trajectory", trajectory_params(tj), [&](OutputDir& d) { cmd_trajectory(tj, d, out); });
        else if (c_fe->parsed())
            run("free-energy", free_energy_params(fe), [&](OutputDir& d) { cmd_free_energy(fe, d, out); });
        else if (c_sim->parsed())
            run("simulate", simulate_params(sm), [&](OutputDir& d) { cmd_simulate(sm, g, d, out); });
        else if (c_rt->parsed())
            run("redtree", redtree_params(rt), [&](OutputDir& d) { cmd_redtree(rt, g, d, out); });
        else if (c_val->parsed())
            run("validate", validate_params(va), [&](OutputDir& d) { ok = cmd_validate(va, g, d, out); });
        return static_cast<int>(ok ? ExitCode::ok : ExitCode::validation_failure);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::usage);
    } catch (const DomainError& e) {
        err << "usage error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::usage);
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::numerical);
    } catch (const ResourceError& e) {
        err << "resource error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::resource);
    } catch (const std::bad_alloc&) {
        err << "resource error: out of memory\n";
        return static_cast<int>(ExitCode::resource);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::numerical);
    }
}

}  // namespace drlab
