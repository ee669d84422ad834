#include "drlab/redtree.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "drlab/exact_sum.hpp"
#include "drlab/ode.hpp"
#include "drlab/stats.hpp"
#include "drlab/summary.hpp"

namespace drlab {

namespace {

[[noreturn]] void red_budget_exceeded(double t, double budget) {
    std::ostringstream os;
    os << "red tree of height " << t << " exceeded node budget " << budget;
    throw ResourceError(os.str());
}

// Branches shorter than this use one proposal window for the rest of the
// horizon; longer ones use windows of a quarter of the remaining time.
constexpr double kMinWindow = 0.01;

struct Branch {
    double s0, m0;
    std::int64_t node;
};

// Thinning along one branch born at tree time s0 with mass m0. Returns the
// split time, or t if the branch reaches the top.
double thin_branch(double s0, double m0, double t, const RhoTable& rho, Rng& rng) {
    double s = s0;
    while (s < t) {
        const double remaining = t - s;
        double e = t;
        double bound = rho.sup(0.0, remaining) * (m0 + (t - s0));
        if (bound * remaining > 4.0 && remaining > kMinWindow) {
            e = std::min(t, s + std::max(0.25 * remaining, kMinWindow));
            bound = rho.sup(t - e, remaining) * (m0 + (e - s0));
        }
        if (!(bound > 0.0)) {
            if (!(bound == 0.0)) throw NumericalError("red tree thinning: non-finite rate bound");
            s = e;
            continue;
        }
        if (!std::isfinite(bound)) throw NumericalError("red tree thinning: non-finite rate bound");
        s += rng.exponential() / bound;
        if (s >= e) {
            s = e;
            continue;
        }
        const double rate = rho.at(t - s) * (m0 + (s - s0));
        const double ratio = rate / bound;
        if (ratio > 1.0 + 1e-12) {
            std::ostringstream os;
            os << "red tree thinning: acceptance ratio " << ratio << " > 1 at tree time " << s;
            throw NumericalError(os.str());
        }
        if (rng.uniform() < ratio) return s;
    }
    return t;
}

// f(u) = u/(1-u) + log(1-u), accurate for small u.
double hazard_core(double u) {
    if (u < 0.1) {
        double term = u, sum = 0.0;
        for (int k = 2; k < 60; ++k) {
            term *= u;
            const double add = term * (k - 1) / k;
            sum += add;
            if (add < 1e-18 * sum) break;
        }
        return sum;
    }
    return u / (1.0 - u) + std::log1p(-u);
}

// Solves limit_hazard(m0, w, r) = target for r in [0, rmax].
double invert_limit_hazard(double m0, double w, double rmax, double target) {
    const double a = m0 / w;
    auto g = [&](double u) { return 2.0 * (a * u / (1.0 - u) + hazard_core(u)) - target; };
    double lo = 0.0, hi = rmax / w;
    double u = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double gu = g(u);
        if (std::abs(gu) <= tol::hazard * std::max(1.0, target)) return u * w;
        if (gu > 0.0) hi = u; else lo = u;
        const double d = 2.0 * (a + u) / ((1.0 - u) * (1.0 - u));
        double un = d > 0.0 ? u - gu / d : 0.5 * (lo + hi);
        if (!(un > lo && un < hi)) un = 0.5 * (lo + hi);
        if (hi - lo <= 1e-16 * hi) return un * w;
        u = un;
    }
    return u * w;
}

template <class Visit>
void grow_red(double x0, double t, const RhoTable& rho, Rng& rng, double node_budget, Visit&& visit) {
    // visit(parent_node, s0, m0, death) returns the node id of the branch
    std::vector<Branch> stack{{0.0, x0, -1}};
    double count = 0.0;
    while (!stack.empty()) {
        const Branch b = stack.back();
        stack.pop_back();
        if (++count > node_budget) red_budget_exceeded(t, node_budget);
        const double d = thin_branch(b.s0, b.m0, t, rho, rng);
        const std::int64_t id = visit(b, d);
        if (d < t) {
            const double m = b.m0 + (d - b.s0);
            const double u = rng.uniform();
            stack.push_back({d, (1.0 - u) * m, id});
            stack.push_back({d, u * m, id});
        }
    }
}

}  // namespace

RhoTable::RhoTable(const Trajectory& traj, double horizon, double cell) : traj_(&traj), horizon_(horizon) {
    if (!(horizon > 0.0) || horizon > traj.horizon)
        throw DomainError("RhoTable: horizon must lie in (0, trajectory horizon]");
    const auto cells = static_cast<std::size_t>(std::ceil(horizon / cell));
    h_ = horizon / static_cast<double>(cells);
    std::vector<double> base(cells + 1);
    for (std::size_t k = 0; k <= cells; ++k)
        base[k] = traj.rho_at(std::min(horizon, h_ * static_cast<double>(k)));
    // level 0 holds per-cell maxima
    std::vector<double> lvl(cells);
    for (std::size_t k = 0; k < cells; ++k) lvl[k] = std::max(base[k], base[k + 1]);
    table_.push_back(std::move(lvl));
    for (std::size_t span = 1; 2 * span <= cells; span *= 2) {
        const auto& prev = table_.back();
        std::vector<double> next(prev.size() - span);
        for (std::size_t k = 0; k < next.size(); ++k) next[k] = std::max(prev[k], prev[k + span]);
        table_.push_back(std::move(next));
    }
}

double RhoTable::at(double s) const { return traj_->rho_at(std::clamp(s, 0.0, horizon_)); }

double RhoTable::sup(double a, double b) const {
    a = std::clamp(a, 0.0, horizon_);
    b = std::clamp(b, a, horizon_);
    const std::size_t cells = table_[0].size();
    const auto lo = std::min(cells - 1, static_cast<std::size_t>(a / h_));
    auto hi = static_cast<std::size_t>(std::ceil(b / h_));
    hi = std::clamp<std::size_t>(hi, lo + 1, cells);  // exclusive
    const std::size_t len = hi - lo;
    std::size_t k = 0;
    while ((std::size_t{2} << k) <= len) ++k;
    return margin * std::max(table_[k][lo], table_[k][hi - (std::size_t{1} << k)]);
}

RedTree simulate_red_tree(double x0, double t, const RhoTable& rho, Rng& rng, double node_budget) {
    if (!(x0 >= 0.0) || !(t > 0.0) || t > rho.horizon())
        throw DomainError("simulate_red_tree: need x0 >= 0 and 0 < t <= rho horizon");
    RedTree tree;
    tree.height = t;
    tree.x0 = x0;
    grow_red(x0, t, rho, rng, node_budget, [&](const Branch& b, double d) {
        RedTree::Node n;
        n.birth = b.s0;
        n.death = d;
        n.mass_birth = b.m0;
        n.parent = b.node;
        const auto id = static_cast<std::int64_t>(tree.nodes.size());
        if (b.node >= 0) {
            auto& par = tree.nodes[static_cast<std::size_t>(b.node)];
            par.child[par.child[0] < 0 ? 0 : 1] = id;
        }
        tree.nodes.push_back(n);
        return id;
    });
    return tree;
}

LeafStats simulate_red_tree_stats(double x0, double t, const RhoTable& rho, Rng& rng, double node_budget) {
    if (!(x0 >= 0.0) || !(t > 0.0) || t > rho.horizon())
        throw DomainError("simulate_red_tree_stats: need x0 >= 0 and 0 < t <= rho horizon");
    LeafStats st;
    st.first_branch = t;
    ExactSum mass;
    grow_red(x0, t, rho, rng, node_budget, [&](const Branch& b, double d) -> std::int64_t {
        if (b.node < 0) st.first_branch = d;
        if (d >= t) {
            ++st.N;
            mass.add(b.m0 + (t - b.s0));
        }
        return 0;
    });
    st.M = mass.value();
    return st;
}

double red_tree_first_branch(double x0, double t, const RhoTable& rho, Rng& rng) {
    if (!(x0 >= 0.0) || !(t > 0.0) || t > rho.horizon())
        throw DomainError("red_tree_first_branch: need x0 >= 0 and 0 < t <= rho horizon");
    return thin_branch(0.0, x0, t, rho, rng);
}

LeafStats leaf_stats(const RedTree& tree) {
    LeafStats st;
    st.first_branch = tree.nodes.empty() ? tree.height : tree.nodes[0].death;
    ExactSum mass;
    for (const auto& n : tree.nodes) {
        if (!n.leaf()) continue;
        ++st.N;
        mass.add(n.mass_death());
    }
    st.M = mass.value();
    return st;
}

double first_branching_survival(double r, double x) {
    if (!(r >= 0.0 && r < 1.0)) throw DomainError("first_branching_survival: r must lie in [0, 1)");
    if (!(x >= 0.0)) throw DomainError("first_branching_survival: x must be >= 0");
    return std::exp(-limit_hazard(x, 1.0, r));
}

double limit_hazard(double m0, double w, double r) {
    const double u = r / w;
    return 2.0 * ((m0 / w) * u / (1.0 - u) + hazard_core(u));
}

double limit_first_branch(double x, Rng& rng) {
    if (!(x >= 0.0)) throw DomainError("limit_first_branch: x must be >= 0");
    const double target = rng.exponential();
    // the hazard diverges at r = 1, so a split always happens before 1;
    // bracket where the hazard exceeds the target
    double rmax = 0.5;
    while (limit_hazard(x, 1.0, rmax) < target) rmax = 0.5 * (1.0 + rmax);
    return invert_limit_hazard(x, 1.0, rmax, target);
}

RedTree simulate_limit_tree(double x, double eps, Rng& rng, double node_budget) {
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("simulate_limit_tree: eps must lie in (0, 1)");
    if (!(x >= 0.0)) throw DomainError("simulate_limit_tree: x must be >= 0");
    const double top = 1.0 - eps;
    RedTree tree;
    tree.height = top;
    tree.x0 = x;
    std::vector<Branch> stack{{0.0, x, -1}};
    while (!stack.empty()) {
        const Branch b = stack.back();
        stack.pop_back();
        if (static_cast<double>(tree.nodes.size()) >= node_budget) red_budget_exceeded(top, node_budget);
        const double w = 1.0 - b.s0;
        const double rmax = top - b.s0;
        const double target = rng.exponential();
        double d = top;
        if (rmax > 0.0 && limit_hazard(b.m0, w, rmax) > target) d = b.s0 + invert_limit_hazard(b.m0, w, rmax, target);
        RedTree::Node n;
        n.birth = b.s0;
        n.death = d;
        n.mass_birth = b.m0;
        n.parent = b.node;
        const auto id = static_cast<std::int64_t>(tree.nodes.size());
        if (b.node >= 0) {
            auto& par = tree.nodes[static_cast<std::size_t>(b.node)];
            par.child[par.child[0] < 0 ? 0 : 1] = id;
        }
        tree.nodes.push_back(n);
        if (d < top) {
            const double m = b.m0 + (d - b.s0);
            const double u = rng.uniform();
            stack.push_back({d, (1.0 - u) * m, id});
            stack.push_back({d, u * m, id});
        }
    }
    return tree;
}

namespace {

// Integrates (y, z) jointly with extra components driven by rho = e^{y+z}.
DenseSolution integrate_with_flow(const Trajectory& traj, double t, OdeState extra,
                                  void (*extra_rhs)(double rho, const double* x, double* dx)) {
    OdeOptions o;
    o.atol = traj.atol > 0 ? traj.atol : tol::ode_abs;
    o.rtol = traj.rtol > 0 ? traj.rtol : tol::ode_rel;
    o.h_max_rel = 0.05;
    OdeState x0{std::log(traj.start.lambda), std::log1p(-traj.start.p)};
    x0.insert(x0.end(), extra.begin(), extra.end());
    OdeRhs rhs = [extra_rhs](const OdeState& x, OdeState& dx, double) {
        flow_rhs_yz(x[0], x[1], dx[0], dx[1]);
        extra_rhs(std::exp(x[0] + x[1]), x.data() + 2, dx.data() + 2);
    };
    return integrate_ode(rhs, std::move(x0), 0.0, t, o);
}

void theta_rhs(double rho, const double* x, double* dx) {
    dx[0] = x[1];
    dx[1] = -rho * std::expm1(-x[0]);
}

void linear_rhs(double rho, const double* x, double* dx) {
    dx[0] = x[1];
    dx[1] = rho * x[0];
    dx[2] = x[3];
    dx[3] = rho * x[2];
}

}  // namespace

ThetaSolution theta_solve(const Trajectory& traj, double eps1, double eps2, double t) {
    if (!(eps1 >= 0.0) || !(eps2 >= 0.0)) throw DomainError("theta_solve: eps must be >= 0");
    if (!(t > 0.0) || t > traj.horizon) throw DomainError("theta_solve: t must lie in (0, trajectory horizon]");
    ThetaSolution sol;
    sol.eps1 = eps1;
    sol.eps2 = eps2;
    if (traj.degenerate()) {
        // rho == 0: Theta is linear
        const int n = 101;
        for (int k = 0; k < n; ++k) {
            const double s = t * k / (n - 1);
            sol.s.push_back(s);
            sol.theta.push_back(eps1 + eps2 * s);
            sol.dtheta.push_back(eps2);
        }
        return sol;
    }
    const auto d = integrate_with_flow(traj, t, {eps1, eps2}, theta_rhs);
    for (std::size_t k = 0; k < d.t.size(); ++k) {
        sol.s.push_back(d.t[k]);
        sol.theta.push_back(d.x[k][2]);
        sol.dtheta.push_back(d.x[k][3]);
    }
    return sol;
}

double laplace_phi(const Trajectory& traj, double t, double x, double eps1, double eps2) {
    if (!(x >= 0.0)) throw DomainError("laplace_phi: x must be >= 0");
    const auto sol = theta_solve(traj, eps1, eps2, t);
    return std::exp(-(sol.theta_t() + x * sol.dtheta_t()));
}

LinearizedSolution linearized_solve(const Trajectory& traj, double t) {
    if (!(t > 0.0)) throw DomainError("linearized_solve: t must be > 0");
    LinearizedSolution out;
    out.t = t;
    if (traj.degenerate()) {
        out.a1 = 1.0;
        out.a2 = t;
        out.da2 = 1.0;
        return out;
    }
    const auto d = integrate_with_flow(traj, t, {1.0, 0.0, 0.0, 1.0}, linear_rhs);
    const auto& e = d.x.back();
    out.a1 = e[2];
    out.da1 = e[3];
    out.a2 = e[4];
    out.da2 = e[5];
    return out;
}

std::pair<double, double> linearized_value(const Trajectory& traj, double t, double a0, double da0) {
    if (!(t > 0.0)) throw DomainError("linearized_value: t must be > 0");
    if (traj.degenerate()) return {a0 + da0 * t, da0};
    const auto d = integrate_with_flow(traj, t, {a0, da0}, [](double rho, const double* x, double* dx) {
        dx[0] = x[1];
        dx[1] = rho * x[0];
    });
    return {d.x.back()[2], d.x.back()[3]};
}

GammaConstants linearized_gammas(const Trajectory& traj, double horizon, double plateau_tol) {
    if (classify_phase(traj.start) != Phase::Critical)
        throw DomainError("linearized_gammas: trajectory must start on the critical curve");
    const auto lin = linearized_solve(traj, horizon);
    const double T = horizon;
    GammaConstants g;
    g.horizon = T;
    g.gamma1 = lin.a1 / (T * T);
    g.gamma2 = lin.a2 / (T * T);
    const double e1 = std::abs(g.gamma1 - lin.da1 / (2.0 * T)) / g.gamma1;
    const double e2 = std::abs(g.gamma2 - lin.da2 / (2.0 * T)) / g.gamma2;
    g.plateau_error = std::max(e1, e2);
    if (!(g.gamma1 > 0.0 && g.gamma2 > 0.0) || !(g.plateau_error <= plateau_tol)) {
        std::ostringstream os;
        os << "linearized_gammas: plateau not reached at T=" << T << " (relative gap " << g.plateau_error
           << ", gamma1=" << g.gamma1 << ", gamma2=" << g.gamma2 << ")";
        throw NumericalError(os.str());
    }
    return g;
}

nlohmann::json GammaConstants::to_json() const {
    return {{"gamma1", gamma1}, {"gamma2", gamma2}, {"horizon", horizon}, {"plateau_error", plateau_error}};
}

double limit_laplace(double c, double x) {
    if (!(c >= 0.0) || !(x >= 0.0)) throw DomainError("limit_laplace: need c >= 0 and x >= 0");
    double head, tail;  // 3c/sinh^2(sqrt 3c) and sqrt(3c) coth(sqrt 3c) - 1
    if (c < 1e-4) {
        head = 1.0 - c + 0.6 * c * c - (2.0 / 7.0) * c * c * c;
        tail = c - 0.2 * c * c + (2.0 / 35.0) * c * c * c;
    } else {
        const double s = std::sqrt(3.0 * c);
        const double sh = std::sinh(s);
        head = s * s / (sh * sh);
        tail = s / std::tanh(s) - 1.0;
        if (!std::isfinite(head)) head = 0.0;
    }
    return head * std::exp(-2.0 * x * tail);
}

namespace {

// Fills r2 with the squared 4-d bridge radius; returns eta.
double bridge_eta(double x, int K, Rng& rng, std::vector<double>* r) {
    if (K < 100) throw DomainError("bessel_eta_sample: K must be >= 100");
    if (!(x >= 0.0)) throw DomainError("bessel_eta_sample: x must be >= 0");
    const double h = 1.0 / K;
    const double sh = std::sqrt(h);
    std::vector<double> r2(static_cast<std::size_t>(K) + 1, 0.0);
    std::vector<double> w(static_cast<std::size_t>(K) + 1);
    for (int c = 0; c < 4; ++c) {
        const double end = c == 3 ? 2.0 * std::sqrt(x) : 0.0;
        w[0] = 0.0;
        for (int k = 1; k <= K; ++k) w[static_cast<std::size_t>(k)] = w[static_cast<std::size_t>(k - 1)] + sh * rng.normal();
        const double wk = w.back();
        for (int k = 0; k <= K; ++k) {
            const double s = k == K ? 1.0 : k * h;
            const double b = k == K ? end : w[static_cast<std::size_t>(k)] - s * wk + s * end;
            r2[static_cast<std::size_t>(k)] += b * b;
        }
    }
    double sum = 0.5 * (r2.front() + r2.back());
    for (int k = 1; k < K; ++k) sum += r2[static_cast<std::size_t>(k)];
    if (r) {
        r->resize(r2.size());
        for (std::size_t k = 0; k < r2.size(); ++k) (*r)[k] = std::sqrt(r2[k]);
    }
    return 1.5 * sum * h;
}

}  // namespace

BridgeSample bessel_eta_sample(double x, int K, Rng& rng) {
    BridgeSample b;
    b.x = x;
    b.eta = bridge_eta(x, K, rng, &b.r);
    return b;
}

double bessel_eta(double x, int K, Rng& rng) { return bridge_eta(x, K, rng, nullptr); }

std::vector<LeafStats> red_tree_replicas(double x0, double t, const RhoTable& rho, std::size_t replicas,
                                         std::uint64_t seed, int workers, double node_budget) {
    std::vector<LeafStats> out(replicas);
    const Rng root(seed);
    parallel_blocks(replicas, workers, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t r = lo; r < hi; ++r) {
            Rng rng = root.split(r);
            out[r] = simulate_red_tree_stats(x0, t, rho, rng, node_budget);
        }
    }, 64);
    return out;
}

LeafLimitReport leaf_limit_check(const Trajectory& traj, double t, std::size_t replicas, double theta1,
                                 double theta2, double x, std::uint64_t seed, const GammaConstants& gammas,
                                 int workers, double rel_tol) {
    if (classify_phase(traj.start) != Phase::Critical)
        throw DomainError("leaf_limit_check: trajectory must start on the critical curve");
    if (!(theta1 >= 0.0) || !(theta2 >= 0.0)) throw DomainError("leaf_limit_check: theta must be >= 0");
    if (replicas < 2) throw DomainError("leaf_limit_check: need at least two replicas");
    LeafLimitReport rep;
    rep.t = t;
    rep.x = x;
    rep.theta1 = theta1;
    rep.theta2 = theta2;
    rep.replicas = replicas;
    rep.gammas = gammas;
    const RhoTable rho(traj, t);
    const auto stats = red_tree_replicas(x * t, t, rho, replicas, seed, workers);
    std::vector<double> vals(replicas);
    const double t2 = t * t;
    for (std::size_t r = 0; r < replicas; ++r)
        vals[r] = std::exp(-(theta1 * static_cast<double>(stats[r].N) + theta2 * stats[r].M) / t2);
    const MeanSd ms = mean_sd(vals);
    rep.mc_mean = ms.mean;
    rep.mc_se = ms.se;
    rep.limit = limit_laplace(gammas.gamma1 * theta1 + gammas.gamma2 * theta2, x);
    rep.ode_phi = laplace_phi(traj, t, x * t, theta1 / t2, theta2 / t2);
    rep.gap = std::abs(rep.mc_mean - rep.limit);
    rep.tolerance = std::max(3.0 * rep.mc_se, rel_tol * rep.limit);
    rep.pass = rep.gap < rep.tolerance;
    return rep;
}

nlohmann::json LeafLimitReport::to_json() const {
    return {{"t", t},           {"x", x},           {"theta1", theta1},       {"theta2", theta2},
            {"replicas", replicas}, {"mc_mean", mc_mean}, {"mc_se", mc_se},   {"limit", limit},
            {"ode_phi", ode_phi}, {"gap", gap},     {"tolerance", tolerance}, {"pass", pass},
            {"gammas", gammas.to_json()}};
}

}  // namespace drlab
