#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "drlab/dynamics.hpp"
#include "drlab/errors.hpp"
#include "drlab/rng.hpp"

namespace drlab {

/// rho(s) = (1-p(s)) lambda(s) on [0, horizon] with O(1) range-max bounds.
///
/// sup() takes the max of the sampled grid over the cells covering [a, b]
/// and inflates it by `margin`. rho is smooth, so the only way the true
/// sup can exceed the grid max is an interior local maximum, where the
/// excess is O(h^2); the thinning loop asserts every acceptance ratio <= 1.
class RhoTable {
public:
    RhoTable(const Trajectory& traj, double horizon, double cell = 0.005);

    double horizon() const { return horizon_; }
    double at(double s) const;
    double sup(double a, double b) const;
    const Trajectory& trajectory() const { return *traj_; }

    static constexpr double margin = 1.001;

private:
    const Trajectory* traj_;
    double horizon_, h_;
    std::vector<std::vector<double>> table_;  // sparse table, level k spans 2^k cells
};

/// Red tree in tree time s in [0, t]: a branch carrying mass m at tree time s
/// splits at rate rho(t - s) m; masses grow at slope 1.
struct RedTree {
    struct Node {
        double birth = 0.0, death = 0.0;
        double mass_birth = 0.0;
        std::int64_t parent = -1;
        std::int64_t child[2] = {-1, -1};
        bool leaf() const { return child[0] < 0; }
        double mass_death() const { return mass_birth + (death - birth); }
    };
    std::vector<Node> nodes;
    double height = 0.0;
    double x0 = 0.0;
};

struct LeafStats {
    std::uint64_t N = 0;
    double M = 0.0;
    /// Tree time of the root's first split, or the height if it never splits.
    double first_branch = 0.0;
};

RedTree simulate_red_tree(double x0, double t, const RhoTable& rho, Rng& rng,
                          double node_budget = default_node_budget);
/// Same law as leaf_stats(simulate_red_tree(...)) without storing nodes.
LeafStats simulate_red_tree_stats(double x0, double t, const RhoTable& rho, Rng& rng,
                                  double node_budget = default_node_budget);
/// Root branch only: first split time in tree time, or t.
double red_tree_first_branch(double x0, double t, const RhoTable& rho, Rng& rng);
LeafStats leaf_stats(const RedTree& tree);

/// Survival of the limit root branch to relative time r:
/// (1-r)^{-2} exp(-2(x+1) r/(1-r)).
double first_branching_survival(double r, double x);

/// Integrated limit hazard int_0^r 2(m0+v)/(w-v)^2 dv, w = 1 - s0.
double limit_hazard(double m0, double w, double r);

/// Limit process on [0, 1-eps]: rate 2m/(1-s)^2, uniform splits.
RedTree simulate_limit_tree(double x, double eps, Rng& rng, double node_budget = default_node_budget);
/// First split time of the limit root branch, in (0, 1).
double limit_first_branch(double x, Rng& rng);

struct ThetaSolution {
    std::vector<double> s, theta, dtheta;
    double eps1 = 0.0, eps2 = 0.0;
    double theta_t() const { return theta.back(); }
    double dtheta_t() const { return dtheta.back(); }
};

/// Theta'' = rho (1 - e^{-Theta}), Theta(0) = eps1, Theta'(0) = eps2, on
/// [0, t], integrated jointly with the dynamics in (log lambda, log(1-p)).
ThetaSolution theta_solve(const Trajectory& traj, double eps1, double eps2, double t);
/// E_x[exp(-eps1 N_t - eps2 M_t)] = exp(-(Theta(t) + x Theta'(t))).
double laplace_phi(const Trajectory& traj, double t, double x, double eps1, double eps2);

/// Solutions of a'' = rho a at time t for the two unit initial data.
struct LinearizedSolution {
    double t = 0.0;
    double a1 = 0.0, da1 = 0.0;  // (a, a')(0) = (1, 0)
    double a2 = 0.0, da2 = 0.0;  // (a, a')(0) = (0, 1)
    /// E_x[N_t] and E_x[M_t].
    double mean_N(double x) const { return a1 + x * da1; }
    double mean_M(double x) const { return a2 + x * da2; }
};
LinearizedSolution linearized_solve(const Trajectory& traj, double t);
/// (a(t), a'(t)) for a'' = rho a with general initial data.
std::pair<double, double> linearized_value(const Trajectory& traj, double t, double a0, double da0);

struct GammaConstants {
    double gamma1 = 0.0, gamma2 = 0.0;
    double horizon = 0.0;
    /// max over i of |a_i(T)/T^2 - a_i'(T)/(2T)| / (a_i(T)/T^2).
    double plateau_error = 0.0;
    nlohmann::json to_json() const;
};

/// gamma_i = a_i(T)/T^2; throws NumericalError if a_i'(T)/(2T) disagrees by
/// more than `plateau_tol` (relative). Only the start point of `traj` is
/// used; the dynamics are re-integrated jointly up to `horizon`.
GammaConstants linearized_gammas(const Trajectory& traj, double horizon, double plateau_tol = 0.01);

/// 3c/sinh^2(sqrt(3c)) exp(-2x(sqrt(3c) coth(sqrt(3c)) - 1)).
double limit_laplace(double c, double x);

struct BridgeSample {
    std::vector<double> r;  // K+1 values on the uniform grid of [0,1]
    double x = 0.0;
    double eta = 0.0;
};
/// Four scalar Brownian bridges (three 0 -> 0, one 0 -> 2 sqrt(x)); r is
/// their Euclidean norm and eta = (3/2) * trapezoid(r^2).
BridgeSample bessel_eta_sample(double x, int K, Rng& rng);
double bessel_eta(double x, int K, Rng& rng);

struct LeafLimitReport {
    double t = 0.0, x = 0.0, theta1 = 0.0, theta2 = 0.0;
    std::size_t replicas = 0;
    double mc_mean = 0.0, mc_se = 0.0;
    double limit = 0.0;      // limit_laplace(gamma1 theta1 + gamma2 theta2, x)
    double ode_phi = 0.0;    // exact finite-t value from the Theta equation
    double gap = 0.0;        // |mc_mean - limit|
    double tolerance = 0.0;  // max(3 se, rel_tol * limit)
    bool pass = false;
    GammaConstants gammas;
    nlohmann::json to_json() const;
};

LeafLimitReport leaf_limit_check(const Trajectory& traj, double t, std::size_t replicas, double theta1,
                                 double theta2, double x, std::uint64_t seed, const GammaConstants& gammas,
                                 int workers = 1, double rel_tol = 0.05);

/// Per-replica red-tree statistics for a fixed seed; replica r uses
/// split(r) of the root stream.
std::vector<LeafStats> red_tree_replicas(double x0, double t, const RhoTable& rho, std::size_t replicas,
                                         std::uint64_t seed, int workers = 1,
                                         double node_budget = default_node_budget);

}  // namespace drlab
