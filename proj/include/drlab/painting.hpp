#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "drlab/errors.hpp"
#include "drlab/measures.hpp"
#include "drlab/rng.hpp"
#include "drlab/summary.hpp"

namespace drlab {

/// Binary Yule tree cut at height t. Nodes are stored parent-before-child;
/// node 0 is the root. Leaves have death == height.
struct YuleTree {
    struct Node {
        double birth = 0.0;
        double death = 0.0;
        std::int64_t parent = -1;
        std::int64_t child[2] = {-1, -1};
        bool leaf() const { return child[0] < 0; }
    };
    std::vector<Node> nodes;
    double height = 0.0;

    std::size_t leaf_count() const;
    double total_length() const;
    /// Ulam-Harris word of node i, e.g. "" for the root, "12" for the
    /// second child of the first child.
    std::string label(std::size_t i) const;
};

YuleTree generate_yule(double t, double node_budget, Rng& rng);

struct PaintedTree {
    YuleTree tree;
    /// Paint at birth X^t_{b_u}(u) per node; for leaves this is the leaf
    /// sample reduced by the leaf's branch length.
    std::vector<double> at_birth;
    /// Leaf samples at height t (0 for internal nodes).
    std::vector<double> leaf_value;
    double root_value = 0.0;
};

PaintedTree paint_tree(YuleTree tree, const ExpMixture& mu0, Rng& rng);

/// Root value of an unstored painted Yule tree of height t; throws
/// ResourceError once more than `node_budget` nodes have been visited.
double sample_root_value(double t, const ExpMixture& mu0, Rng& rng,
                         double node_budget = default_node_budget);

struct RootLawResult {
    EmpiricalSample sample;
    ReplicaSummary summary;
};

RootLawResult monte_carlo_root_law(const ExpMixture& mu0, double t, std::size_t replicas,
                                   std::uint64_t seed, int workers = 1,
                                   double node_budget = default_node_budget,
                                   HistogramSpec hist = {});

/// Finite pmf on the non-negative integers; prob[k] = P(X = k).
struct DiscretePmf {
    std::vector<double> prob;

    DiscretePmf() = default;
    explicit DiscretePmf(std::vector<double> p);
    static DiscretePmf from_map(const std::map<std::int64_t, double>& m);
    static DiscretePmf dirac(std::int64_t k);

    std::size_t support_size() const { return prob.size(); }
    double mean() const;
    double at(std::size_t k) const { return k < prob.size() ? prob[k] : 0.0; }
    std::uint64_t sample(Rng& rng) const;
    nlohmann::json to_json() const;
};

/// Largest support accepted by discrete_parking_iterate.
inline constexpr std::size_t default_pmf_support_budget = std::size_t{1} << 22;

DiscretePmf discrete_parking_iterate(const DiscretePmf& pmf, int n,
                                     std::size_t support_budget = default_pmf_support_budget);

struct CegmResult {
    enum class Verdict { unpinned_or_critical, pinned };
    Verdict verdict = Verdict::pinned;
    double weighted = 0.0;  // sum x 2^x pmf(x)
    double mass = 0.0;      // sum 2^x pmf(x)
    bool equality = false;
};
std::string to_string(CegmResult::Verdict v);
CegmResult cegm_criterion(const DiscretePmf& pmf);

EmpiricalSample discrete_parking_sample(const DiscretePmf& pmf, int n, std::size_t replicas,
                                        std::uint64_t seed, int workers = 1,
                                        double node_budget = default_node_budget);

using InitialLaw = std::variant<ExpMixture, DiscretePmf>;

/// Empirical McKean-Vlasov system after exact event-driven evolution.
struct ParticleSystem {
    std::vector<double> x;
    double time = 0.0;
    std::uint64_t events = 0;
    /// Quadratic-variation estimate of Var(e^{-t} sum_i x_i / N): initial
    /// empirical variance / N plus sum over jumps of (e^{-s} x_donor / N)^2.
    double scaled_mean_qv = 0.0;
    struct Event {
        double time;
        std::uint32_t receiver, donor;
        double amount;
    };
    std::vector<Event> log;  // filled only when requested

    std::size_t count() const { return x.size(); }
    EmpiricalSample sample(std::uint64_t seed = 0) const;
    /// Standard error of the mean at `time` from scaled_mean_qv; unlike
    /// sd/sqrt(N) it accounts for the correlation the jumps create.
    double mean_se_correlated() const;
};

struct ParticleOptions {
    bool keep_log = false;
    std::size_t log_limit = 1'000'000;
};

ParticleSystem simulate_particles(const InitialLaw& mu0, std::size_t N, double t, Rng& rng,
                                  const ParticleOptions& opt = {});

enum class Verdict { holds, inconclusive, violated };
std::string to_string(Verdict v);

struct SubcriticalReport {
    struct Check {
        std::string name;
        double parameter = 0.0;  // x for point 1, theta for point 3
        /// Statistic that must be >= 0 under subcriticality, with its
        /// bootstrap CI. Values may be +-inf when only the sign is finite
        /// (e.g. exponential moments that overflow).
        double estimate = 0.0, lo = 0.0, hi = 0.0;
        Verdict verdict = Verdict::inconclusive;
    };
    std::vector<Check> checks;
    double level = 0.99;
    int bootstrap = 0;
    /// Worst verdict per point (index 0..3 <-> points 1..4).
    Verdict point[4] = {Verdict::holds, Verdict::holds, Verdict::holds, Verdict::holds};
    nlohmann::json to_json() const;
};

/// Evaluates the four subcritical inequalities on `sample` with
/// nonparametric bootstrap CIs. One-sided evidence only: "violated" means
/// the CI lies entirely on the wrong side.
SubcriticalReport subcritical_diagnostics(const EmpiricalSample& sample, double t,
                                          std::uint64_t seed, int bootstrap = 200,
                                          double level = 0.99);

struct RescaledLimitReport {
    double F = 0.0;
    double ks = 0.0, ks_critical = 0.0;
    bool ks_pass = false;
    double ratio[3] = {0, 0, 0};
    double ratio_se[3] = {0, 0, 0};
    /// ratio_se combined with n * scale_rel_se (the common-scale fluctuation
    /// of a correlated sample); equals ratio_se when scale_rel_se = 0.
    double ratio_se_total[3] = {0, 0, 0};
    double scale_rel_se = 0.0;
    nlohmann::json to_json() const;
};

/// Compares e^{-t} X against Exp(1/F). The atom at 0 is retained in the
/// comparison; for pinned points it is O(t e^{-t}) and below KS resolution.
/// ratio_se is the i.i.d. error. For particle samples pass the relative
/// standard error of the mean from mean_se_correlated() as scale_rel_se.
RescaledLimitReport rescaled_limit_check(const ExpMixture& mu0, double t, const EmpiricalSample& sample,
                                         double alpha = 0.01, double scale_rel_se = 0.0);

}  // namespace drlab
