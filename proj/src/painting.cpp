#include "drlab/painting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "drlab/dynamics.hpp"
#include "drlab/exact_sum.hpp"
#include "drlab/stats.hpp"

namespace drlab {

namespace {

[[noreturn]] void budget_exceeded(double t, double budget) {
    throw ResourceError("Yule tree of height " + std::to_string(t) + " exceeded node budget " +
                        std::to_string(static_cast<long long>(budget)) + " (expected leaf count e^t = " +
                        std::to_string(std::exp(t)) + ")");
}

class PmfSampler {
public:
    explicit PmfSampler(const DiscretePmf& pmf) : cum_(pmf.prob.size()) {
        std::partial_sum(pmf.prob.begin(), pmf.prob.end(), cum_.begin());
    }
    std::uint64_t operator()(Rng& rng) const {
        const double u = rng.uniform() * cum_.back();
        auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
        if (it == cum_.end()) --it;
        // skip zero-probability entries at the boundary
        while (it != cum_.begin() && *(it - 1) == *it) --it;
        return static_cast<std::uint64_t>(it - cum_.begin());
    }

private:
    std::vector<double> cum_;
};

}  // namespace

std::size_t YuleTree::leaf_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return n.leaf(); }));
}

double YuleTree::total_length() const {
    ExactSum s;
    for (const auto& n : nodes) s.add(n.death - n.birth);
    return s.value();
}

std::string YuleTree::label(std::size_t i) const {
    std::string word;
    auto cur = static_cast<std::int64_t>(i);
    while (nodes.at(static_cast<std::size_t>(cur)).parent >= 0) {
        const auto par = nodes[static_cast<std::size_t>(cur)].parent;
        word.push_back(nodes[static_cast<std::size_t>(par)].child[0] == cur ? '1' : '2');
        cur = par;
    }
    std::reverse(word.begin(), word.end());
    return word;
}

YuleTree generate_yule(double t, double node_budget, Rng& rng) {
    if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("generate_yule: t must be positive and finite");
    YuleTree tree;
    tree.height = t;
    tree.nodes.push_back({});
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const double b = tree.nodes[i].birth;
        const double d = b + rng.exponential();
        if (d >= t) {
            tree.nodes[i].death = t;
            continue;
        }
        tree.nodes[i].death = d;
        if (static_cast<double>(tree.nodes.size() + 2) > node_budget) budget_exceeded(t, node_budget);
        for (int c = 0; c < 2; ++c) {
            YuleTree::Node child;
            child.birth = d;
            child.parent = static_cast<std::int64_t>(i);
            tree.nodes[i].child[c] = static_cast<std::int64_t>(tree.nodes.size());
            tree.nodes.push_back(child);
        }
    }
    return tree;
}

PaintedTree paint_tree(YuleTree tree, const ExpMixture& mu0, Rng& rng) {
    PaintedTree out;
    const std::size_t n = tree.nodes.size();
    out.at_birth.assign(n, 0.0);
    out.leaf_value.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        if (tree.nodes[i].leaf()) out.leaf_value[i] = sample(mu0, rng);
    for (std::size_t k = n; k-- > 0;) {
        const auto& nd = tree.nodes[k];
        const double above = nd.leaf() ? out.leaf_value[k]
                                       : out.at_birth[static_cast<std::size_t>(nd.child[0])] +
                                             out.at_birth[static_cast<std::size_t>(nd.child[1])];
        out.at_birth[k] = std::max(0.0, above - (nd.death - nd.birth));
    }
    out.root_value = n ? out.at_birth[0] : 0.0;
    out.tree = std::move(tree);
    return out;
}

double sample_root_value(double t, const ExpMixture& mu0, Rng& rng, double node_budget) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("sample_root_value: t must be finite and >= 0");
    double visited = 0.0;
    auto rec = [&](auto&& self, double b) -> double {
        if (++visited > node_budget) budget_exceeded(t, node_budget);
        const double e = rng.exponential();
        if (b + e >= t) return std::max(0.0, sample(mu0, rng) - (t - b));
        const double left = self(self, b + e);
        const double right = self(self, b + e);
        return std::max(0.0, left + right - e);
    };
    return rec(rec, 0.0);
}

RootLawResult monte_carlo_root_law(const ExpMixture& mu0, double t, std::size_t replicas,
                                   std::uint64_t seed, int workers, double node_budget, HistogramSpec hist) {
    std::vector<double> values(replicas);
    const std::size_t block = 1024;
    std::vector<ReplicaSummary> parts((replicas + block - 1) / block, ReplicaSummary(hist));
    const Rng root(seed);
    parallel_blocks(
        replicas, workers,
        [&](std::size_t lo, std::size_t hi) {
            ReplicaSummary& part = parts[lo / block];
            for (std::size_t r = lo; r < hi; ++r) {
                Rng rng = root.split(r);
                values[r] = sample_root_value(t, mu0, rng, node_budget);
                part.add(values[r]);
            }
        },
        block);
    RootLawResult res{EmpiricalSample(std::move(values), seed), ReplicaSummary(hist)};
    for (const auto& p : parts) res.summary.merge(p);
    return res;
}

DiscretePmf::DiscretePmf(std::vector<double> p) : prob(std::move(p)) {
    if (prob.empty()) throw DomainError("DiscretePmf: empty support");
    double total = 0.0;
    for (double v : prob) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("DiscretePmf: probabilities must be finite and >= 0");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-12) throw DomainError("DiscretePmf: probabilities must sum to 1 within 1e-12");
    while (prob.size() > 1 && prob.back() == 0.0) prob.pop_back();
}

DiscretePmf DiscretePmf::from_map(const std::map<std::int64_t, double>& m) {
    if (m.empty()) throw DomainError("DiscretePmf: empty support");
    if (m.begin()->first < 0) throw DomainError("DiscretePmf: support must be non-negative");
    std::vector<double> p(static_cast<std::size_t>(m.rbegin()->first) + 1, 0.0);
    for (const auto& [k, v] : m) p[static_cast<std::size_t>(k)] += v;
    return DiscretePmf(std::move(p));
}

DiscretePmf DiscretePmf::dirac(std::int64_t k) { return from_map({{k, 1.0}}); }

double DiscretePmf::mean() const {
    ExactSum s;
    for (std::size_t k = 0; k < prob.size(); ++k) s.add(static_cast<double>(k) * prob[k]);
    return s.value();
}

std::uint64_t DiscretePmf::sample(Rng& rng) const { return PmfSampler(*this)(rng); }

nlohmann::json DiscretePmf::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t k = 0; k < prob.size(); ++k)
        if (prob[k] > 0.0) j[std::to_string(k)] = prob[k];
    return j;
}

DiscretePmf discrete_parking_iterate(const DiscretePmf& pmf, int n, std::size_t support_budget) {
    if (n < 0) throw DomainError("discrete_parking_iterate: n must be >= 0");
    std::vector<double> cur = pmf.prob;
    for (int step = 0; step < n; ++step) {
        const std::size_t m = cur.size();
        const std::size_t out_size = std::max<std::size_t>(1, 2 * m - 2);
        if (out_size > support_budget)
            throw ResourceError("discrete_parking_iterate: support " + std::to_string(out_size) +
                                " exceeds budget " + std::to_string(support_budget) + " at step " +
                                std::to_string(step + 1));
        std::vector<std::size_t> nz;
        for (std::size_t i = 0; i < m; ++i)
            if (cur[i] > 0.0) nz.push_back(i);
        std::vector<double> next(out_size, 0.0);
        for (std::size_t a = 0; a < nz.size(); ++a) {
            const std::size_t i = nz[a];
            const double pi = cur[i];
            next[i + i > 0 ? i + i - 1 : 0] += pi * pi;
            for (std::size_t b = a + 1; b < nz.size(); ++b) {
                const std::size_t j = nz[b];
                next[i + j - 1] += 2.0 * pi * cur[j];
            }
        }
        ExactSum total;
        for (double v : next) total.add(v);
        const double s = total.value();
        if (std::abs(s - 1.0) > tol::pmf_drift)
            throw NumericalError("discrete_parking_iterate: probability drift " + std::to_string(s - 1.0));
        for (double& v : next) v /= s;
        while (next.size() > 1 && next.back() == 0.0) next.pop_back();
        cur = std::move(next);
    }
    DiscretePmf out;
    out.prob = std::move(cur);
    return out;
}

std::string to_string(CegmResult::Verdict v) {
    return v == CegmResult::Verdict::pinned ? "pinned" : "unpinned_or_critical";
}

CegmResult cegm_criterion(const DiscretePmf& pmf) {
    // The verdict uses sum (x-1) 2^{x-xmax} pmf(x), which is finite for any
    // support; the two exposed sums may overflow to inf.
    const int xmax = static_cast<int>(pmf.prob.size()) - 1;
    ExactSum weighted, mass, diff, scaled_mass;
    for (int x = 0; x <= xmax; ++x) {
        const double p = pmf.prob[static_cast<std::size_t>(x)];
        if (p == 0.0) continue;
        const double w = std::ldexp(p, x);
        weighted.add(x * w);
        mass.add(w);
        const double ws = std::ldexp(p, x - xmax);
        diff.add((x - 1) * ws);
        scaled_mass.add(ws);
    }
    CegmResult r;
    r.weighted = weighted.value();
    r.mass = mass.value();
    const double d = diff.value();
    r.verdict = d <= 0.0 ? CegmResult::Verdict::unpinned_or_critical : CegmResult::Verdict::pinned;
    r.equality = std::abs(d) <= 1e-12 * scaled_mass.value();
    return r;
}

EmpiricalSample discrete_parking_sample(const DiscretePmf& pmf, int n, std::size_t replicas,
                                        std::uint64_t seed, int workers, double node_budget) {
    if (n < 0 || n > 40) throw DomainError("discrete_parking_sample: height must lie in [0, 40]");
    const double nodes = std::ldexp(1.0, n + 1) - 1.0;
    if (nodes > node_budget)
        throw ResourceError("discrete_parking_sample: 2^(n+1)-1 = " + std::to_string(nodes) +
                            " nodes per tree exceeds budget");
    const PmfSampler draw(pmf);
    const std::size_t leaves = std::size_t{1} << n;
    std::vector<double> values(replicas);
    const Rng root(seed);
    parallel_blocks(replicas, workers, [&](std::size_t lo, std::size_t hi) {
        std::vector<std::uint64_t> buf(leaves);
        for (std::size_t r = lo; r < hi; ++r) {
            Rng rng = root.split(r);
            for (auto& v : buf) v = draw(rng);
            for (std::size_t width = leaves; width > 1; width /= 2)
                for (std::size_t k = 0; k < width / 2; ++k) {
                    const std::uint64_t s = buf[2 * k] + buf[2 * k + 1];
                    buf[k] = s > 0 ? s - 1 : 0;
                }
            values[r] = static_cast<double>(buf[0]);
        }
    });
    return EmpiricalSample(std::move(values), seed);
}

EmpiricalSample ParticleSystem::sample(std::uint64_t seed) const { return EmpiricalSample(x, seed); }

double ParticleSystem::mean_se_correlated() const { return std::exp(time) * std::sqrt(scaled_mean_qv); }

ParticleSystem simulate_particles(const InitialLaw& mu0, std::size_t N, double t, Rng& rng,
                                  const ParticleOptions& opt) {
    if (N < 2) throw DomainError("simulate_particles: N must be >= 2");
    if (N > std::numeric_limits<std::uint32_t>::max()) throw DomainError("simulate_particles: N too large");
    if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("simulate_particles: t must be finite and >= 0");

    ParticleSystem sys;
    std::vector<double> val(N), last(N, 0.0);
    if (const auto* m = std::get_if<ExpMixture>(&mu0)) {
        for (auto& v : val) v = sample(*m, rng);
    } else {
        const PmfSampler draw(std::get<DiscretePmf>(mu0));
        for (auto& v : val) v = static_cast<double>(draw(rng));
    }
    const double dn = static_cast<double>(N);
    {
        const MeanSd ms = mean_sd(val);
        ExactSum qv;
        qv.add(ms.sd * ms.sd / dn);

        double s = 0.0;
        for (;;) {
            s += rng.exponential() / dn;
            if (s >= t) break;
            const auto i = static_cast<std::uint32_t>(rng.below(N));
            const auto j = static_cast<std::uint32_t>(rng.below(N));
            const double xj = std::max(0.0, val[j] - (s - last[j]));
            const double xi = i == j ? xj : std::max(0.0, val[i] - (s - last[i]));
            val[i] = xi + xj;
            last[i] = s;
            ++sys.events;
            const double scaled = std::exp(-s) * xj / dn;
            qv.add(scaled * scaled);
            if (opt.keep_log && sys.log.size() < opt.log_limit) sys.log.push_back({s, i, j, xj});
        }
        sys.scaled_mean_qv = qv.value();
    }
    for (std::size_t i = 0; i < N; ++i) val[i] = std::max(0.0, val[i] - (t - last[i]));
    sys.x = std::move(val);
    sys.time = t;
    return sys;
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::holds: return "holds";
        case Verdict::inconclusive: return "inconclusive";
        case Verdict::violated: return "violated";
    }
    return "?";
}

namespace {

// Sum of sign_i * exp(la_i) in overflow-safe form, accumulated one term at a
// time. value() returns +-inf when the true sum exceeds double range.
struct SignedLogSum {
    double m = -std::numeric_limits<double>::infinity();
    double s = 0.0;
    void add(double la, double sign, double count = 1.0) {
        if (la == -std::numeric_limits<double>::infinity() || sign == 0.0) return;
        if (la > m) {
            s *= std::exp(m - la);
            m = la;
        }
        s += count * sign * std::exp(la - m);
    }
    double value_over(double n) const {
        if (s == 0.0) return 0.0;
        const double lv = std::log(std::abs(s)) + m - std::log(n);
        return std::copysign(lv > 709.0 ? std::numeric_limits<double>::infinity() : std::exp(lv), s);
    }
};

Verdict verdict_from_ci(double lo, double hi, bool strict) {
    if (strict ? lo > 0.0 : lo >= 0.0) return Verdict::holds;
    if (hi < 0.0) return Verdict::violated;
    return Verdict::inconclusive;
}

double percentile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto k = static_cast<std::size_t>(std::floor(pos));
    if (k + 1 >= v.size()) return v.back();
    const double f = pos - static_cast<double>(k);
    if (f == 0.0 || !std::isfinite(v[k]) || !std::isfinite(v[k + 1])) return f < 0.5 ? v[k] : v[k + 1];
    return v[k] + f * (v[k + 1] - v[k]);
}

}  // namespace

SubcriticalReport subcritical_diagnostics(const EmpiricalSample& sample, double t, std::uint64_t seed,
                                          int bootstrap, double level) {
    (void)t;
    const auto& xs = sample.values;
    const std::size_t n = xs.size();
    if (n == 0) throw DomainError("subcritical_diagnostics: empty sample");
    if (bootstrap < 20) throw DomainError("subcritical_diagnostics: need at least 20 bootstrap resamples");

    std::vector<double> tail_x;
    for (int k = 1; k <= 12; ++k) tail_x.push_back(0.5 * k);
    std::vector<double> thetas;
    for (int k = 1; k <= 9; ++k) thetas.push_back(0.1 * k);
    const std::size_t n_exp = thetas.size() + 1;

    // Per-observation ingredients: number of tail thresholds <= x, x^2, and
    // (sign, log|g|) of each exponential statistic.
    std::vector<std::uint8_t> tail_rank(n);
    std::vector<double> sq(n);
    std::vector<double> la(n * n_exp), sg(n * n_exp);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = xs[i];
        tail_rank[i] = static_cast<std::uint8_t>(std::upper_bound(tail_x.begin(), tail_x.end(), x) - tail_x.begin());
        sq[i] = x * x;
        for (std::size_t k = 0; k <= thetas.size(); ++k) {
            const double th = k < thetas.size() ? thetas[k] : 1.0;
            const double g = k < thetas.size() ? 1.0 - th * x - 2.0 * (1.0 - th) * x * x : 1.0 - x;
            la[i * n_exp + k] = g == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(std::abs(g)) + th * x;
            sg[i * n_exp + k] = g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0);
        }
    }

    const std::size_t n_stats = tail_x.size() + 1 + n_exp;
    auto evaluate = [&](const std::vector<std::uint32_t>* counts) {
        std::vector<double> out(n_stats);
        std::vector<double> ge(tail_x.size() + 1, 0.0);
        ExactSum sumsq;
        std::vector<SignedLogSum> es(n_exp);
        for (std::size_t i = 0; i < n; ++i) {
            const double c = counts ? (*counts)[i] : 1.0;
            if (c == 0.0) continue;
            ge[tail_rank[i]] += c;
            sumsq.add(c * sq[i]);
            for (std::size_t k = 0; k < n_exp; ++k) es[k].add(la[i * n_exp + k], sg[i * n_exp + k], c);
        }
        // ge[r] counts observations above exactly r thresholds; P(X >= x_k)
        // sums ranks > k.
        double above = 0.0;
        for (std::size_t k = tail_x.size(); k-- > 0;) {
            above += ge[k + 1];
            out[k] = std::exp(1.0 - tail_x[k]) - above / static_cast<double>(n);
        }
        out[tail_x.size()] = 0.5 - sumsq.value() / static_cast<double>(n);
        for (std::size_t k = 0; k < n_exp; ++k) out[tail_x.size() + 1 + k] = es[k].value_over(static_cast<double>(n));
        return out;
    };

    const std::vector<double> point = evaluate(nullptr);
    std::vector<std::vector<double>> boot(n_stats, std::vector<double>(static_cast<std::size_t>(bootstrap)));
    Rng rng(seed);
    std::vector<std::uint32_t> counts(n);
    for (int b = 0; b < bootstrap; ++b) {
        std::fill(counts.begin(), counts.end(), 0u);
        for (std::size_t k = 0; k < n; ++k) counts[rng.below(n)]++;
        const auto v = evaluate(&counts);
        for (std::size_t s = 0; s < n_stats; ++s) boot[s][static_cast<std::size_t>(b)] = v[s];
    }

    SubcriticalReport rep;
    rep.level = level;
    rep.bootstrap = bootstrap;
    const double a = (1.0 - level) / 2.0;
    for (std::size_t s = 0; s < n_stats; ++s) {
        SubcriticalReport::Check c;
        int pt = 0;
        if (s < tail_x.size()) {
            c.name = "tail_bound";
            c.parameter = tail_x[s];
            pt = 0;
        } else if (s == tail_x.size()) {
            c.name = "second_moment";
            pt = 1;
        } else if (s < n_stats - 1) {
            c.name = "theta_moment";
            c.parameter = thetas[s - tail_x.size() - 1];
            pt = 2;
        } else {
            c.name = "exp_moment";
            c.parameter = 1.0;
            pt = 3;
        }
        c.estimate = point[s];
        c.lo = percentile(boot[s], a);
        c.hi = percentile(boot[s], 1.0 - a);
        c.verdict = verdict_from_ci(c.lo, c.hi, pt == 1);
        auto& worst = rep.point[pt];
        if (c.verdict == Verdict::violated || (c.verdict == Verdict::inconclusive && worst == Verdict::holds))
            worst = c.verdict;
        rep.checks.push_back(c);
    }
    return rep;
}

nlohmann::json SubcriticalReport::to_json() const {
    auto num = [](double v) -> nlohmann::json {
        if (std::isfinite(v)) return v;
        return v > 0 ? "+inf" : "-inf";
    };
    nlohmann::json j;
    j["level"] = level;
    j["bootstrap"] = bootstrap;
    j["evidence"] = "one-sided";
    for (int k = 0; k < 4; ++k) j["points"].push_back(to_string(point[k]));
    for (const auto& c : checks)
        j["checks"].push_back({{"name", c.name}, {"parameter", c.parameter}, {"estimate", num(c.estimate)},
                               {"ci", {num(c.lo), num(c.hi)}}, {"verdict", to_string(c.verdict)}});
    return j;
}

RescaledLimitReport rescaled_limit_check(const ExpMixture& mu0, double t, const EmpiricalSample& sample,
                                         double alpha, double scale_rel_se) {
    const PhasePoint pt(mu0.p, mu0.lambda);
    if (classify_phase(pt) != Phase::Pinned) throw DomainError("rescaled_limit_check: initial point is not pinned");
    if (sample.count() < 2) throw DomainError("rescaled_limit_check: need at least two observations");
    RescaledLimitReport r;
    r.F = free_energy_quadrature(pt).value;
    const double scale = std::exp(-t);
    std::vector<double> y(sample.values.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = scale * sample.values[i];
    const EmpiricalSample ys(y, sample.seed, sample.generator);
    r.ks = ks_distance(ys, ExpMixture(0.0, 1.0 / r.F));
    r.ks_critical = ks_critical_one(alpha, ys.count());
    r.ks_pass = r.ks < r.ks_critical;
    double fact = 1.0;
    for (int k = 1; k <= 3; ++k) {
        fact *= k;
        std::vector<double> pw(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) pw[i] = std::pow(y[i], k);
        const MeanSd ms = mean_sd(pw);
        const double denom = fact * std::pow(r.F, k);
        r.ratio[k - 1] = ms.mean / denom;
        r.ratio_se[k - 1] = ms.se / denom;
        r.ratio_se_total[k - 1] = std::hypot(r.ratio_se[k - 1], k * scale_rel_se * r.ratio[k - 1]);
    }
    r.scale_rel_se = scale_rel_se;
    return r;
}

nlohmann::json RescaledLimitReport::to_json() const {
    return {{"F", F},
            {"ks", ks},
            {"ks_critical", ks_critical},
            {"ks_pass", ks_pass},
            {"moment_ratio", {ratio[0], ratio[1], ratio[2]}},
            {"moment_ratio_se_iid", {ratio_se[0], ratio_se[1], ratio_se[2]}},
            {"moment_ratio_se", {ratio_se_total[0], ratio_se_total[1], ratio_se_total[2]}},
            {"scale_rel_se", scale_rel_se}};
}

}  // namespace drlab
