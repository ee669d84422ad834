#include "drlab/measures.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>

#include "drlab/errors.hpp"
#include "drlab/stats.hpp"

namespace drlab {

namespace {

void require_positive_rate(const ExpMixture& m, const char* op) {
    if (!(m.lambda > 0.0)) throw DomainError(std::string(op) + ": lambda must be > 0");
}

double gamma_cdf(int shape, double rate, double x) {
    const double z = rate * x;
    if (shape == 1) return -std::expm1(-z);
    // Gamma(2): 1 - e^{-z}(1 + z)
    if (z < 1e-3) {
        // series keeps relative accuracy for tiny z
        return z * z * (0.5 - z / 3.0 + z * z / 8.0 - z * z * z / 30.0);
    }
    return 1.0 - std::exp(-z) * (1.0 + z);
}

}  // namespace

ExpMixture::ExpMixture(double p_, double lambda_) : p(p_), lambda(lambda_) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("ExpMixture: p must lie in [0,1]");
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw DomainError("ExpMixture: lambda must be finite and >= 0");
}

void AtomGammaMixture::validate() const {
    double total = atom;
    for (const auto& c : components) {
        if (c.weight < 0.0 || c.weight > 1.0) throw DomainError("AtomGammaMixture: weight outside [0,1]");
        if (c.shape != 1 && c.shape != 2) throw DomainError("AtomGammaMixture: shape must be 1 or 2");
        if (!(c.rate > 0.0)) throw DomainError("AtomGammaMixture: rate must be > 0");
        total += c.weight;
    }
    if (std::fabs(total - 1.0) > tol::closed_form)
        throw DomainError("AtomGammaMixture: weights do not sum to 1");
}

EmpiricalSample::EmpiricalSample(std::vector<double> v, std::uint64_t seed_, std::string generator_)
    : values(std::move(v)), seed(seed_), generator(std::move(generator_)) {
    for (double x : values)
        if (!(x >= 0.0)) throw DomainError("EmpiricalSample: values must be non-negative");
    std::sort(values.begin(), values.end());
}

double cdf(const ExpMixture& m, double x) {
    if (!(x >= 0.0)) throw DomainError("cdf: x must be >= 0");
    if (m.lambda == 0.0) return m.p;
    if (std::isinf(x)) return 1.0;
    return m.p + (1.0 - m.p) * (-std::expm1(-m.lambda * x));
}

double quantile(const ExpMixture& m, double u) {
    require_positive_rate(m, "quantile");
    if (!(u >= 0.0 && u < 1.0)) throw DomainError("quantile: u must lie in [0,1)");
    if (u <= m.p) return 0.0;
    // The closed form can be off by an ulp either way. Refine to the least
    // double x with cdf(x) >= u so quantile and cdf form an exact Galois pair
    // in floating point. Non-negative doubles order like their bit patterns.
    const double guess = std::max(0.0, -std::log((1.0 - u) / (1.0 - m.p)) / m.lambda);
    const auto bits = [](double v) { return std::bit_cast<std::uint64_t>(v); };
    const auto real = [](std::uint64_t b) { return std::bit_cast<double>(b); };
    const auto ok = [&](std::uint64_t b) { return cdf(m, real(b)) >= u; };
    std::uint64_t hi = bits(guess), lo = hi;
    for (std::uint64_t step = 1; !ok(hi); step *= 2) hi += step;
    for (std::uint64_t step = 1; lo > 0 && ok(lo); step *= 2) lo = lo > step ? lo - step : 0;
    if (ok(lo)) return real(lo);
    while (hi - lo > 1) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        (ok(mid) ? hi : lo) = mid;
    }
    return real(hi);
}

double sample(const ExpMixture& m, Rng& rng) {
    require_positive_rate(m, "sample");
    if (m.p >= 1.0) return 0.0;
    const double u = rng.uniform();
    if (u < m.p) return 0.0;
    return rng.exponential() / m.lambda;
}

double mean(const ExpMixture& m) {
    require_positive_rate(m, "mean");
    return (1.0 - m.p) / m.lambda;
}

double second_moment(const ExpMixture& m) {
    require_positive_rate(m, "second_moment");
    return 2.0 * (1.0 - m.p) / (m.lambda * m.lambda);
}

AtomGammaMixture convolve_self(const ExpMixture& m) {
    require_positive_rate(m, "convolve_self");
    const double p = m.p;
    const double q = 1.0 - p;
    AtomGammaMixture g;
    g.atom = p * p;
    if (p < 1.0) {
        g.components.push_back({2.0 * p * q, 1, m.lambda});
        g.components.push_back({q * q, 2, m.lambda});
    }
    return g;
}

double cdf(const AtomGammaMixture& g, double x) {
    if (!(x >= 0.0)) throw DomainError("cdf: x must be >= 0");
    double c = g.atom;
    for (const auto& comp : g.components) c += comp.weight * gamma_cdf(comp.shape, comp.rate, x);
    return c;
}

double mean(const AtomGammaMixture& g) {
    double s = 0.0;
    for (const auto& c : g.components) s += c.weight * c.shape / c.rate;
    return s;
}

double total_mass(const AtomGammaMixture& g) {
    double s = g.atom;
    for (const auto& c : g.components) s += c.weight;
    return s;
}

AtomGammaMixture shift(const AtomGammaMixture& g, double s) {
    if (!(s >= 0.0)) throw DomainError("shift: s must be >= 0");
    AtomGammaMixture out;
    out.atom = cdf(g, s);
    for (const auto& c : g.components) {
        const double tail = std::exp(-c.rate * s);
        if (c.shape == 1) {
            out.components.push_back({c.weight * tail, 1, c.rate});
        } else {
            // rate^2 (y+s) e^{-rate(y+s)} = tail * [Gamma(2) density + rate*s * Exp density]
            out.components.push_back({c.weight * tail, 2, c.rate});
            out.components.push_back({c.weight * tail * c.rate * s, 1, c.rate});
        }
    }
    return out;
}

double shift_cdf(const AtomGammaMixture& g, double s, double x) {
    if (!(s >= 0.0)) throw DomainError("shift_cdf: s must be >= 0");
    if (!(x >= 0.0)) throw DomainError("shift_cdf: x must be >= 0");
    return cdf(g, x + s);
}

double ks_distance(const EmpiricalSample& sample, const ExpMixture& m) {
    if (sample.values.empty()) throw DomainError("ks_distance: empty sample");
    if (m.lambda == 0.0) {
        // all mass of the continuous part sits at +infinity
        return ks_one_sample(sample.values, [&](double x) { return x < 0.0 ? 0.0 : m.p; },
                             [&](double x) { return x <= 0.0 ? 0.0 : m.p; });
    }
    return ks_one_sample(
        sample.values, [&](double x) { return x < 0.0 ? 0.0 : cdf(m, x); },
        [&](double x) { return x <= 0.0 ? 0.0 : cdf(m, x); });
}

}  // namespace drlab
