#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drlab/rng.hpp"

namespace drlab {

/// p * delta_0 + (1 - p) * Exp(lambda).
///
/// lambda == 0 is accepted at construction for the degenerate boundary
/// family; only cdf() accepts it, every other operation rejects it.
struct ExpMixture {
    double p = 0.0;
    double lambda = 1.0;

    ExpMixture() = default;
    ExpMixture(double p_, double lambda_);
};

/// atom * delta_0 + sum_k w_k * Gamma(shape_k, rate_k), shape in {1, 2}.
struct AtomGammaMixture {
    struct Component {
        double weight;
        int shape;
        double rate;
    };
    double atom = 1.0;
    std::vector<Component> components;

    void validate() const;
};

/// Sorted non-negative sample with the stream it came from.
struct EmpiricalSample {
    std::vector<double> values;
    std::uint64_t seed = 0;
    std::string generator;

    EmpiricalSample() = default;
    explicit EmpiricalSample(std::vector<double> v, std::uint64_t seed_ = 0,
                             std::string generator_ = std::string(Rng::generator_id));
    std::size_t count() const { return values.size(); }
};

double cdf(const ExpMixture& m, double x);
double quantile(const ExpMixture& m, double u);
double sample(const ExpMixture& m, Rng& rng);
double mean(const ExpMixture& m);
double second_moment(const ExpMixture& m);

AtomGammaMixture convolve_self(const ExpMixture& m);
double cdf(const AtomGammaMixture& g, double x);
double mean(const AtomGammaMixture& g);
double total_mass(const AtomGammaMixture& g);
/// Law of (Z - s)_+ for Z ~ g, again an atom/Gamma mixture.
AtomGammaMixture shift(const AtomGammaMixture& g, double s);
/// CDF of tau_s g at x, i.e. CDF_g(x + s).
double shift_cdf(const AtomGammaMixture& g, double s, double x);

double ks_distance(const EmpiricalSample& sample, const ExpMixture& m);

}  // namespace drlab
