#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace drlab {

struct PropertyResult {
    std::string module, name;
    int cases = 0;
    int failures = 0;
    /// Failures tolerated for statistical properties: the 0.1% upper
    /// binomial quantile of the nominal rejection rate. Zero for exact ones.
    int allowed = 0;
    bool pass = false;
    double seconds = 0.0;
    nlohmann::json detail = nlohmann::json::object();

    nlohmann::json to_json() const;
};

struct PropertyOptions {
    std::uint64_t seed = 20240611;
    int cases = 200;
    int workers = 1;
    /// Smaller per-case sample sizes.
    bool fast = false;
    std::function<void(const PropertyResult&)> on_result;
};

/// measures, dynamics, painting, redtree, cli
std::vector<std::string> property_modules();

/// Runs every property of `module` ("all" for every module).
std::vector<PropertyResult> run_properties(const std::string& module, const PropertyOptions& opt);

}  // namespace drlab
