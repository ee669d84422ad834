#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace drlab {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    double seconds = 0.0;
    /// One-line human summary of the measured values.
    std::string detail;
    nlohmann::json measured = nlohmann::json::object();

    nlohmann::json to_json() const;
};

struct ValidationOptions {
    std::uint64_t seed = 20240611;
    int workers = 1;
    /// Reduced replica counts; runtime limits are still checked but the
    /// statistical power is lower.
    bool fast = false;
    std::function<void(const CriterionResult&)> on_result;
};

/// ode {1,2}, free-energy {3,4,5}, painting {6,7,8,13,14},
/// redtree {9,10,11,12}, properties {15}, all. Throws UsageError otherwise.
std::vector<int> suite_criteria(const std::string& suite);
std::vector<std::string> suite_names();

CriterionResult run_criterion(int id, const ValidationOptions& opt);
std::vector<CriterionResult> run_suite(const std::string& suite, const ValidationOptions& opt);

}  // namespace drlab
