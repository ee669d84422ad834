#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include <nlohmann/json.hpp>

#include "drlab/exact_sum.hpp"

namespace drlab {

struct HistogramSpec {
    double lo = 0.0;
    double hi = 1.0;
    int bins = 0;  // 0 disables the histogram

    bool operator==(const HistogramSpec&) const = default;
};

/// Streaming aggregate of replica outputs. Power sums are exact (see
/// ExactSum), so merge() is associative and commutative bit-for-bit.
class ReplicaSummary {
public:
    explicit ReplicaSummary(HistogramSpec spec = {});

    void add(double x);
    void merge(const ReplicaSummary& other);

    std::uint64_t count() const { return count_; }
    std::uint64_t zeros() const { return zeros_; }
    double min() const { return min_; }
    double max() const { return max_; }
    /// Raw moment E[X^k], k in 1..4.
    double raw_moment(int k) const;
    double mean() const { return raw_moment(1); }
    double variance() const;
    double zero_fraction() const;
    const std::vector<std::uint64_t>& histogram() const { return bins_; }
    const HistogramSpec& spec() const { return spec_; }

    nlohmann::json to_json() const;
    bool operator==(const ReplicaSummary& o) const;

private:
    HistogramSpec spec_;
    std::uint64_t count_ = 0, zeros_ = 0, underflow_ = 0, overflow_ = 0;
    ExactSum power_[4];
    double min_ = std::numeric_limits<double>::infinity();
    double max_ = -std::numeric_limits<double>::infinity();
    std::vector<std::uint64_t> bins_;
};

/// Runs body(begin, end) over fixed blocks of [0, n) on `workers` threads.
/// Blocks are independent of the worker count, so outputs written per index
/// are identical for every scheduling.
void parallel_blocks(std::size_t n, int workers, const std::function<void(std::size_t, std::size_t)>& body,
                     std::size_t block = 1024);

int default_workers();

}  // namespace drlab
