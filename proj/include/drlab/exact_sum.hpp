#pragma once

#include <vector>

namespace drlab {

/// Exact floating-point accumulator (Shewchuk non-overlapping partials, the
/// algorithm behind Python's math.fsum). value() is the correctly rounded
/// sum, so merging two accumulators gives bit-identical results to adding
/// the concatenated data in any order.
class ExactSum {
public:
    void add(double x);
    void merge(const ExactSum& other);
    double value() const;

    const std::vector<double>& partials() const { return partials_; }
    static ExactSum from_partials(std::vector<double> p);

private:
    std::vector<double> partials_;
};

}  // namespace drlab
