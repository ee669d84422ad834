#include "drlab/summary.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "drlab/errors.hpp"

namespace drlab {

ReplicaSummary::ReplicaSummary(HistogramSpec spec) : spec_(spec) {
    if (spec_.bins < 0 || (spec_.bins > 0 && !(spec_.hi > spec_.lo)))
        throw DomainError("HistogramSpec: need bins >= 0 and hi > lo");
    bins_.assign(static_cast<std::size_t>(spec_.bins), 0);
}

void ReplicaSummary::add(double x) {
    ++count_;
    if (x == 0.0) ++zeros_;
    min_ = std::min(min_, x);
    max_ = std::max(max_, x);
    double pw = x;
    for (auto& s : power_) {
        s.add(pw);
        pw *= x;
    }
    if (spec_.bins > 0) {
        if (x < spec_.lo) {
            ++underflow_;
        } else if (x >= spec_.hi) {
            ++overflow_;
        } else {
            auto b = static_cast<std::size_t>((x - spec_.lo) / (spec_.hi - spec_.lo) * spec_.bins);
            bins_[std::min(b, bins_.size() - 1)]++;
        }
    }
}

void ReplicaSummary::merge(const ReplicaSummary& o) {
    if (!(o.spec_ == spec_)) throw DomainError("ReplicaSummary::merge: histogram specs differ");
    count_ += o.count_;
    zeros_ += o.zeros_;
    underflow_ += o.underflow_;
    overflow_ += o.overflow_;
    min_ = std::min(min_, o.min_);
    max_ = std::max(max_, o.max_);
    for (int k = 0; k < 4; ++k) power_[k].merge(o.power_[k]);
    for (std::size_t b = 0; b < bins_.size(); ++b) bins_[b] += o.bins_[b];
}

double ReplicaSummary::raw_moment(int k) const {
    if (k < 1 || k > 4) throw DomainError("raw_moment: order must be 1..4");
    if (count_ == 0) return 0.0;
    return power_[k - 1].value() / static_cast<double>(count_);
}

double ReplicaSummary::variance() const {
    if (count_ < 2) return 0.0;
    const double n = static_cast<double>(count_);
    const double m = mean();
    return std::max(0.0, (raw_moment(2) - m * m) * n / (n - 1.0));
}

double ReplicaSummary::zero_fraction() const {
    return count_ ? static_cast<double>(zeros_) / static_cast<double>(count_) : 0.0;
}

nlohmann::json ReplicaSummary::to_json() const {
    nlohmann::json j;
    j["count"] = count_;
    j["zeros"] = zeros_;
    j["zero_fraction"] = zero_fraction();
    j["min"] = count_ ? min_ : 0.0;
    j["max"] = count_ ? max_ : 0.0;
    j["mean"] = mean();
    j["variance"] = variance();
    j["raw_moments"] = {raw_moment(1), raw_moment(2), raw_moment(3), raw_moment(4)};
    if (spec_.bins > 0) {
        j["histogram"] = {{"lo", spec_.lo}, {"hi", spec_.hi}, {"bins", spec_.bins},
                          {"counts", bins_}, {"underflow", underflow_}, {"overflow", overflow_}};
    }
    return j;
}

bool ReplicaSummary::operator==(const ReplicaSummary& o) const {
    if (count_ != o.count_ || zeros_ != o.zeros_ || underflow_ != o.underflow_ || overflow_ != o.overflow_)
        return false;
    if (count_ && (min_ != o.min_ || max_ != o.max_)) return false;
    for (int k = 0; k < 4; ++k)
        if (power_[k].value() != o.power_[k].value()) return false;
    return bins_ == o.bins_ && spec_ == o.spec_;
}

int default_workers() {
    const unsigned h = std::thread::hardware_concurrency();
    return h == 0 ? 1 : static_cast<int>(h);
}

void parallel_blocks(std::size_t n, int workers, const std::function<void(std::size_t, std::size_t)>& body,
                     std::size_t block) {
    if (n == 0) return;
    const std::size_t nblocks = (n + block - 1) / block;
    workers = std::max(1, std::min<int>(workers, static_cast<int>(nblocks)));
    if (workers == 1) {
        for (std::size_t b = 0; b < nblocks; ++b) body(b * block, std::min(n, (b + 1) * block));
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto run = [&] {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= nblocks) return;
            try {
                body(b * block, std::min(n, (b + 1) * block));
            } catch (...) {
                std::lock_guard lk(err_mu);
                if (!err) err = std::current_exception();
                next.store(nblocks);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace drlab
