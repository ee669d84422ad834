#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace drlab {

/// Philox4x64-10 block function (Salmon et al. counter-based generator).
std::array<std::uint64_t, 4> philox4x64_10(std::array<std::uint64_t, 4> ctr,
                                            std::array<std::uint64_t, 2> key);

std::uint64_t splitmix64(std::uint64_t x);

/// Splittable counter-based stream.
///
/// Counter words 0-1 count blocks, words 2-3 hold the stream id. The key is
/// (seed, 0). split(i) maps stream words (s0, s1) to
/// (mix(s0 ^ mix(i ^ s1)), mix(s1 + i + phi)) with mix = splitmix64 and
/// resets the block counter, so replica r of a run draws from split(r) of
/// the root stream regardless of which worker executes it.
class Rng {
public:
    static constexpr std::string_view generator_id = "philox4x64-10/split-v1";

    explicit Rng(std::uint64_t seed = 0);

    Rng split(std::uint64_t i) const;

    std::uint64_t next_u64();
    /// Uniform on [0,1), 53 bits.
    double uniform();
    /// Uniform on (0,1), never 0 or 1.
    double uniform_open();
    /// Exp(1).
    double exponential();
    /// Standard normal, Box-Muller (second variate cached).
    double normal();
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    std::uint64_t seed() const { return key_[0]; }
    std::array<std::uint64_t, 2> stream_id() const { return {ctr_[2], ctr_[3]}; }

private:
    void refill();

    std::array<std::uint64_t, 2> key_{};
    std::array<std::uint64_t, 4> ctr_{};
    std::array<std::uint64_t, 4> buf_{};
    int pos_ = 4;
    bool has_normal_ = false;
    double cached_normal_ = 0.0;
};

}  // namespace drlab
