#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "drlab/exact_sum.hpp"
#include "drlab/rng.hpp"

using namespace drlab;

TEST_CASE("philox4x64-10 known answers (numpy Philox, counter pre-incremented)") {
    const std::array<std::uint64_t, 2> key{0x0123456789abcdefULL, 0xfedcba9876543210ULL};
    auto b1 = philox4x64_10({1, 0, 0, 0}, key);
    CHECK(b1[0] == 0x2d2e7c09c193c5faULL);
    CHECK(b1[1] == 0xd56c6aa2d11f06aaULL);
    CHECK(b1[2] == 0x184fcdf7f5474a23ULL);
    CHECK(b1[3] == 0x367832d087008054ULL);
    auto b2 = philox4x64_10({2, 0, 0, 0}, key);
    CHECK(b2[0] == 0x56ffd4cf84d16286ULL);
    CHECK(b2[3] == 0x0c3f437f88182365ULL);
}

TEST_CASE("streams replay and splits differ") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
    Rng root(7);
    std::set<std::uint64_t> firsts;
    for (std::uint64_t r = 0; r < 1000; ++r) firsts.insert(root.split(r).next_u64());
    CHECK(firsts.size() == 1000);
    // split depends only on the parent's stream id, not its position
    Rng used(7);
    used.next_u64();
    CHECK(used.split(3).next_u64() == root.split(3).next_u64());
}

TEST_CASE("uniform moments and ranges") {
    Rng r(1);
    double s = 0.0, s2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform_open();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        s += u;
        s2 += u * u;
    }
    CHECK(std::abs(s / n - 0.5) < 4 * std::sqrt(1.0 / 12 / n));
    double m = 0.0;
    for (int i = 0; i < n; ++i) m += r.normal();
    CHECK(std::abs(m / n) < 4 / std::sqrt(double(n)));
    for (int i = 0; i < 1000; ++i) REQUIRE(r.below(7) < 7);
}

TEST_CASE("exact sum is order independent") {
    std::vector<double> xs;
    Rng r(3);
    for (int i = 0; i < 5000; ++i) xs.push_back(std::ldexp(r.uniform() - 0.3, int(r.below(80)) - 40));
    ExactSum a, b, c;
    for (double x : xs) a.add(x);
    for (auto it = xs.rbegin(); it != xs.rend(); ++it) b.add(*it);
    ExactSum h1, h2;
    for (std::size_t i = 0; i < xs.size(); ++i) (i < 1234 ? h1 : h2).add(xs[i]);
    c = h2;
    c.merge(h1);
    CHECK(a.value() == b.value());
    CHECK(a.value() == c.value());
    ExactSum t;
    t.add(1e100);
    t.add(1.0);
    t.add(-1e100);
    CHECK(t.value() == 1.0);
}
