#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>

#include "bhc/common.hpp"

using namespace bhc;

namespace {

// Straight re-statement of the definition: sort, drop trim/2 of the count at
// each end, average the rest.
double trimmed_mean_oracle(std::vector<double> v, double trim_total) {
    std::sort(v.begin(), v.end());
    const auto cut = static_cast<std::size_t>(v.size() * trim_total * 0.5);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = cut; i < v.size() - cut; ++i) {
        sum += v[i];
        ++n;
    }
    return sum / static_cast<double>(n);
}

}  // namespace

TEST_CASE("trimmed mean matches the sort-and-slice definition") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-10.0, 10.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::uniform_int_distribution<std::size_t> size_dist(1, 400);
        std::vector<double> v(size_dist(rng));
        for (double& x : v) x = dist(rng);
        CHECK(trimmed_mean(v) == doctest::Approx(trimmed_mean_oracle(v, 0.10)).epsilon(1e-12));
    }
}

TEST_CASE("trimmed mean drops extreme outliers") {
    std::vector<double> v(100, 1.0);
    v[0] = 1e9;
    v[1] = -1e9;
    CHECK(trimmed_mean(v) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("trimmed mean of fewer samples than the cut still averages something") {
    CHECK(trimmed_mean({3.0}) == doctest::Approx(3.0));
    CHECK_THROWS_AS(trimmed_mean({}), NumericError);
}

TEST_CASE("fnv1a matches the published test vectors") {
    Fnv1a empty;
    CHECK(empty.digest() == 0xcbf29ce484222325ull);
    Fnv1a a;
    a.update(std::string("a"));
    CHECK(a.digest() == 0xaf63dc4c8601ec8cull);
    Fnv1a foobar;
    foobar.update(std::string("foobar"));
    CHECK(foobar.digest() == 0x85944171f73967e8ull);
}

TEST_CASE("fnv1a hex is 16 lowercase digits") {
    Fnv1a h;
    h.update(1.25);
    CHECK(h.hex().size() == 16);
    for (char c : h.hex()) CHECK(((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f')));
}

TEST_CASE("parallel_for covers every index exactly once") {
    for (unsigned threads : {1u, 2u, 5u}) {
        set_thread_count(threads);
        std::vector<std::atomic<int>> hits(1000);
        parallel_for(hits.size(), [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) hits[i]++;
        });
        for (const auto& h : hits) CHECK(h.load() == 1);
    }
    set_thread_count(0);
}

TEST_CASE("parallel_for propagates exceptions from workers") {
    set_thread_count(4);
    CHECK_THROWS_AS(
        parallel_for(100, [](std::size_t b, std::size_t) {
            if (b == 0) throw NumericError("boom");
        }),
        NumericError);
    set_thread_count(0);
}

TEST_CASE("bit_equal distinguishes signed zeros") {
    CHECK(bit_equal(0.0, 0.0));
    CHECK(!bit_equal(0.0, -0.0));
    CHECK(bit_equal(1.5, 1.5));
    CHECK(!bit_equal(1.5, std::nextafter(1.5, 2.0)));
}
