#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

// Shared plumbing for the toolkit: error categories, the trimmed mean used by
// every region statistic, content hashing for provenance sidecars, and a
// deterministic parallel loop.

namespace bhc {

// Bad inputs (files, configs, out-of-range arguments). CLI maps this to exit 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// A numeric stage failed on data that passed validation (degenerate system,
// empty segmentation class, non-finite intermediate). CLI maps this to exit 3.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Vec2&) const = default;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

// Mean after discarding a fraction of the sorted sample at each end.
// trim_total = 0.10 drops the lowest and highest 5%. Takes a copy because it
// sorts. Throws NumericError on an empty sample.
double trimmed_mean(std::vector<double> values, double trim_total = 0.10);

// FNV-1a over raw bytes; used to fingerprint spectra and settings in sidecars.
class Fnv1a {
public:
    void update(const void* data, std::size_t n);
    void update(double v);
    void update(const std::string& s);
    std::uint64_t digest() const { return state_; }
    std::string hex() const;

private:
    std::uint64_t state_ = 0xcbf29ce484222325ull;
};

// Deterministic parallel loop over [0, n): the work is split into fixed
// contiguous chunks, each index is processed exactly once, and results must be
// written to disjoint locations so the schedule cannot affect the output.
// Thread count comes from set_thread_count() (the CLI seeds it from
// BHC_THREADS); 0 means hardware concurrency.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);
void set_thread_count(unsigned n);
unsigned thread_count();

inline bool bit_equal(double a, double b) {
    std::uint64_t ua, ub;
    static_assert(sizeof(ua) == sizeof(a));
    __builtin_memcpy(&ua, &a, sizeof(a));
    __builtin_memcpy(&ub, &b, sizeof(b));
    return ua == ub;
}

}  // namespace bhc
