#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>

#include "bhc/geometry.hpp"
#include "bhc/material.hpp"

using namespace bhc;

namespace {

// Test-local slab clipping of a ray against the grid bounding box; the
// traversal's chords have to add up to exactly this span.
std::optional<std::pair<double, double>> clip_to_grid(const GridSpec& g, const Ray& r) {
    double t0 = -1e300, t1 = 1e300;
    const double lo[2] = {g.origin_mm.x, g.origin_mm.y};
    const double hi[2] = {g.origin_mm.x + g.nx * g.voxel_size_mm,
                          g.origin_mm.y + g.ny * g.voxel_size_mm};
    const double o[2] = {r.origin_mm.x, r.origin_mm.y};
    const double d[2] = {r.direction.x, r.direction.y};
    for (int axis = 0; axis < 2; ++axis) {
        if (std::abs(d[axis]) < 1e-15) {
            if (o[axis] <= lo[axis] || o[axis] >= hi[axis]) return std::nullopt;
            continue;
        }
        double a = (lo[axis] - o[axis]) / d[axis];
        double b = (hi[axis] - o[axis]) / d[axis];
        if (a > b) std::swap(a, b);
        t0 = std::max(t0, a);
        t1 = std::min(t1, b);
    }
    if (t1 <= t0) return std::nullopt;
    return std::make_pair(t0, t1);
}

}  // namespace

TEST_CASE("grid centering and voxel centers") {
    const GridSpec g = GridSpec::centered(8, 6, 0.5);
    CHECK(g.origin_mm.x == doctest::Approx(-2.0));
    CHECK(g.origin_mm.y == doctest::Approx(-1.5));
    CHECK(g.voxel_center(0, 0).x == doctest::Approx(-1.75));
    CHECK(g.voxel_center(7, 0).x == doctest::Approx(1.75));
    CHECK(g.voxel_center(3, 2).y == doctest::Approx(-0.25));
}

TEST_CASE("axis-aligned ray crosses one full row") {
    GridSpec g;
    g.nx = 4;
    g.ny = 4;
    g.voxel_size_mm = 1.0;
    g.origin_mm = {0.0, 0.0};
    const Ray r{{-5.0, 0.5}, {1.0, 0.0}};
    const auto segs = trace_ray(g, r);
    REQUIRE(segs.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(segs[i].voxel == i);  // row 0, ix ascending along travel
        CHECK(segs[i].length_mm == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("diagonal ray conserves the clip length") {
    GridSpec g;
    g.nx = 4;
    g.ny = 4;
    g.voxel_size_mm = 1.0;
    g.origin_mm = {0.0, 0.0};
    const double s = std::sqrt(0.5);
    const Ray r{{-1.0, -1.0}, {s, s}};
    const auto segs = trace_ray(g, r);
    double total = 0.0;
    for (const auto& seg : segs) total += seg.length_mm;
    CHECK(total == doctest::Approx(4.0 * std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("ray missing the grid yields nothing") {
    GridSpec g;
    g.nx = 4;
    g.ny = 4;
    g.voxel_size_mm = 1.0;
    g.origin_mm = {0.0, 0.0};
    CHECK(trace_ray(g, Ray{{-5.0, 10.0}, {1.0, 0.0}}).empty());
    CHECK(trace_ray(g, Ray{{-5.0, -0.1}, {1.0, 0.0}}).empty());
}

TEST_CASE("random rays: chords sum to the analytic span and reverse cleanly") {
    const GridSpec g{37, 29, 0.7, {-12.95, -10.15}};
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * 3.14159265358979323846);
    std::uniform_real_distribution<double> inside(-8.0, 8.0);
    int hits = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const double a = angle(rng);
        const Vec2 through{inside(rng), inside(rng)};
        const Vec2 dir{std::cos(a), std::sin(a)};
        const Ray ray{{through.x - 60.0 * dir.x, through.y - 60.0 * dir.y}, dir};

        const auto segs = trace_ray(g, ray);
        const auto span = clip_to_grid(g, ray);
        REQUIRE(span.has_value());
        ++hits;
        double total = 0.0;
        std::map<std::size_t, double> forward;
        for (const auto& s : segs) {
            total += s.length_mm;
            forward[s.voxel] += s.length_mm;
        }
        const double expect = span->second - span->first;
        CHECK(std::abs(total - expect) <= 1e-9 * std::max(1.0, expect));

        const Ray back{{through.x + 60.0 * dir.x, through.y + 60.0 * dir.y},
                       {-dir.x, -dir.y}};
        std::map<std::size_t, double> reverse;
        for (const auto& s : trace_ray(g, back)) reverse[s.voxel] += s.length_mm;
        REQUIRE(forward.size() == reverse.size());
        for (const auto& [voxel, len] : forward) {
            REQUIRE(reverse.count(voxel) == 1);
            CHECK(std::abs(reverse[voxel] - len) <= 1e-9 * std::max(1.0, len));
        }
    }
    CHECK(hits == 1000);
}

TEST_CASE("per-voxel chords agree with dense sampling") {
    const GridSpec g{13, 11, 0.9, {-5.85, -4.95}};
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> angle(0.0, 3.14159265358979323846);
    std::uniform_real_distribution<double> offset(-4.0, 4.0);
    const double step = g.voxel_size_mm / 2000.0;
    for (int trial = 0; trial < 20; ++trial) {
        const double a = angle(rng);
        const Vec2 dir{std::cos(a), std::sin(a)};
        const Vec2 mid{offset(rng), offset(rng)};
        const Ray ray{{mid.x - 30.0 * dir.x, mid.y - 30.0 * dir.y}, dir};
        std::map<std::size_t, double> sampled;
        for (double t = 0.0; t < 60.0; t += step) {
            const double px = ray.origin_mm.x + (t + step * 0.5) * dir.x;
            const double py = ray.origin_mm.y + (t + step * 0.5) * dir.y;
            const int ix = static_cast<int>(std::floor((px - g.origin_mm.x) / g.voxel_size_mm));
            const int iy = static_cast<int>(std::floor((py - g.origin_mm.y) / g.voxel_size_mm));
            if (ix < 0 || ix >= g.nx || iy < 0 || iy >= g.ny) continue;
            sampled[static_cast<std::size_t>(iy) * g.nx + ix] += step;
        }
        std::map<std::size_t, double> traced;
        for (const auto& s : trace_ray(g, ray)) traced[s.voxel] += s.length_mm;
        for (const auto& [voxel, len] : traced) {
            if (len < 4.0 * step) continue;  // sliver chords drown in sampling noise
            REQUIRE(sampled.count(voxel) == 1);
            CHECK(std::abs(sampled[voxel] - len) <= 4.0 * step);
        }
    }
}

TEST_CASE("scan geometry conventions") {
    const ScanGeometry geom{180, 256, 0.25};
    CHECK(geom.angle_rad(0) == 0.0);
    CHECK(geom.angle_rad(90) == doctest::Approx(3.14159265358979323846 / 2.0));
    CHECK(geom.detector_offset_mm(0) == doctest::Approx(-(255.0 / 2.0) * 0.25));
    CHECK(geom.detector_offset_mm(255) == doctest::Approx((255.0 / 2.0) * 0.25));
    CHECK(geom.detector_offset_mm(127) == doctest::Approx(-0.125));
    CHECK(geom.ray_count() == 180u * 256u);

    const auto rays = rays_for_view(geom, 0);
    REQUIRE(rays.size() == 256);
    CHECK(rays[0].direction.x == doctest::Approx(0.0));
    CHECK(rays[0].direction.y == doctest::Approx(1.0));
    CHECK(rays[0].origin_mm.x == doctest::Approx(geom.detector_offset_mm(0)));
    CHECK(rays[0].origin_mm.y < 0.0);  // starts behind the field of view

    const auto quarter = rays_for_view(geom, 90);
    CHECK(quarter[0].direction.x == doctest::Approx(-1.0));
    CHECK(quarter[0].direction.y == doctest::Approx(0.0).epsilon(1e-12));

    CHECK_THROWS_AS(rays_for_view(geom, -1), ValidationError);
    CHECK_THROWS_AS(rays_for_view(geom, 180), ValidationError);
}

TEST_CASE("phantom shapes answer containment") {
    PhantomShape disc;
    disc.type = PhantomShape::Type::disc;
    disc.material = "aluminum";
    disc.center_mm = {1.0, 2.0};
    disc.radius_mm = 3.0;
    CHECK(disc.contains({1.0, 2.0}));
    CHECK(disc.contains({3.9, 2.0}));
    CHECK(!disc.contains({4.1, 2.0}));
    CHECK(disc.bounding_radius_mm() == doctest::Approx(std::sqrt(5.0) + 3.0));

    PhantomShape rect;
    rect.type = PhantomShape::Type::rect;
    rect.material = "iron";
    rect.center_mm = {0.0, 0.0};
    rect.half_extents_mm = {2.0, 1.0};
    rect.rotation_deg = 90.0;
    CHECK(rect.contains({0.0, 1.9}));   // rotated: long axis now vertical
    CHECK(!rect.contains({1.9, 0.0}));
    CHECK(rect.contains({0.9, 0.0}));
}

TEST_CASE("rasterization covers the disc area and respects overwrite order") {
    const MaterialDB db = builtin_database();
    PhantomSpec spec;
    PhantomShape big;
    big.type = PhantomShape::Type::disc;
    big.material = "aluminum";
    big.center_mm = {0.0, 0.0};
    big.radius_mm = 8.0;
    PhantomShape small;
    small.type = PhantomShape::Type::disc;
    small.material = "iron";
    small.center_mm = {0.0, 0.0};
    small.radius_mm = 3.0;
    spec.shapes = {big, small};

    const GridSpec g = GridSpec::centered(64, 64, 0.5);
    const VoxelVolume vol = rasterize_phantom(spec, g, db);
    CHECK(vol.kind == VolumeKind::label);
    REQUIRE(vol.materials.size() == 3);
    CHECK(vol.materials[0] == "air");
    CHECK(vol.materials[1] == "aluminum");
    CHECK(vol.materials[2] == "iron");

    std::size_t n_al = 0, n_fe = 0;
    for (double v : vol.values) {
        if (v == 1.0) ++n_al;
        if (v == 2.0) ++n_fe;
    }
    const double area_per_voxel = 0.25;
    const double pi = 3.14159265358979323846;
    CHECK(static_cast<double>(n_fe) * area_per_voxel ==
          doctest::Approx(pi * 9.0).epsilon(0.08));
    CHECK(static_cast<double>(n_al + n_fe) * area_per_voxel ==
          doctest::Approx(pi * 64.0).epsilon(0.03));
    // center voxel belongs to the later shape
    CHECK(vol.at(32, 32) == 2.0);
}

TEST_CASE("phantom must fit the scan field of view") {
    PhantomSpec spec;
    PhantomShape d;
    d.type = PhantomShape::Type::disc;
    d.material = "aluminum";
    d.center_mm = {20.0, 0.0};
    d.radius_mm = 20.0;
    spec.shapes = {d};
    const ScanGeometry geom{90, 256, 0.25};  // half span 32 mm
    CHECK_THROWS_AS(spec.validate_fov(geom), ValidationError);
    d.center_mm = {5.0, 0.0};
    spec.shapes = {d};
    CHECK_NOTHROW(spec.validate_fov(geom));
}
