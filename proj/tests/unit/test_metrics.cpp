#include <doctest.h>

#include <cmath>
#include <vector>

#include "bhc/metrics.hpp"

using namespace bhc;

namespace {

ReconImage ramp_image(int n, double h) {
    ReconImage img;
    img.grid = GridSpec::centered(n, n, h);
    img.values.resize(img.grid.voxel_count());
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) img.at(ix, iy) = ix + 10.0 * iy;
    return img;
}

}  // namespace

TEST_CASE("region membership is tested at voxel centers") {
    const ReconImage img = ramp_image(8, 1.0);  // centers at half-integers

    Roi disc;
    disc.type = RoiType::disc;
    disc.radius_mm = 2.0;
    CHECK(roi_stats(img, disc).n == 12);  // 4 at r^2=0.5 plus 8 at r^2=2.5

    Roi ring;
    ring.type = RoiType::annulus;
    ring.r_inner_mm = 1.0;
    ring.r_outer_mm = 2.0;
    CHECK(roi_stats(img, ring).n == 8);

    Roi rect;
    rect.type = RoiType::rect;
    rect.half_extents_mm = {1.5, 0.5};
    CHECK(roi_stats(img, rect).n == 8);
}

TEST_CASE("region statistics match a direct computation") {
    const ReconImage img = ramp_image(8, 1.0);
    Roi disc;
    disc.type = RoiType::disc;
    disc.center_mm = {0.5, -0.5};
    disc.radius_mm = 1.9;

    std::vector<double> samples;
    for (int iy = 0; iy < 8; ++iy)
        for (int ix = 0; ix < 8; ++ix) {
            const Vec2 p = img.grid.voxel_center(ix, iy);
            const double dx = p.x - 0.5;
            const double dy = p.y + 0.5;
            if (dx * dx + dy * dy <= 1.9 * 1.9) samples.push_back(img.at(ix, iy));
        }
    REQUIRE(!samples.empty());
    double sum = 0.0, mn = samples[0], mx = samples[0];
    for (double v : samples) {
        sum += v;
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }
    const double mean = sum / static_cast<double>(samples.size());
    double var = 0.0;
    for (double v : samples) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(samples.size()));

    const RoiStats st = roi_stats(img, disc);
    CHECK(st.n == samples.size());
    CHECK(st.mean == doctest::Approx(mean).epsilon(1e-12));
    CHECK(st.stddev == doctest::Approx(sd).epsilon(1e-12));
    CHECK(st.min == mn);
    CHECK(st.max == mx);
}

TEST_CASE("region validation and the empty-region error") {
    const ReconImage img = ramp_image(8, 1.0);
    Roi bad;
    bad.type = RoiType::disc;
    bad.radius_mm = 0.0;
    CHECK_THROWS_AS(roi_stats(img, bad), ValidationError);
    bad.type = RoiType::annulus;
    bad.r_inner_mm = 2.0;
    bad.r_outer_mm = 1.0;
    CHECK_THROWS_AS(roi_stats(img, bad), ValidationError);
    bad.type = RoiType::rect;
    bad.half_extents_mm = {0.0, 1.0};
    CHECK_THROWS_AS(roi_stats(img, bad), ValidationError);

    Roi tiny;  // valid but falls between voxel centers
    tiny.type = RoiType::disc;
    tiny.radius_mm = 0.4;
    CHECK_THROWS_AS(roi_stats(img, tiny), NumericError);

    CHECK(roi_type_from_string("disc") == RoiType::disc);
    CHECK(roi_type_from_string("annulus") == RoiType::annulus);
    CHECK(roi_type_from_string("rect") == RoiType::rect);
    CHECK_THROWS_AS(roi_type_from_string("sphere"), ValidationError);
    CHECK(to_string(RoiType::annulus) == std::string("annulus"));
}

TEST_CASE("cupping percent compares a depressed interior against the rim") {
    ReconImage img;
    img.grid = GridSpec::centered(16, 16, 1.0);
    img.values.resize(img.grid.voxel_count());
    for (int iy = 0; iy < 16; ++iy)
        for (int ix = 0; ix < 16; ++ix) {
            const Vec2 p = img.grid.voxel_center(ix, iy);
            img.at(ix, iy) = (p.x * p.x + p.y * p.y <= 4.0) ? 0.8 : 1.0;
        }
    Roi center;
    center.type = RoiType::disc;
    center.radius_mm = 2.0;
    Roi edge;
    edge.type = RoiType::annulus;
    edge.r_inner_mm = 4.0;
    edge.r_outer_mm = 6.0;
    CHECK(cupping_percent(img, center, edge) == doctest::Approx(20.0).epsilon(1e-12));

    ReconImage zero;
    zero.grid = img.grid;
    zero.values.assign(img.grid.voxel_count(), 0.0);
    CHECK_THROWS_AS(cupping_percent(zero, center, edge), NumericError);
}

TEST_CASE("streak index is the population standard deviation") {
    ReconImage img;
    img.grid = GridSpec::centered(4, 4, 1.0);
    img.values.assign(16, 0.0);
    img.at(1, 1) = 1.0;
    img.at(2, 1) = 1.0;
    Roi rect;
    rect.type = RoiType::rect;
    rect.half_extents_mm = {1.0, 1.0};  // covers the central 2x2
    CHECK(streak_index(img, rect) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("rms difference") {
    ReconImage a;
    a.grid = GridSpec::centered(2, 1, 1.0);
    a.values = {3.0, 4.0};
    ReconImage b;
    b.grid = a.grid;
    b.values = {0.0, 0.0};
    CHECK(rms_difference(a, b) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-12));
    ReconImage c;
    c.grid = GridSpec::centered(3, 1, 1.0);
    c.values = {0.0, 0.0, 0.0};
    CHECK_THROWS_AS(rms_difference(a, c), ValidationError);

    const ScanGeometry geom{1, 2, 10.0};
    const Sinogram sa(geom, SinogramKind::measured, {1.0, 2.0});
    const Sinogram sb(geom, SinogramKind::measured, {1.0, 2.0});
    CHECK(rms_difference(sa, sb) == 0.0);
    const Sinogram sc(ScanGeometry{1, 3, 10.0}, SinogramKind::measured);
    CHECK_THROWS_AS(rms_difference(sa, sc), ValidationError);
}

TEST_CASE("plateau regions erode labels away from boundaries and the grid edge") {
    VoxelVolume labels;
    labels.grid = GridSpec::centered(16, 16, 1.0);
    labels.kind = VolumeKind::label;
    labels.materials = {"air", "aluminum", "iron"};
    labels.values.assign(labels.grid.voxel_count(), 0.0);
    for (int iy = 2; iy <= 9; ++iy)
        for (int ix = 2; ix <= 9; ++ix) labels.at(ix, iy) = 1.0;
    for (int iy = 0; iy <= 3; ++iy)
        for (int ix = 12; ix <= 15; ++ix) labels.at(ix, iy) = 2.0;  // touches the edge

    const double margin = 1.5;
    const auto rois = plateau_rois(labels, margin);
    REQUIRE(rois.size() == 2);
    CHECK(rois[0].label == 1);
    CHECK(rois[0].material == "aluminum");
    CHECK(rois[1].label == 2);
    CHECK(rois[1].material == "iron");
    CHECK(rois[0].n == 36);  // 8x8 block shrinks by one ring under a 1.5-voxel margin
    CHECK(rois[1].n == 4);   // grid edge erodes like a label change

    // Direct re-derivation: a voxel survives when no integer grid position
    // within the margin (including positions off the grid) carries a
    // different label.
    for (std::size_t l = 1; l <= 2; ++l) {
        const auto& roi = rois[l - 1];
        std::size_t kept = 0;
        for (int iy = 0; iy < 16; ++iy)
            for (int ix = 0; ix < 16; ++ix) {
                const std::size_t idx = static_cast<std::size_t>(iy) * 16 + ix;
                if (labels.values[idx] != static_cast<double>(l)) {
                    CHECK(roi.mask[idx] == 0);
                    continue;
                }
                bool ok = true;
                for (int jy = iy - 3; jy <= iy + 3 && ok; ++jy)
                    for (int jx = ix - 3; jx <= ix + 3 && ok; ++jx) {
                        const double dx = jx - ix;
                        const double dy = jy - iy;
                        if (dx * dx + dy * dy > margin * margin) continue;
                        if (jx < 0 || jx >= 16 || jy < 0 || jy >= 16 ||
                            labels.values[static_cast<std::size_t>(jy) * 16 + jx] !=
                                static_cast<double>(l))
                            ok = false;
                    }
                CHECK(roi.mask[idx] == (ok ? 1 : 0));
                if (ok) ++kept;
            }
        CHECK(roi.n == kept);
    }

    // Zero margin keeps every labeled voxel.
    const auto loose = plateau_rois(labels, 0.0);
    CHECK(loose[0].n == 64);
    CHECK(loose[1].n == 16);

    VoxelVolume att = labels;
    att.kind = VolumeKind::attenuation;
    att.materials.clear();
    CHECK_THROWS_AS(plateau_rois(att, 1.0), ValidationError);
    CHECK_THROWS_AS(plateau_rois(labels, -1.0), ValidationError);
}

TEST_CASE("masked statistics") {
    ReconImage img;
    img.grid = GridSpec::centered(2, 2, 1.0);
    img.values = {1.0, 2.0, 3.0, 4.0};
    std::vector<std::uint8_t> mask = {1, 0, 0, 1};
    const RoiStats st = masked_stats(img, mask);
    CHECK(st.n == 2);
    CHECK(st.mean == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(st.min == 1.0);
    CHECK(st.max == 4.0);

    CHECK_THROWS_AS(masked_stats(img, std::vector<std::uint8_t>{1, 0}), ValidationError);
    CHECK_THROWS_AS(masked_stats(img, std::vector<std::uint8_t>(4, 0)), NumericError);
}
