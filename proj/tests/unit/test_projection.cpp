#include <doctest.h>

#include <cmath>
#include <cstring>

#include "bhc/projection.hpp"

using namespace bhc;

namespace {

const MaterialDB& db() {
    static const MaterialDB d = builtin_database();
    return d;
}

VoxelVolume aluminum_disc(double radius_mm, int n, double h) {
    PhantomSpec spec;
    PhantomShape d;
    d.type = PhantomShape::Type::disc;
    d.material = "aluminum";
    d.center_mm = {0.0, 0.0};
    d.radius_mm = radius_mm;
    spec.shapes = {d};
    return rasterize_phantom(spec, GridSpec::centered(n, n, h), db());
}

const ScanGeometry kGeom{45, 96, 0.25};

// Column phantom of k voxels (1 mm each) seen by a single vertical ray:
// chi as a function of slab thickness without any reconstruction in the way.
double slab_chi(int k, const Spectrum& s, const DetectorResponse& r) {
    // Wide pitch keeps the ray origin outside the column for every k.
    const ScanGeometry geom{1, 1, 100.0};
    VoxelVolume col;
    col.grid = GridSpec{1, std::max(k, 1), 1.0, {-0.5, -std::max(k, 1) / 2.0}};
    col.kind = VolumeKind::label;
    col.materials = {"air", "aluminum"};
    col.values.assign(static_cast<std::size_t>(std::max(k, 1)), k > 0 ? 1.0 : 0.0);
    return project_poly(col, db(), geom, s, r).values()[0];
}

}  // namespace

TEST_CASE("line integrals match dense ray marching") {
    const VoxelVolume labels = aluminum_disc(6.0, 96, 0.25);
    const VoxelVolume atten = attenuation_map(labels, db(), 60.0);
    const Sinogram sino = line_integrals(atten, kGeom);

    const double step = 0.25 / 2000.0;
    int checked = 0;
    for (int view = 0; view < kGeom.n_angles; view += 9) {
        const auto rays = rays_for_view(kGeom, view);
        for (int pix = 3; pix < kGeom.n_detector_pixels; pix += 10) {
            const Ray& ray = rays[pix];
            double acc = 0.0;
            for (double t = 0.0; t < 80.0; t += step) {
                const double px = ray.origin_mm.x + (t + 0.5 * step) * ray.direction.x;
                const double py = ray.origin_mm.y + (t + 0.5 * step) * ray.direction.y;
                const int ix = static_cast<int>(
                    std::floor((px - atten.grid.origin_mm.x) / atten.grid.voxel_size_mm));
                const int iy = static_cast<int>(
                    std::floor((py - atten.grid.origin_mm.y) / atten.grid.voxel_size_mm));
                if (ix < 0 || ix >= atten.grid.nx || iy < 0 || iy >= atten.grid.ny) continue;
                acc += atten.at(ix, iy) * step;
            }
            acc *= 0.1;  // mm -> cm
            const double got = sino.at(view, pix);
            CHECK(std::abs(got - acc) <= 1e-3 * std::max(1.0, std::abs(acc)));
            ++checked;
        }
    }
    CHECK(checked >= 50);
}

TEST_CASE("mono projection equals attenuation-map line integrals") {
    const VoxelVolume labels = aluminum_disc(6.0, 96, 0.25);
    const Sinogram mono = project_mono(labels, db(), kGeom, 60.0);
    const Sinogram li = line_integrals(attenuation_map(labels, db(), 60.0), kGeom);
    for (std::size_t i = 0; i < mono.values().size(); ++i)
        CHECK(mono.values()[i] ==
              doctest::Approx(li.values()[i]).epsilon(1e-12));
}

TEST_CASE("central ray through a disc matches the analytic chord") {
    const VoxelVolume labels = aluminum_disc(6.0, 96, 0.25);
    const Sinogram mono = project_mono(labels, db(), kGeom, 60.0);
    const double mu = db().at("aluminum").linear_attenuation(60.0);
    // pixels nearest the center, offset +-0.125 mm
    for (int pix : {47, 48}) {
        const double s = kGeom.detector_offset_mm(pix);
        const double chord_cm = 2.0 * std::sqrt(36.0 - s * s) * 0.1;
        CHECK(mono.at(0, pix) == doctest::Approx(mu * chord_cm).epsilon(0.02));
    }
}

TEST_CASE("single-bin polychromatic projection collapses to mono") {
    const VoxelVolume labels = aluminum_disc(6.0, 96, 0.25);
    Spectrum s;
    s.e_min_keV = 60.0;
    s.de_keV = 1.0;
    s.weights = {3.7};
    const Sinogram poly = project_poly(labels, db(), kGeom, s, DetectorResponse::flat(s));
    const Sinogram mono = project_mono(labels, db(), kGeom, 60.0);
    for (std::size_t i = 0; i < poly.values().size(); ++i) {
        if (mono.values()[i] == 0.0)
            CHECK(bit_equal(poly.values()[i], 0.0));
        else
            CHECK(poly.values()[i] ==
                  doctest::Approx(mono.values()[i]).epsilon(1e-12));
    }
}

TEST_CASE("polychromatic chi is bracketed by the extreme mono energies") {
    const VoxelVolume labels = aluminum_disc(6.0, 96, 0.25);
    const Spectrum s = generate_tube_spectrum(150.0, 74.0, 1.0);
    const auto resp = DetectorResponse::flat(s);
    const Sinogram poly = project_poly(labels, db(), kGeom, s, resp);
    // lowest / highest bins carrying weight
    double e_lo = 0.0, e_hi = 0.0;
    for (std::size_t i = 0; i < s.bins(); ++i)
        if (s.weights[i] > 0.0) {
            e_lo = s.energy(i);
            break;
        }
    for (std::size_t i = s.bins(); i-- > 0;)
        if (s.weights[i] > 0.0) {
            e_hi = s.energy(i);
            break;
        }
    const Sinogram lo = project_mono(labels, db(), kGeom, e_hi);  // smallest chi
    const Sinogram hi = project_mono(labels, db(), kGeom, e_lo);  // largest chi
    for (std::size_t i = 0; i < poly.values().size(); ++i) {
        CHECK(poly.values()[i] >= lo.values()[i] - 1e-12);
        CHECK(poly.values()[i] <= hi.values()[i] + 1e-12);
    }
}

TEST_CASE("rays that miss every object give a bit-exact positive zero") {
    const VoxelVolume labels = aluminum_disc(3.0, 96, 0.25);  // lots of air rays
    const Spectrum s = generate_tube_spectrum(150.0, 74.0, 1.0);
    const Sinogram poly = project_poly(labels, db(), kGeom, s, DetectorResponse::flat(s));
    const Sinogram mono = project_mono(labels, db(), kGeom, 60.0);
    int air_rays = 0;
    for (std::size_t i = 0; i < poly.values().size(); ++i) {
        if (mono.values()[i] == 0.0) {
            CHECK(bit_equal(poly.values()[i], 0.0));
            CHECK(!std::signbit(poly.values()[i]));
            ++air_rays;
        }
    }
    CHECK(air_rays > 1000);

    VoxelVolume empty;
    empty.grid = GridSpec::centered(32, 32, 0.5);
    empty.kind = VolumeKind::label;
    empty.materials = {"air"};
    empty.values.assign(32 * 32, 0.0);
    const ScanGeometry g{10, 32, 0.5};
    for (double v : project_poly(empty, db(), g, s, DetectorResponse::flat(s)).values()) {
        CHECK(bit_equal(v, 0.0));
    }
}

TEST_CASE("slab chi grows concavely with thickness") {
    const Spectrum s = generate_tube_spectrum(150.0, 74.0, 1.0);
    const auto resp = DetectorResponse::flat(s);
    std::vector<double> chi;
    for (int k = 0; k <= 40; ++k) chi.push_back(slab_chi(k, s, resp));
    CHECK(chi[0] == 0.0);
    for (std::size_t i = 1; i < chi.size(); ++i) CHECK(chi[i] > chi[i - 1]);
    for (std::size_t i = 2; i < chi.size(); ++i) {
        const double second = chi[i] - 2.0 * chi[i - 1] + chi[i - 2];
        CHECK(second <= 1e-10);
    }
}

TEST_CASE("path matrix accounts for the whole in-grid path") {
    const VoxelVolume labels = aluminum_disc(5.0, 64, 0.375);
    const ScanGeometry geom{30, 64, 0.375};
    const PathMatrix paths = compute_path_lengths(labels, geom);
    VoxelVolume ones;
    ones.grid = labels.grid;
    ones.kind = VolumeKind::density;
    ones.values.assign(labels.values.size(), 1.0);
    const Sinogram total = line_integrals(ones, geom);
    for (std::size_t r = 0; r < geom.ray_count(); ++r) {
        double t = 0.0;
        for (std::size_t l = 0; l < paths.n_labels; ++l) t += paths.at(r, l);
        CHECK(t == doctest::Approx(total.values()[r]).epsilon(1e-12));
    }
}

TEST_CASE("projections are independent of the thread count") {
    const VoxelVolume labels = aluminum_disc(6.0, 96, 0.25);
    const Spectrum s = generate_tube_spectrum(150.0, 74.0, 1.0);
    const auto resp = DetectorResponse::flat(s);
    set_thread_count(1);
    const Sinogram one = project_poly(labels, db(), kGeom, s, resp);
    set_thread_count(5);
    const Sinogram five = project_poly(labels, db(), kGeom, s, resp);
    set_thread_count(0);
    REQUIRE(one.values().size() == five.values().size());
    CHECK(std::memcmp(one.values().data(), five.values().data(),
                      one.values().size() * sizeof(double)) == 0);
}

TEST_CASE("family projection equals per-spectrum projection bit for bit") {
    const VoxelVolume labels = aluminum_disc(6.0, 96, 0.25);
    const Spectrum base = generate_tube_spectrum(150.0, 74.0, 1.0);
    const auto family_spectra = make_filtered_family(base, default_filter_family(), db());
    const auto resp = DetectorResponse::flat(base);
    const auto family = project_poly_family(labels, db(), kGeom, family_spectra, resp);
    REQUIRE(family.size() == family_spectra.size());
    for (std::size_t k = 0; k < family.size(); ++k) {
        const Sinogram single = project_poly(labels, db(), kGeom, family_spectra[k], resp);
        CHECK(std::memcmp(single.values().data(), family[k].values().data(),
                          single.values().size() * sizeof(double)) == 0);
    }
    // provenance carries the spectrum identity
    REQUIRE(!family[0].provenance().empty());
    CHECK(family[0].provenance()[0].first == "spectrum_hash");
    CHECK(family[0].provenance()[0].second == family_spectra[0].hash_hex());
}

TEST_CASE("poisson noise is reproducible and seed-sensitive") {
    const VoxelVolume labels = aluminum_disc(6.0, 96, 0.25);
    const Sinogram clean = project_mono(labels, db(), kGeom, 60.0);
    const Sinogram a = add_poisson_noise(clean, 1e5, 42);
    const Sinogram b = add_poisson_noise(clean, 1e5, 42);
    const Sinogram c = add_poisson_noise(clean, 1e5, 43);
    CHECK(a.values() == b.values());
    CHECK(a.values() != c.values());
    double dev = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) {
        CHECK(std::isfinite(a.values()[i]));
        dev += std::abs(a.values()[i] - clean.values()[i]);
    }
    CHECK(dev > 0.0);
    CHECK_THROWS_AS(add_poisson_noise(clean, 0.0, 1), ValidationError);
}
