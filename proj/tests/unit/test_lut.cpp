#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "bhc/lut.hpp"

using namespace bhc;

namespace {

const ScanGeometry kGeom{60, 96, 0.5};

const MaterialDB& db() {
    static const MaterialDB d = builtin_database();
    return d;
}

const PolyLut& lut150() {
    static const PolyLut lut = [] {
        const Spectrum s = generate_tube_spectrum(150.0, 74.0, 1.0);
        return build_lut(db(), s, DetectorResponse::flat(s), kGeom, 20.0);
    }();
    return lut;
}

}  // namespace

TEST_CASE("lookup table covers every material except air, sorted ascending") {
    const PolyLut& lut = lut150();
    REQUIRE(lut.entries.size() == db().names().size() - 1);
    for (const auto& e : lut.entries) {
        CHECK(e.material != "air");
        CHECK(e.mu_poly_per_cm > 0.0);
    }
    for (std::size_t i = 1; i < lut.entries.size(); ++i)
        CHECK(lut.entries[i].mu_poly_per_cm >= lut.entries[i - 1].mu_poly_per_cm);
    CHECK(lut.contains("aluminum"));
    CHECK(!lut.contains("air"));
    CHECK(lut.calib_diameter_mm == 20.0);
    CHECK(!lut.setting_id.empty());
    CHECK_NOTHROW(lut.validate());
}

TEST_CASE("light metals order by effective attenuation") {
    const PolyLut& lut = lut150();
    const auto index_of = [&](const std::string& name) {
        for (std::size_t i = 0; i < lut.entries.size(); ++i)
            if (lut.entries[i].material == name) return i;
        FAIL("missing entry");
        return std::size_t(0);
    };
    CHECK(index_of("water") < index_of("magnesium"));
    CHECK(index_of("magnesium") < index_of("cement-analog"));
    CHECK(index_of("titanium") < index_of("iron"));
    CHECK(index_of("iron") < index_of("copper"));
}

TEST_CASE("table construction ignores database insertion order") {
    const Spectrum s = generate_tube_spectrum(150.0, 74.0, 1.0);
    MaterialDB reversed;
    auto names = db().names();
    std::reverse(names.begin(), names.end());
    for (const auto& n : names) reversed.add(db().at(n));
    const PolyLut again = build_lut(reversed, s, DetectorResponse::flat(s), kGeom, 20.0);
    REQUIRE(again.entries.size() == lut150().entries.size());
    for (std::size_t i = 0; i < again.entries.size(); ++i) {
        CHECK(again.entries[i].material == lut150().entries[i].material);
        CHECK(again.entries[i].mu_poly_per_cm == lut150().entries[i].mu_poly_per_cm);
    }
    CHECK(again.setting_id == lut150().setting_id);
}

TEST_CASE("table binds to the acquisition settings") {
    const Spectrum soft = generate_tube_spectrum(80.0, 74.0, 1.0);
    const PolyLut lut80 = build_lut(db(), soft, DetectorResponse::flat(soft), kGeom, 20.0);
    CHECK(lut80.spectrum_hash != lut150().spectrum_hash);
    CHECK(lut80.setting_id != lut150().setting_id);

    const Spectrum s150 = generate_tube_spectrum(150.0, 74.0, 1.0);
    const PolyLut narrow =
        build_lut(db(), s150, DetectorResponse::flat(s150), kGeom, 12.0);
    CHECK(narrow.setting_id != lut150().setting_id);
    CHECK(narrow.spectrum_hash == lut150().spectrum_hash);
}

TEST_CASE("single-energy table reduces to the mono attenuation") {
    Spectrum s;
    s.e_min_keV = 60.0;
    s.de_keV = 1.0;
    s.weights = {1.0};
    const PolyLut lut = build_lut(db(), s, DetectorResponse::flat(s), kGeom, 20.0);
    for (const auto& e : lut.entries) {
        const double mu = db().at(e.material).linear_attenuation(60.0);
        CHECK(e.mu_poly_per_cm == doctest::Approx(mu).epsilon(0.03));
    }
}

TEST_CASE("hardening depresses the effective attenuation below the low-energy mono value") {
    // The polychromatic effective value sits inside the spectrum's mono range.
    for (const auto& e : lut150().entries) {
        const Material& m = db().at(e.material);
        CHECK(e.mu_poly_per_cm < m.linear_attenuation(10.0));
        CHECK(e.mu_poly_per_cm > m.linear_attenuation(150.0) * 0.8);
    }
}

TEST_CASE("nearest entry resolves ties toward higher attenuation") {
    PolyLut lut;
    lut.setting_id = "t";
    lut.spectrum_hash = "h";
    lut.calib_diameter_mm = 20.0;
    lut.entries = {{"a", 1.0}, {"b", 2.0}, {"c", 4.0}};
    CHECK(nearest_material(lut, 0.1).material == "a");
    CHECK(nearest_material(lut, 1.4).material == "a");
    CHECK(nearest_material(lut, 1.5).material == "b");  // exact midpoint: higher wins
    CHECK(nearest_material(lut, 2.9).material == "b");
    CHECK(nearest_material(lut, 3.0).material == "c");
    CHECK(nearest_material(lut, 100.0).material == "c");
}

TEST_CASE("table validation rejects unsorted or empty tables") {
    PolyLut bad;
    bad.setting_id = "x";
    bad.spectrum_hash = "y";
    bad.calib_diameter_mm = 10.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad.entries = {{"b", 2.0}, {"a", 1.0}};
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad.entries = {{"a", 1.0}, {"b", 2.0}};
    CHECK_NOTHROW(bad.validate());
    CHECK(bad.at("a").mu_poly_per_cm == 1.0);
    CHECK_THROWS_AS(bad.at("zz"), ValidationError);
}

TEST_CASE("calibration cylinder must fit the detector") {
    const Spectrum s = generate_tube_spectrum(150.0, 74.0, 1.0);
    CHECK_THROWS_AS(build_lut(db(), s, DetectorResponse::flat(s), kGeom, 100.0),
                    ValidationError);
    CHECK_THROWS_AS(build_lut(db(), s, DetectorResponse::flat(s), kGeom, 0.0),
                    ValidationError);
}
