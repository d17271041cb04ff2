#include "bhc/lut.hpp"

#include <algorithm>
#include <cmath>

namespace bhc {

void PolyLut::validate() const {
    if (entries.empty()) throw ValidationError("lut: no entries");
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!(entries[i].mu_poly_per_cm > 0.0))
            throw ValidationError("lut: effective attenuation must be > 0 (material '" +
                                  entries[i].material + "')");
        if (i > 0) {
            const auto& a = entries[i - 1];
            const auto& b = entries[i];
            if (a.mu_poly_per_cm > b.mu_poly_per_cm ||
                (a.mu_poly_per_cm == b.mu_poly_per_cm && a.material >= b.material))
                throw ValidationError("lut: entries must be sorted ascending");
        }
    }
    if (!(calib_diameter_mm > 0.0))
        throw ValidationError("lut: calibration diameter must be > 0");
}

const PolyLut::Entry& PolyLut::at(const std::string& material) const {
    for (const auto& e : entries)
        if (e.material == material) return e;
    throw ValidationError("lut: no entry for material '" + material + "'");
}

bool PolyLut::contains(const std::string& material) const {
    return std::any_of(entries.begin(), entries.end(),
                       [&](const Entry& e) { return e.material == material; });
}

PolyLut build_lut(const MaterialDB& db, const Spectrum& spectrum,
                  const DetectorResponse& response, const ScanGeometry& geom,
                  double calib_diameter_mm) {
    spectrum.validate();
    geom.validate();
    if (!(calib_diameter_mm > 0.0))
        throw ValidationError("build_lut: calibration diameter must be > 0");
    if (calib_diameter_mm > geom.detector_span_mm())
        throw ValidationError("build_lut: calibration cylinder exceeds the detector span");

    // Reconstruction grid tied to the acquisition: one voxel per detector pixel.
    const GridSpec grid =
        GridSpec::centered(geom.n_detector_pixels, geom.n_detector_pixels,
                           geom.detector_pitch_mm);

    PolyLut lut;
    lut.calib_diameter_mm = calib_diameter_mm;
    lut.spectrum_hash = spectrum.hash_hex();

    // names() is sorted, so the build order never depends on how the caller
    // assembled the database.
    for (const auto& name : db.names()) {
        if (name == "air") continue;
        PhantomSpec spec;
        PhantomShape disc;
        disc.type = PhantomShape::Type::disc;
        disc.material = name;
        disc.center_mm = {0.0, 0.0};
        disc.radius_mm = 0.5 * calib_diameter_mm;
        spec.shapes.push_back(disc);

        const VoxelVolume labels = rasterize_phantom(spec, grid, db);
        const Sinogram sino = project_poly(labels, db, geom, spectrum, response);
        const ReconImage recon = fbp(sino, grid);

        // Interior statistic: trimmed mean inside half the cylinder radius.
        const double r_roi = 0.25 * calib_diameter_mm;
        std::vector<double> roi;
        for (int iy = 0; iy < grid.ny; ++iy) {
            for (int ix = 0; ix < grid.nx; ++ix) {
                const Vec2 p = grid.voxel_center(ix, iy);
                if (p.x * p.x + p.y * p.y <= r_roi * r_roi)
                    roi.push_back(recon.at(ix, iy));
            }
        }
        const double mu_eff = trimmed_mean(std::move(roi), 0.10);
        if (!(mu_eff > 0.0))
            throw NumericError("build_lut: non-positive effective attenuation for '" +
                               name + "'");
        lut.entries.push_back({name, mu_eff});
    }

    std::sort(lut.entries.begin(), lut.entries.end(),
              [](const PolyLut::Entry& a, const PolyLut::Entry& b) {
                  if (a.mu_poly_per_cm != b.mu_poly_per_cm)
                      return a.mu_poly_per_cm < b.mu_poly_per_cm;
                  return a.material < b.material;
              });

    Fnv1a id;
    id.update(lut.spectrum_hash);
    id.update(calib_diameter_mm);
    id.update(static_cast<double>(geom.n_angles));
    id.update(static_cast<double>(geom.n_detector_pixels));
    id.update(geom.detector_pitch_mm);
    for (const auto& v : response.values) id.update(v);
    lut.setting_id = id.hex();

    lut.validate();
    return lut;
}

const PolyLut::Entry& nearest_material(const PolyLut& lut, double mu) {
    lut.validate();
    if (!std::isfinite(mu)) throw ValidationError("nearest_material: non-finite query");
    const PolyLut::Entry* best = nullptr;
    double best_d = 0.0;
    for (const auto& e : lut.entries) {  // ascending: >= keeps the higher entry on ties
        const double d = (e.mu_poly_per_cm - mu) * (e.mu_poly_per_cm - mu);
        if (!best || d <= best_d) {
            best = &e;
            best_d = d;
        }
    }
    return *best;
}

}  // namespace bhc
