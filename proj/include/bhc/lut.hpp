#pragma once

#include <string>
#include <vector>

#include "bhc/reconstruction.hpp"
#include "bhc/segmentation.hpp"

// Effective polychromatic attenuation lookup. Each entry is produced by a
// full simulation pass: a calibration cylinder of the material is projected
// with the scan spectrum, reconstructed with FBP, and summarized by the
// 10%-trimmed mean over the interior half-radius disc. Entries therefore
// include the beam hardening a real scan of that cylinder would see.

namespace bhc {

struct PolyLut {
    struct Entry {
        std::string material;
        double mu_poly_per_cm = 0.0;
    };

    // Binds the table to the acquisition settings it was built under.
    std::string setting_id;
    std::string spectrum_hash;
    double calib_diameter_mm = 0.0;
    std::vector<Entry> entries;  // ascending by mu_poly, ties by name

    void validate() const;
    const Entry& at(const std::string& material) const;
    bool contains(const std::string& material) const;
};

// Builds one entry per database material except "air" (the background
// convention makes an air cylinder project to zero, which has no usable
// effective attenuation). Deterministic and invariant under database
// iteration order; entries are sorted ascending.
PolyLut build_lut(const MaterialDB& db, const Spectrum& spectrum,
                  const DetectorResponse& response, const ScanGeometry& geom,
                  double calib_diameter_mm);

// Entry with the smallest squared distance to mu; exact midpoint ties go to
// the higher-attenuation entry.
const PolyLut::Entry& nearest_material(const PolyLut& lut, double mu);

}  // namespace bhc
