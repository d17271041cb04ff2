#pragma once

#include <string>
#include <vector>

#include "bhc/geometry.hpp"
#include "bhc/material.hpp"
#include "bhc/spectrum.hpp"

// Forward projection. Attenuation line integrals are dimensionless: mu is
// 1/cm, chord lengths are converted mm -> cm. For label volumes the
// projectors accumulate per-material path lengths first; the background slot
// (label 0) is transparent, so an all-air volume projects to exactly zero.

namespace bhc {

enum class SinogramKind { measured, mono, poly, fitted_poly, correction, corrected };

const char* to_string(SinogramKind k);
SinogramKind sinogram_kind_from_string(const std::string& s);

// Attenuation projections, angle-major (index = view * n_detector_pixels + pixel).
// The kind is fixed at construction.
class Sinogram {
public:
    Sinogram(ScanGeometry geom, SinogramKind kind);
    Sinogram(ScanGeometry geom, SinogramKind kind, std::vector<double> values);

    const ScanGeometry& geom() const { return geom_; }
    SinogramKind kind() const { return kind_; }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }
    double& at(int view, int pixel) {
        return values_[static_cast<std::size_t>(view) * geom_.n_detector_pixels + pixel];
    }
    double at(int view, int pixel) const {
        return values_[static_cast<std::size_t>(view) * geom_.n_detector_pixels + pixel];
    }

    // Free-form provenance recorded into the file sidecar (spectrum hash,
    // energy, source volume, ...).
    std::vector<std::pair<std::string, std::string>>& provenance() { return provenance_; }
    const std::vector<std::pair<std::string, std::string>>& provenance() const {
        return provenance_;
    }

private:
    ScanGeometry geom_;
    SinogramKind kind_;
    std::vector<double> values_;
    std::vector<std::pair<std::string, std::string>> provenance_;
};

// Per-ray path length through each label class, in cm. Column 0 (background)
// is tracked too but never contributes attenuation.
struct PathMatrix {
    ScanGeometry geom;
    std::size_t n_labels = 0;
    std::vector<double> t_cm;  // ray-major: t_cm[ray * n_labels + label]

    double at(std::size_t ray, std::size_t label) const { return t_cm[ray * n_labels + label]; }
};

PathMatrix compute_path_lengths(const VoxelVolume& labels, const ScanGeometry& geom);

// Line integrals of an attenuation (or density) volume: sum of value * chord.
Sinogram line_integrals(const VoxelVolume& vol, const ScanGeometry& geom);

// Monochromatic projection of a label volume at one energy. The detector
// response cancels against the no-object intensity, so it takes none.
Sinogram project_mono(const VoxelVolume& labels, const MaterialDB& db,
                      const ScanGeometry& geom, double energy_keV);
Sinogram project_mono(const PathMatrix& paths, const VoxelVolume& labels,
                      const MaterialDB& db, double energy_keV);

// Polychromatic projection: chi = -ln( sum_b w_b eta_b exp(-sum_m mu_m(E_b) t_m)
// / sum_b w_b eta_b ). Weight scale cancels.
Sinogram project_poly(const VoxelVolume& labels, const MaterialDB& db,
                      const ScanGeometry& geom, const Spectrum& spectrum,
                      const DetectorResponse& response);

// Polychromatic projections for several spectra sharing one grid, reusing the
// traversal and the per-bin transmission. Order matches `spectra`.
std::vector<Sinogram> project_poly_family(const VoxelVolume& labels, const MaterialDB& db,
                                          const ScanGeometry& geom,
                                          const std::vector<Spectrum>& spectra,
                                          const DetectorResponse& response);
std::vector<Sinogram> project_poly_family(const PathMatrix& paths, const VoxelVolume& labels,
                                          const MaterialDB& db,
                                          const std::vector<Spectrum>& spectra,
                                          const DetectorResponse& response);

// Label volume -> attenuation volume at one energy; background maps to zero.
VoxelVolume attenuation_map(const VoxelVolume& labels, const MaterialDB& db,
                            double energy_keV);

// Poisson noise in the intensity domain: I = photons * exp(-chi) per ray,
// redrawn with a fixed seed, chi' = -ln(max(count,1)/photons).
Sinogram add_poisson_noise(const Sinogram& sino, double photons_per_ray,
                           std::uint64_t seed);

}  // namespace bhc
