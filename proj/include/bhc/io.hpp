#pragma once

#include <string>
#include <vector>

#include "bhc/correction.hpp"
#include "bhc/metrics.hpp"

// File formats. Binary payloads are raw little-endian arrays (float32 images
// and volumes, int32 labels, float64 sinograms) described by a JSON sidecar
// at <path>.json carrying grid/geometry, kind, a content hash, and
// provenance. Tables are CSV, specs and reports JSON. All writes go through
// a temp file plus rename, so readers never see partial files.

namespace bhc {

void write_text_atomic(const std::string& path, const std::string& text);
void write_bytes_atomic(const std::string& path, const void* data, std::size_t size);
std::string read_text(const std::string& path);

// Material directory: materials.json (densities) plus <name>.csv tables with
// header "energy_keV,mu_over_rho_cm2_per_g". load_database is declared in
// material.hpp and implemented here.
void save_material_csv(const std::string& path, const Material& m);
Material load_material_csv(const std::string& path, const std::string& name,
                           double density_g_cm3);

void save_volume(const std::string& path, const VoxelVolume& vol);
VoxelVolume load_volume(const std::string& path);

void save_image(const std::string& path, const ReconImage& img);
ReconImage load_image(const std::string& path);

void save_sinogram(const std::string& path, const Sinogram& sino);
Sinogram load_sinogram(const std::string& path);

void save_spectrum_csv(const std::string& path, const Spectrum& s);
Spectrum load_spectrum_csv(const std::string& path);

void save_lut(const std::string& path, const PolyLut& lut);
PolyLut load_lut(const std::string& path);

PhantomSpec load_phantom(const std::string& path);
void save_phantom(const std::string& path, const PhantomSpec& spec);

std::vector<Roi> load_rois(const std::string& path);
const Roi& find_roi(const std::vector<Roi>& rois, const std::string& name);

void save_profile_csv(const std::string& path, const std::vector<ProfileSample>& profile);

void save_report(const std::string& path, const CorrectionReport& report);

// 16-bit grayscale PNG of the window [lo, hi] (values clamp). Pass lo == hi
// to auto-window to the image extrema. The window lands in <path>.json.
void write_png16(const std::string& path, const ReconImage& img, double lo = 0.0,
                 double hi = 0.0);

}  // namespace bhc
