#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bhc/lut.hpp"

// Blind multi-material correction. One pass: segment the uncorrected slice,
// match each class to a database material (LUT guess plus a refinement sweep
// over higher-attenuation candidates), simulate a family of filtered
// polychromatic projections of the estimated volume, fit them to the measured
// projections by least squares, pick the monochromatic energy that best
// matches the measurement, and add the mono-minus-fitted-poly difference to
// the measured projections.

namespace bhc {

struct MaterialEstimate {
    std::string initial;
    std::string chosen;
    double measured_mu_per_cm = 0.0;
    double mse = 0.0;  // projection-domain MSE of the chosen candidate
};

// LUT guess from the class statistic, then a sweep over every LUT entry with
// effective attenuation >= the guess: each candidate fills the class support
// with its density, is projected polychromatically, and competes on MSE
// against the class's ray sums. Ties go to the lower-attenuation candidate.
MaterialEstimate estimate_material(const VoxelVolume& class_volume, const PolyLut& lut,
                                   const MaterialDB& db, const ScanGeometry& geom,
                                   const Spectrum& spectrum,
                                   const DetectorResponse& response);

struct LseFit {
    std::vector<double> coefficients;  // one per candidate, fit order
    Sinogram fitted;                   // kind fitted_poly, equals sum c_i * candidate_i
    double residual_rms = 0.0;
};

// Joint least squares over all views and detector pixels at once. The system
// is solved by a rank-revealing orthogonal factorization and returns the
// minimum-norm solution when candidates are collinear. With nonnegative=true
// the coefficients are constrained to >= 0 by active-set refinement.
LseFit estimate_poly_projection(const Sinogram& measured,
                                const std::vector<Sinogram>& candidates,
                                bool nonnegative = false);

struct EnergySelection {
    double energy_keV = 0.0;
    Sinogram mono;  // kind mono, at the selected energy
    std::vector<double> candidate_energies_keV;
    std::vector<double> candidate_mse;
};

// Sweeps the spectrum bins with weight > 1e-6 of the peak weight, projects
// the labeled volume monochromatically at each, and picks the energy with the
// smallest MSE against the measured projections; ties go to the lower energy.
EnergySelection select_effective_energy(const Sinogram& measured, const VoxelVolume& labels,
                                        const MaterialDB& db, const Spectrum& spectrum);
EnergySelection select_effective_energy(const PathMatrix& paths, const Sinogram& measured,
                                        const VoxelVolume& labels, const MaterialDB& db,
                                        const Spectrum& spectrum);

// chi_mono - chi_fitted_poly, entry-wise (kind correction).
Sinogram correction_term(const Sinogram& mono, const Sinogram& fitted_poly);

// chi_measured + term, entry-wise (kind corrected).
Sinogram apply_correction(const Sinogram& measured, const Sinogram& term);

struct PipelineConfig {
    // Source model: Kramers tube plus inherent filtration.
    double kvp = 150.0;
    double anode_z = 74.0;
    double de_keV = 1.0;
    std::vector<FilterSpec> base_filters;
    bool energy_integrating_response = false;

    // Candidate family simulated for the fit (applied on top of the base).
    std::vector<FilterSpec> candidate_filters;  // empty = default_filter_family()

    // Reconstruction grid.
    int nx = 256;
    int ny = 256;
    double voxel_size_mm = 0.25;
    FilterWindow window = FilterWindow::ramlak;
    std::optional<double> fov_radius_mm;

    // Segmentation.
    int n_classes = 3;
    int histogram_bins = 256;

    // Material matching. Without a preloaded LUT one is built on the fly from
    // the base spectrum and a calibration cylinder of this diameter.
    std::optional<PolyLut> lut;
    double calib_diameter_mm = 20.0;
    // Per-class override, ascending class order; empty = estimate blindly.
    std::vector<std::string> forced_materials;

    bool nonnegative = false;
    int passes = 1;

    // Measured input in intensity domain: chi = -ln(I / i0), i0 defaulting to
    // the sinogram maximum.
    bool intensity_input = false;
    std::optional<double> i0;
};

struct ClassReport {
    int class_index = 0;  // 1-based, ascending attenuation
    double measured_mu_per_cm = 0.0;
    std::string initial;
    std::string chosen;
    bool forced = false;
};

struct CorrectionReport {
    std::vector<ClassReport> classes;
    std::vector<double> thresholds;
    double selected_energy_keV = 0.0;
    std::vector<double> coefficients;
    double lse_residual_rms = 0.0;
    double measured_rms = 0.0;
    double rms_uncorrected_vs_mono = 0.0;
    double rms_corrected_vs_mono = 0.0;
    std::string lut_setting_id;
    int passes = 1;
    std::vector<std::pair<std::string, double>> timings_ms;
};

struct CorrectionResult {
    ReconImage uncorrected;
    ReconImage corrected;
    Sinogram measured;    // after intensity normalization, kind measured
    Sinogram corrected_sino;
    Sinogram mono;
    Sinogram fitted;
    Sinogram term;
    VoxelVolume labels;   // estimated material label volume
    SegmentationResult segmentation;
    CorrectionReport report;
};

// Everything derived from the config that is independent of the measurement.
struct PipelineSetup {
    Spectrum base;
    DetectorResponse response;
    std::vector<Spectrum> family;
    PolyLut lut;
};

PipelineSetup make_pipeline_setup(const PipelineConfig& cfg, const MaterialDB& db,
                                  const ScanGeometry& geom);
// Same derivation from a caller-provided source spectrum (the config's tube
// fields are ignored; base filters, response, family, and LUT still apply).
PipelineSetup make_pipeline_setup(Spectrum base, const PipelineConfig& cfg,
                                  const MaterialDB& db, const ScanGeometry& geom);

// One correction pass from an existing segmentation (the full pipeline calls
// this; tests use it to inject degraded segmentations).
CorrectionResult correct_from_segmentation(const Sinogram& measured,
                                           const ReconImage& uncorrected,
                                           const SegmentationResult& segmentation,
                                           const PipelineSetup& setup,
                                           const PipelineConfig& cfg,
                                           const MaterialDB& db);

CorrectionResult correct_pipeline(const Sinogram& measured, const PipelineConfig& cfg,
                                  const MaterialDB& db);
// Same pipeline with a caller-provided setup, for spectra or tables that do
// not come from the config's tube model (the setup's own timing is skipped).
CorrectionResult correct_pipeline(const Sinogram& measured, const PipelineConfig& cfg,
                                  const MaterialDB& db, const PipelineSetup& setup);

// Single-material comparison baseline: fits chi_mono(t) as a polynomial (no
// constant term) in chi_poly(t) over a slab-thickness grid and remaps the
// measured projections through it. The mono reference slope is the
// fluence-weighted mean attenuation, so a one-bin spectrum yields the
// identity map.
struct PolynomialBaseline {
    std::vector<double> coefficients;  // a_1..a_degree
    double mu_eff_per_cm = 0.0;
    double t_max_cm = 0.0;
    int degree = 2;
};

PolynomialBaseline fit_polynomial_baseline(const Material& material, const Spectrum& spectrum,
                                           const DetectorResponse& response, int degree,
                                           double chi_max);
Sinogram apply_polynomial_baseline(const Sinogram& measured, const PolynomialBaseline& fit);
Sinogram baseline_polynomial_correction(const Sinogram& measured, const Material& material,
                                        const Spectrum& spectrum,
                                        const DetectorResponse& response, int degree = 2);

}  // namespace bhc
