#include "bhc/correction.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <utility>

namespace bhc {

namespace {

double canonical_zero(double v) { return v == 0.0 ? 0.0 : v; }

bool same_geometry(const ScanGeometry& a, const ScanGeometry& b) {
    return a.n_angles == b.n_angles && a.n_detector_pixels == b.n_detector_pixels &&
           a.detector_pitch_mm == b.detector_pitch_mm;
}

bool same_grid(const GridSpec& a, const GridSpec& b) {
    return a.nx == b.nx && a.ny == b.ny && a.voxel_size_mm == b.voxel_size_mm &&
           a.origin_mm.x == b.origin_mm.x && a.origin_mm.y == b.origin_mm.y;
}

double rms(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc / static_cast<double>(v.size()));
}

double rms_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(a.size()));
}

std::vector<double> effective_weights(const Spectrum& spectrum,
                                      const DetectorResponse& response, double& total) {
    spectrum.validate();
    response.validate();
    if (!response.same_grid(spectrum))
        throw ValidationError("correction: response grid does not match spectrum");
    std::vector<double> w(spectrum.bins());
    total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = spectrum.weights[i] * response.values[i];
        total += w[i];
    }
    if (!(total > 0.0))
        throw ValidationError("correction: spectrum and response have no overlap");
    return w;
}

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

struct Stopwatch {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    double lap() {
        const auto now = std::chrono::steady_clock::now();
        const double ms = std::chrono::duration<double, std::milli>(now - t0).count();
        t0 = now;
        return ms;
    }
};

// Lawson-Hanson active set on top of the unconstrained solver. k is tiny
// (one coefficient per candidate spectrum), so rebuilding the passive-column
// system every step is cheap.
Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
    const Eigen::Index k = A.cols();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(k);
    std::vector<char> passive(static_cast<std::size_t>(k), 0);
    const double grad_scale = (A.transpose() * b).cwiseAbs().maxCoeff();
    const double tol = 1e-10 * std::max(grad_scale, 1.0);

    const auto solve_passive = [&](std::vector<Eigen::Index>& idx) {
        idx.clear();
        for (Eigen::Index i = 0; i < k; ++i)
            if (passive[static_cast<std::size_t>(i)]) idx.push_back(i);
        Eigen::MatrixXd ap(A.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t c = 0; c < idx.size(); ++c) ap.col(static_cast<Eigen::Index>(c)) = A.col(idx[c]);
        return ap.completeOrthogonalDecomposition().solve(b).eval();
    };

    std::vector<Eigen::Index> idx;
    for (Eigen::Index outer = 0; outer < 30 * k; ++outer) {
        const Eigen::VectorXd grad = A.transpose() * (b - A * x);
        Eigen::Index enter = -1;
        double best = tol;
        for (Eigen::Index i = 0; i < k; ++i) {
            if (!passive[static_cast<std::size_t>(i)] && grad[i] > best) {
                best = grad[i];
                enter = i;
            }
        }
        if (enter < 0) break;
        passive[static_cast<std::size_t>(enter)] = 1;

        for (Eigen::Index inner = 0; inner < 30 * k; ++inner) {
            const Eigen::VectorXd z = solve_passive(idx);
            bool feasible = true;
            for (std::size_t c = 0; c < idx.size(); ++c)
                if (!(z[static_cast<Eigen::Index>(c)] > 0.0)) feasible = false;
            if (feasible) {
                x.setZero();
                for (std::size_t c = 0; c < idx.size(); ++c) x[idx[c]] = z[static_cast<Eigen::Index>(c)];
                break;
            }
            double alpha = 1.0;
            for (std::size_t c = 0; c < idx.size(); ++c) {
                const double zc = z[static_cast<Eigen::Index>(c)];
                if (zc > 0.0) continue;
                const double xc = x[idx[c]];
                const double step = xc / (xc - zc);
                alpha = std::min(alpha, step);
            }
            for (std::size_t c = 0; c < idx.size(); ++c) {
                const double zc = z[static_cast<Eigen::Index>(c)];
                x[idx[c]] += alpha * (zc - x[idx[c]]);
            }
            for (Eigen::Index i = 0; i < k; ++i) {
                if (passive[static_cast<std::size_t>(i)] && x[i] <= tol) {
                    x[i] = 0.0;
                    passive[static_cast<std::size_t>(i)] = 0;
                }
            }
        }
    }
    return x;
}

}  // namespace

MaterialEstimate estimate_material(const VoxelVolume& class_volume, const PolyLut& lut,
                                   const MaterialDB& db, const ScanGeometry& geom,
                                   const Spectrum& spectrum,
                                   const DetectorResponse& response) {
    lut.validate();
    const double measured = measured_mu(class_volume);
    const auto& guess = nearest_material(lut, measured);

    // The candidates share the class support, so trace it once and evaluate
    // each candidate's polychromatic chi in closed form from the path length.
    VoxelVolume support;
    support.grid = class_volume.grid;
    support.kind = VolumeKind::label;
    support.materials = {"air", "class"};
    support.values.resize(class_volume.values.size());
    for (std::size_t i = 0; i < support.values.size(); ++i)
        support.values[i] = class_volume.values[i] != 0.0 ? 1.0 : 0.0;
    const PathMatrix paths = compute_path_lengths(support, geom);
    const Sinogram target = line_integrals(class_volume, geom);

    double total = 0.0;
    const auto w = effective_weights(spectrum, response, total);
    const std::size_t n_bins = spectrum.bins();
    const std::size_t n_rays = geom.ray_count();

    MaterialEstimate est;
    est.initial = guess.material;
    est.measured_mu_per_cm = measured;

    std::vector<double> sq(n_rays);
    std::vector<double> mu_bins(n_bins);
    bool found = false;
    for (const auto& entry : lut.entries) {
        // Refinement only looks upward: beam hardening depresses the
        // reconstructed statistic, never raises it.
        if (entry.mu_poly_per_cm < guess.mu_poly_per_cm) continue;
        const Material& mat = db.at(entry.material);
        for (std::size_t bin = 0; bin < n_bins; ++bin)
            mu_bins[bin] = mat.linear_attenuation(spectrum.energy(bin));

        parallel_for(n_rays, [&](std::size_t begin, std::size_t end) {
            for (std::size_t r = begin; r < end; ++r) {
                const double t = paths.at(r, 1);
                double chi = 0.0;
                if (t != 0.0) {
                    double transmitted = 0.0;
                    for (std::size_t bin = 0; bin < n_bins; ++bin)
                        transmitted += w[bin] * std::exp(-mu_bins[bin] * t);
                    chi = -std::log(transmitted / total);
                }
                const double d = chi - target.values()[r];
                sq[r] = d * d;
            }
        });
        double sse = 0.0;
        for (double s : sq) sse += s;
        const double mse = sse / static_cast<double>(n_rays);
        // Entries are scanned in ascending attenuation order; strict < keeps
        // the lower-attenuation candidate on ties.
        if (!found || mse < est.mse) {
            found = true;
            est.chosen = entry.material;
            est.mse = mse;
        }
    }
    return est;
}

LseFit estimate_poly_projection(const Sinogram& measured,
                                const std::vector<Sinogram>& candidates, bool nonnegative) {
    if (candidates.empty()) throw ValidationError("lse: no candidate projections");
    for (const auto& c : candidates)
        if (!same_geometry(c.geom(), measured.geom()))
            throw ValidationError("lse: candidate geometry does not match measurement");

    const std::size_t n = measured.values().size();
    const std::size_t k = candidates.size();
    Eigen::MatrixXd a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    Eigen::VectorXd b(static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) b[static_cast<Eigen::Index>(r)] = measured.values()[r];
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t r = 0; r < n; ++r)
            a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = candidates[j].values()[r];

    // Rank-revealing orthogonal factorization; collinear candidates get the
    // minimum-norm coefficient vector instead of a blow-up.
    Eigen::VectorXd coef = nonnegative ? nnls(a, b)
                                       : a.completeOrthogonalDecomposition().solve(b).eval();
    for (Eigen::Index i = 0; i < coef.size(); ++i)
        if (!std::isfinite(coef[i])) throw NumericError("lse: non-finite coefficient");

    Sinogram fitted(measured.geom(), SinogramKind::fitted_poly);
    for (std::size_t r = 0; r < n; ++r) {
        double acc = 0.0;
        for (std::size_t j = 0; j < k; ++j)
            acc += coef[static_cast<Eigen::Index>(j)] * candidates[j].values()[r];
        fitted.values()[r] = acc;
    }

    const double residual = rms_diff(fitted.values(), measured.values());
    return LseFit{std::vector<double>(coef.data(), coef.data() + coef.size()),
                  std::move(fitted), residual};
}

EnergySelection select_effective_energy(const Sinogram& measured, const VoxelVolume& labels,
                                        const MaterialDB& db, const Spectrum& spectrum) {
    const PathMatrix paths = compute_path_lengths(labels, measured.geom());
    return select_effective_energy(paths, measured, labels, db, spectrum);
}

EnergySelection select_effective_energy(const PathMatrix& paths, const Sinogram& measured,
                                        const VoxelVolume& labels, const MaterialDB& db,
                                        const Spectrum& spectrum) {
    spectrum.validate();
    if (!same_geometry(paths.geom, measured.geom()))
        throw ValidationError("energy selection: geometry mismatch");
    if (paths.n_labels != labels.materials.size())
        throw ValidationError("energy selection: path matrix does not match label volume");

    const double peak = *std::max_element(spectrum.weights.begin(), spectrum.weights.end());
    std::vector<std::size_t> active;
    for (std::size_t bin = 0; bin < spectrum.bins(); ++bin)
        if (spectrum.weights[bin] > 1e-6 * peak) active.push_back(bin);

    const std::size_t n_rays = paths.geom.ray_count();
    const std::size_t n_labels = paths.n_labels;
    std::vector<double> mse(active.size(), 0.0);
    std::vector<double> energies(active.size(), 0.0);
    for (std::size_t i = 0; i < active.size(); ++i) energies[i] = spectrum.energy(active[i]);

    parallel_for(active.size(), [&](std::size_t begin, std::size_t end) {
        std::vector<double> mu(n_labels, 0.0);
        for (std::size_t i = begin; i < end; ++i) {
            for (std::size_t l = 1; l < n_labels; ++l)
                mu[l] = db.at(labels.materials[l]).linear_attenuation(energies[i]);
            double sse = 0.0;
            for (std::size_t r = 0; r < n_rays; ++r) {
                const double* row = &paths.t_cm[r * n_labels];
                double line = 0.0;
                for (std::size_t l = 1; l < n_labels; ++l) line += mu[l] * row[l];
                const double d = line - measured.values()[r];
                sse += d * d;
            }
            mse[i] = sse / static_cast<double>(n_rays);
        }
    });

    // Ascending scan with strict < : ties resolve to the lower energy.
    std::size_t best = 0;
    for (std::size_t i = 1; i < mse.size(); ++i)
        if (mse[i] < mse[best]) best = i;

    Sinogram mono = project_mono(paths, labels, db, energies[best]);
    mono.provenance().emplace_back("energy_keV", format_number(energies[best]));
    return EnergySelection{energies[best], std::move(mono), std::move(energies), std::move(mse)};
}

Sinogram correction_term(const Sinogram& mono, const Sinogram& fitted_poly) {
    if (mono.kind() != SinogramKind::mono)
        throw ValidationError("correction term: first input must be kind 'mono'");
    if (fitted_poly.kind() != SinogramKind::fitted_poly)
        throw ValidationError("correction term: second input must be kind 'fitted_poly'");
    if (!same_geometry(mono.geom(), fitted_poly.geom()))
        throw ValidationError("correction term: geometry mismatch");
    Sinogram out(mono.geom(), SinogramKind::correction);
    for (std::size_t r = 0; r < out.values().size(); ++r)
        out.values()[r] = mono.values()[r] - fitted_poly.values()[r];
    out.provenance() = mono.provenance();
    return out;
}

Sinogram apply_correction(const Sinogram& measured, const Sinogram& term) {
    if (measured.kind() != SinogramKind::measured)
        throw ValidationError("apply correction: first input must be kind 'measured'");
    if (term.kind() != SinogramKind::correction)
        throw ValidationError("apply correction: second input must be kind 'correction'");
    if (!same_geometry(measured.geom(), term.geom()))
        throw ValidationError("apply correction: geometry mismatch");
    Sinogram out(measured.geom(), SinogramKind::corrected);
    for (std::size_t r = 0; r < out.values().size(); ++r)
        out.values()[r] = measured.values()[r] + term.values()[r];
    out.provenance() = term.provenance();
    return out;
}

PipelineSetup make_pipeline_setup(Spectrum base, const PipelineConfig& cfg,
                                  const MaterialDB& db, const ScanGeometry& geom) {
    geom.validate();
    if (cfg.nx <= 0 || cfg.ny <= 0)
        throw ValidationError("pipeline: grid dimensions must be positive");
    if (!(cfg.voxel_size_mm > 0.0))
        throw ValidationError("pipeline: voxel size must be positive");
    if (cfg.n_classes < 2 || cfg.n_classes > 4)
        throw ValidationError("pipeline: n_classes must be in [2, 4]");
    if (cfg.histogram_bins < 2)
        throw ValidationError("pipeline: histogram_bins must be >= 2");
    if (cfg.passes < 1) throw ValidationError("pipeline: passes must be >= 1");
    if (cfg.i0 && !(*cfg.i0 > 0.0)) throw ValidationError("pipeline: i0 must be positive");

    for (const auto& f : cfg.base_filters)
        base = filter_spectrum(base, db.at(f.material), f.thickness_mm);
    DetectorResponse response = cfg.energy_integrating_response
                                    ? DetectorResponse::energy_integrating(base)
                                    : DetectorResponse::flat(base);
    const auto& filters =
        cfg.candidate_filters.empty() ? default_filter_family() : cfg.candidate_filters;
    std::vector<Spectrum> family = make_filtered_family(base, filters, db);

    PolyLut lut;
    if (cfg.lut) {
        lut = *cfg.lut;
        lut.validate();
        if (lut.spectrum_hash != base.hash_hex())
            throw ValidationError("pipeline: LUT was built for a different spectrum");
    } else {
        lut = build_lut(db, base, response, geom, cfg.calib_diameter_mm);
    }
    return PipelineSetup{std::move(base), std::move(response), std::move(family),
                         std::move(lut)};
}

PipelineSetup make_pipeline_setup(const PipelineConfig& cfg, const MaterialDB& db,
                                  const ScanGeometry& geom) {
    return make_pipeline_setup(generate_tube_spectrum(cfg.kvp, cfg.anode_z, cfg.de_keV), cfg,
                               db, geom);
}

CorrectionResult correct_from_segmentation(const Sinogram& measured,
                                           const ReconImage& uncorrected,
                                           const SegmentationResult& segmentation,
                                           const PipelineSetup& setup,
                                           const PipelineConfig& cfg,
                                           const MaterialDB& db) {
    if (measured.kind() != SinogramKind::measured)
        throw ValidationError("correct: input sinogram must be kind 'measured'");
    if (segmentation.class_volumes.empty())
        throw ValidationError("correct: segmentation has no foreground classes");
    for (const auto& vol : segmentation.class_volumes)
        if (!same_grid(vol.grid, uncorrected.grid))
            throw ValidationError("correct: segmentation grid does not match image");
    if (!cfg.forced_materials.empty() &&
        cfg.forced_materials.size() != segmentation.class_volumes.size())
        throw ValidationError("correct: forced_materials must name one material per class");

    const ScanGeometry& geom = measured.geom();
    std::vector<std::pair<std::string, double>> timings;
    Stopwatch watch;

    const std::size_t n_classes = segmentation.class_volumes.size();
    std::vector<ClassReport> classes;
    for (std::size_t c = 0; c < n_classes; ++c) {
        ClassReport rep;
        rep.class_index = static_cast<int>(c) + 1;
        rep.measured_mu_per_cm = measured_mu(segmentation.class_volumes[c]);
        if (!cfg.forced_materials.empty()) {
            rep.forced = true;
            rep.chosen = cfg.forced_materials[c];
            db.at(rep.chosen);  // must exist
        } else {
            const MaterialEstimate est =
                estimate_material(segmentation.class_volumes[c], setup.lut, db, geom,
                                  setup.base, setup.response);
            rep.initial = est.initial;
            rep.chosen = est.chosen;
        }
        classes.push_back(std::move(rep));
    }
    timings.emplace_back("estimate_materials", watch.lap());

    VoxelVolume labels;
    labels.grid = uncorrected.grid;
    labels.kind = VolumeKind::label;
    labels.materials.push_back("air");
    for (const auto& rep : classes) labels.materials.push_back(rep.chosen);
    labels.values.assign(uncorrected.values.size(), 0.0);
    for (std::size_t c = 0; c < n_classes; ++c) {
        const auto& vol = segmentation.class_volumes[c].values;
        for (std::size_t i = 0; i < vol.size(); ++i)
            if (vol[i] != 0.0) labels.values[i] = static_cast<double>(c + 1);
    }
    const PathMatrix paths = compute_path_lengths(labels, geom);
    timings.emplace_back("trace_labels", watch.lap());

    const std::vector<Sinogram> candidates =
        project_poly_family(paths, labels, db, setup.family, setup.response);
    timings.emplace_back("project_family", watch.lap());

    LseFit fit = estimate_poly_projection(measured, candidates, cfg.nonnegative);
    timings.emplace_back("fit_projection", watch.lap());

    EnergySelection sel = select_effective_energy(paths, measured, labels, db, setup.base);
    timings.emplace_back("select_energy", watch.lap());

    Sinogram term = correction_term(sel.mono, fit.fitted);
    Sinogram corrected_sino = apply_correction(measured, term);
    timings.emplace_back("apply_correction", watch.lap());

    const FbpOptions opts{cfg.window, cfg.fov_radius_mm};
    ReconImage corrected = fbp(corrected_sino, uncorrected.grid, opts);
    timings.emplace_back("fbp_corrected", watch.lap());

    CorrectionReport report;
    report.classes = std::move(classes);
    report.thresholds = segmentation.thresholds;
    report.selected_energy_keV = sel.energy_keV;
    report.coefficients = fit.coefficients;
    report.lse_residual_rms = fit.residual_rms;
    report.measured_rms = rms(measured.values());
    report.rms_uncorrected_vs_mono = rms_diff(measured.values(), sel.mono.values());
    report.rms_corrected_vs_mono = rms_diff(corrected_sino.values(), sel.mono.values());
    report.lut_setting_id = setup.lut.setting_id;
    report.passes = 1;
    report.timings_ms = std::move(timings);

    return CorrectionResult{uncorrected,
                            std::move(corrected),
                            measured,
                            std::move(corrected_sino),
                            std::move(sel.mono),
                            std::move(fit.fitted),
                            std::move(term),
                            std::move(labels),
                            segmentation,
                            std::move(report)};
}

namespace {

CorrectionResult run_pipeline(const Sinogram& measured_in, const PipelineConfig& cfg,
                              const MaterialDB& db, const PipelineSetup& setup,
                              std::vector<std::pair<std::string, double>> timings) {
    if (cfg.passes < 1) throw ValidationError("pipeline: passes must be >= 1");
    if (cfg.i0 && !(*cfg.i0 > 0.0)) throw ValidationError("pipeline: i0 must be positive");
    Stopwatch watch;

    const Sinogram measured = [&]() -> Sinogram {
        if (!cfg.intensity_input) {
            if (measured_in.kind() != SinogramKind::measured)
                throw ValidationError("pipeline: input sinogram must be kind 'measured'");
            return measured_in;
        }
        const auto& intensity = measured_in.values();
        double i0 = cfg.i0.value_or(0.0);
        if (!cfg.i0) {
            for (double v : intensity) i0 = std::max(i0, v);
            if (!(i0 > 0.0)) throw NumericError("normalize: no positive intensity sample");
        }
        std::vector<double> chi(intensity.size());
        for (std::size_t i = 0; i < chi.size(); ++i) {
            if (!(intensity[i] > 0.0))
                throw NumericError("normalize: intensity samples must be positive");
            chi[i] = canonical_zero(-std::log(intensity[i] / i0));
        }
        Sinogram out(measured_in.geom(), SinogramKind::measured, std::move(chi));
        out.provenance() = measured_in.provenance();
        out.provenance().emplace_back("i0", format_number(i0));
        return out;
    }();
    timings.emplace_back("normalize", watch.lap());

    const GridSpec grid = GridSpec::centered(cfg.nx, cfg.ny, cfg.voxel_size_mm);
    const FbpOptions opts{cfg.window, cfg.fov_radius_mm};
    ReconImage uncorrected = fbp(measured, grid, opts);
    timings.emplace_back("fbp_uncorrected", watch.lap());

    std::optional<CorrectionResult> result;
    for (int pass = 1; pass <= cfg.passes; ++pass) {
        const ReconImage& src = pass == 1 ? uncorrected : result->corrected;
        watch.lap();
        const Histogram hist = image_histogram(src, cfg.histogram_bins);
        const std::vector<double> thresholds = otsu_thresholds(hist, cfg.n_classes);
        SegmentationResult seg = split_materials(src, thresholds);
        const double segment_ms = watch.lap();

        CorrectionResult r =
            correct_from_segmentation(measured, uncorrected, seg, setup, cfg, db);
        const std::string prefix =
            cfg.passes > 1 ? "pass" + std::to_string(pass) + ":" : std::string();
        timings.emplace_back(prefix + "segment", segment_ms);
        for (const auto& t : r.report.timings_ms)
            timings.emplace_back(prefix + t.first, t.second);
        result = std::move(r);
        watch.lap();
    }
    result->report.passes = cfg.passes;
    result->report.timings_ms = std::move(timings);
    return std::move(*result);
}

}  // namespace

CorrectionResult correct_pipeline(const Sinogram& measured_in, const PipelineConfig& cfg,
                                  const MaterialDB& db, const PipelineSetup& setup) {
    return run_pipeline(measured_in, cfg, db, setup, {});
}

CorrectionResult correct_pipeline(const Sinogram& measured_in, const PipelineConfig& cfg,
                                  const MaterialDB& db) {
    std::vector<std::pair<std::string, double>> timings;
    Stopwatch watch;
    const PipelineSetup setup = make_pipeline_setup(cfg, db, measured_in.geom());
    timings.emplace_back("setup", watch.lap());
    return run_pipeline(measured_in, cfg, db, setup, std::move(timings));
}

PolynomialBaseline fit_polynomial_baseline(const Material& material, const Spectrum& spectrum,
                                           const DetectorResponse& response, int degree,
                                           double chi_max) {
    if (degree < 2 || degree > 4)
        throw ValidationError("baseline: degree must be in [2, 4]");
    material.validate();
    double total = 0.0;
    const auto w = effective_weights(spectrum, response, total);
    const std::size_t n_bins = spectrum.bins();
    std::vector<double> mu(n_bins);
    for (std::size_t bin = 0; bin < n_bins; ++bin)
        mu[bin] = material.linear_attenuation(spectrum.energy(bin));
    double mu_eff = 0.0;
    for (std::size_t bin = 0; bin < n_bins; ++bin) mu_eff += w[bin] * mu[bin];
    mu_eff /= total;

    const auto chi_poly = [&](double t_cm) {
        double transmitted = 0.0;
        for (std::size_t bin = 0; bin < n_bins; ++bin)
            transmitted += w[bin] * std::exp(-mu[bin] * t_cm);
        return -std::log(transmitted / total);
    };

    // Slab thickness range covering the measured attenuation span; chi grows
    // without bound (asymptotic slope = the hardest bin), so doubling ends.
    const double target = std::max(chi_max, 1e-6);
    double t_max = 1.0;
    for (int i = 0; i < 64 && chi_poly(t_max) < target; ++i) t_max *= 2.0;

    const int n_samples = 200;
    Eigen::MatrixXd a(n_samples, degree);
    Eigen::VectorXd y(n_samples);
    for (int i = 0; i < n_samples; ++i) {
        const double t = t_max * static_cast<double>(i + 1) / n_samples;
        const double x = chi_poly(t);
        double p = x;
        for (int d = 0; d < degree; ++d) {
            a(i, d) = p;
            p *= x;
        }
        y(i) = mu_eff * t;
    }
    const Eigen::VectorXd coef = a.completeOrthogonalDecomposition().solve(y);

    PolynomialBaseline out;
    out.coefficients.assign(coef.data(), coef.data() + degree);
    out.mu_eff_per_cm = mu_eff;
    out.t_max_cm = t_max;
    out.degree = degree;
    return out;
}

Sinogram apply_polynomial_baseline(const Sinogram& measured, const PolynomialBaseline& fit) {
    if (fit.coefficients.empty()) throw ValidationError("baseline: empty coefficient set");
    Sinogram out(measured.geom(), SinogramKind::corrected, measured.values());
    out.provenance() = measured.provenance();
    for (double& v : out.values()) {
        const double x = v;
        double p = x;
        double acc = 0.0;
        for (double c : fit.coefficients) {
            acc += c * p;
            p *= x;
        }
        v = canonical_zero(acc);
    }
    return out;
}

Sinogram baseline_polynomial_correction(const Sinogram& measured, const Material& material,
                                        const Spectrum& spectrum,
                                        const DetectorResponse& response, int degree) {
    double chi_max = 0.0;
    for (double v : measured.values()) chi_max = std::max(chi_max, v);
    const PolynomialBaseline fit =
        fit_polynomial_baseline(material, spectrum, response, degree, chi_max);
    return apply_polynomial_baseline(measured, fit);
}

}  // namespace bhc
