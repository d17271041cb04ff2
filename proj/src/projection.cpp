#include "bhc/projection.hpp"

#include <cmath>
#include <random>

namespace bhc {

const char* to_string(SinogramKind k) {
    switch (k) {
        case SinogramKind::measured: return "measured";
        case SinogramKind::mono: return "mono";
        case SinogramKind::poly: return "poly";
        case SinogramKind::fitted_poly: return "fitted_poly";
        case SinogramKind::correction: return "correction";
        case SinogramKind::corrected: return "corrected";
    }
    return "measured";
}

SinogramKind sinogram_kind_from_string(const std::string& s) {
    if (s == "measured") return SinogramKind::measured;
    if (s == "mono") return SinogramKind::mono;
    if (s == "poly") return SinogramKind::poly;
    if (s == "fitted_poly") return SinogramKind::fitted_poly;
    if (s == "correction") return SinogramKind::correction;
    if (s == "corrected") return SinogramKind::corrected;
    throw ValidationError("sinogram: unknown kind '" + s + "'");
}

Sinogram::Sinogram(ScanGeometry geom, SinogramKind kind) : geom_(geom), kind_(kind) {
    geom_.validate();
    values_.assign(geom_.ray_count(), 0.0);
}

Sinogram::Sinogram(ScanGeometry geom, SinogramKind kind, std::vector<double> values)
    : geom_(geom), kind_(kind), values_(std::move(values)) {
    geom_.validate();
    if (values_.size() != geom_.ray_count())
        throw ValidationError("sinogram: value count does not match geometry");
}

PathMatrix compute_path_lengths(const VoxelVolume& labels, const ScanGeometry& geom) {
    labels.validate();
    geom.validate();
    if (labels.kind != VolumeKind::label)
        throw ValidationError("path lengths: need a label volume");
    PathMatrix pm;
    pm.geom = geom;
    pm.n_labels = labels.materials.size();
    pm.t_cm.assign(geom.ray_count() * pm.n_labels, 0.0);

    const std::size_t n_pix = static_cast<std::size_t>(geom.n_detector_pixels);
    parallel_for(static_cast<std::size_t>(geom.n_angles), [&](std::size_t b, std::size_t e) {
        for (std::size_t view = b; view < e; ++view) {
            const auto rays = rays_for_view(geom, static_cast<int>(view));
            for (std::size_t i = 0; i < n_pix; ++i) {
                double* row = &pm.t_cm[(view * n_pix + i) * pm.n_labels];
                for (const auto& seg : trace_ray(labels.grid, rays[i])) {
                    const auto label = static_cast<std::size_t>(labels.values[seg.voxel]);
                    row[label] += seg.length_mm * 0.1;  // mm -> cm
                }
            }
        }
    });
    return pm;
}

Sinogram line_integrals(const VoxelVolume& vol, const ScanGeometry& geom) {
    vol.validate();
    geom.validate();
    if (vol.kind == VolumeKind::label)
        throw ValidationError("line_integrals: takes a scalar volume, not labels");
    Sinogram sino(geom, SinogramKind::measured);
    const std::size_t n_pix = static_cast<std::size_t>(geom.n_detector_pixels);
    parallel_for(static_cast<std::size_t>(geom.n_angles), [&](std::size_t b, std::size_t e) {
        for (std::size_t view = b; view < e; ++view) {
            const auto rays = rays_for_view(geom, static_cast<int>(view));
            for (std::size_t i = 0; i < n_pix; ++i) {
                double acc = 0.0;
                for (const auto& seg : trace_ray(vol.grid, rays[i]))
                    acc += vol.values[seg.voxel] * (seg.length_mm * 0.1);
                sino.values()[view * n_pix + i] = acc;
            }
        }
    });
    return sino;
}

namespace {

// Per-label linear attenuation at one energy; background slot 0 forced to 0.
std::vector<double> label_mu(const VoxelVolume& labels, const MaterialDB& db,
                             double energy_keV) {
    std::vector<double> mu(labels.materials.size(), 0.0);
    for (std::size_t l = 1; l < labels.materials.size(); ++l)
        mu[l] = db.at(labels.materials[l]).linear_attenuation(energy_keV);
    return mu;
}

double canonical_zero(double v) {
    // -log(1) is -0.0; keep air rays at a bit-exact +0.0.
    return v == 0.0 ? 0.0 : v;
}

}  // namespace

Sinogram project_mono(const PathMatrix& paths, const VoxelVolume& labels,
                      const MaterialDB& db, double energy_keV) {
    if (paths.n_labels != labels.materials.size())
        throw ValidationError("project_mono: path matrix does not match label volume");
    const auto mu = label_mu(labels, db, energy_keV);
    Sinogram sino(paths.geom, SinogramKind::mono);
    const std::size_t n_rays = paths.geom.ray_count();
    parallel_for(n_rays, [&](std::size_t b, std::size_t e) {
        for (std::size_t r = b; r < e; ++r) {
            double acc = 0.0;
            const double* row = &paths.t_cm[r * paths.n_labels];
            for (std::size_t l = 1; l < paths.n_labels; ++l) acc += mu[l] * row[l];
            sino.values()[r] = acc;
        }
    });
    return sino;
}

Sinogram project_mono(const VoxelVolume& labels, const MaterialDB& db,
                      const ScanGeometry& geom, double energy_keV) {
    const PathMatrix paths = compute_path_lengths(labels, geom);
    return project_mono(paths, labels, db, energy_keV);
}

namespace {

std::vector<double> effective_weights(const Spectrum& spectrum,
                                      const DetectorResponse& response) {
    spectrum.validate();
    response.validate();
    if (!response.same_grid(spectrum))
        throw ValidationError("project_poly: response grid does not match spectrum");
    std::vector<double> w(spectrum.bins());
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = spectrum.weights[i] * response.values[i];
        total += w[i];
    }
    if (!(total > 0.0))
        throw ValidationError("project_poly: spectrum and response have no overlap");
    return w;
}

}  // namespace

Sinogram project_poly(const VoxelVolume& labels, const MaterialDB& db,
                      const ScanGeometry& geom, const Spectrum& spectrum,
                      const DetectorResponse& response) {
    auto out = project_poly_family(labels, db, geom, {spectrum}, response);
    return std::move(out.front());
}

std::vector<Sinogram> project_poly_family(const VoxelVolume& labels, const MaterialDB& db,
                                          const ScanGeometry& geom,
                                          const std::vector<Spectrum>& spectra,
                                          const DetectorResponse& response) {
    const PathMatrix paths = compute_path_lengths(labels, geom);
    return project_poly_family(paths, labels, db, spectra, response);
}

std::vector<Sinogram> project_poly_family(const PathMatrix& paths, const VoxelVolume& labels,
                                          const MaterialDB& db,
                                          const std::vector<Spectrum>& spectra,
                                          const DetectorResponse& response) {
    if (spectra.empty()) throw ValidationError("project_poly: no spectra");
    for (const auto& s : spectra)
        if (!s.same_grid(spectra.front()))
            throw ValidationError("project_poly: spectra must share one energy grid");
    if (paths.n_labels != labels.materials.size())
        throw ValidationError("project_poly: path matrix does not match label volume");

    const ScanGeometry& geom = paths.geom;
    const std::size_t n_labels = paths.n_labels;
    const std::size_t n_bins = spectra.front().bins();

    // mu per (bin, label), shared by all spectra.
    std::vector<double> mu_bins(n_bins * n_labels, 0.0);
    for (std::size_t bin = 0; bin < n_bins; ++bin) {
        const auto mu = label_mu(labels, db, spectra.front().energy(bin));
        std::copy(mu.begin(), mu.end(), mu_bins.begin() + bin * n_labels);
    }

    std::vector<std::vector<double>> weights;
    std::vector<double> totals;
    weights.reserve(spectra.size());
    for (const auto& s : spectra) {
        weights.push_back(effective_weights(s, response));
        double total = 0.0;
        for (double w : weights.back()) total += w;
        totals.push_back(total);
    }

    std::vector<Sinogram> out;
    out.reserve(spectra.size());
    for (const auto& s : spectra) {
        Sinogram sino(geom, SinogramKind::poly);
        sino.provenance().emplace_back("spectrum_hash", s.hash_hex());
        out.push_back(std::move(sino));
    }

    // Per-bin transmission is spectrum-independent; compute it once per ray.
    // Raw weights and their totals are summed in the same bin order, so a
    // zero-path ray gives transmitted == total bitwise and chi == +0.0.
    const std::size_t n_rays = geom.ray_count();
    parallel_for(n_rays, [&](std::size_t b, std::size_t e) {
        std::vector<double> trans(n_bins);
        for (std::size_t r = b; r < e; ++r) {
            const double* t_row = &paths.t_cm[r * n_labels];
            for (std::size_t bin = 0; bin < n_bins; ++bin) {
                double line = 0.0;
                const double* mu = &mu_bins[bin * n_labels];
                for (std::size_t l = 1; l < n_labels; ++l) line += mu[l] * t_row[l];
                trans[bin] = std::exp(-line);
            }
            for (std::size_t k = 0; k < spectra.size(); ++k) {
                double transmitted = 0.0;
                const auto& w = weights[k];
                for (std::size_t bin = 0; bin < n_bins; ++bin)
                    transmitted += w[bin] * trans[bin];
                out[k].values()[r] = canonical_zero(-std::log(transmitted / totals[k]));
            }
        }
    });
    return out;
}

VoxelVolume attenuation_map(const VoxelVolume& labels, const MaterialDB& db,
                            double energy_keV) {
    labels.validate();
    if (labels.kind != VolumeKind::label)
        throw ValidationError("attenuation_map: need a label volume");
    const auto mu = label_mu(labels, db, energy_keV);
    VoxelVolume out;
    out.grid = labels.grid;
    out.kind = VolumeKind::attenuation;
    out.values.resize(labels.values.size());
    for (std::size_t i = 0; i < labels.values.size(); ++i)
        out.values[i] = mu[static_cast<std::size_t>(labels.values[i])];
    return out;
}

Sinogram add_poisson_noise(const Sinogram& sino, double photons_per_ray,
                           std::uint64_t seed) {
    if (!(photons_per_ray > 0.0))
        throw ValidationError("noise: photons_per_ray must be > 0");
    Sinogram out(sino.geom(), sino.kind(), sino.values());
    out.provenance() = sino.provenance();
    std::mt19937_64 rng(seed);
    for (double& chi : out.values()) {
        const double expected = photons_per_ray * std::exp(-chi);
        std::poisson_distribution<long long> draw(expected);
        const double count = std::max<long long>(1, draw(rng));
        chi = canonical_zero(-std::log(count / photons_per_ray));
    }
    return out;
}

}  // namespace bhc
