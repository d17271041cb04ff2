// Command-line front end: phantom rasterization, projection simulation, FBP
// reconstruction, attenuation table builds, the blind correction pipeline,
// and image-quality metrics. Every subcommand takes an optional JSON config
// (--config) whose keys mirror the long flag names with '-' replaced by '_';
// flags given on the command line win. Exit codes: 0 success, 2 bad
// configuration or inputs, 3 numeric failure; diagnostics on stderr carry the
// stage that failed.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "bhc/correction.hpp"
#include "bhc/io.hpp"
#include "bhc/metrics.hpp"

using nlohmann::json;

namespace {

const char* g_stage = "startup";

void stage(const char* s) { g_stage = s; }

std::string fmt(const char* f, ...) {
    va_list args;
    va_start(args, f);
    char buf[512];
    std::vsnprintf(buf, sizeof(buf), f, args);
    va_end(args);
    return buf;
}

// Applies config-file values to every option the command line left untouched,
// then rejects config keys that match no registered flag.
class Merge {
public:
    Merge(const CLI::App& cmd, const std::string& config_path) : cmd_(cmd) {
        if (config_path.empty()) return;
        path_ = config_path;
        try {
            cfg_ = json::parse(bhc::read_text(config_path));
        } catch (const json::exception& e) {
            throw bhc::ValidationError(config_path + ": " + e.what());
        }
        if (!cfg_.is_object())
            throw bhc::ValidationError(config_path + ": config root must be an object");
    }

    template <typename T>
    void opt(const std::string& flag, T& var) {
        std::string key = flag.substr(2);
        for (char& c : key)
            if (c == '-') c = '_';
        known_.insert(key);
        if (cfg_.is_null() || !cfg_.contains(key)) return;
        if (cmd_.get_option(flag)->count() > 0) return;
        try {
            cfg_.at(key).get_to(var);
        } catch (const json::exception&) {
            throw bhc::ValidationError(path_ + ": key '" + key + "' has the wrong type");
        }
    }

    void finish() const {
        if (cfg_.is_null()) return;
        for (const auto& [key, value] : cfg_.items())
            if (!known_.count(key))
                throw bhc::ValidationError(path_ + ": unknown config key '" + key + "'");
    }

private:
    const CLI::App& cmd_;
    std::string path_;
    json cfg_;
    std::set<std::string> known_;
};

void require(bool ok, const std::string& msg) {
    if (!ok) throw bhc::ValidationError(msg);
}

bhc::MaterialDB open_database(const std::string& dir) {
    return dir.empty() ? bhc::builtin_database() : bhc::load_database(dir);
}

bhc::FilterSpec parse_filter(const std::string& s) {
    const auto colon = s.rfind(':');
    require(colon != std::string::npos && colon > 0 && colon + 1 < s.size(),
            "filter '" + s + "' must be material:thickness_mm");
    bhc::FilterSpec f;
    f.material = s.substr(0, colon);
    try {
        std::size_t used = 0;
        f.thickness_mm = std::stod(s.substr(colon + 1), &used);
        require(used == s.size() - colon - 1, "filter '" + s + "' has a malformed thickness");
    } catch (const std::logic_error&) {
        throw bhc::ValidationError("filter '" + s + "' has a malformed thickness");
    }
    return f;
}

std::vector<bhc::FilterSpec> parse_filters(const std::vector<std::string>& specs) {
    std::vector<bhc::FilterSpec> out;
    out.reserve(specs.size());
    for (const auto& s : specs) out.push_back(parse_filter(s));
    return out;
}

// Source settings shared by simulate, lut, and correct. A spectrum CSV
// replaces the tube model and excludes the tube flags; filters stack on top
// of either source.
struct SpectrumArgs {
    double kvp = 150.0;
    double anode_z = 74.0;
    double de = 1.0;
    std::string spectrum_csv;
    std::vector<std::string> filters;
    bool energy_integrating = false;
};

void add_spectrum_flags(CLI::App& cmd, SpectrumArgs& a) {
    cmd.add_option("--kvp", a.kvp, "tube voltage in kV")->capture_default_str();
    cmd.add_option("--anode-z", a.anode_z, "anode atomic number for the tube model")
        ->capture_default_str();
    cmd.add_option("--de", a.de, "energy bin width in keV")->capture_default_str();
    cmd.add_option("--spectrum-csv", a.spectrum_csv,
                   "spectrum table (energy_keV,weight) replacing the tube model");
    cmd.add_option("--filter", a.filters,
                   "filtration as material:thickness_mm, repeatable");
    cmd.add_flag("--energy-integrating", a.energy_integrating,
                 "weight detector bins by energy instead of counting photons");
}

void merge_spectrum(Merge& m, const CLI::App& cmd, SpectrumArgs& a, bool& tube_given) {
    m.opt("--kvp", a.kvp);
    m.opt("--anode-z", a.anode_z);
    m.opt("--de", a.de);
    m.opt("--spectrum-csv", a.spectrum_csv);
    m.opt("--filter", a.filters);
    m.opt("--energy-integrating", a.energy_integrating);
    tube_given = cmd.get_option("--kvp")->count() > 0 ||
                 cmd.get_option("--anode-z")->count() > 0 ||
                 cmd.get_option("--de")->count() > 0;
    require(!(tube_given && !a.spectrum_csv.empty()),
            "spectrum file and tube parameters are mutually exclusive");
}

bhc::Spectrum source_spectrum(const SpectrumArgs& a) {
    if (!a.spectrum_csv.empty()) return bhc::load_spectrum_csv(a.spectrum_csv);
    return bhc::generate_tube_spectrum(a.kvp, a.anode_z, a.de);
}

bhc::Spectrum build_spectrum(const SpectrumArgs& a, const bhc::MaterialDB& db) {
    bhc::Spectrum s = source_spectrum(a);
    for (const auto& f : parse_filters(a.filters))
        s = bhc::filter_spectrum(s, db.at(f.material), f.thickness_mm);
    return s;
}

bhc::DetectorResponse build_response(const SpectrumArgs& a, const bhc::Spectrum& s) {
    return a.energy_integrating ? bhc::DetectorResponse::energy_integrating(s)
                                : bhc::DetectorResponse::flat(s);
}

struct GeometryArgs {
    int angles = 180;
    int pixels = 256;
    double pitch = 0.25;
};

void add_geometry_flags(CLI::App& cmd, GeometryArgs& a) {
    cmd.add_option("--angles", a.angles, "projection views over 180 degrees")
        ->capture_default_str();
    cmd.add_option("--pixels", a.pixels, "detector pixels per view")->capture_default_str();
    cmd.add_option("--pitch", a.pitch, "detector pixel pitch in mm")->capture_default_str();
}

void merge_geometry(Merge& m, GeometryArgs& a) {
    m.opt("--angles", a.angles);
    m.opt("--pixels", a.pixels);
    m.opt("--pitch", a.pitch);
}

bhc::ScanGeometry scan_geometry(const GeometryArgs& a) {
    const bhc::ScanGeometry geom{a.angles, a.pixels, a.pitch};
    geom.validate();
    return geom;
}

struct GridArgs {
    int nx = 256;
    int ny = 256;
    double voxel = 0.25;
};

void add_grid_flags(CLI::App& cmd, GridArgs& a) {
    cmd.add_option("--nx", a.nx, "grid width in voxels")->capture_default_str();
    cmd.add_option("--ny", a.ny, "grid height in voxels")->capture_default_str();
    cmd.add_option("--voxel", a.voxel, "voxel size in mm")->capture_default_str();
}

void merge_grid(Merge& m, GridArgs& a) {
    m.opt("--nx", a.nx);
    m.opt("--ny", a.ny);
    m.opt("--voxel", a.voxel);
}

bhc::GridSpec grid_spec(const GridArgs& a) {
    const bhc::GridSpec grid = bhc::GridSpec::centered(a.nx, a.ny, a.voxel);
    grid.validate();
    return grid;
}

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) out += ", ";
        out += p;
    }
    return out;
}

// ---------------------------------------------------------------------------

struct PhantomArgs {
    std::string config, spec, materials, out;
    GridArgs grid;
};

void add_phantom(CLI::App& app, PhantomArgs& a) {
    CLI::App* cmd = app.add_subcommand("phantom", "Rasterize a shape list into a label volume");
    cmd->add_option("--config", a.config, "JSON config with defaults for the flags below");
    cmd->add_option("--spec", a.spec, "phantom shape list (JSON), required");
    add_grid_flags(*cmd, a.grid);
    cmd->add_option("--materials", a.materials,
                    "material directory (default: built-in database)");
    cmd->add_option("--out", a.out, "output volume path, required");
}

int run_phantom(const CLI::App& cmd, PhantomArgs a) {
    stage("config");
    Merge m(cmd, a.config);
    m.opt("--spec", a.spec);
    merge_grid(m, a.grid);
    m.opt("--materials", a.materials);
    m.opt("--out", a.out);
    m.finish();
    require(!a.spec.empty(), "phantom: --spec is required");
    require(!a.out.empty(), "phantom: --out is required");
    const bhc::GridSpec grid = grid_spec(a.grid);

    stage("load");
    const bhc::MaterialDB db = open_database(a.materials);
    const bhc::PhantomSpec spec = bhc::load_phantom(a.spec);

    stage("rasterize");
    const bhc::VoxelVolume vol = bhc::rasterize_phantom(spec, grid, db);

    stage("write");
    bhc::save_volume(a.out, vol);
    std::cout << fmt("phantom: wrote %s (%dx%d, materials: %s)\n", a.out.c_str(), grid.nx,
                     grid.ny, join(vol.materials).c_str());
    return 0;
}

struct SimulateArgs {
    std::string config, volume, mode = "poly", materials, out;
    double energy = 0.0;
    SpectrumArgs spectrum;
    GeometryArgs geometry;
    double noise_photons = 0.0;
    std::uint64_t seed = 1;
};

void add_simulate(CLI::App& app, SimulateArgs& a) {
    CLI::App* cmd = app.add_subcommand("simulate", "Project a label volume into a sinogram");
    cmd->add_option("--config", a.config, "JSON config with defaults for the flags below");
    cmd->add_option("--volume", a.volume, "label volume to project, required");
    cmd->add_option("--mode", a.mode, "projection model: poly or mono")->capture_default_str();
    cmd->add_option("--energy", a.energy, "energy in keV (mono mode only)");
    add_spectrum_flags(*cmd, a.spectrum);
    add_geometry_flags(*cmd, a.geometry);
    cmd->add_option("--noise-photons", a.noise_photons,
                    "Poisson noise level as photons per unattenuated ray (0 = off)")
        ->capture_default_str();
    cmd->add_option("--seed", a.seed, "noise RNG seed")->capture_default_str();
    cmd->add_option("--materials", a.materials,
                    "material directory (default: built-in database)");
    cmd->add_option("--out", a.out, "output sinogram path, required");
}

int run_simulate(const CLI::App& cmd, SimulateArgs& a) {
    stage("config");
    Merge m(cmd, a.config);
    m.opt("--volume", a.volume);
    m.opt("--mode", a.mode);
    m.opt("--energy", a.energy);
    bool tube_given = false;
    merge_spectrum(m, cmd, a.spectrum, tube_given);
    merge_geometry(m, a.geometry);
    m.opt("--noise-photons", a.noise_photons);
    m.opt("--seed", a.seed);
    m.opt("--materials", a.materials);
    m.opt("--out", a.out);
    m.finish();
    require(!a.volume.empty(), "simulate: --volume is required");
    require(!a.out.empty(), "simulate: --out is required");
    require(a.mode == "poly" || a.mode == "mono",
            "simulate: --mode must be 'poly' or 'mono'");
    const bool spectral_given = tube_given || !a.spectrum.spectrum_csv.empty() ||
                                !a.spectrum.filters.empty() ||
                                cmd.get_option("--energy-integrating")->count() > 0;
    if (a.mode == "mono") {
        require(a.energy > 0.0, "simulate: mono mode needs --energy");
        require(a.energy >= 10.0 && a.energy <= 200.0,
                "simulate: --energy must lie in [10, 200] keV");
        require(!spectral_given, "simulate: spectrum settings apply to poly mode only");
    } else {
        require(cmd.get_option("--energy")->count() == 0 && a.energy == 0.0,
                "simulate: --energy applies to mono mode only");
    }
    require(a.noise_photons >= 0.0, "simulate: --noise-photons must be >= 0");
    const bhc::ScanGeometry geom = scan_geometry(a.geometry);

    stage("load");
    const bhc::MaterialDB db = open_database(a.materials);
    const bhc::VoxelVolume vol = bhc::load_volume(a.volume);
    require(vol.kind == bhc::VolumeKind::label,
            "simulate: " + a.volume + " is not a label volume");

    stage("project");
    bhc::Sinogram sino = [&] {
        if (a.mode == "mono") return bhc::project_mono(vol, db, geom, a.energy);
        const bhc::Spectrum spectrum = build_spectrum(a.spectrum, db);
        return bhc::project_poly(vol, db, geom, spectrum, build_response(a.spectrum, spectrum));
    }();
    if (a.noise_photons > 0.0)
        sino = bhc::add_poisson_noise(sino, a.noise_photons, a.seed);

    stage("write");
    bhc::save_sinogram(a.out, sino);
    std::cout << fmt("simulate: wrote %s (%d views x %d pixels, kind %s)\n", a.out.c_str(),
                     geom.n_angles, geom.n_detector_pixels, bhc::to_string(sino.kind()));
    return 0;
}

struct ReconstructArgs {
    std::string config, sinogram, window = "ramlak", out, png;
    GridArgs grid;
    double fov = 0.0;
    double png_lo = 0.0, png_hi = 0.0;
};

void add_reconstruct(CLI::App& app, ReconstructArgs& a) {
    CLI::App* cmd = app.add_subcommand("reconstruct", "Filtered backprojection of a sinogram");
    cmd->add_option("--config", a.config, "JSON config with defaults for the flags below");
    cmd->add_option("--sinogram", a.sinogram, "input sinogram, required");
    add_grid_flags(*cmd, a.grid);
    cmd->add_option("--window", a.window, "filter window: ramlak or hann")
        ->capture_default_str();
    cmd->add_option("--fov", a.fov, "support mask radius in mm (0 = inscribed circle)")
        ->capture_default_str();
    cmd->add_option("--out", a.out, "output image path, required");
    cmd->add_option("--png", a.png, "also write a 16-bit grayscale PNG here");
    cmd->add_option("--png-lo", a.png_lo, "PNG window lower bound")->capture_default_str();
    cmd->add_option("--png-hi", a.png_hi,
                    "PNG window upper bound (lo == hi auto-windows to the extrema)")
        ->capture_default_str();
}

int run_reconstruct(const CLI::App& cmd, ReconstructArgs a) {
    stage("config");
    Merge m(cmd, a.config);
    m.opt("--sinogram", a.sinogram);
    merge_grid(m, a.grid);
    m.opt("--window", a.window);
    m.opt("--fov", a.fov);
    m.opt("--out", a.out);
    m.opt("--png", a.png);
    m.opt("--png-lo", a.png_lo);
    m.opt("--png-hi", a.png_hi);
    m.finish();
    require(!a.sinogram.empty(), "reconstruct: --sinogram is required");
    require(!a.out.empty(), "reconstruct: --out is required");
    require(a.fov >= 0.0, "reconstruct: --fov must be >= 0");
    bhc::FbpOptions opts;
    opts.window = bhc::filter_window_from_string(a.window);
    if (a.fov > 0.0) opts.fov_radius_mm = a.fov;
    const bhc::GridSpec grid = grid_spec(a.grid);

    stage("load");
    const bhc::Sinogram sino = bhc::load_sinogram(a.sinogram);

    stage("reconstruct");
    const bhc::ReconImage img = bhc::fbp(sino, grid, opts);

    stage("write");
    bhc::save_image(a.out, img);
    if (!a.png.empty()) bhc::write_png16(a.png, img, a.png_lo, a.png_hi);
    std::cout << fmt("reconstruct: wrote %s (%dx%d)\n", a.out.c_str(), grid.nx, grid.ny);
    return 0;
}

struct LutArgs {
    std::string config, materials, out;
    SpectrumArgs spectrum;
    GeometryArgs geometry;
    double diameter = 20.0;
};

void add_lut(CLI::App& app, LutArgs& a) {
    CLI::App* cmd = app.add_subcommand(
        "lut", "Build the per-material polychromatic attenuation table");
    cmd->add_option("--config", a.config, "JSON config with defaults for the flags below");
    add_spectrum_flags(*cmd, a.spectrum);
    add_geometry_flags(*cmd, a.geometry);
    cmd->add_option("--diameter", a.diameter, "calibration cylinder diameter in mm")
        ->capture_default_str();
    cmd->add_option("--materials", a.materials,
                    "material directory (default: built-in database)");
    cmd->add_option("--out", a.out, "output table path, required");
}

int run_lut(const CLI::App& cmd, LutArgs& a) {
    stage("config");
    Merge m(cmd, a.config);
    bool tube_given = false;
    merge_spectrum(m, cmd, a.spectrum, tube_given);
    merge_geometry(m, a.geometry);
    m.opt("--diameter", a.diameter);
    m.opt("--materials", a.materials);
    m.opt("--out", a.out);
    m.finish();
    require(!a.out.empty(), "lut: --out is required");
    require(a.diameter > 0.0, "lut: --diameter must be positive");
    const bhc::ScanGeometry geom = scan_geometry(a.geometry);

    stage("load");
    const bhc::MaterialDB db = open_database(a.materials);
    const bhc::Spectrum spectrum = build_spectrum(a.spectrum, db);

    stage("calibrate");
    const bhc::PolyLut lut =
        bhc::build_lut(db, spectrum, build_response(a.spectrum, spectrum), geom, a.diameter);

    stage("write");
    bhc::save_lut(a.out, lut);
    std::cout << fmt("lut: wrote %s (%zu entries, setting %s)\n", a.out.c_str(),
                     lut.entries.size(), lut.setting_id.c_str());
    return 0;
}

struct CorrectArgs {
    std::string config, sinogram, out_dir, window = "ramlak", lut, labels, materials;
    SpectrumArgs spectrum;
    std::vector<std::string> candidate_filters;
    GridArgs grid;
    double fov = 0.0;
    int classes = 3;
    int bins = 256;
    double calib_diameter = 20.0;
    std::vector<std::string> forced;
    bool nonnegative = false;
    int passes = 1;
    bool intensity_input = false;
    double i0 = 0.0;
    bool png = false;
    double png_lo = 0.0, png_hi = 0.0;
    bool verbose = false;
};

void add_correct(CLI::App& app, CorrectArgs& a) {
    CLI::App* cmd = app.add_subcommand(
        "correct", "Blind multi-material correction of a measured sinogram");
    cmd->add_option("--config", a.config, "JSON config with defaults for the flags below");
    cmd->add_option("--sinogram", a.sinogram, "measured sinogram, required");
    add_spectrum_flags(*cmd, a.spectrum);
    cmd->add_option("--candidate-filter", a.candidate_filters,
                    "candidate filtration as material:thickness_mm, repeatable "
                    "(default: built-in family)");
    add_grid_flags(*cmd, a.grid);
    cmd->add_option("--window", a.window, "filter window: ramlak or hann")
        ->capture_default_str();
    cmd->add_option("--fov", a.fov, "support mask radius in mm (0 = inscribed circle)")
        ->capture_default_str();
    cmd->add_option("--classes", a.classes, "segmentation classes including background")
        ->capture_default_str();
    cmd->add_option("--bins", a.bins, "histogram bins for thresholding")
        ->capture_default_str();
    cmd->add_option("--lut", a.lut, "preload an attenuation table instead of calibrating");
    cmd->add_option("--calib-diameter", a.calib_diameter,
                    "calibration cylinder diameter in mm when building the table")
        ->capture_default_str();
    cmd->add_option("--material", a.forced,
                    "force the material of each foreground class in ascending order, "
                    "repeatable");
    cmd->add_option("--labels", a.labels,
                    "inject a known label volume instead of blind segmentation");
    cmd->add_flag("--nonnegative", a.nonnegative, "constrain the fit weights to be >= 0");
    cmd->add_option("--passes", a.passes, "segmentation/correction passes")
        ->capture_default_str();
    cmd->add_flag("--intensity-input", a.intensity_input,
                  "input holds intensities; normalize to attenuation first");
    cmd->add_option("--i0", a.i0, "unattenuated intensity (0 = sinogram maximum)")
        ->capture_default_str();
    cmd->add_option("--materials", a.materials,
                    "material directory (default: built-in database)");
    cmd->add_flag("--png", a.png, "also write corrected/uncorrected PNGs");
    cmd->add_option("--png-lo", a.png_lo, "PNG window lower bound")->capture_default_str();
    cmd->add_option("--png-hi", a.png_hi,
                    "PNG window upper bound (lo == hi shares the uncorrected extrema)")
        ->capture_default_str();
    cmd->add_flag("--verbose", a.verbose, "print stage timings to stderr");
    cmd->add_option("--out-dir", a.out_dir, "output directory, required");
}

int run_correct(const CLI::App& cmd, CorrectArgs& a) {
    stage("config");
    Merge m(cmd, a.config);
    m.opt("--sinogram", a.sinogram);
    bool tube_given = false;
    merge_spectrum(m, cmd, a.spectrum, tube_given);
    m.opt("--candidate-filter", a.candidate_filters);
    merge_grid(m, a.grid);
    m.opt("--window", a.window);
    m.opt("--fov", a.fov);
    m.opt("--classes", a.classes);
    m.opt("--bins", a.bins);
    m.opt("--lut", a.lut);
    m.opt("--calib-diameter", a.calib_diameter);
    m.opt("--material", a.forced);
    m.opt("--labels", a.labels);
    m.opt("--nonnegative", a.nonnegative);
    m.opt("--passes", a.passes);
    m.opt("--intensity-input", a.intensity_input);
    m.opt("--i0", a.i0);
    m.opt("--materials", a.materials);
    m.opt("--png", a.png);
    m.opt("--png-lo", a.png_lo);
    m.opt("--png-hi", a.png_hi);
    m.opt("--verbose", a.verbose);
    m.opt("--out-dir", a.out_dir);
    m.finish();
    require(!a.sinogram.empty(), "correct: --sinogram is required");
    require(!a.out_dir.empty(), "correct: --out-dir is required");
    require(a.fov >= 0.0, "correct: --fov must be >= 0");
    require(a.i0 >= 0.0, "correct: --i0 must be >= 0");
    if (!a.labels.empty()) {
        require(a.passes == 1, "correct: --labels implies a single pass");
        require(!a.intensity_input,
                "correct: --labels needs attenuation-domain input");
    }

    bhc::PipelineConfig cfg;
    cfg.kvp = a.spectrum.kvp;
    cfg.anode_z = a.spectrum.anode_z;
    cfg.de_keV = a.spectrum.de;
    cfg.base_filters = parse_filters(a.spectrum.filters);
    cfg.energy_integrating_response = a.spectrum.energy_integrating;
    cfg.candidate_filters = parse_filters(a.candidate_filters);
    cfg.nx = a.grid.nx;
    cfg.ny = a.grid.ny;
    cfg.voxel_size_mm = a.grid.voxel;
    cfg.window = bhc::filter_window_from_string(a.window);
    if (a.fov > 0.0) cfg.fov_radius_mm = a.fov;
    cfg.n_classes = a.classes;
    cfg.histogram_bins = a.bins;
    cfg.calib_diameter_mm = a.calib_diameter;
    cfg.forced_materials = a.forced;
    cfg.nonnegative = a.nonnegative;
    cfg.passes = a.passes;
    cfg.intensity_input = a.intensity_input;
    if (a.i0 > 0.0) cfg.i0 = a.i0;

    stage("load");
    const bhc::MaterialDB db = open_database(a.materials);
    const bhc::Sinogram loaded = bhc::load_sinogram(a.sinogram);
    // Simulated projections arrive as kind mono/poly; the pipeline treats its
    // input as the measurement either way.
    bhc::Sinogram measured(loaded.geom(),
                           a.intensity_input ? loaded.kind() : bhc::SinogramKind::measured,
                           loaded.values());
    measured.provenance() = loaded.provenance();
    if (!a.lut.empty()) cfg.lut = bhc::load_lut(a.lut);

    stage("pipeline");
    bhc::CorrectionResult result = [&] {
        const bool custom_spectrum = !a.spectrum.spectrum_csv.empty();
        if (a.labels.empty() && !custom_spectrum)
            return bhc::correct_pipeline(measured, cfg, db);
        bhc::PipelineSetup setup =
            custom_spectrum
                ? bhc::make_pipeline_setup(bhc::load_spectrum_csv(a.spectrum.spectrum_csv),
                                           cfg, db, measured.geom())
                : bhc::make_pipeline_setup(cfg, db, measured.geom());
        if (a.labels.empty()) return bhc::correct_pipeline(measured, cfg, db, setup);

        const bhc::VoxelVolume labels = bhc::load_volume(a.labels);
        require(labels.kind == bhc::VolumeKind::label,
                "correct: " + a.labels + " is not a label volume");
        const bhc::GridSpec grid = bhc::GridSpec::centered(cfg.nx, cfg.ny, cfg.voxel_size_mm);
        require(labels.grid == grid,
                "correct: label volume grid does not match the reconstruction grid");
        const int n_fg = static_cast<int>(labels.materials.size()) - 1;
        require(n_fg >= 1, "correct: label volume has no foreground classes");
        cfg.n_classes = n_fg + 1;

        const bhc::FbpOptions opts{cfg.window, cfg.fov_radius_mm};
        const bhc::ReconImage uncorrected = bhc::fbp(measured, grid, opts);
        bhc::SegmentationResult seg;
        seg.background.assign(labels.values.size(), 0);
        for (int c = 0; c < n_fg; ++c) {
            bhc::VoxelVolume v;
            v.grid = grid;
            v.kind = bhc::VolumeKind::attenuation;
            v.values.assign(labels.values.size(), 0.0);
            seg.class_volumes.push_back(std::move(v));
        }
        for (std::size_t i = 0; i < labels.values.size(); ++i) {
            const int lab = static_cast<int>(labels.values[i]);
            if (lab == 0)
                seg.background[i] = 1;
            else
                seg.class_volumes[lab - 1].values[i] = uncorrected.values[i];
        }
        return bhc::correct_from_segmentation(measured, uncorrected, seg, setup, cfg, db);
    }();

    stage("write");
    if (a.verbose)
        for (const auto& [name, ms] : result.report.timings_ms)
            std::cerr << fmt("correct: %s %.1f ms\n", name.c_str(), ms);
    // Wall-clock timings stay off disk so a rerun reproduces every output
    // byte for byte.
    result.report.timings_ms.clear();
    const std::string dir = a.out_dir + "/";
    bhc::save_image(dir + "uncorrected.img", result.uncorrected);
    bhc::save_image(dir + "corrected.img", result.corrected);
    bhc::save_volume(dir + "labels.vol", result.labels);
    bhc::save_sinogram(dir + "corrected.sino", result.corrected_sino);
    bhc::save_report(dir + "report.json", result.report);
    if (a.png) {
        double lo = a.png_lo, hi = a.png_hi;
        if (lo == hi) {
            lo = result.uncorrected.values.front();
            hi = lo;
            for (double v : result.uncorrected.values) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        bhc::write_png16(dir + "uncorrected.png", result.uncorrected, lo, hi);
        bhc::write_png16(dir + "corrected.png", result.corrected, lo, hi);
    }

    for (const auto& c : result.report.classes)
        std::cout << fmt("correct: class %d: mu %.6g /cm -> %s%s\n", c.class_index,
                         c.measured_mu_per_cm, c.chosen.c_str(), c.forced ? " (forced)" : "");
    std::cout << fmt("correct: selected energy %g keV, fit residual rms %.6g\n",
                     result.report.selected_energy_keV, result.report.lse_residual_rms);
    std::cout << fmt("correct: rms vs mono %.6g -> %.6g\n",
                     result.report.rms_uncorrected_vs_mono,
                     result.report.rms_corrected_vs_mono);
    std::cout << fmt("correct: wrote %s\n", a.out_dir.c_str());
    return 0;
}

struct MetricsArgs {
    std::string config, image, reference, rois, labels, out;
    std::string center_roi = "center", edge_roi = "edge", streak_roi = "streak";
    double margin = 1.5;
    std::string profile, profile_out;
    int profile_samples = 0;
};

void add_metrics(CLI::App& app, MetricsArgs& a) {
    CLI::App* cmd = app.add_subcommand(
        "metrics", "Cupping, streak, RMS, and plateau statistics of an image");
    cmd->add_option("--config", a.config, "JSON config with defaults for the flags below");
    cmd->add_option("--image", a.image, "image to evaluate, required");
    cmd->add_option("--reference", a.reference, "reference image for the RMS distance");
    cmd->add_option("--rois", a.rois, "ROI list (JSON) for cupping and streak");
    cmd->add_option("--center-roi", a.center_roi, "ROI name for the cupping center")
        ->capture_default_str();
    cmd->add_option("--edge-roi", a.edge_roi, "ROI name for the cupping edge")
        ->capture_default_str();
    cmd->add_option("--streak-roi", a.streak_roi, "ROI name for the streak region")
        ->capture_default_str();
    cmd->add_option("--labels", a.labels, "label volume for per-material plateau stats");
    cmd->add_option("--margin", a.margin, "plateau erosion margin in mm")
        ->capture_default_str();
    cmd->add_option("--profile", a.profile, "profile endpoints as x0,y0,x1,y1 in mm");
    cmd->add_option("--profile-samples", a.profile_samples,
                    "profile sample count (0 = image width)")
        ->capture_default_str();
    cmd->add_option("--profile-out", a.profile_out, "profile CSV path");
    cmd->add_option("--out", a.out, "metrics JSON path, required");
}

const bhc::Roi* find_named(const std::vector<bhc::Roi>& rois, const std::string& name) {
    for (const auto& r : rois)
        if (r.name == name) return &r;
    return nullptr;
}

void check_roi_bounds(const bhc::Roi& roi, const bhc::GridSpec& g) {
    double rx = 0.0, ry = 0.0;
    switch (roi.type) {
        case bhc::RoiType::disc: rx = ry = roi.radius_mm; break;
        case bhc::RoiType::annulus: rx = ry = roi.r_outer_mm; break;
        case bhc::RoiType::rect:
            rx = roi.half_extents_mm.x;
            ry = roi.half_extents_mm.y;
            break;
    }
    const double x0 = g.origin_mm.x, y0 = g.origin_mm.y;
    const double x1 = x0 + g.nx * g.voxel_size_mm, y1 = y0 + g.ny * g.voxel_size_mm;
    const bool inside = roi.center_mm.x - rx >= x0 - 1e-9 &&
                        roi.center_mm.x + rx <= x1 + 1e-9 &&
                        roi.center_mm.y - ry >= y0 - 1e-9 && roi.center_mm.y + ry <= y1 + 1e-9;
    if (!inside)
        throw bhc::ValidationError("metrics: ROI '" + roi.name +
                                   "' extends outside the image");
}

int run_metrics(const CLI::App& cmd, MetricsArgs& a) {
    stage("config");
    Merge m(cmd, a.config);
    m.opt("--image", a.image);
    m.opt("--reference", a.reference);
    m.opt("--rois", a.rois);
    m.opt("--center-roi", a.center_roi);
    m.opt("--edge-roi", a.edge_roi);
    m.opt("--streak-roi", a.streak_roi);
    m.opt("--labels", a.labels);
    m.opt("--margin", a.margin);
    m.opt("--profile", a.profile);
    m.opt("--profile-samples", a.profile_samples);
    m.opt("--profile-out", a.profile_out);
    m.opt("--out", a.out);
    m.finish();
    require(!a.image.empty(), "metrics: --image is required");
    require(!a.out.empty(), "metrics: --out is required");
    require(a.margin >= 0.0, "metrics: --margin must be >= 0");
    require(a.profile.empty() == a.profile_out.empty(),
            "metrics: --profile and --profile-out go together");
    require(a.profile_samples >= 0, "metrics: --profile-samples must be >= 0");

    stage("load");
    const bhc::ReconImage img = bhc::load_image(a.image);
    std::vector<bhc::Roi> rois;
    if (!a.rois.empty()) rois = bhc::load_rois(a.rois);
    for (const auto& roi : rois) check_roi_bounds(roi, img.grid);

    stage("metrics");
    json doc = json::object();
    const bhc::Roi* center = find_named(rois, a.center_roi);
    const bhc::Roi* edge = find_named(rois, a.edge_roi);
    const bhc::Roi* streak = find_named(rois, a.streak_roi);
    const auto missing = [&](const char* flag, const std::string& name) {
        return std::string("metrics: ") + flag + " '" + name + "' not found in " + a.rois;
    };
    if (cmd.get_option("--center-roi")->count() > 0)
        require(center != nullptr, missing("--center-roi", a.center_roi));
    if (cmd.get_option("--edge-roi")->count() > 0)
        require(edge != nullptr, missing("--edge-roi", a.edge_roi));
    if (cmd.get_option("--streak-roi")->count() > 0)
        require(streak != nullptr, missing("--streak-roi", a.streak_roi));

    if (center && edge) {
        const double cupping = bhc::cupping_percent(img, *center, *edge);
        if (!(cupping >= -100.0 && cupping <= 100.0))
            throw bhc::NumericError(
                fmt("metrics: cupping %.6g%% is outside [-100, 100]; the edge region is "
                    "degenerate",
                    cupping));
        doc["cupping_percent"] = cupping;
    }
    if (streak) doc["streak_index"] = bhc::streak_index(img, *streak);
    if (!a.reference.empty()) {
        const bhc::ReconImage ref = bhc::load_image(a.reference);
        doc["rms_vs_reference"] = bhc::rms_difference(img, ref);
    }
    if (!a.labels.empty()) {
        const bhc::VoxelVolume labels = bhc::load_volume(a.labels);
        require(labels.kind == bhc::VolumeKind::label,
                "metrics: " + a.labels + " is not a label volume");
        require(labels.grid == img.grid,
                "metrics: label volume grid does not match the image");
        json plateaus = json::array();
        for (const auto& roi : bhc::plateau_rois(labels, a.margin)) {
            if (roi.n == 0) continue;
            const bhc::RoiStats stats = bhc::masked_stats(img, roi.mask);
            plateaus.push_back(json{{"label", roi.label},
                                    {"material", roi.material},
                                    {"mean", stats.mean},
                                    {"stddev", stats.stddev},
                                    {"n", stats.n}});
        }
        doc["plateaus"] = std::move(plateaus);
    }

    std::vector<bhc::ProfileSample> profile;
    if (!a.profile.empty()) {
        double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
        char tail = 0;
        require(std::sscanf(a.profile.c_str(), "%lf,%lf,%lf,%lf%c", &x0, &y0, &x1, &y1,
                            &tail) == 4,
                "metrics: --profile must be x0,y0,x1,y1");
        const int n = a.profile_samples > 0 ? a.profile_samples : img.grid.nx;
        profile = bhc::profile_line(img, {x0, y0}, {x1, y1}, n);
    }

    stage("write");
    bhc::write_text_atomic(a.out, doc.dump(2) + "\n");
    if (!profile.empty()) bhc::save_profile_csv(a.profile_out, profile);
    for (const auto& [key, value] : doc.items())
        if (value.is_number())
            std::cout << fmt("metrics: %s %.6g\n", key.c_str(), value.get<double>());
    std::cout << fmt("metrics: wrote %s\n", a.out.c_str());
    return 0;
}

unsigned threads_from_env() {
    const char* env = std::getenv("BHC_THREADS");
    if (env == nullptr || *env == '\0') return 0;
    char* end = nullptr;
    const unsigned long n = std::strtoul(env, &end, 10);
    if (end == env || *end != '\0' || n > 4096)
        throw bhc::ValidationError("BHC_THREADS must be an integer in [0, 4096]");
    return static_cast<unsigned>(n);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Beam hardening simulation and blind correction toolkit"};
    app.require_subcommand(1);

    PhantomArgs phantom_args;
    SimulateArgs simulate_args;
    ReconstructArgs reconstruct_args;
    LutArgs lut_args;
    CorrectArgs correct_args;
    MetricsArgs metrics_args;

    add_phantom(app, phantom_args);
    add_simulate(app, simulate_args);
    add_reconstruct(app, reconstruct_args);
    add_lut(app, lut_args);
    add_correct(app, correct_args);
    add_metrics(app, metrics_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "bhct: [cli] " << e.what() << "\n";
        return 2;
    }

    const CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    try {
        stage("env");
        bhc::set_thread_count(threads_from_env());
        if (name == "phantom") return run_phantom(*sub, phantom_args);
        if (name == "simulate") return run_simulate(*sub, simulate_args);
        if (name == "reconstruct") return run_reconstruct(*sub, reconstruct_args);
        if (name == "lut") return run_lut(*sub, lut_args);
        if (name == "correct") return run_correct(*sub, correct_args);
        return run_metrics(*sub, metrics_args);
    } catch (const bhc::ValidationError& e) {
        std::cerr << "bhct " << name << ": [" << g_stage << "] " << e.what() << "\n";
        return 2;
    } catch (const bhc::NumericError& e) {
        std::cerr << "bhct " << name << ": [" << g_stage << "] " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "bhct " << name << ": [" << g_stage << "] " << e.what() << "\n";
        return 3;
    }
}
