// Python bindings: numpy in, numpy out. Volumes and images are 2D arrays
// indexed [row, column] = [iy, ix]; sinograms are [view, pixel]. Heavy
// lifting stays in the C++ core; this layer only converts containers.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bhc/correction.hpp"
#include "bhc/io.hpp"
#include "bhc/metrics.hpp"

namespace py = pybind11;

namespace {

bhc::GridSpec make_grid(int nx, int ny, double voxel_size_mm) {
    const bhc::GridSpec grid = bhc::GridSpec::centered(nx, ny, voxel_size_mm);
    grid.validate();
    return grid;
}

bhc::VoxelVolume labels_from_numpy(const py::array_t<std::int32_t>& labels,
                                   const std::vector<std::string>& materials,
                                   double voxel_size_mm) {
    if (labels.ndim() != 2) throw bhc::ValidationError("labels must be a 2D array");
    const int ny = static_cast<int>(labels.shape(0));
    const int nx = static_cast<int>(labels.shape(1));
    bhc::VoxelVolume vol;
    vol.grid = make_grid(nx, ny, voxel_size_mm);
    vol.kind = bhc::VolumeKind::label;
    vol.materials = materials;
    vol.values.resize(vol.grid.voxel_count());
    const auto view = labels.unchecked<2>();
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix)
            vol.values[static_cast<std::size_t>(iy) * nx + ix] = view(iy, ix);
    vol.validate();
    return vol;
}

py::array_t<std::int32_t> labels_to_numpy(const bhc::VoxelVolume& vol) {
    py::array_t<std::int32_t> out({vol.grid.ny, vol.grid.nx});
    auto view = out.mutable_unchecked<2>();
    for (int iy = 0; iy < vol.grid.ny; ++iy)
        for (int ix = 0; ix < vol.grid.nx; ++ix)
            view(iy, ix) = static_cast<std::int32_t>(vol.at(ix, iy));
    return out;
}

py::array_t<double> image_to_numpy(const bhc::ReconImage& img) {
    py::array_t<double> out({img.grid.ny, img.grid.nx});
    auto view = out.mutable_unchecked<2>();
    for (int iy = 0; iy < img.grid.ny; ++iy)
        for (int ix = 0; ix < img.grid.nx; ++ix) view(iy, ix) = img.at(ix, iy);
    return out;
}

bhc::Sinogram sinogram_from_numpy(const py::array_t<double>& sino, double pitch_mm,
                                  bhc::SinogramKind kind) {
    if (sino.ndim() != 2) throw bhc::ValidationError("sinogram must be a 2D array");
    const int n_angles = static_cast<int>(sino.shape(0));
    const int n_pixels = static_cast<int>(sino.shape(1));
    const bhc::ScanGeometry geom{n_angles, n_pixels, pitch_mm};
    geom.validate();
    std::vector<double> values(geom.ray_count());
    const auto view = sino.unchecked<2>();
    for (int v = 0; v < n_angles; ++v)
        for (int d = 0; d < n_pixels; ++d)
            values[static_cast<std::size_t>(v) * n_pixels + d] = view(v, d);
    return bhc::Sinogram(geom, kind, std::move(values));
}

py::array_t<double> sinogram_to_numpy(const bhc::Sinogram& sino) {
    const auto& geom = sino.geom();
    py::array_t<double> out({geom.n_angles, geom.n_detector_pixels});
    auto view = out.mutable_unchecked<2>();
    for (int v = 0; v < geom.n_angles; ++v)
        for (int d = 0; d < geom.n_detector_pixels; ++d) view(v, d) = sino.at(v, d);
    return out;
}

std::vector<bhc::FilterSpec> filters_from(
    const std::vector<std::pair<std::string, double>>& filters) {
    std::vector<bhc::FilterSpec> out;
    out.reserve(filters.size());
    for (const auto& [material, mm] : filters) out.push_back({material, mm});
    return out;
}

py::dict report_to_dict(const bhc::CorrectionReport& report) {
    py::list classes;
    for (const auto& c : report.classes) {
        py::dict d;
        d["class_index"] = c.class_index;
        d["measured_mu_per_cm"] = c.measured_mu_per_cm;
        d["initial"] = c.initial;
        d["chosen"] = c.chosen;
        d["forced"] = c.forced;
        classes.append(d);
    }
    py::dict out;
    out["classes"] = classes;
    out["thresholds"] = report.thresholds;
    out["selected_energy_keV"] = report.selected_energy_keV;
    out["coefficients"] = report.coefficients;
    out["lse_residual_rms"] = report.lse_residual_rms;
    out["measured_rms"] = report.measured_rms;
    out["rms_uncorrected_vs_mono"] = report.rms_uncorrected_vs_mono;
    out["rms_corrected_vs_mono"] = report.rms_corrected_vs_mono;
    out["lut_setting_id"] = report.lut_setting_id;
    out["passes"] = report.passes;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Beam hardening simulation and blind correction toolkit";

    py::register_exception<bhc::ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<bhc::NumericError>(m, "NumericError", PyExc_RuntimeError);

    py::class_<bhc::MaterialDB>(m, "MaterialDB")
        .def("names", &bhc::MaterialDB::names)
        .def("contains", &bhc::MaterialDB::contains, py::arg("name"))
        .def(
            "linear_attenuation",
            [](const bhc::MaterialDB& db, const std::string& name, double energy_keV) {
                return db.at(name).linear_attenuation(energy_keV);
            },
            py::arg("name"), py::arg("energy_keV"),
            "Linear attenuation in 1/cm at one energy.")
        .def("__contains__", &bhc::MaterialDB::contains)
        .def("__len__", &bhc::MaterialDB::size);

    m.def("default_database", &bhc::builtin_database, "The built-in material tables.");
    m.def("load_database", &bhc::load_database, py::arg("directory"),
          "Material tables from a directory of CSV files plus a density manifest.");

    py::class_<bhc::Spectrum>(m, "Spectrum")
        .def_readonly("e_min_keV", &bhc::Spectrum::e_min_keV)
        .def_readonly("de_keV", &bhc::Spectrum::de_keV)
        .def_property_readonly(
            "weights",
            [](const bhc::Spectrum& s) { return py::array_t<double>(py::cast(s.weights)); })
        .def_property_readonly("energies",
                               [](const bhc::Spectrum& s) {
                                   std::vector<double> e(s.bins());
                                   for (std::size_t i = 0; i < s.bins(); ++i)
                                       e[i] = s.energy(i);
                                   return py::array_t<double>(py::cast(e));
                               })
        .def("mean_energy_keV", &bhc::mean_energy)
        .def("__len__", &bhc::Spectrum::bins);

    m.def("tube_spectrum", &bhc::generate_tube_spectrum, py::arg("kvp"), py::arg("anode_z"),
          py::arg("de_keV") = 1.0, "Kramers continuum on [10, kvp] keV.");
    m.def(
        "filter_spectrum",
        [](const bhc::Spectrum& s, const std::string& material, double thickness_mm,
           const bhc::MaterialDB& db) {
            return bhc::filter_spectrum(s, db.at(material), thickness_mm);
        },
        py::arg("spectrum"), py::arg("material"), py::arg("thickness_mm"), py::arg("db"),
        "Attenuate a spectrum by a filter plate.");

    m.def(
        "rasterize_phantom",
        [](const std::string& spec_path, int nx, int ny, double voxel_size_mm,
           const bhc::MaterialDB& db) {
            const bhc::PhantomSpec spec = bhc::load_phantom(spec_path);
            const bhc::VoxelVolume vol =
                bhc::rasterize_phantom(spec, make_grid(nx, ny, voxel_size_mm), db);
            return py::make_tuple(labels_to_numpy(vol), vol.materials);
        },
        py::arg("spec_path"), py::arg("nx"), py::arg("ny"), py::arg("voxel_size_mm"),
        py::arg("db"),
        "Voxel-center rasterization of a shape list; returns (labels, materials).");

    m.def(
        "project_mono",
        [](const py::array_t<std::int32_t>& labels, const std::vector<std::string>& materials,
           double voxel_size_mm, int n_angles, int n_pixels, double pitch_mm,
           double energy_keV, const bhc::MaterialDB& db) {
            const bhc::VoxelVolume vol = labels_from_numpy(labels, materials, voxel_size_mm);
            const bhc::ScanGeometry geom{n_angles, n_pixels, pitch_mm};
            return sinogram_to_numpy(bhc::project_mono(vol, db, geom, energy_keV));
        },
        py::arg("labels"), py::arg("materials"), py::arg("voxel_size_mm"),
        py::arg("n_angles"), py::arg("n_pixels"), py::arg("pitch_mm"),
        py::arg("energy_keV"), py::arg("db"),
        "Monochromatic attenuation projections of a label volume.");

    m.def(
        "project_poly",
        [](const py::array_t<std::int32_t>& labels, const std::vector<std::string>& materials,
           double voxel_size_mm, int n_angles, int n_pixels, double pitch_mm,
           const bhc::Spectrum& spectrum, const bhc::MaterialDB& db,
           bool energy_integrating) {
            const bhc::VoxelVolume vol = labels_from_numpy(labels, materials, voxel_size_mm);
            const bhc::ScanGeometry geom{n_angles, n_pixels, pitch_mm};
            const bhc::DetectorResponse response =
                energy_integrating ? bhc::DetectorResponse::energy_integrating(spectrum)
                                   : bhc::DetectorResponse::flat(spectrum);
            return sinogram_to_numpy(bhc::project_poly(vol, db, geom, spectrum, response));
        },
        py::arg("labels"), py::arg("materials"), py::arg("voxel_size_mm"),
        py::arg("n_angles"), py::arg("n_pixels"), py::arg("pitch_mm"), py::arg("spectrum"),
        py::arg("db"), py::arg("energy_integrating") = false,
        "Polychromatic attenuation projections of a label volume.");

    m.def(
        "fbp",
        [](const py::array_t<double>& sino, double pitch_mm, int nx, int ny,
           double voxel_size_mm, const std::string& window, double fov_radius_mm) {
            bhc::FbpOptions opts;
            opts.window = bhc::filter_window_from_string(window);
            if (fov_radius_mm > 0.0) opts.fov_radius_mm = fov_radius_mm;
            const bhc::Sinogram s =
                sinogram_from_numpy(sino, pitch_mm, bhc::SinogramKind::measured);
            return image_to_numpy(bhc::fbp(s, make_grid(nx, ny, voxel_size_mm), opts));
        },
        py::arg("sinogram"), py::arg("pitch_mm"), py::arg("nx"), py::arg("ny"),
        py::arg("voxel_size_mm"), py::arg("window") = "ramlak",
        py::arg("fov_radius_mm") = 0.0,
        "Filtered backprojection onto a centered grid (fov 0 = inscribed circle).");

    m.def(
        "build_lut",
        [](const bhc::MaterialDB& db, const bhc::Spectrum& spectrum, bool energy_integrating,
           int n_angles, int n_pixels, double pitch_mm, double diameter_mm) {
            const bhc::DetectorResponse response =
                energy_integrating ? bhc::DetectorResponse::energy_integrating(spectrum)
                                   : bhc::DetectorResponse::flat(spectrum);
            const bhc::PolyLut lut = bhc::build_lut(
                db, spectrum, response, bhc::ScanGeometry{n_angles, n_pixels, pitch_mm},
                diameter_mm);
            std::vector<std::pair<std::string, double>> entries;
            for (const auto& e : lut.entries) entries.emplace_back(e.material, e.mu_poly_per_cm);
            return entries;
        },
        py::arg("db"), py::arg("spectrum"), py::arg("energy_integrating"),
        py::arg("n_angles"), py::arg("n_pixels"), py::arg("pitch_mm"),
        py::arg("diameter_mm"),
        "Per-material polychromatic attenuation, ascending; returns (material, mu) pairs.");

    m.def(
        "correct",
        [](const py::array_t<double>& sino, double pitch_mm, const bhc::MaterialDB& db,
           double kvp, double anode_z,
           double de_keV, const std::vector<std::pair<std::string, double>>& base_filters,
           bool energy_integrating,
           const std::vector<std::pair<std::string, double>>& candidate_filters, int nx,
           int ny, double voxel_size_mm, const std::string& window, double fov_radius_mm,
           int n_classes, int histogram_bins, double calib_diameter_mm,
           const std::vector<std::string>& forced_materials, bool nonnegative, int passes,
           bool intensity_input, double i0) {
            bhc::PipelineConfig cfg;
            cfg.kvp = kvp;
            cfg.anode_z = anode_z;
            cfg.de_keV = de_keV;
            cfg.base_filters = filters_from(base_filters);
            cfg.energy_integrating_response = energy_integrating;
            cfg.candidate_filters = filters_from(candidate_filters);
            cfg.nx = nx;
            cfg.ny = ny;
            cfg.voxel_size_mm = voxel_size_mm;
            cfg.window = bhc::filter_window_from_string(window);
            if (fov_radius_mm > 0.0) cfg.fov_radius_mm = fov_radius_mm;
            cfg.n_classes = n_classes;
            cfg.histogram_bins = histogram_bins;
            cfg.calib_diameter_mm = calib_diameter_mm;
            cfg.forced_materials = forced_materials;
            cfg.nonnegative = nonnegative;
            cfg.passes = passes;
            cfg.intensity_input = intensity_input;
            if (i0 > 0.0) cfg.i0 = i0;
            const bhc::Sinogram measured = sinogram_from_numpy(
                sino, pitch_mm,
                intensity_input ? bhc::SinogramKind::poly : bhc::SinogramKind::measured);
            const bhc::CorrectionResult r = bhc::correct_pipeline(measured, cfg, db);
            py::dict out;
            out["uncorrected"] = image_to_numpy(r.uncorrected);
            out["corrected"] = image_to_numpy(r.corrected);
            out["corrected_sinogram"] = sinogram_to_numpy(r.corrected_sino);
            out["mono_sinogram"] = sinogram_to_numpy(r.mono);
            out["labels"] = labels_to_numpy(r.labels);
            out["materials"] = r.labels.materials;
            out["report"] = report_to_dict(r.report);
            return out;
        },
        py::arg("sinogram"), py::arg("pitch_mm"), py::arg("db"), py::arg("kvp") = 150.0,
        py::arg("anode_z") = 74.0, py::arg("de_keV") = 1.0,
        py::arg("base_filters") = std::vector<std::pair<std::string, double>>{},
        py::arg("energy_integrating") = false,
        py::arg("candidate_filters") = std::vector<std::pair<std::string, double>>{},
        py::arg("nx") = 256, py::arg("ny") = 256, py::arg("voxel_size_mm") = 0.25,
        py::arg("window") = "ramlak", py::arg("fov_radius_mm") = 0.0,
        py::arg("n_classes") = 3, py::arg("histogram_bins") = 256,
        py::arg("calib_diameter_mm") = 20.0,
        py::arg("forced_materials") = std::vector<std::string>{},
        py::arg("nonnegative") = false, py::arg("passes") = 1,
        py::arg("intensity_input") = false, py::arg("i0") = 0.0, py::arg("db"),
        "Blind multi-material correction; returns images, labels, and the run report.");

    m.def(
        "cupping_percent",
        [](const py::array_t<double>& image, double voxel_size_mm, double center_radius_mm,
           double edge_inner_mm, double edge_outer_mm) {
            if (image.ndim() != 2) throw bhc::ValidationError("image must be a 2D array");
            const int ny = static_cast<int>(image.shape(0));
            const int nx = static_cast<int>(image.shape(1));
            bhc::ReconImage img;
            img.grid = make_grid(nx, ny, voxel_size_mm);
            img.values.resize(img.grid.voxel_count());
            const auto view = image.unchecked<2>();
            for (int iy = 0; iy < ny; ++iy)
                for (int ix = 0; ix < nx; ++ix)
                    img.values[static_cast<std::size_t>(iy) * nx + ix] = view(iy, ix);
            bhc::Roi center;
            center.type = bhc::RoiType::disc;
            center.name = "center";
            center.radius_mm = center_radius_mm;
            bhc::Roi edge;
            edge.type = bhc::RoiType::annulus;
            edge.name = "edge";
            edge.r_inner_mm = edge_inner_mm;
            edge.r_outer_mm = edge_outer_mm;
            return bhc::cupping_percent(img, center, edge);
        },
        py::arg("image"), py::arg("voxel_size_mm"), py::arg("center_radius_mm"),
        py::arg("edge_inner_mm"), py::arg("edge_outer_mm"),
        "Cupping between a centered disc and a centered annulus, in percent.");

    m.def("set_thread_count", &bhc::set_thread_count, py::arg("n"),
          "Worker threads for projection and reconstruction (0 = hardware).");
}
