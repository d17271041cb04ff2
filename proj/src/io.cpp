#include "bhc/io.hpp"

#include <json.hpp>
#include <zlib.h>

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <system_error>

static_assert(std::endian::native == std::endian::little,
              "raw payloads are little-endian; big-endian hosts need a swap pass");

namespace bhc {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, const std::string& where) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last)
        throw ValidationError(where + ": bad number '" + std::string(s) + "'");
    return v;
}

json load_json(const std::string& path) {
    const std::string text = read_text(path);
    try {
        return json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

const json& field(const json& j, const char* key, const std::string& path) {
    const auto it = j.find(key);
    if (it == j.end()) throw ValidationError(path + ": missing field '" + key + "'");
    return *it;
}

Vec2 vec2_from(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2)
        throw ValidationError(path + ": expected a 2-element array");
    return Vec2{j[0].get<double>(), j[1].get<double>()};
}

json vec2_json(const Vec2& v) { return json::array({v.x, v.y}); }

json grid_json(const GridSpec& g) {
    return json{{"nx", g.nx},
                {"ny", g.ny},
                {"voxel_size_mm", g.voxel_size_mm},
                {"origin_mm", vec2_json(g.origin_mm)}};
}

GridSpec grid_from(const json& j, const std::string& path) {
    GridSpec g;
    g.nx = field(j, "nx", path).get<int>();
    g.ny = field(j, "ny", path).get<int>();
    g.voxel_size_mm = field(j, "voxel_size_mm", path).get<double>();
    g.origin_mm = vec2_from(field(j, "origin_mm", path), path);
    g.validate();
    return g;
}

json geom_json(const ScanGeometry& g) {
    return json{{"n_angles", g.n_angles},
                {"n_detector_pixels", g.n_detector_pixels},
                {"detector_pitch_mm", g.detector_pitch_mm}};
}

ScanGeometry geom_from(const json& j, const std::string& path) {
    ScanGeometry g;
    g.n_angles = field(j, "n_angles", path).get<int>();
    g.n_detector_pixels = field(j, "n_detector_pixels", path).get<int>();
    g.detector_pitch_mm = field(j, "detector_pitch_mm", path).get<double>();
    g.validate();
    return g;
}

json provenance_json(const std::vector<std::pair<std::string, std::string>>& prov) {
    json out = json::array();
    for (const auto& [k, v] : prov) out.push_back(json::array({k, v}));
    return out;
}

std::vector<std::pair<std::string, std::string>> provenance_from(const json& j,
                                                                 const std::string& path) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& entry : j) {
        if (!entry.is_array() || entry.size() != 2)
            throw ValidationError(path + ": provenance entries are [key, value] pairs");
        out.emplace_back(entry[0].get<std::string>(), entry[1].get<std::string>());
    }
    return out;
}

std::string payload_hash(const void* data, std::size_t size) {
    Fnv1a h;
    h.update(data, size);
    return "fnv1a:" + h.hex();
}

// Sidecar for a raw payload at <path>.json.
void save_raw_sidecar(const std::string& path, json extra) {
    json side{{"format", "bhc-raw"}, {"version", 1},
              {"payload", fs::path(path).filename().string()}};
    for (auto& [k, v] : extra.items()) side[k] = std::move(v);
    write_text_atomic(path + ".json", side.dump(2) + "\n");
}

json load_raw_sidecar(const std::string& path) {
    const std::string side_path = path + ".json";
    json side = load_json(side_path);
    if (field(side, "format", side_path).get<std::string>() != "bhc-raw")
        throw ValidationError(side_path + ": not a raw payload sidecar");
    if (field(side, "version", side_path).get<int>() != 1)
        throw ValidationError(side_path + ": unsupported version");
    return side;
}

template <typename T>
std::vector<unsigned char> pack(const std::vector<double>& values) {
    std::vector<unsigned char> bytes(values.size() * sizeof(T));
    for (std::size_t i = 0; i < values.size(); ++i) {
        const T v = static_cast<T>(values[i]);
        std::memcpy(bytes.data() + i * sizeof(T), &v, sizeof(T));
    }
    return bytes;
}

template <typename T>
std::vector<double> unpack(const std::string& bytes, const std::string& path) {
    if (bytes.size() % sizeof(T) != 0)
        throw ValidationError(path + ": payload size is not a multiple of the sample size");
    std::vector<double> values(bytes.size() / sizeof(T));
    for (std::size_t i = 0; i < values.size(); ++i) {
        T v;
        std::memcpy(&v, bytes.data() + i * sizeof(T), sizeof(T));
        values[i] = static_cast<double>(v);
    }
    return values;
}

std::string load_payload(const std::string& path, const json& side) {
    std::string bytes = read_text(path);
    const std::string want = field(side, "content_hash", path + ".json").get<std::string>();
    const std::string got = payload_hash(bytes.data(), bytes.size());
    if (want != got)
        throw ValidationError(path + ": content hash mismatch (file corrupt or stale sidecar)");
    return bytes;
}

std::vector<std::array<double, 2>> parse_two_column_csv(const std::string& text,
                                                        const std::string& header,
                                                        const std::string& path) {
    std::vector<std::array<double, 2>> rows;
    std::size_t pos = 0;
    bool saw_header = false;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string_view line(text.data() + pos, end - pos);
        pos = end + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (!saw_header) {
            if (line != header)
                throw ValidationError(path + ": expected header '" + header + "'");
            saw_header = true;
            continue;
        }
        const std::size_t comma = line.find(',');
        if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos)
            throw ValidationError(path + ": expected two comma-separated columns");
        rows.push_back({parse_double(line.substr(0, comma), path),
                        parse_double(line.substr(comma + 1), path)});
    }
    if (!saw_header) throw ValidationError(path + ": empty file");
    return rows;
}

std::string two_column_csv(const std::string& header,
                           const std::vector<std::array<double, 2>>& rows) {
    std::string out = header + "\n";
    for (const auto& r : rows) out += format_double(r[0]) + "," + format_double(r[1]) + "\n";
    return out;
}

}  // namespace

void write_bytes_atomic(const std::string& path, const void* data, std::size_t size) {
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot open '" + tmp.string() + "' for writing");
        out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
        if (!out) throw ValidationError("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

void write_text_atomic(const std::string& path, const std::string& text) {
    write_bytes_atomic(path, text.data(), text.size());
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw ValidationError("read failed for '" + path + "'");
    return text;
}

void save_material_csv(const std::string& path, const Material& m) {
    m.validate();
    std::vector<std::array<double, 2>> rows;
    for (std::size_t i = 0; i < m.energies_keV.size(); ++i)
        rows.push_back({m.energies_keV[i], m.mu_over_rho_cm2g[i]});
    write_text_atomic(path, two_column_csv("energy_keV,mu_over_rho_cm2_per_g", rows));
}

Material load_material_csv(const std::string& path, const std::string& name,
                           double density_g_cm3) {
    const auto rows = parse_two_column_csv(read_text(path),
                                           "energy_keV,mu_over_rho_cm2_per_g", path);
    Material m;
    m.name = name;
    m.density_g_cm3 = density_g_cm3;
    for (const auto& r : rows) {
        m.energies_keV.push_back(r[0]);
        m.mu_over_rho_cm2g.push_back(r[1]);
    }
    m.validate();
    return m;
}

MaterialDB load_database(const std::string& directory) {
    const std::string manifest_path = (fs::path(directory) / "materials.json").string();
    const json manifest = load_json(manifest_path);
    if (field(manifest, "version", manifest_path).get<int>() != 1)
        throw ValidationError(manifest_path + ": unsupported version");
    const json& densities = field(manifest, "densities_g_per_cm3", manifest_path);
    if (!densities.is_object())
        throw ValidationError(manifest_path + ": densities_g_per_cm3 must be an object");
    MaterialDB db;
    for (const auto& [name, density] : densities.items()) {
        const std::string csv = (fs::path(directory) / (name + ".csv")).string();
        db.add(load_material_csv(csv, name, density.get<double>()));
    }
    return db;
}

void save_volume(const std::string& path, const VoxelVolume& vol) {
    vol.validate();
    const bool is_label = vol.kind == VolumeKind::label;
    const auto bytes =
        is_label ? pack<std::int32_t>(vol.values) : pack<float>(vol.values);
    write_bytes_atomic(path, bytes.data(), bytes.size());
    json side{{"dtype", is_label ? "int32" : "float32"},
              {"kind", "volume"},
              {"volume_kind", to_string(vol.kind)},
              {"grid", grid_json(vol.grid)},
              {"content_hash", payload_hash(bytes.data(), bytes.size())}};
    if (is_label) side["materials"] = vol.materials;
    save_raw_sidecar(path, std::move(side));
}

VoxelVolume load_volume(const std::string& path) {
    const json side = load_raw_sidecar(path);
    const std::string side_path = path + ".json";
    if (field(side, "kind", side_path).get<std::string>() != "volume")
        throw ValidationError(side_path + ": not a volume");
    VoxelVolume vol;
    vol.kind = volume_kind_from_string(field(side, "volume_kind", side_path).get<std::string>());
    vol.grid = grid_from(field(side, "grid", side_path), side_path);
    const std::string bytes = load_payload(path, side);
    const std::string dtype = field(side, "dtype", side_path).get<std::string>();
    if (dtype == "int32")
        vol.values = unpack<std::int32_t>(bytes, path);
    else if (dtype == "float32")
        vol.values = unpack<float>(bytes, path);
    else
        throw ValidationError(side_path + ": unsupported dtype '" + dtype + "'");
    if (vol.kind == VolumeKind::label)
        vol.materials = field(side, "materials", side_path).get<std::vector<std::string>>();
    if (vol.values.size() != static_cast<std::size_t>(vol.grid.nx) * vol.grid.ny)
        throw ValidationError(path + ": payload does not match the grid");
    vol.validate();
    return vol;
}

void save_image(const std::string& path, const ReconImage& img) {
    img.grid.validate();
    const auto bytes = pack<float>(img.values);
    write_bytes_atomic(path, bytes.data(), bytes.size());
    save_raw_sidecar(path, json{{"dtype", "float32"},
                                {"kind", "image"},
                                {"grid", grid_json(img.grid)},
                                {"content_hash", payload_hash(bytes.data(), bytes.size())},
                                {"provenance", provenance_json(img.provenance)}});
}

ReconImage load_image(const std::string& path) {
    const json side = load_raw_sidecar(path);
    const std::string side_path = path + ".json";
    if (field(side, "kind", side_path).get<std::string>() != "image")
        throw ValidationError(side_path + ": not an image");
    ReconImage img;
    img.grid = grid_from(field(side, "grid", side_path), side_path);
    img.values = unpack<float>(load_payload(path, side), path);
    if (img.values.size() != static_cast<std::size_t>(img.grid.nx) * img.grid.ny)
        throw ValidationError(path + ": payload does not match the grid");
    if (side.contains("provenance"))
        img.provenance = provenance_from(side["provenance"], side_path);
    return img;
}

void save_sinogram(const std::string& path, const Sinogram& sino) {
    const auto bytes = pack<double>(sino.values());
    write_bytes_atomic(path, bytes.data(), bytes.size());
    save_raw_sidecar(path,
                     json{{"dtype", "float64"},
                          {"kind", "sinogram"},
                          {"sinogram_kind", to_string(sino.kind())},
                          {"geometry", geom_json(sino.geom())},
                          {"content_hash", payload_hash(bytes.data(), bytes.size())},
                          {"provenance", provenance_json(sino.provenance())}});
}

Sinogram load_sinogram(const std::string& path) {
    const json side = load_raw_sidecar(path);
    const std::string side_path = path + ".json";
    if (field(side, "kind", side_path).get<std::string>() != "sinogram")
        throw ValidationError(side_path + ": not a sinogram");
    const ScanGeometry geom = geom_from(field(side, "geometry", side_path), side_path);
    const SinogramKind kind =
        sinogram_kind_from_string(field(side, "sinogram_kind", side_path).get<std::string>());
    std::vector<double> values = unpack<double>(load_payload(path, side), path);
    if (values.size() != geom.ray_count())
        throw ValidationError(path + ": payload does not match the geometry");
    Sinogram sino(geom, kind, std::move(values));
    if (side.contains("provenance"))
        sino.provenance() = provenance_from(side["provenance"], side_path);
    return sino;
}

void save_spectrum_csv(const std::string& path, const Spectrum& s) {
    s.validate();
    std::vector<std::array<double, 2>> rows;
    for (std::size_t i = 0; i < s.bins(); ++i) rows.push_back({s.energy(i), s.weights[i]});
    write_text_atomic(path, two_column_csv("energy_keV,weight", rows));
}

Spectrum load_spectrum_csv(const std::string& path) {
    const auto rows = parse_two_column_csv(read_text(path), "energy_keV,weight", path);
    if (rows.size() < 2) throw ValidationError(path + ": need at least two energy bins");
    Spectrum s;
    s.e_min_keV = rows[0][0];
    s.de_keV = rows[1][0] - rows[0][0];
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double expected = s.e_min_keV + static_cast<double>(i) * s.de_keV;
        if (std::abs(rows[i][0] - expected) > 1e-9 * std::max(1.0, std::abs(expected)))
            throw ValidationError(path + ": energy grid is not uniform");
        s.weights.push_back(rows[i][1]);
    }
    s.validate();
    return s;
}

void save_lut(const std::string& path, const PolyLut& lut) {
    lut.validate();
    json entries = json::array();
    for (const auto& e : lut.entries)
        entries.push_back(json{{"material", e.material}, {"mu_poly_per_cm", e.mu_poly_per_cm}});
    const json doc{{"format", "bhc-lut"},
                   {"version", 1},
                   {"setting_id", lut.setting_id},
                   {"spectrum_hash", lut.spectrum_hash},
                   {"calib_diameter_mm", lut.calib_diameter_mm},
                   {"entries", entries}};
    write_text_atomic(path, doc.dump(2) + "\n");
}

PolyLut load_lut(const std::string& path) {
    const json doc = load_json(path);
    if (field(doc, "format", path).get<std::string>() != "bhc-lut")
        throw ValidationError(path + ": not a lookup table file");
    if (field(doc, "version", path).get<int>() != 1)
        throw ValidationError(path + ": unsupported version");
    PolyLut lut;
    lut.setting_id = field(doc, "setting_id", path).get<std::string>();
    lut.spectrum_hash = field(doc, "spectrum_hash", path).get<std::string>();
    lut.calib_diameter_mm = field(doc, "calib_diameter_mm", path).get<double>();
    for (const auto& e : field(doc, "entries", path)) {
        PolyLut::Entry entry;
        entry.material = field(e, "material", path).get<std::string>();
        entry.mu_poly_per_cm = field(e, "mu_poly_per_cm", path).get<double>();
        lut.entries.push_back(std::move(entry));
    }
    lut.validate();
    return lut;
}

PhantomSpec load_phantom(const std::string& path) {
    const json doc = load_json(path);
    PhantomSpec spec;
    for (const auto& s : field(doc, "shapes", path)) {
        PhantomShape shape;
        const std::string type = field(s, "type", path).get<std::string>();
        if (type == "disc")
            shape.type = PhantomShape::Type::disc;
        else if (type == "rect")
            shape.type = PhantomShape::Type::rect;
        else
            throw ValidationError(path + ": unknown shape type '" + type + "'");
        shape.material = field(s, "material", path).get<std::string>();
        shape.center_mm = vec2_from(field(s, "center_mm", path), path);
        if (shape.type == PhantomShape::Type::disc) {
            shape.radius_mm = field(s, "radius_mm", path).get<double>();
        } else {
            shape.half_extents_mm = vec2_from(field(s, "half_extents_mm", path), path);
            if (s.contains("rotation_deg")) shape.rotation_deg = s["rotation_deg"].get<double>();
        }
        spec.shapes.push_back(std::move(shape));
    }
    spec.validate();
    return spec;
}

void save_phantom(const std::string& path, const PhantomSpec& spec) {
    spec.validate();
    json shapes = json::array();
    for (const auto& s : spec.shapes) {
        json shape{{"type", s.type == PhantomShape::Type::disc ? "disc" : "rect"},
                   {"material", s.material},
                   {"center_mm", vec2_json(s.center_mm)}};
        if (s.type == PhantomShape::Type::disc) {
            shape["radius_mm"] = s.radius_mm;
        } else {
            shape["half_extents_mm"] = vec2_json(s.half_extents_mm);
            shape["rotation_deg"] = s.rotation_deg;
        }
        shapes.push_back(std::move(shape));
    }
    write_text_atomic(path, json{{"shapes", shapes}}.dump(2) + "\n");
}

std::vector<Roi> load_rois(const std::string& path) {
    const json doc = load_json(path);
    std::vector<Roi> rois;
    for (const auto& r : field(doc, "rois", path)) {
        Roi roi;
        roi.type = roi_type_from_string(field(r, "type", path).get<std::string>());
        roi.name = field(r, "name", path).get<std::string>();
        roi.center_mm = vec2_from(field(r, "center_mm", path), path);
        switch (roi.type) {
            case RoiType::disc:
                roi.radius_mm = field(r, "radius_mm", path).get<double>();
                break;
            case RoiType::annulus:
                roi.r_inner_mm = field(r, "r_inner_mm", path).get<double>();
                roi.r_outer_mm = field(r, "r_outer_mm", path).get<double>();
                break;
            case RoiType::rect:
                roi.half_extents_mm = vec2_from(field(r, "half_extents_mm", path), path);
                break;
        }
        roi.validate();
        rois.push_back(std::move(roi));
    }
    return rois;
}

const Roi& find_roi(const std::vector<Roi>& rois, const std::string& name) {
    for (const auto& r : rois)
        if (r.name == name) return r;
    throw ValidationError("no ROI named '" + name + "'");
}

void save_profile_csv(const std::string& path, const std::vector<ProfileSample>& profile) {
    std::vector<std::array<double, 2>> rows;
    for (const auto& p : profile) rows.push_back({p.position_mm, p.value});
    write_text_atomic(path, two_column_csv("position_mm,value", rows));
}

void save_report(const std::string& path, const CorrectionReport& report) {
    json classes = json::array();
    for (const auto& c : report.classes)
        classes.push_back(json{{"class_index", c.class_index},
                               {"measured_mu_per_cm", c.measured_mu_per_cm},
                               {"initial", c.initial},
                               {"chosen", c.chosen},
                               {"forced", c.forced}});
    json timings = json::array();
    for (const auto& [name, ms] : report.timings_ms)
        timings.push_back(json::array({name, ms}));
    const json doc{{"format", "bhc-report"},
                   {"version", 1},
                   {"classes", classes},
                   {"thresholds", report.thresholds},
                   {"selected_energy_keV", report.selected_energy_keV},
                   {"coefficients", report.coefficients},
                   {"lse_residual_rms", report.lse_residual_rms},
                   {"measured_rms", report.measured_rms},
                   {"rms_uncorrected_vs_mono", report.rms_uncorrected_vs_mono},
                   {"rms_corrected_vs_mono", report.rms_corrected_vs_mono},
                   {"lut_setting_id", report.lut_setting_id},
                   {"passes", report.passes},
                   {"timings_ms", timings}};
    write_text_atomic(path, doc.dump(2) + "\n");
}

namespace {

void put_be32(std::vector<unsigned char>& v, std::uint32_t x) {
    v.push_back(static_cast<unsigned char>(x >> 24));
    v.push_back(static_cast<unsigned char>(x >> 16));
    v.push_back(static_cast<unsigned char>(x >> 8));
    v.push_back(static_cast<unsigned char>(x));
}

void png_chunk(std::vector<unsigned char>& out, const char type[4],
               const unsigned char* data, std::size_t size) {
    put_be32(out, static_cast<std::uint32_t>(size));
    const std::size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data, data + size);
    const auto crc = crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
    put_be32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

void write_png16(const std::string& path, const ReconImage& img, double lo, double hi) {
    img.grid.validate();
    if (img.values.size() != static_cast<std::size_t>(img.grid.nx) * img.grid.ny)
        throw ValidationError("png: image values do not match the grid");
    if (lo == hi) {
        lo = img.values.front();
        hi = img.values.front();
        for (double v : img.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi == lo) hi = lo + 1.0;
    }
    if (!(hi > lo)) throw ValidationError("png: window must satisfy lo < hi");

    const int nx = img.grid.nx;
    const int ny = img.grid.ny;
    // Scanlines top to bottom; grid row 0 is the bottom of the image.
    std::vector<unsigned char> raw;
    raw.reserve(static_cast<std::size_t>(ny) * (1 + 2 * static_cast<std::size_t>(nx)));
    for (int row = 0; row < ny; ++row) {
        raw.push_back(0);  // filter: none
        const int iy = ny - 1 - row;
        for (int ix = 0; ix < nx; ++ix) {
            double t = (img.at(ix, iy) - lo) / (hi - lo);
            t = std::min(1.0, std::max(0.0, t));
            const auto s = static_cast<std::uint16_t>(std::lround(t * 65535.0));
            raw.push_back(static_cast<unsigned char>(s >> 8));
            raw.push_back(static_cast<unsigned char>(s & 0xff));
        }
    }

    uLongf compressed_size = compressBound(static_cast<uLong>(raw.size()));
    std::vector<unsigned char> compressed(compressed_size);
    if (compress2(compressed.data(), &compressed_size, raw.data(),
                  static_cast<uLong>(raw.size()), 9) != Z_OK)
        throw NumericError("png: deflate failed");
    compressed.resize(compressed_size);

    std::vector<unsigned char> out{0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    std::vector<unsigned char> ihdr;
    put_be32(ihdr, static_cast<std::uint32_t>(nx));
    put_be32(ihdr, static_cast<std::uint32_t>(ny));
    ihdr.push_back(16);  // bit depth
    ihdr.push_back(0);   // grayscale
    ihdr.push_back(0);   // deflate
    ihdr.push_back(0);   // adaptive filtering
    ihdr.push_back(0);   // no interlace
    png_chunk(out, "IHDR", ihdr.data(), ihdr.size());
    png_chunk(out, "IDAT", compressed.data(), compressed.size());
    png_chunk(out, "IEND", nullptr, 0);
    write_bytes_atomic(path, out.data(), out.size());

    write_text_atomic(path + ".json",
                      json{{"format", "bhc-png"},
                           {"version", 1},
                           {"window", json::array({lo, hi})},
                           {"grid", grid_json(img.grid)}}
                              .dump(2) +
                          "\n");
}

}  // namespace bhc
