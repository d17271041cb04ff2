#include "bhc/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace bhc {

const char* to_string(RoiType t) {
    switch (t) {
        case RoiType::disc: return "disc";
        case RoiType::annulus: return "annulus";
        case RoiType::rect: return "rect";
    }
    return "disc";
}

RoiType roi_type_from_string(const std::string& s) {
    if (s == "disc") return RoiType::disc;
    if (s == "annulus") return RoiType::annulus;
    if (s == "rect") return RoiType::rect;
    throw ValidationError("roi: unknown type '" + s + "'");
}

void Roi::validate() const {
    switch (type) {
        case RoiType::disc:
            if (!(radius_mm > 0.0)) throw ValidationError("roi: disc radius must be > 0");
            break;
        case RoiType::annulus:
            if (!(r_inner_mm >= 0.0) || !(r_outer_mm > r_inner_mm))
                throw ValidationError("roi: annulus needs 0 <= inner < outer");
            break;
        case RoiType::rect:
            if (!(half_extents_mm.x > 0.0) || !(half_extents_mm.y > 0.0))
                throw ValidationError("roi: rect half extents must be > 0");
            break;
    }
}

bool Roi::contains(const Vec2& p) const {
    const double dx = p.x - center_mm.x;
    const double dy = p.y - center_mm.y;
    switch (type) {
        case RoiType::disc:
            return dx * dx + dy * dy <= radius_mm * radius_mm;
        case RoiType::annulus: {
            const double r2 = dx * dx + dy * dy;
            return r2 >= r_inner_mm * r_inner_mm && r2 <= r_outer_mm * r_outer_mm;
        }
        case RoiType::rect:
            return std::abs(dx) <= half_extents_mm.x && std::abs(dy) <= half_extents_mm.y;
    }
    return false;
}

namespace {

RoiStats stats_of(const std::vector<double>& samples, const char* what) {
    if (samples.empty()) throw NumericError(std::string(what) + ": region contains no voxels");
    RoiStats s;
    s.n = samples.size();
    s.min = samples.front();
    s.max = samples.front();
    double sum = 0.0;
    for (double v : samples) {
        sum += v;
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
    }
    s.mean = sum / static_cast<double>(s.n);
    double var = 0.0;
    for (double v : samples) {
        const double d = v - s.mean;
        var += d * d;
    }
    s.stddev = std::sqrt(var / static_cast<double>(s.n));
    return s;
}

}  // namespace

RoiStats roi_stats(const ReconImage& img, const Roi& roi) {
    img.grid.validate();
    roi.validate();
    std::vector<double> samples;
    for (int iy = 0; iy < img.grid.ny; ++iy)
        for (int ix = 0; ix < img.grid.nx; ++ix)
            if (roi.contains(img.grid.voxel_center(ix, iy)))
                samples.push_back(img.at(ix, iy));
    return stats_of(samples, "roi");
}

double roi_mean(const ReconImage& img, const Roi& roi) { return roi_stats(img, roi).mean; }

double cupping_percent(const ReconImage& img, const Roi& center, const Roi& edge) {
    const double c = roi_mean(img, center);
    const double e = roi_mean(img, edge);
    if (e == 0.0) throw NumericError("cupping: edge mean is zero");
    return 100.0 * (e - c) / e;
}

double streak_index(const ReconImage& img, const Roi& roi) { return roi_stats(img, roi).stddev; }

double rms_difference(const ReconImage& a, const ReconImage& b) {
    if (a.grid.nx != b.grid.nx || a.grid.ny != b.grid.ny)
        throw ValidationError("rms: image grids do not match");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double d = a.values[i] - b.values[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(a.values.size()));
}

double rms_difference(const Sinogram& a, const Sinogram& b) {
    if (a.values().size() != b.values().size())
        throw ValidationError("rms: sinogram sizes do not match");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) {
        const double d = a.values()[i] - b.values()[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(a.values().size()));
}

std::vector<PlateauRoi> plateau_rois(const VoxelVolume& labels, double margin_mm) {
    labels.validate();
    if (labels.kind != VolumeKind::label)
        throw ValidationError("plateau: need a label volume");
    if (!(margin_mm >= 0.0)) throw ValidationError("plateau: margin must be >= 0");

    const int nx = labels.grid.nx;
    const int ny = labels.grid.ny;
    const double h = labels.grid.voxel_size_mm;
    const int reach = static_cast<int>(std::floor(margin_mm / h)) + 1;

    // Neighborhood offsets within the margin; a voxel survives erosion when
    // every offset lands on the same label and inside the grid.
    std::vector<std::pair<int, int>> offsets;
    for (int dy = -reach; dy <= reach; ++dy)
        for (int dx = -reach; dx <= reach; ++dx)
            if ((static_cast<double>(dx) * dx + static_cast<double>(dy) * dy) * h * h <=
                margin_mm * margin_mm)
                offsets.emplace_back(dx, dy);

    std::vector<PlateauRoi> out;
    for (std::size_t l = 1; l < labels.materials.size(); ++l) {
        PlateauRoi roi;
        roi.label = static_cast<int>(l);
        roi.material = labels.materials[l];
        roi.mask.assign(labels.values.size(), 0);
        for (int iy = 0; iy < ny; ++iy) {
            for (int ix = 0; ix < nx; ++ix) {
                const std::size_t idx = static_cast<std::size_t>(iy) * nx + ix;
                if (labels.values[idx] != static_cast<double>(l)) continue;
                bool keep = true;
                for (const auto& [dx, dy] : offsets) {
                    const int jx = ix + dx;
                    const int jy = iy + dy;
                    if (jx < 0 || jx >= nx || jy < 0 || jy >= ny ||
                        labels.values[static_cast<std::size_t>(jy) * nx + jx] !=
                            static_cast<double>(l)) {
                        keep = false;
                        break;
                    }
                }
                if (keep) {
                    roi.mask[idx] = 1;
                    ++roi.n;
                }
            }
        }
        out.push_back(std::move(roi));
    }
    return out;
}

RoiStats masked_stats(const ReconImage& img, const std::vector<std::uint8_t>& mask) {
    if (mask.size() != img.values.size())
        throw ValidationError("masked stats: mask size does not match image");
    std::vector<double> samples;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) samples.push_back(img.values[i]);
    return stats_of(samples, "masked stats");
}

}  // namespace bhc
