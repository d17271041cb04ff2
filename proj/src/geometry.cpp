#include "bhc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "bhc/material.hpp"

namespace bhc {

void GridSpec::validate() const {
    if (nx <= 0 || ny <= 0) throw ValidationError("grid: nx and ny must be positive");
    if (!(voxel_size_mm > 0.0)) throw ValidationError("grid: voxel size must be > 0");
}

GridSpec GridSpec::centered(int nx, int ny, double voxel_size_mm) {
    GridSpec g;
    g.nx = nx;
    g.ny = ny;
    g.voxel_size_mm = voxel_size_mm;
    g.origin_mm = {-0.5 * nx * voxel_size_mm, -0.5 * ny * voxel_size_mm};
    g.validate();
    return g;
}

const char* to_string(VolumeKind k) {
    switch (k) {
        case VolumeKind::label: return "label";
        case VolumeKind::density: return "density";
        case VolumeKind::attenuation: return "attenuation";
    }
    return "attenuation";
}

VolumeKind volume_kind_from_string(const std::string& s) {
    if (s == "label") return VolumeKind::label;
    if (s == "density") return VolumeKind::density;
    if (s == "attenuation") return VolumeKind::attenuation;
    throw ValidationError("volume: unknown kind '" + s + "'");
}

void VoxelVolume::validate() const {
    grid.validate();
    if (values.size() != grid.voxel_count())
        throw ValidationError("volume: value count does not match grid");
    if (kind == VolumeKind::label) {
        if (materials.empty())
            throw ValidationError("volume: label volume needs a material list");
        for (double v : values) {
            const double r = std::nearbyint(v);
            if (v != r || r < 0.0 || r >= static_cast<double>(materials.size()))
                throw ValidationError("volume: label outside material list");
        }
    }
}

namespace {
constexpr double kMinChord_mm = 1e-12;
}

std::vector<RaySegment> trace_ray(const GridSpec& grid, const Ray& ray) {
    grid.validate();
    const double h = grid.voxel_size_mm;
    const Vec2 lo = grid.origin_mm;
    const Vec2 hi = {lo.x + grid.nx * h, lo.y + grid.ny * h};

    // Slab clipping of the parametric line origin + t * direction, t in mm.
    double t0 = -std::numeric_limits<double>::infinity();
    double t1 = std::numeric_limits<double>::infinity();
    const double o[2] = {ray.origin_mm.x, ray.origin_mm.y};
    const double d[2] = {ray.direction.x, ray.direction.y};
    const double lov[2] = {lo.x, lo.y};
    const double hiv[2] = {hi.x, hi.y};
    for (int axis = 0; axis < 2; ++axis) {
        if (std::abs(d[axis]) < 1e-15) {
            if (o[axis] <= lov[axis] || o[axis] >= hiv[axis]) return {};
            continue;
        }
        double ta = (lov[axis] - o[axis]) / d[axis];
        double tb = (hiv[axis] - o[axis]) / d[axis];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    if (!(t0 < t1)) return {};

    std::vector<RaySegment> segments;
    const Vec2 entry = {o[0] + t0 * d[0], o[1] + t0 * d[1]};
    int ix = static_cast<int>(std::floor((entry.x - lo.x) / h));
    int iy = static_cast<int>(std::floor((entry.y - lo.y) / h));
    ix = std::clamp(ix, 0, grid.nx - 1);
    iy = std::clamp(iy, 0, grid.ny - 1);

    const int step_x = d[0] > 0 ? 1 : -1;
    const int step_y = d[1] > 0 ? 1 : -1;
    // Parameter at which the ray crosses the next x / y voxel boundary.
    double tmax_x, tmax_y, tdelta_x, tdelta_y;
    if (std::abs(d[0]) < 1e-15) {
        tmax_x = std::numeric_limits<double>::infinity();
        tdelta_x = std::numeric_limits<double>::infinity();
    } else {
        const double next_x = lo.x + (ix + (step_x > 0 ? 1 : 0)) * h;
        tmax_x = (next_x - o[0]) / d[0];
        tdelta_x = h / std::abs(d[0]);
    }
    if (std::abs(d[1]) < 1e-15) {
        tmax_y = std::numeric_limits<double>::infinity();
        tdelta_y = std::numeric_limits<double>::infinity();
    } else {
        const double next_y = lo.y + (iy + (step_y > 0 ? 1 : 0)) * h;
        tmax_y = (next_y - o[1]) / d[1];
        tdelta_y = h / std::abs(d[1]);
    }

    double t = t0;
    while (t < t1) {
        const double t_next = std::min(std::min(tmax_x, tmax_y), t1);
        const double len = t_next - t;
        if (len > kMinChord_mm) {
            segments.push_back({static_cast<std::size_t>(iy) * grid.nx + ix, len});
        }
        t = t_next;
        if (t >= t1) break;
        if (tmax_x <= tmax_y) {
            ix += step_x;
            tmax_x += tdelta_x;
            if (ix < 0 || ix >= grid.nx) break;
        } else {
            iy += step_y;
            tmax_y += tdelta_y;
            if (iy < 0 || iy >= grid.ny) break;
        }
    }
    return segments;
}

void ScanGeometry::validate() const {
    if (n_angles <= 0) throw ValidationError("geometry: n_angles must be positive");
    if (n_detector_pixels <= 0)
        throw ValidationError("geometry: n_detector_pixels must be positive");
    if (!(detector_pitch_mm > 0.0))
        throw ValidationError("geometry: detector pitch must be > 0");
}

double ScanGeometry::angle_rad(int view) const {
    return static_cast<double>(view) * std::numbers::pi / n_angles;
}

std::vector<Ray> rays_for_angle(const ScanGeometry& geom, double angle_rad) {
    geom.validate();
    const double c = std::cos(angle_rad);
    const double s = std::sin(angle_rad);
    const Vec2 dir = {-s, c};       // ray direction
    const Vec2 axis = {c, s};       // detector axis, perpendicular to dir
    const double back_off = geom.detector_span_mm();
    std::vector<Ray> rays;
    rays.reserve(geom.n_detector_pixels);
    for (int i = 0; i < geom.n_detector_pixels; ++i) {
        const double off = geom.detector_offset_mm(i);
        Ray r;
        r.origin_mm = {off * axis.x - back_off * dir.x, off * axis.y - back_off * dir.y};
        r.direction = dir;
        rays.push_back(r);
    }
    return rays;
}

std::vector<Ray> rays_for_view(const ScanGeometry& geom, int view) {
    geom.validate();
    if (view < 0 || view >= geom.n_angles)
        throw ValidationError("rays_for_view: view index out of range");
    return rays_for_angle(geom, geom.angle_rad(view));
}

bool PhantomShape::contains(Vec2 p) const {
    if (type == Type::disc) {
        const Vec2 d = p - center_mm;
        return d.x * d.x + d.y * d.y <= radius_mm * radius_mm;
    }
    const double a = rotation_deg * std::numbers::pi / 180.0;
    const double c = std::cos(a), s = std::sin(a);
    const Vec2 d = p - center_mm;
    const double u = c * d.x + s * d.y;
    const double v = -s * d.x + c * d.y;
    return std::abs(u) <= half_extents_mm.x && std::abs(v) <= half_extents_mm.y;
}

double PhantomShape::bounding_radius_mm() const {
    const double center_dist = std::hypot(center_mm.x, center_mm.y);
    if (type == Type::disc) return center_dist + radius_mm;
    return center_dist + std::hypot(half_extents_mm.x, half_extents_mm.y);
}

void PhantomSpec::validate() const {
    // An empty shape list is a valid phantom: all air.
    for (const auto& sh : shapes) {
        if (sh.material.empty()) throw ValidationError("phantom: shape without material");
        if (sh.type == PhantomShape::Type::disc) {
            if (!(sh.radius_mm > 0.0))
                throw ValidationError("phantom: disc radius must be > 0");
        } else {
            if (!(sh.half_extents_mm.x > 0.0 && sh.half_extents_mm.y > 0.0))
                throw ValidationError("phantom: rect half extents must be > 0");
        }
    }
}

void PhantomSpec::validate_fov(const ScanGeometry& geom) const {
    validate();
    geom.validate();
    const double half_span = 0.5 * geom.detector_span_mm();
    for (const auto& sh : shapes) {
        if (sh.bounding_radius_mm() > half_span + 1e-9)
            throw ValidationError("phantom: shape extends beyond the detector half-span of " +
                                  std::to_string(half_span) + " mm");
    }
}

VoxelVolume rasterize_phantom(const PhantomSpec& spec, const GridSpec& grid,
                              const MaterialDB& db) {
    spec.validate();
    grid.validate();
    VoxelVolume vol;
    vol.grid = grid;
    vol.kind = VolumeKind::label;
    vol.materials = {"air"};
    if (!db.contains("air")) throw ValidationError("rasterize: database lacks 'air'");

    std::vector<int> shape_label(spec.shapes.size());
    for (std::size_t i = 0; i < spec.shapes.size(); ++i) {
        const std::string& name = spec.shapes[i].material;
        if (!db.contains(name))
            throw ValidationError("rasterize: unknown material '" + name + "'");
        auto it = std::find(vol.materials.begin(), vol.materials.end(), name);
        if (it == vol.materials.end()) {
            vol.materials.push_back(name);
            shape_label[i] = static_cast<int>(vol.materials.size()) - 1;
        } else {
            shape_label[i] = static_cast<int>(it - vol.materials.begin());
        }
    }

    vol.values.assign(grid.voxel_count(), 0.0);
    for (int iy = 0; iy < grid.ny; ++iy) {
        for (int ix = 0; ix < grid.nx; ++ix) {
            const Vec2 p = grid.voxel_center(ix, iy);
            int label = 0;
            for (std::size_t i = 0; i < spec.shapes.size(); ++i) {
                if (spec.shapes[i].contains(p)) label = shape_label[i];
            }
            vol.at(ix, iy) = label;
        }
    }
    return vol;
}

}  // namespace bhc
