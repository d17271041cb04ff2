#pragma once

#include <string>
#include <vector>

#include "bhc/common.hpp"

// 2D scan geometry: square-pixel voxel grids in mm world coordinates and a
// parallel-beam view set over [0, pi). Ray tracing is exact voxel traversal
// (Siddon-style); chord lengths are in mm and must sum to the analytic
// grid-intersection length.

namespace bhc {

struct GridSpec {
    int nx = 0;
    int ny = 0;
    double voxel_size_mm = 0.0;
    Vec2 origin_mm;  // position of the grid's lower corner

    void validate() const;
    std::size_t voxel_count() const { return static_cast<std::size_t>(nx) * ny; }
    Vec2 voxel_center(int ix, int iy) const {
        return {origin_mm.x + (ix + 0.5) * voxel_size_mm,
                origin_mm.y + (iy + 0.5) * voxel_size_mm};
    }
    // Centered grid spanning nx*h x ny*h around the origin of rotation.
    static GridSpec centered(int nx, int ny, double voxel_size_mm);

    bool operator==(const GridSpec&) const = default;
};

enum class VolumeKind { label, density, attenuation };

const char* to_string(VolumeKind k);
VolumeKind volume_kind_from_string(const std::string& s);

// Scalar field on a grid, row-major (index = iy * nx + ix). Label volumes
// hold integer indices into `materials`; slot 0 is the background material
// (conventionally air) and is treated as transparent by the projectors.
struct VoxelVolume {
    GridSpec grid;
    VolumeKind kind = VolumeKind::attenuation;
    std::vector<double> values;
    std::vector<std::string> materials;  // label volumes only

    void validate() const;
    double& at(int ix, int iy) { return values[static_cast<std::size_t>(iy) * grid.nx + ix]; }
    double at(int ix, int iy) const { return values[static_cast<std::size_t>(iy) * grid.nx + ix]; }
};

struct Ray {
    Vec2 origin_mm;
    Vec2 direction;  // unit length
};

struct RaySegment {
    std::size_t voxel;  // flat row-major index
    double length_mm;
};

// Voxel chords along a ray through the grid, ordered by traversal. Chords
// shorter than 1e-12 mm are dropped; a ray missing the grid yields an empty
// list. The chord sum equals the analytic box intersection to 1e-9 relative.
std::vector<RaySegment> trace_ray(const GridSpec& grid, const Ray& ray);

struct ScanGeometry {
    int n_angles = 0;
    int n_detector_pixels = 0;
    double detector_pitch_mm = 0.0;

    void validate() const;
    double angle_rad(int view) const;  // view * pi / n_angles
    double detector_span_mm() const { return n_detector_pixels * detector_pitch_mm; }
    // Signed offset of detector pixel i from the rotation center.
    double detector_offset_mm(int pixel) const {
        return (pixel - 0.5 * (n_detector_pixels - 1)) * detector_pitch_mm;
    }
    std::size_t ray_count() const {
        return static_cast<std::size_t>(n_angles) * n_detector_pixels;
    }

    bool operator==(const ScanGeometry&) const = default;
};

// All rays of one view at an arbitrary angle: direction (-sin a, cos a),
// detector axis (cos a, sin a), origins placed behind the field of view.
std::vector<Ray> rays_for_angle(const ScanGeometry& geom, double angle_rad);
std::vector<Ray> rays_for_view(const ScanGeometry& geom, int view);

// Phantom model: an ordered shape list; later shapes overwrite earlier ones.
struct PhantomShape {
    enum class Type { disc, rect };
    Type type = Type::disc;
    std::string material;
    Vec2 center_mm;
    double radius_mm = 0.0;        // disc
    Vec2 half_extents_mm;          // rect
    double rotation_deg = 0.0;     // rect

    bool contains(Vec2 p) const;
    double bounding_radius_mm() const;  // distance from rotation center to farthest point
};

struct PhantomSpec {
    std::vector<PhantomShape> shapes;

    void validate() const;  // shape parameters only; FOV check needs a geometry
    // Every shape must fit inside the detector half-span circle.
    void validate_fov(const ScanGeometry& geom) const;
};

// Voxel-center sampling into a label volume. materials[0] is "air"; shape
// materials are appended in first-use order and must exist in db.
class MaterialDB;
VoxelVolume rasterize_phantom(const PhantomSpec& spec, const GridSpec& grid,
                              const MaterialDB& db);

}  // namespace bhc
