#pragma once

#include <string>
#include <vector>

#include "bhc/reconstruction.hpp"

// Image-quality figures used to judge a correction: cupping across a
// homogeneous region, streak strength between dense inserts, RMS distances,
// and per-material plateau statistics on eroded label regions.

namespace bhc {

enum class RoiType { disc, annulus, rect };

const char* to_string(RoiType t);
RoiType roi_type_from_string(const std::string& s);

// World-coordinate region; membership is tested at voxel centers.
struct Roi {
    RoiType type = RoiType::disc;
    std::string name;
    Vec2 center_mm{0.0, 0.0};
    double radius_mm = 0.0;                 // disc
    double r_inner_mm = 0.0;                // annulus
    double r_outer_mm = 0.0;                // annulus
    Vec2 half_extents_mm{0.0, 0.0};         // rect, axis aligned

    void validate() const;
    bool contains(const Vec2& p) const;
};

struct RoiStats {
    double mean = 0.0;
    double stddev = 0.0;  // population
    double min = 0.0;
    double max = 0.0;
    std::size_t n = 0;
};

// Throws NumericError when no voxel center falls inside the region.
RoiStats roi_stats(const ReconImage& img, const Roi& roi);
double roi_mean(const ReconImage& img, const Roi& roi);

// 100 * (edge - center) / edge: positive when the interior is depressed
// relative to the rim, the classic cupping signature.
double cupping_percent(const ReconImage& img, const Roi& center, const Roi& edge);

// Standard deviation inside the region; tracks streak strength when the
// region sits on otherwise homogeneous background between dense inserts.
double streak_index(const ReconImage& img, const Roi& roi);

double rms_difference(const ReconImage& a, const ReconImage& b);
double rms_difference(const Sinogram& a, const Sinogram& b);

// Interior of each labeled material region, eroded so every kept voxel is
// more than margin_mm from any voxel of a different label (or the grid edge).
struct PlateauRoi {
    int label = 0;
    std::string material;
    std::vector<std::uint8_t> mask;  // 1 = inside the eroded region
    std::size_t n = 0;
};

std::vector<PlateauRoi> plateau_rois(const VoxelVolume& labels, double margin_mm);
RoiStats masked_stats(const ReconImage& img, const std::vector<std::uint8_t>& mask);

}  // namespace bhc
