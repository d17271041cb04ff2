#pragma once

#include <vector>

#include "bhc/reconstruction.hpp"

// Multi-level Otsu thresholding of reconstructed slices. Thresholds maximize
// between-class variance by exhaustive search over histogram bin edges, which
// is exact and fast enough for <= 4 classes on a 256-bin histogram. Class 0
// (below the first threshold) is background/air and never becomes a material
// class.

namespace bhc {

struct Histogram {
    std::vector<double> edges;    // bin i covers [edges[i], edges[i+1])
    std::vector<std::uint64_t> counts;

    void validate() const;
};

// 256 bins over [0, max(image)]; the top edge is inclusive so the maximum
// lands in the last bin. Values below zero clamp into the first bin.
Histogram image_histogram(const ReconImage& img, int bins = 256);

// n_classes in [2, 4] -> n_classes - 1 threshold values taken at bin edges,
// strictly increasing. Ties in the objective resolve to the lexicographically
// smallest edge tuple. Requires at least n_classes non-empty bins.
std::vector<double> otsu_thresholds(const Histogram& hist, int n_classes);

struct SegmentationResult {
    std::vector<double> thresholds;        // ascending
    std::vector<VoxelVolume> class_volumes;  // one per foreground class, original
                                             // values inside the class, zero outside
    std::vector<std::uint8_t> background;    // 1 where the voxel fell below thresholds[0]
};

// Class c (1-based over the foreground) holds voxels with
// thresholds[c-1] <= value < thresholds[c]; the top class is unbounded above.
SegmentationResult split_materials(const ReconImage& img,
                                   const std::vector<double>& thresholds);

// 10%-trimmed mean over the class support (its nonzero voxels). Throws
// NumericError for an empty class.
double measured_mu(const VoxelVolume& class_volume);

}  // namespace bhc
