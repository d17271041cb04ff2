#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bhc/projection.hpp"

// Filtered backprojection for the parallel geometry. Filtering happens in the
// frequency domain on rows zero-padded to the next power of two >= twice the
// detector width, using the band-limited ramp kernel (optionally Hann
// apodized); backprojection is pixel-driven with linear detector
// interpolation. Output is linear attenuation in 1/cm; scaling is exact for
// the continuum model, verified against analytic discs in the tests.

namespace bhc {

enum class FilterWindow { ramlak, hann };

FilterWindow filter_window_from_string(const std::string& s);
const char* to_string(FilterWindow w);

// Reconstructed slice on a world-coordinate grid, values in 1/cm.
struct ReconImage {
    GridSpec grid;
    std::vector<double> values;
    std::vector<std::pair<std::string, std::string>> provenance;

    double& at(int ix, int iy) { return values[static_cast<std::size_t>(iy) * grid.nx + ix]; }
    double at(int ix, int iy) const {
        return values[static_cast<std::size_t>(iy) * grid.nx + ix];
    }
};

struct FbpOptions {
    FilterWindow window = FilterWindow::ramlak;
    // Radius of the circular support mask; voxels with centers outside are set
    // to zero. Default: the inscribed circle of the grid.
    std::optional<double> fov_radius_mm;
};

ReconImage fbp(const Sinogram& sino, const GridSpec& grid, const FbpOptions& opts = {});

// Bilinear samples along the segment p0 -> p1 (world mm). Both endpoints must
// lie inside the interpolable region of the grid.
struct ProfileSample {
    double position_mm;  // distance from p0
    double value;
};
std::vector<ProfileSample> profile_line(const ReconImage& img, Vec2 p0, Vec2 p1,
                                        int n_samples);

}  // namespace bhc
