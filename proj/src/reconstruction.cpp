#include "bhc/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace bhc {

FilterWindow filter_window_from_string(const std::string& s) {
    if (s == "ramlak") return FilterWindow::ramlak;
    if (s == "hann") return FilterWindow::hann;
    throw ValidationError("fbp: unknown filter window '" + s + "'");
}

const char* to_string(FilterWindow w) {
    return w == FilterWindow::ramlak ? "ramlak" : "hann";
}

namespace {

// In-place iterative radix-2 FFT; n must be a power of two.
void fft(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * std::numbers::pi / static_cast<double>(len) *
                           (inverse ? 1.0 : -1.0);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                const auto u = a[i + j];
                const auto v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse) {
        for (auto& x : a) x /= static_cast<double>(n);
    }
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Frequency response of the band-limited ramp (spatial-domain Ram-Lak kernel
// of Kak & Slaney), optionally Hann-apodized. tau is the detector sample
// spacing in cm.
std::vector<double> ramp_response(std::size_t n, double tau, FilterWindow window) {
    std::vector<std::complex<double>> kernel(n, 0.0);
    kernel[0] = 1.0 / (4.0 * tau * tau);
    for (std::size_t k = 1; k <= n / 2; ++k) {
        double v = 0.0;
        if (k % 2 == 1) {
            const double pk = std::numbers::pi * static_cast<double>(k);
            v = -1.0 / (pk * pk * tau * tau);
        }
        kernel[k] = v;
        kernel[n - k] = v;  // circular wrap of the symmetric kernel
    }
    fft(kernel, false);
    std::vector<double> response(n);
    for (std::size_t k = 0; k < n; ++k) {
        double r = kernel[k].real();  // real by symmetry
        if (window == FilterWindow::hann) {
            const std::size_t sym = std::min(k, n - k);
            r *= 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * static_cast<double>(sym) /
                                       static_cast<double>(n)));
        }
        response[k] = r;
    }
    return response;
}

}  // namespace

ReconImage fbp(const Sinogram& sino, const GridSpec& grid, const FbpOptions& opts) {
    grid.validate();
    const ScanGeometry& geom = sino.geom();
    const std::size_t n_pix = static_cast<std::size_t>(geom.n_detector_pixels);
    const std::size_t n_views = static_cast<std::size_t>(geom.n_angles);
    const double tau = geom.detector_pitch_mm / 10.0;  // cm

    for (double v : sino.values())
        if (!std::isfinite(v)) throw NumericError("fbp: non-finite sinogram entry");

    const std::size_t padded = next_pow2(2 * n_pix);
    const auto response = ramp_response(padded, tau, opts.window);

    // Filter all views: q = tau * IFFT(FFT(pad(p)) * H).
    std::vector<double> filtered(n_views * n_pix);
    parallel_for(n_views, [&](std::size_t b, std::size_t e) {
        std::vector<std::complex<double>> row(padded);
        for (std::size_t view = b; view < e; ++view) {
            std::fill(row.begin(), row.end(), std::complex<double>(0.0, 0.0));
            for (std::size_t i = 0; i < n_pix; ++i)
                row[i] = sino.values()[view * n_pix + i];
            fft(row, false);
            for (std::size_t k = 0; k < padded; ++k) row[k] *= response[k];
            fft(row, true);
            for (std::size_t i = 0; i < n_pix; ++i)
                filtered[view * n_pix + i] = tau * row[i].real();
        }
    });

    ReconImage img;
    img.grid = grid;
    img.values.assign(grid.voxel_count(), 0.0);

    const double scale = std::numbers::pi / static_cast<double>(n_views);
    const double half_index = 0.5 * (geom.n_detector_pixels - 1);
    std::vector<double> cosines(n_views), sines(n_views);
    for (std::size_t v = 0; v < n_views; ++v) {
        cosines[v] = std::cos(geom.angle_rad(static_cast<int>(v)));
        sines[v] = std::sin(geom.angle_rad(static_cast<int>(v)));
    }

    const double fov_radius =
        opts.fov_radius_mm.value_or(0.5 * std::min(grid.nx, grid.ny) * grid.voxel_size_mm);
    if (!(fov_radius > 0.0)) throw ValidationError("fbp: fov radius must be > 0");

    parallel_for(static_cast<std::size_t>(grid.ny), [&](std::size_t b, std::size_t e) {
        for (std::size_t iy = b; iy < e; ++iy) {
            for (int ix = 0; ix < grid.nx; ++ix) {
                const Vec2 p = grid.voxel_center(ix, static_cast<int>(iy));
                if (p.x * p.x + p.y * p.y > fov_radius * fov_radius) continue;
                double acc = 0.0;
                for (std::size_t v = 0; v < n_views; ++v) {
                    // Detector coordinate of this pixel: s = p . (cos a, sin a).
                    const double s_mm = p.x * cosines[v] + p.y * sines[v];
                    const double fi = s_mm / geom.detector_pitch_mm + half_index;
                    const auto i0 = static_cast<std::ptrdiff_t>(std::floor(fi));
                    const double frac = fi - static_cast<double>(i0);
                    const double* row = &filtered[v * n_pix];
                    double q = 0.0;
                    if (i0 >= 0 && i0 + 1 < static_cast<std::ptrdiff_t>(n_pix)) {
                        q = (1.0 - frac) * row[i0] + frac * row[i0 + 1];
                    } else if (i0 == static_cast<std::ptrdiff_t>(n_pix) - 1 && frac == 0.0) {
                        q = row[i0];
                    }
                    acc += q;
                }
                img.at(ix, static_cast<int>(iy)) = scale * acc;
            }
        }
    });
    return img;
}

std::vector<ProfileSample> profile_line(const ReconImage& img, Vec2 p0, Vec2 p1,
                                        int n_samples) {
    img.grid.validate();
    if (n_samples < 2) throw ValidationError("profile: need at least 2 samples");
    const GridSpec& g = img.grid;
    const auto sample = [&](Vec2 p) {
        // Bilinear interpolation between voxel centers.
        const double fx = (p.x - g.origin_mm.x) / g.voxel_size_mm - 0.5;
        const double fy = (p.y - g.origin_mm.y) / g.voxel_size_mm - 0.5;
        const auto ix = static_cast<std::ptrdiff_t>(std::floor(fx));
        const auto iy = static_cast<std::ptrdiff_t>(std::floor(fy));
        if (ix < 0 || iy < 0 || ix + 1 >= g.nx || iy + 1 >= g.ny)
            throw ValidationError("profile: sample outside image");
        const double tx = fx - static_cast<double>(ix);
        const double ty = fy - static_cast<double>(iy);
        const double v00 = img.at(static_cast<int>(ix), static_cast<int>(iy));
        const double v10 = img.at(static_cast<int>(ix) + 1, static_cast<int>(iy));
        const double v01 = img.at(static_cast<int>(ix), static_cast<int>(iy) + 1);
        const double v11 = img.at(static_cast<int>(ix) + 1, static_cast<int>(iy) + 1);
        return (1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10 + (1 - tx) * ty * v01 +
               tx * ty * v11;
    };
    const double len = std::hypot(p1.x - p0.x, p1.y - p0.y);
    std::vector<ProfileSample> out;
    out.reserve(n_samples);
    for (int i = 0; i < n_samples; ++i) {
        const double t = static_cast<double>(i) / (n_samples - 1);
        const Vec2 p = {p0.x + t * (p1.x - p0.x), p0.y + t * (p1.y - p0.y)};
        out.push_back({t * len, sample(p)});
    }
    return out;
}

}  // namespace bhc
