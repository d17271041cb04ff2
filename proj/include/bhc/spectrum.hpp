#pragma once

#include <string>
#include <vector>

#include "bhc/material.hpp"

// Polychromatic source model on a uniform energy grid. The tube continuum is
// a Kramers-law shape; beam filters attenuate it per Beer-Lambert with the
// filter material's table. Weights are relative photon counts per bin; any
// overall scale cancels in attenuation projections.

namespace bhc {

struct Spectrum {
    double e_min_keV = 10.0;
    double de_keV = 1.0;
    std::vector<double> weights;  // >= 0, at least one positive

    std::size_t bins() const { return weights.size(); }
    double energy(std::size_t i) const { return e_min_keV + static_cast<double>(i) * de_keV; }
    double e_max_keV() const;

    // Uniform grid, de > 0, all weights finite and >= 0, at least one > 0,
    // top energy <= 200 keV (table coverage).
    void validate() const;

    bool same_grid(const Spectrum& other) const;

    std::uint64_t hash() const;
    std::string hash_hex() const;
};

// Per-bin detector efficiency on the same grid as a spectrum. The default is
// a flat (photon-counting) response; energy_integrating weights each bin by
// its energy.
struct DetectorResponse {
    double e_min_keV = 10.0;
    double de_keV = 1.0;
    std::vector<double> values;  // >= 0, at least one positive

    void validate() const;
    bool same_grid(const Spectrum& s) const;

    static DetectorResponse flat(const Spectrum& s);
    static DetectorResponse energy_integrating(const Spectrum& s);
};

// Kramers continuum: weight(E) = anode_z * (kvp - E) / E on [10, kvp], zero
// elsewhere. kvp must lie in [40, 200]; the grid runs from 10 keV up to the
// largest bin <= kvp in steps of de.
Spectrum generate_tube_spectrum(double kvp, double anode_z, double de_keV = 1.0);

// Beer-Lambert filtration: weight *= exp(-mu_material(E) * thickness).
// Thickness in mm (>= 0); attenuation tables are per cm.
Spectrum filter_spectrum(const Spectrum& s, const Material& filter, double thickness_mm);

// Weight-averaged energy. Throws NumericError if all weights are zero.
double mean_energy(const Spectrum& s);

struct FilterSpec {
    std::string material;
    double thickness_mm = 0.0;
};

// The eight default candidate filtrations: Al 0/1/2/4 mm and Cu 0.1/0.25/0.5/1 mm.
std::vector<FilterSpec> default_filter_family();

// Applies each filter spec to the base spectrum, preserving order.
std::vector<Spectrum> make_filtered_family(const Spectrum& base,
                                           const std::vector<FilterSpec>& filters,
                                           const MaterialDB& db);

}  // namespace bhc
