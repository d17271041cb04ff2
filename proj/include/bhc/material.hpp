#pragma once

#include <map>
#include <string>
#include <vector>

#include "bhc/common.hpp"

// Material model: mass attenuation tables mu/rho(E) in cm^2/g with a bulk
// density, interpolated log-log between samples. The built-in database ships
// the nine default materials; the same tables live as CSV assets under
// data/materials/ and the two must agree (unit-tested).

namespace bhc {

struct Material {
    std::string name;
    double density_g_cm3 = 0.0;
    std::vector<double> energies_keV;      // strictly increasing, >= 8 samples
    std::vector<double> mu_over_rho_cm2g;  // same length, all > 0

    // Throws ValidationError if any invariant is violated: positive density,
    // strictly increasing energies, >= 8 samples, table covering [10, 200] keV.
    void validate() const;

    // mu/rho at an energy inside the table range, log-log interpolated.
    double mass_attenuation(double energy_keV) const;

    // density * mass_attenuation, in 1/cm.
    double linear_attenuation(double energy_keV) const;
};

class MaterialDB {
public:
    void add(Material m);  // validates; rejects duplicate names
    bool contains(const std::string& name) const;
    const Material& at(const std::string& name) const;  // ValidationError if missing
    std::vector<std::string> names() const;             // sorted
    std::size_t size() const { return materials_.size(); }

    const std::map<std::string, Material>& entries() const { return materials_; }

private:
    std::map<std::string, Material> materials_;
};

// The compiled-in default database: air, water, magnesium, silicon, aluminum,
// titanium, iron, copper, cement-analog.
MaterialDB builtin_database();

// Loads a database from a directory holding one <name>.csv per material
// (header "energy_keV,mu_over_rho_cm2_per_g") plus a materials.json manifest
// with the densities.
MaterialDB load_database(const std::string& directory);

}  // namespace bhc
