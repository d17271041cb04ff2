#include "bhc/material.hpp"

#include <cmath>
#include <sstream>

namespace bhc {

void Material::validate() const {
    if (name.empty()) throw ValidationError("material: empty name");
    if (!(density_g_cm3 > 0.0))
        throw ValidationError("material '" + name + "': density must be > 0");
    if (energies_keV.size() != mu_over_rho_cm2g.size())
        throw ValidationError("material '" + name + "': table column lengths differ");
    if (energies_keV.size() < 8)
        throw ValidationError("material '" + name + "': need at least 8 samples");
    for (std::size_t i = 0; i < energies_keV.size(); ++i) {
        if (!(mu_over_rho_cm2g[i] > 0.0))
            throw ValidationError("material '" + name + "': mu/rho samples must be > 0");
        if (i > 0 && !(energies_keV[i] > energies_keV[i - 1]))
            throw ValidationError("material '" + name + "': energies must be strictly increasing");
    }
    if (energies_keV.front() > 10.0 || energies_keV.back() < 200.0)
        throw ValidationError("material '" + name + "': table must cover [10, 200] keV");
}

double Material::mass_attenuation(double energy_keV) const {
    if (!(energy_keV >= energies_keV.front() && energy_keV <= energies_keV.back())) {
        std::ostringstream msg;
        msg << "material '" << name << "': energy " << energy_keV
            << " keV outside table range [" << energies_keV.front() << ", "
            << energies_keV.back() << "]";
        throw ValidationError(msg.str());
    }
    // Find the bracketing segment; tables are short, linear scan is fine.
    std::size_t hi = 1;
    while (energies_keV[hi] < energy_keV) ++hi;
    const std::size_t lo = hi - 1;
    if (energy_keV == energies_keV[lo]) return mu_over_rho_cm2g[lo];
    if (energy_keV == energies_keV[hi]) return mu_over_rho_cm2g[hi];
    const double t = (std::log(energy_keV) - std::log(energies_keV[lo])) /
                     (std::log(energies_keV[hi]) - std::log(energies_keV[lo]));
    const double ly = std::log(mu_over_rho_cm2g[lo]) +
                      t * (std::log(mu_over_rho_cm2g[hi]) - std::log(mu_over_rho_cm2g[lo]));
    return std::exp(ly);
}

double Material::linear_attenuation(double energy_keV) const {
    return density_g_cm3 * mass_attenuation(energy_keV);
}

void MaterialDB::add(Material m) {
    m.validate();
    if (materials_.count(m.name))
        throw ValidationError("material db: duplicate material '" + m.name + "'");
    materials_.emplace(m.name, std::move(m));
}

bool MaterialDB::contains(const std::string& name) const { return materials_.count(name) > 0; }

const Material& MaterialDB::at(const std::string& name) const {
    auto it = materials_.find(name);
    if (it == materials_.end())
        throw ValidationError("material db: unknown material '" + name + "'");
    return it->second;
}

std::vector<std::string> MaterialDB::names() const {
    std::vector<std::string> out;
    out.reserve(materials_.size());
    for (const auto& [name, m] : materials_) out.push_back(name);
    return out;
}

}  // namespace bhc
