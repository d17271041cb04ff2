#include "bhc/spectrum.hpp"

#include <cmath>
#include <sstream>

namespace bhc {

double Spectrum::e_max_keV() const {
    if (weights.empty()) return e_min_keV;
    return energy(weights.size() - 1);
}

void Spectrum::validate() const {
    if (!(de_keV > 0.0)) throw ValidationError("spectrum: bin width must be > 0");
    if (weights.empty()) throw ValidationError("spectrum: no bins");
    if (!(e_min_keV > 0.0)) throw ValidationError("spectrum: e_min must be > 0");
    if (e_max_keV() > 200.0 + 1e-9)
        throw ValidationError("spectrum: top bin above 200 keV exceeds table coverage");
    bool any_positive = false;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0)
            throw ValidationError("spectrum: weights must be finite and >= 0");
        if (w > 0.0) any_positive = true;
    }
    if (!any_positive) throw ValidationError("spectrum: all weights are zero");
}

bool Spectrum::same_grid(const Spectrum& other) const {
    return e_min_keV == other.e_min_keV && de_keV == other.de_keV &&
           weights.size() == other.weights.size();
}

std::uint64_t Spectrum::hash() const {
    Fnv1a h;
    h.update(e_min_keV);
    h.update(de_keV);
    for (double w : weights) h.update(w);
    return h.digest();
}

std::string Spectrum::hash_hex() const {
    Fnv1a h;
    h.update(e_min_keV);
    h.update(de_keV);
    for (double w : weights) h.update(w);
    return h.hex();
}

void DetectorResponse::validate() const {
    if (values.empty()) throw ValidationError("detector response: no bins");
    bool any_positive = false;
    for (double v : values) {
        if (!std::isfinite(v) || v < 0.0)
            throw ValidationError("detector response: values must be finite and >= 0");
        if (v > 0.0) any_positive = true;
    }
    if (!any_positive) throw ValidationError("detector response: all values are zero");
}

bool DetectorResponse::same_grid(const Spectrum& s) const {
    return e_min_keV == s.e_min_keV && de_keV == s.de_keV && values.size() == s.weights.size();
}

DetectorResponse DetectorResponse::flat(const Spectrum& s) {
    DetectorResponse r;
    r.e_min_keV = s.e_min_keV;
    r.de_keV = s.de_keV;
    r.values.assign(s.bins(), 1.0);
    return r;
}

DetectorResponse DetectorResponse::energy_integrating(const Spectrum& s) {
    DetectorResponse r;
    r.e_min_keV = s.e_min_keV;
    r.de_keV = s.de_keV;
    r.values.resize(s.bins());
    for (std::size_t i = 0; i < s.bins(); ++i) r.values[i] = s.energy(i);
    return r;
}

Spectrum generate_tube_spectrum(double kvp, double anode_z, double de_keV) {
    if (!(kvp >= 40.0 && kvp <= 200.0))
        throw ValidationError("tube spectrum: kvp must be in [40, 200]");
    if (!(anode_z > 0.0)) throw ValidationError("tube spectrum: anode_z must be > 0");
    if (!(de_keV > 0.0)) throw ValidationError("tube spectrum: de must be > 0");
    Spectrum s;
    s.e_min_keV = 10.0;
    s.de_keV = de_keV;
    const auto n = static_cast<std::size_t>(std::floor((kvp - 10.0) / de_keV + 1e-9)) + 1;
    s.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double e = s.energy(i);
        s.weights[i] = std::max(0.0, anode_z * (kvp - e) / e);
    }
    s.validate();
    return s;
}

Spectrum filter_spectrum(const Spectrum& s, const Material& filter, double thickness_mm) {
    s.validate();
    if (!(thickness_mm >= 0.0))
        throw ValidationError("filter_spectrum: thickness must be >= 0");
    Spectrum out = s;
    const double t_cm = thickness_mm / 10.0;
    for (std::size_t i = 0; i < s.bins(); ++i) {
        if (out.weights[i] == 0.0) continue;
        out.weights[i] *= std::exp(-filter.linear_attenuation(s.energy(i)) * t_cm);
    }
    out.validate();
    return out;
}

double mean_energy(const Spectrum& s) {
    s.validate();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < s.bins(); ++i) {
        num += s.energy(i) * s.weights[i];
        den += s.weights[i];
    }
    if (!(den > 0.0)) throw NumericError("mean_energy: zero total weight");
    return num / den;
}

std::vector<FilterSpec> default_filter_family() {
    return {
        {"aluminum", 0.0}, {"aluminum", 1.0}, {"aluminum", 2.0}, {"aluminum", 4.0},
        {"copper", 0.1},   {"copper", 0.25},  {"copper", 0.5},   {"copper", 1.0},
    };
}

std::vector<Spectrum> make_filtered_family(const Spectrum& base,
                                           const std::vector<FilterSpec>& filters,
                                           const MaterialDB& db) {
    base.validate();
    if (filters.empty()) throw ValidationError("make_filtered_family: empty filter list");
    std::vector<Spectrum> out;
    out.reserve(filters.size());
    for (const auto& f : filters)
        out.push_back(filter_spectrum(base, db.at(f.material), f.thickness_mm));
    return out;
}

}  // namespace bhc
