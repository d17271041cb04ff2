#include "bhc/material.hpp"

// Generated from data/materials/*.csv (version 1). Keep in sync; the unit
// tests compare this table against the CSV assets.

namespace bhc {
namespace {

constexpr double table_energies[] = {
    10, 12.5, 15, 17.5, 20, 25, 30, 35, 40, 50, 60, 70, 80, 100, 125, 150, 200};

constexpr double air_mu_rho[] = {
    5.12, 2.712, 1.614, 1.092, 0.7779, 0.5042, 0.3538, 0.2928, 0.2485, 0.208, 0.1875,
    0.1758, 0.1662, 0.1541, 0.1436, 0.1356, 0.1233};
constexpr double aluminum_mu_rho[] = {
    26.23, 13.6, 7.955, 5.077, 3.441, 1.863, 1.128, 0.7814, 0.5685, 0.3681, 0.2778,
    0.2341, 0.2018, 0.1704, 0.1516, 0.1378, 0.1223};
constexpr double cement_analog_mu_rho[] = {
    26.75, 13.93, 8.173, 5.228, 3.55, 1.928, 1.171, 0.8132, 0.593, 0.3856, 0.292,
    0.2466, 0.213, 0.1803, 0.1607, 0.1462, 0.1299};
constexpr double copper_mu_rho[] = {
    215.9, 119.8, 74.05, 48.63, 33.79, 18.15, 10.92, 7.078, 4.862, 2.613, 1.593,
    1.074, 0.763, 0.4584, 0.3073, 0.2217, 0.1559};
constexpr double iron_mu_rho[] = {
    170.6, 93.39, 57.08, 37.21, 25.68, 13.68, 8.176, 5.291, 3.629, 1.958, 1.205,
    0.8257, 0.5952, 0.3717, 0.2616, 0.1964, 0.146};
constexpr double magnesium_mu_rho[] = {
    20.99, 10.88, 6.358, 4.068, 2.763, 1.518, 0.9306, 0.6586, 0.4881, 0.3292, 0.257,
    0.2217, 0.1951, 0.1686, 0.1518, 0.1394, 0.1245};
constexpr double silicon_mu_rho[] = {
    33.89, 17.63, 10.34, 6.592, 4.464, 2.391, 1.436, 0.978, 0.7012, 0.4385, 0.3207,
    0.2638, 0.2228, 0.1835, 0.1611, 0.1448, 0.1275};
constexpr double titanium_mu_rho[] = {
    110.7, 58.56, 34.8, 22.83, 15.85, 8.374, 4.972, 3.223, 2.214, 1.213, 0.7661,
    0.5446, 0.4052, 0.2721, 0.2066, 0.1649, 0.1314};
constexpr double water_mu_rho[] = {
    5.329, 2.817, 1.673, 1.134, 0.8096, 0.5305, 0.3756, 0.3136, 0.2683, 0.2269,
    0.2059, 0.1937, 0.1837, 0.1707, 0.1593, 0.1505, 0.137};

Material make(const char* name, double density, const double (&mu_rho)[17]) {
    Material m;
    m.name = name;
    m.density_g_cm3 = density;
    m.energies_keV.assign(std::begin(table_energies), std::end(table_energies));
    m.mu_over_rho_cm2g.assign(std::begin(mu_rho), std::end(mu_rho));
    return m;
}

}  // namespace

MaterialDB builtin_database() {
    MaterialDB db;
    db.add(make("air", 0.001205, air_mu_rho));
    db.add(make("water", 1.000, water_mu_rho));
    db.add(make("magnesium", 1.740, magnesium_mu_rho));
    db.add(make("aluminum", 2.699, aluminum_mu_rho));
    db.add(make("silicon", 2.330, silicon_mu_rho));
    db.add(make("titanium", 4.540, titanium_mu_rho));
    db.add(make("iron", 7.874, iron_mu_rho));
    db.add(make("copper", 8.960, copper_mu_rho));
    db.add(make("cement-analog", 2.250, cement_analog_mu_rho));
    return db;
}

}  // namespace bhc
