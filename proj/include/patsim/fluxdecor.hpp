#pragma once

#include "patsim/gauge.hpp"

#include <array>
#include <string>
#include <vector>

namespace patsim {

// Corner order, counterclockwise from the lower-left site:
//
//   c3 ---- c2        c0 = (i1,   i2)     c1 = (i1+1, i2)
//   |        |        c2 = (i1+1, i2+1)   c3 = (i1,   i2+1)
//   c0 ---- c1
using Corners = std::array<int, 4>;

struct FluxTile {
    Corners spin_corners{};
    double flux = 0.0;
};

// The model used for tiles and decorations: zero gradient, omega_d * r = 2 eps,
// nearest-neighbour couplings J_t along both axes (when the lattice brings none).
ModelSpec decoration_model(const LatticeSpec& lattice, double phi1, double phi2, int r, double eta_d = 1.0,
                           double omega_d = 0.5, double J_t = 0.01);

double tile_flux(const Corners& spins, double phi1, double phi2, int r, double eta_d = 1.0);

// All 16 corner tuples, in binary order with +1 before -1 per corner.
std::vector<FluxTile> enumerate_tiles(double phi1, double phi2, int r, double eta_d = 1.0);

// Distinct values of a flux list compared on exp(i flux) with tolerance `tol`.
std::vector<double> distinct_fluxes(const std::vector<double>& fluxes, double tol = 1e-9);

struct Decoration {
    FluxMap flux;
    DressedMap dressed;
    ModelSpec model;
    double coupling_over_shift = 0.0;  // max |J_t| / eps; the construction assumes this is small
};

// Requires a model with zero gradient in SpinFluxDecoration mode.
Decoration compile_decoration(const ModelSpec& model, const SpinConfiguration& spins);
Decoration compile_decoration(const LatticeSpec& lattice, const SpinConfiguration& spins, double phi1, double phi2,
                              int r, double eta_d = 1.0);

// ASCII grid of '+'/'-' rows; the first text row is the top row (largest i2).
// Returns the lattice dimensions through L1/L2 and the spins in site-index order.
SpinConfiguration parse_spin_grid(const std::string& grid, int& L1, int& L2);

}  // namespace patsim
