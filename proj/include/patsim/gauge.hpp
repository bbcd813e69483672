#pragma once

#include "patsim/modulation.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace patsim {

// Closed lattice path; sites.front() == sites.back().
struct LoopPath {
    std::vector<Site> sites;
    bool counterclockwise = true;
};

LoopPath unit_plaquette(Site corner);
// two unit cells stacked along e2 (tall) or along e1 (wide), through nearest-neighbour links only
LoopPath double_plaquette(Site corner, bool along_e2 = true);

// Amplitude for hopping b -> a: J_{a,b} if a > b, conj(J_{b,a}) otherwise.
// Throws ValidationError when a link has no coupling.
cplx link_amplitude(const DressedMap& dressed, Site to, Site from, int flavor);

// Product of hopping amplitudes along the path.
cplx wilson_loop(const DressedMap& dressed, const LoopPath& path, int flavor = 0);

// Flux of every unit plaquette keyed by its lower-left corner, in (-pi, pi].
// Plaquettes with a vanishing link (relative to the largest coupling) map to nullopt.
using FluxMap = std::map<Site, std::optional<double>>;
FluxMap plaquette_flux_map(const DressedMap& dressed, const LatticeSpec& lattice, int flavor = 0);

DressedMap apply_gauge_transform(const DressedMap& dressed, const LatticeSpec& lattice, const std::vector<double>& chi);

double interference_probability(double flux);

// chi_i = r_sigma * phi1 * i1^2 / 2 with r_sigma = r * sgn(delta_omega_sigma)
std::vector<double> landau_chi(const ModelSpec& model, int flavor);

// Peierls construction: amplitude J_t * F_f(eta, eta, dphi) times exp(i e* int A.dr) with
// A = -B0 y e1, B0 = r_sigma phi2 / (e* d1 d2), e* = 1, along straight segments.
DressedMap landau_gauge_couplings(const ModelSpec& model);

// Largest |J| on a non-axis link relative to the largest axis-link |J|.
double diagonal_residual(const DressedMap& dressed, int flavor = 0);

std::string flux_map_json(const FluxMap& fluxes);
// one row per i2 (top row = largest i2), one cell per plaquette, flux in units of pi
std::string flux_map_ascii(const FluxMap& fluxes, const LatticeSpec& lattice);

}  // namespace patsim
