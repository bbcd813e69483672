#include "patsim/fluxdecor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace patsim {

ModelSpec decoration_model(const LatticeSpec& lattice, double phi1, double phi2, int r, double eta_d, double omega_d,
                           double J_t) {
    ModelSpec m;
    m.lattice = lattice;
    if (m.lattice.coupling.kind == CouplingKind::Explicit && m.lattice.coupling.entries.empty()) {
        for (int a = 0; a < lattice.L1; ++a)
            for (int b = 0; b < lattice.L2; ++b) {
                if (a + 1 < lattice.L1) m.lattice.coupling.entries.push_back({{a + 1, b}, {a, b}, 0, cplx(J_t)});
                if (b + 1 < lattice.L2) m.lattice.coupling.entries.push_back({{a, b + 1}, {a, b}, 0, cplx(J_t)});
            }
    }
    m.mode = Mode::SpinFluxDecoration;
    m.drive.delta_omega = {0.0};
    m.drive.eta_d = {eta_d};
    m.drive.omega_d = omega_d;
    m.drive.r = r;
    m.drive.phi1 = phi1;
    m.drive.phi2 = phi2;
    m.site_disorder_strength = {omega_d * r / 2.0};
    return m;
}

double tile_flux(const Corners& c, double phi1, double phi2, int r, double eta_d) {
    LatticeSpec L;
    L.L1 = 2;
    L.L2 = 2;
    L.coupling.kind = CouplingKind::Explicit;
    const ModelSpec m = decoration_model(L, phi1, phi2, r, eta_d);
    SpinConfiguration s(4);
    s[m.lattice.site_index({0, 0})] = c[0];
    s[m.lattice.site_index({1, 0})] = c[1];
    s[m.lattice.site_index({1, 1})] = c[2];
    s[m.lattice.site_index({0, 1})] = c[3];
    const auto dressed = build_dressed_matrix(m, s);
    return wrap_phase(std::arg(wilson_loop(dressed, unit_plaquette({0, 0}))));
}

std::vector<FluxTile> enumerate_tiles(double phi1, double phi2, int r, double eta_d) {
    std::vector<FluxTile> out;
    for (int code = 0; code < 16; ++code) {
        Corners c;
        for (int k = 0; k < 4; ++k) c[k] = (code >> (3 - k)) & 1 ? -1 : 1;
        out.push_back({c, tile_flux(c, phi1, phi2, r, eta_d)});
    }
    return out;
}

std::vector<double> distinct_fluxes(const std::vector<double>& fluxes, double tol) {
    std::vector<double> out;
    for (double f : fluxes) {
        bool seen = false;
        for (double g : out)
            if (std::abs(std::polar(1.0, f) - std::polar(1.0, g)) < tol) seen = true;
        if (!seen) out.push_back(wrap_phase(f));
    }
    return out;
}

Decoration compile_decoration(const ModelSpec& model, const SpinConfiguration& spins) {
    if (model.mode != Mode::SpinFluxDecoration) throw ValidationError("model.mode", "decoration needs SpinFluxDecoration mode");
    for (double dw : model.drive.delta_omega)
        if (dw != 0.0) throw ValidationError("model.drive.delta_omega", "decorated flux lattices need zero gradient");
    validate(model);
    Decoration d;
    d.model = model;
    d.dressed = build_dressed_matrix(model, spins);
    d.flux = plaquette_flux_map(d.dressed, model.lattice, 0);
    double jmax = 0.0;
    for (const auto& p : enumerate_ordered_pairs(model.lattice, model.num_flavors())) jmax = std::max(jmax, std::abs(p.J));
    d.coupling_over_shift = model.eps(0) > 0 ? jmax / model.eps(0) : std::numeric_limits<double>::infinity();
    return d;
}

Decoration compile_decoration(const LatticeSpec& lattice, const SpinConfiguration& spins, double phi1, double phi2,
                              int r, double eta_d) {
    return compile_decoration(decoration_model(lattice, phi1, phi2, r, eta_d), spins);
}

SpinConfiguration parse_spin_grid(const std::string& grid, int& L1, int& L2) {
    std::vector<std::string> rows;
    std::istringstream is(grid);
    std::string line;
    while (std::getline(is, line)) {
        std::string row;
        for (char c : line)
            if (c == '+' || c == '-') row += c;
            else if (c != ' ' && c != '\t' && c != '\r')
                throw ValidationError("decoration.pattern", std::string("unexpected character '") + c + "'");
        if (!row.empty()) rows.push_back(row);
    }
    if (rows.empty()) throw ValidationError("decoration.pattern", "empty grid");
    for (const auto& r : rows)
        if (r.size() != rows.front().size()) throw ValidationError("decoration.pattern", "rows differ in length");
    L2 = static_cast<int>(rows.size());
    L1 = static_cast<int>(rows.front().size());
    SpinConfiguration s(static_cast<std::size_t>(L1) * L2);
    for (int b = 0; b < L2; ++b)
        for (int a = 0; a < L1; ++a) s[a * L2 + b] = rows[L2 - 1 - b][a] == '+' ? 1 : -1;
    return s;
}

}  // namespace patsim
