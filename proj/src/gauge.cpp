#include "patsim/gauge.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace patsim {

LoopPath unit_plaquette(Site c) {
    return {{c, {c.i1 + 1, c.i2}, {c.i1 + 1, c.i2 + 1}, {c.i1, c.i2 + 1}, c}, true};
}

LoopPath double_plaquette(Site c, bool along_e2) {
    if (along_e2)
        return {{c, {c.i1 + 1, c.i2}, {c.i1 + 1, c.i2 + 1}, {c.i1 + 1, c.i2 + 2}, {c.i1, c.i2 + 2}, {c.i1, c.i2 + 1}, c},
                true};
    return {{c, {c.i1 + 1, c.i2}, {c.i1 + 2, c.i2}, {c.i1 + 2, c.i2 + 1}, {c.i1 + 1, c.i2 + 1}, {c.i1, c.i2 + 1}, c},
            true};
}

cplx link_amplitude(const DressedMap& dressed, Site to, Site from, int flavor) {
    if (to > from) {
        auto it = dressed.find({to, from, flavor});
        if (it != dressed.end()) return it->second.value;
    } else if (from > to) {
        auto it = dressed.find({from, to, flavor});
        if (it != dressed.end()) return std::conj(it->second.value);
    }
    throw ValidationError("path", "no coupling between (" + std::to_string(from.i1) + "," + std::to_string(from.i2) +
                                      ") and (" + std::to_string(to.i1) + "," + std::to_string(to.i2) + ")");
}

cplx wilson_loop(const DressedMap& dressed, const LoopPath& path, int flavor) {
    const auto& s = path.sites;
    if (s.size() < 3 || s.front() != s.back()) throw ValidationError("path", "loop must be closed");
    cplx w(1.0, 0.0);
    for (std::size_t k = 0; k + 1 < s.size(); ++k) w *= link_amplitude(dressed, s[k + 1], s[k], flavor);
    return w;
}

FluxMap plaquette_flux_map(const DressedMap& dressed, const LatticeSpec& L, int flavor) {
    FluxMap out;
    double jmax = 0.0;
    for (const auto& [k, v] : dressed)
        if (k.flavor == flavor) jmax = std::max(jmax, std::abs(v.value));
    for (int a = 0; a + 1 < L.L1; ++a) {
        for (int b = 0; b + 1 < L.L2; ++b) {
            const Site c{a, b};
            const auto loop = unit_plaquette(c);
            std::optional<double> flux;
            bool ok = true;
            cplx w(1.0, 0.0);
            for (std::size_t k = 0; k + 1 < loop.sites.size(); ++k) {
                const Site from = loop.sites[k], to = loop.sites[k + 1];
                const LinkKey key = to > from ? LinkKey{to, from, flavor} : LinkKey{from, to, flavor};
                auto it = dressed.find(key);
                if (it == dressed.end() || std::abs(it->second.value) <= 1e-12 * jmax) {
                    ok = false;
                    break;
                }
                w *= to > from ? it->second.value : std::conj(it->second.value);
            }
            if (ok) flux = wrap_phase(std::arg(w));
            out[c] = flux;
        }
    }
    return out;
}

DressedMap apply_gauge_transform(const DressedMap& dressed, const LatticeSpec& L, const std::vector<double>& chi) {
    if (chi.size() != static_cast<std::size_t>(L.num_sites())) throw ValidationError("chi", "one phase per site required");
    DressedMap out;
    for (const auto& [k, v] : dressed) {
        DressedCoupling w = v;
        const double d = chi[L.site_index(k.i)] - chi[L.site_index(k.j)];
        w.value *= std::polar(1.0, d);
        w.phase_factor += d;
        out.emplace(k, w);
    }
    return out;
}

double interference_probability(double flux) {
    return 0.5 * (1.0 + std::cos(flux));
}

std::vector<double> landau_chi(const ModelSpec& model, int flavor) {
    const auto& L = model.lattice;
    const double dw = model.drive.delta_omega[flavor];
    const int rs = model.drive.r * ((dw > 0) - (dw < 0));
    std::vector<double> chi(L.num_sites());
    for (int k = 0; k < L.num_sites(); ++k) {
        const Site s = L.site_at(k);
        chi[k] = rs * model.drive.phi1 * s.i1 * s.i1 / 2.0;
    }
    return chi;
}

DressedMap landau_gauge_couplings(const ModelSpec& model) {
    if (model.mode == Mode::SpinFluxDecoration || model.mode == Mode::SpinBondDisorder)
        throw ValidationError("mode", "Landau construction is defined for spin-independent modes");
    const auto& L = model.lattice;
    DressedMap out;
    for (const auto& p : enumerate_ordered_pairs(L, model.num_flavors())) {
        const auto dc = dressed_coupling(p.J, p.i, p.j, model, p.flavor, std::nullopt);
        if (dc.value == cplx(0.0)) continue;
        const double dw = model.drive.delta_omega[p.flavor];
        const int rs = model.drive.r * ((dw > 0) - (dw < 0));
        const double B0 = rs * model.drive.phi2 / (L.d1 * L.d2);
        // straight segment from r_j to r_i: int A.dr = -B0 * (x_i - x_j) * (y_i + y_j) / 2
        const double dx = (p.i.i1 - p.j.i1) * L.d1, ysum = (p.i.i2 + p.j.i2) * L.d2;
        const double peierls = -B0 * dx * ysum / 2.0;
        DressedCoupling w;
        w.f = dc.f;
        w.amplitude_factor = dc.amplitude_factor;
        w.phase_factor = peierls;
        w.value = p.J * dc.amplitude_factor * std::polar(1.0, peierls);
        out.emplace(LinkKey{p.i, p.j, p.flavor}, w);
    }
    return out;
}

double diagonal_residual(const DressedMap& dressed, int flavor) {
    double axis = 0.0, diag = 0.0;
    for (const auto& [k, v] : dressed) {
        if (k.flavor != flavor) continue;
        const double a = std::abs(v.value);
        if (k.i.i1 == k.j.i1 || k.i.i2 == k.j.i2)
            axis = std::max(axis, a);
        else
            diag = std::max(diag, a);
    }
    return axis > 0 ? diag / axis : 0.0;
}

std::string flux_map_json(const FluxMap& fluxes) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& [c, f] : fluxes) {
        nlohmann::ordered_json e;
        e["corner"] = {c.i1, c.i2};
        if (f)
            e["flux"] = *f;
        else
            e["flux"] = nullptr;
        j.push_back(e);
    }
    return j.dump(2);
}

std::string flux_map_ascii(const FluxMap& fluxes, const LatticeSpec& L) {
    std::string out;
    char buf[32];
    for (int b = L.L2 - 2; b >= 0; --b) {
        for (int a = 0; a + 1 < L.L1; ++a) {
            auto it = fluxes.find({a, b});
            if (it == fluxes.end() || !it->second)
                std::snprintf(buf, sizeof buf, "%7s", "--");
            else {
                const double v = *it->second / pi;
                std::snprintf(buf, sizeof buf, "%7.3f", std::abs(v) < 5e-4 ? 0.0 : v);
            }
            out += buf;
        }
        out += "\n";
    }
    return out;
}

}  // namespace patsim
