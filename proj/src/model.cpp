#include "patsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace patsim {

std::string to_string(Mode m) {
    switch (m) {
    case Mode::PlainPAT: return "PlainPAT";
    case Mode::SpinBondDisorder: return "SpinBondDisorder";
    case Mode::SpinSiteDisorder: return "SpinSiteDisorder";
    case Mode::SpinFluxDecoration: return "SpinFluxDecoration";
    case Mode::NonAbelian: return "NonAbelian";
    }
    return "?";
}

Mode mode_from_string(const std::string& s) {
    for (Mode m : {Mode::PlainPAT, Mode::SpinBondDisorder, Mode::SpinSiteDisorder,
                   Mode::SpinFluxDecoration, Mode::NonAbelian})
        if (to_string(m) == s) return m;
    throw ValidationError("mode", "unknown mode '" + s + "'");
}

double ModelSpec::U(int site, int f, int g) const {
    if (onsite_interactions.empty()) return 0.0;
    const int nf = num_flavors();
    return onsite_interactions[(static_cast<std::size_t>(site) * nf + f) * nf + g];
}

double ModelSpec::eps(int f) const {
    return site_disorder_strength.empty() ? 0.0 : site_disorder_strength[f];
}

double ModelSpec::offset(int f) const {
    return omega0.empty() ? 1.0 : omega0[f];
}

bool ModelSpec::needs_spins() const {
    return mode == Mode::SpinBondDisorder || mode == Mode::SpinSiteDisorder ||
           mode == Mode::SpinFluxDecoration;
}

namespace {

void require(bool ok, const std::string& path, const std::string& what) {
    if (!ok) throw ValidationError(path, what);
}

bool close_rel(double a, double b, double rel) {
    return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace

void validate(const ModelSpec& m) {
    const int nf = m.num_flavors();
    require(nf >= 1, "model.flavors", "at least one flavor required");
    const auto& L = m.lattice;
    require(L.L1 >= 1 && L.L2 >= 1, "model.lattice.dims", "dimensions must be positive");
    require(L.d1 > 0 && L.d2 > 0, "model.lattice.spacings", "spacings must be positive");
    if (L.coupling.kind == CouplingKind::Dipolar) {
        require(L.coupling.cutoff_range >= 1, "model.lattice.coupling.cutoff_range", "must be >= 1");
        require(std::isfinite(L.coupling.J0), "model.lattice.coupling.J0", "must be finite");
    } else {
        std::map<std::tuple<Site, Site, int>, cplx> seen;
        for (std::size_t k = 0; k < L.coupling.entries.size(); ++k) {
            const auto& e = L.coupling.entries[k];
            const std::string p = "model.lattice.coupling.entries[" + std::to_string(k) + "]";
            require(L.contains(e.i) && L.contains(e.j), p, "site outside lattice");
            require(e.i != e.j, p, "self coupling");
            require(e.flavor >= 0 && e.flavor < nf, p + ".flavor", "unknown flavor");
            Site a = e.i, b = e.j;
            cplx J = e.J;
            if (a < b) { std::swap(a, b); J = std::conj(J); }
            auto key = std::make_tuple(a, b, e.flavor);
            auto it = seen.find(key);
            if (it != seen.end())
                require(std::abs(it->second - J) < 1e-14, p, "conflicting duplicate entry (coupling must be Hermitian)");
            seen[key] = J;
        }
    }
    const auto& d = m.drive;
    require(d.delta_omega.size() == static_cast<std::size_t>(nf), "model.drive.delta_omega", "one value per flavor required");
    require(d.eta_d.size() == static_cast<std::size_t>(nf), "model.drive.eta_d", "one value per flavor required");
    require(d.r >= 1, "model.drive.r", "must be a positive integer");
    require(d.omega_d >= 0 && std::isfinite(d.omega_d), "model.drive.omega_d", "must be finite and non-negative");
    if (!m.omega0.empty())
        require(m.omega0.size() == static_cast<std::size_t>(nf), "model.omega0", "one value per flavor required");
    if (!m.site_disorder_strength.empty())
        require(m.site_disorder_strength.size() == static_cast<std::size_t>(nf), "model.site_disorder_strength", "one value per flavor required");
    if (!m.onsite_interactions.empty()) {
        require(m.onsite_interactions.size() == static_cast<std::size_t>(L.num_sites()) * nf * nf,
                "model.onsite_interactions", "expected sites*flavors*flavors entries");
        for (int s = 0; s < L.num_sites(); ++s)
            for (int f = 0; f < nf; ++f)
                for (int g = 0; g < nf; ++g)
                    require(m.U(s, f, g) == m.U(s, g, f), "model.onsite_interactions", "U must be symmetric in flavors");
    }

    if (m.mode == Mode::SpinFluxDecoration) {
        for (int f = 0; f < nf; ++f) {
            require(d.delta_omega[f] == 0.0, "model.drive.delta_omega", "SpinFluxDecoration requires zero gradient");
            require(close_rel(d.omega_d * d.r, 2.0 * m.eps(f), 1e-9), "model.drive.omega_d",
                    "SpinFluxDecoration requires omega_d*r = 2*epsilon");
        }
    } else {
        for (int f = 0; f < nf; ++f) {
            if (d.delta_omega[f] == 0.0) continue;
            require(close_rel(d.omega_d * d.r, std::abs(d.delta_omega[f]), 1e-9), "model.drive.omega_d",
                    "resonance omega_d*r = |delta_omega| violated for flavor '" + m.flavors[f] + "'");
        }
    }
    if (m.mode == Mode::NonAbelian)
        require(nf >= 2, "model.flavors", "NonAbelian mode needs at least two flavors");
}

void validate_spins(const ModelSpec& m, const std::optional<SpinConfiguration>& spins) {
    if (!spins) {
        if (m.needs_spins()) throw ValidationError("spins", "mode " + to_string(m.mode) + " requires a spin configuration");
        return;
    }
    require(spins->size() == static_cast<std::size_t>(m.lattice.num_sites()), "spins", "length must equal number of sites");
    for (int s : *spins) require(s == 1 || s == -1, "spins", "entries must be +1 or -1");
}

std::vector<BarePair> enumerate_ordered_pairs(const LatticeSpec& L, int num_flavors) {
    if (L.num_sites() <= 0) throw ValidationError("lattice.dims", "lattice has no sites");
    std::vector<BarePair> out;
    if (L.coupling.kind == CouplingKind::Explicit) {
        std::map<std::tuple<Site, Site, int>, cplx> acc;
        for (const auto& e : L.coupling.entries) {
            Site a = e.i, b = e.j;
            cplx J = e.J;
            if (a < b) { std::swap(a, b); J = std::conj(J); }
            acc[{a, b, e.flavor}] = J;
        }
        for (const auto& [key, J] : acc)
            if (J != cplx(0.0)) out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), J});
        return out;
    }
    const double dmin = std::min(L.d1, L.d2);
    const double reach = L.coupling.cutoff_range * dmin * (1.0 + 1e-12);
    const int n = L.num_sites();
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < a; ++b) {
            const Site i = L.site_at(a), j = L.site_at(b);
            const double dx = (i.i1 - j.i1) * L.d1, dy = (i.i2 - j.i2) * L.d2;
            const double dist = std::hypot(dx, dy);
            if (dist > reach || L.coupling.J0 == 0.0) continue;
            const double J = L.coupling.J0 * std::pow(dmin / dist, 3);
            for (int f = 0; f < num_flavors; ++f) out.push_back({i, j, f, cplx(J, 0.0)});
        }
    }
    return out;
}

double phase_at_site(const DriveSpec& d, Site i) {
    return d.phi1 * i.i1 + d.phi2 * i.i2;
}

double wrap_phase(double x) {
    double y = std::remainder(x, 2.0 * pi);
    if (y <= -pi) y += 2.0 * pi;
    return y;
}

}  // namespace patsim
