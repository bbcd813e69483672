#include "patsim/modulation.hpp"

#include "patsim/bessel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <iomanip>

namespace patsim {

namespace {

// J_n(x) for any integer n, from a table of J_0..J_N at |x|
double lookup(const std::vector<double>& tab, int n, bool negx) {
    const int an = std::abs(n);
    if (an >= static_cast<int>(tab.size())) return 0.0;
    double v = tab[an];
    int parity = 0;
    if (n < 0) parity += an;
    if (negx) parity += an;
    return (parity % 2) ? -v : v;
}

int sgn(double x) { return (x > 0) - (x < 0); }

}  // namespace

int modulation_cutoff(int chi, double zeta, double xi) {
    const double m = std::max(std::abs(zeta), std::abs(xi));
    return std::max(20, static_cast<int>(std::ceil(3.0 * m)) + std::abs(chi) + 20);
}

cplx modulation_amplitude(int chi, double zeta, double xi, double theta) {
    const int S = modulation_cutoff(chi, zeta, xi);
    const int N = S + std::abs(chi) + 1;
    const auto tz = bessel_j_table(N, std::abs(zeta));
    const auto tx = bessel_j_table(N, std::abs(xi));
    cplx sum(0.0, 0.0);
    for (int s = -S; s <= S; ++s) {
        const double a = lookup(tz, s, zeta < 0) * lookup(tx, s + chi, xi < 0);
        if (a == 0.0) continue;
        sum += a * std::polar(1.0, (s + 0.5 * chi) * theta);
    }
    return sum;
}

int f_exponent(Site i, Site j, const ModelSpec& model, int flavor,
               const std::optional<SpinConfiguration>& spins) {
    const int r = model.drive.r;
    switch (model.mode) {
    case Mode::SpinFluxDecoration: {
        if (!spins) throw ValidationError("spins", "SpinFluxDecoration needs a spin configuration");
        const auto& L = model.lattice;
        const int si = (*spins)[L.site_index(i)], sj = (*spins)[L.site_index(j)];
        return r * (si - sj) / 2;
    }
    default:
        return r * sgn(model.drive.delta_omega[flavor]) * (i.i1 - j.i1);
    }
}

DressedCoupling dressed_coupling(cplx J_t, Site i, Site j, const ModelSpec& model, int flavor,
                                 const std::optional<SpinConfiguration>& spins) {
    if (!(i > j)) throw std::invalid_argument("dressed_coupling: requires i > j");
    const auto& d = model.drive;
    const int f = f_exponent(i, j, model, flavor, spins);
    double a = d.eta_d[flavor], b = d.eta_d[flavor];
    if (model.mode == Mode::SpinBondDisorder) {
        if (!spins) throw ValidationError("spins", "SpinBondDisorder needs a spin configuration");
        const auto& L = model.lattice;
        a *= (*spins)[L.site_index(i)];
        b *= (*spins)[L.site_index(j)];
    }
    const double pi_ = phase_at_site(d, i), pj = phase_at_site(d, j);
    DressedCoupling out;
    out.f = f;
    out.amplitude_factor = modulation_amplitude(f, a, b, pi_ - pj);
    out.phase_factor = -0.5 * f * (pi_ + pj);
    out.value = J_t * out.amplitude_factor * std::polar(1.0, out.phase_factor);
    return out;
}

DressedMap build_dressed_matrix(const ModelSpec& model, const std::optional<SpinConfiguration>& spins) {
    validate_spins(model, spins);
    DressedMap out;
    for (const auto& p : enumerate_ordered_pairs(model.lattice, model.num_flavors())) {
        auto dc = dressed_coupling(p.J, p.i, p.j, model, p.flavor, spins);
        if (dc.value == cplx(0.0)) continue;
        out.emplace(LinkKey{p.i, p.j, p.flavor}, dc);
    }
    return out;
}

std::string dressed_to_json(const DressedMap& map, const ModelSpec& model) {
    std::ostringstream os;
    os << std::setprecision(15) << "[";
    bool first = true;
    for (const auto& [k, v] : map) {
        if (!first) os << ",";
        first = false;
        os << "\n  {\"i\":[" << k.i.i1 << "," << k.i.i2 << "],\"j\":[" << k.j.i1 << "," << k.j.i2
           << "],\"flavor\":\"" << model.flavors[k.flavor] << "\",\"re\":" << v.value.real()
           << ",\"im\":" << v.value.imag() << "}";
    }
    os << "\n]\n";
    return os.str();
}

}  // namespace patsim
