#include "patsim/ionmap.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace patsim {

namespace {

constexpr double coulomb_k_e2 = 8.9875517923e9 * 1.602176634e-19 * 1.602176634e-19;  // J m
constexpr double amu = 1.66053906660e-27;                                             // kg

int axis_index(const std::string& a) {
    if (a == "x") return 0;
    if (a == "y") return 1;
    if (a == "z") return 2;
    throw ValidationError("ion.axes", "unknown axis '" + a + "' (expected x, y or z)");
}

double lookup(const std::map<std::string, double>& m, const std::string& k, double fallback = 0.0) {
    auto it = m.find(k);
    return it == m.end() ? fallback : it->second;
}

std::array<double, 3> position(const IonArrayParams& p, Site s) {
    return {s.i1 * p.d1, s.i2 * p.d2, 0.0};
}

// Off-diagonal element of the Coulomb tensor for the separation r, axis a.
double tensor_element(const std::array<double, 3>& r, int a, double kq2) {
    const double r2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
    if (r2 == 0.0) throw ValidationError("ion.spacing", "coincident ion positions");
    const double d = std::sqrt(r2);
    return 0.5 * kq2 * (1.0 / (d * r2) - 3.0 * r[a] * r[a] / (r2 * r2 * d));
}

double local_omega(const IonArrayParams& p, Site s, const std::string& axis) {
    return 2.0 * pi * (lookup(p.trap_hz, axis) + lookup(p.gradient_hz, axis) * s.i1);
}

}  // namespace

void validate(const IonArrayParams& p) {
    if (p.axes.empty()) throw ValidationError("ion.axes", "at least one axis required");
    for (const auto& a : p.axes) {
        axis_index(a);
        auto it = p.trap_hz.find(a);
        if (it == p.trap_hz.end()) throw ValidationError("ion.trap_hz." + a, "missing trap frequency for a used axis");
        if (!(it->second > 0.0)) throw ValidationError("ion.trap_hz." + a, "must be positive");
        const double eta = lookup(p.lamb_dicke, a);
        if (!(eta >= 0.0 && eta < 1.0)) throw ValidationError("ion.lamb_dicke." + a, "must lie in [0, 1)");
        const double low = lookup(p.trap_hz, a) + std::min(0.0, lookup(p.gradient_hz, a) * (p.L1 - 1));
        if (!(low > 0.0)) throw ValidationError("ion.gradient_hz." + a, "gradient drives a trap frequency to zero");
    }
    for (const auto& [k, v] : p.trap_hz) {
        axis_index(k);
        if (!(v > 0.0)) throw ValidationError("ion.trap_hz." + k, "must be positive");
    }
    if (p.L1 < 1 || p.L2 < 1) throw ValidationError("ion.L1", "lattice dimensions must be positive");
    if (!(p.d1 > 0.0) || !(p.d2 > 0.0)) throw ValidationError("ion.d1", "spacings must be positive");
    if (!(p.mass_amu > 0.0)) throw ValidationError("ion.mass_amu", "must be positive");
    if (!(p.beatnote_hz >= 0.0)) throw ValidationError("ion.beatnote_hz", "must be non-negative");
    if (!(p.rabi_hz >= 0.0)) throw ValidationError("ion.rabi_hz", "must be non-negative");
    if (p.cutoff_range < 1) throw ValidationError("ion.cutoff_range", "must be at least 1");
    if (p.reference_hz && !(*p.reference_hz > 0.0)) throw ValidationError("ion.reference_hz", "must be positive");
    if (p.sideband && !(p.sideband->detuning_hz > 0.0))
        throw ValidationError("ion.sideband.detuning_hz", "must be positive");
}

double reference_frequency_hz(const IonArrayParams& p) {
    if (p.reference_hz) return *p.reference_hz;
    return lookup(p.trap_hz, p.axes.at(0), 1.0);
}

double coulomb_coupling(const IonArrayParams& p, Site i, Site j, const std::string& axis) {
    if (i == j) throw ValidationError("ion.sites", "coupling needs two distinct sites");
    const auto ri = position(p, i), rj = position(p, j);
    const std::array<double, 3> r{ri[0] - rj[0], ri[1] - rj[1], ri[2] - rj[2]};
    const double kq2 = coulomb_k_e2 * p.charge * p.charge;
    const double V = tensor_element(r, axis_index(axis), kq2);
    const double m = p.mass_amu * amu;
    // J^alpha = 2 J^{alpha alpha} = V / (m sqrt(w_i w_j))
    return V / (m * std::sqrt(local_omega(p, i, axis) * local_omega(p, j, axis)));
}

double frequency_correction_hz(const IonArrayParams& p, Site i, const std::string& axis) {
    const int a = axis_index(axis);
    const double kq2 = coulomb_k_e2 * p.charge * p.charge;
    const auto ri = position(p, i);
    double Vii = 0.0;
    for (int l1 = 0; l1 < p.L1; ++l1)
        for (int l2 = 0; l2 < p.L2; ++l2) {
            const Site l{l1, l2};
            if (l == i) continue;
            const auto rl = position(p, l);
            Vii -= tensor_element({ri[0] - rl[0], ri[1] - rl[1], ri[2] - rl[2]}, a, kq2);
        }
    const double m = p.mass_amu * amu;
    const double w = local_omega(p, i, axis);
    return (std::sqrt(w * w + Vii / (2.0 * m)) - w) / (2.0 * pi);
}

ModelSpec map_to_model(const IonArrayParams& p) {
    validate(p);
    if (!(p.beatnote_hz > 0.0))
        throw ValidationError("ion.beatnote_hz", "zero beatnote cannot produce a periodic driving");
    const double ref = reference_frequency_hz(p);

    ModelSpec m;
    m.flavors = p.axes;
    const int nf = m.num_flavors();
    m.lattice.L1 = p.L1;
    m.lattice.L2 = p.L2;
    m.lattice.d1 = p.d1;
    m.lattice.d2 = p.d2;
    m.lattice.coupling.kind = CouplingKind::Explicit;
    m.lattice.coupling.cutoff_range = p.cutoff_range;

    const double dmin = std::min(p.L1 > 1 ? p.d1 : p.d2, p.L2 > 1 ? p.d2 : p.d1);
    const double reach = p.cutoff_range * dmin * (1.0 + 1e-12);
    for (int a = 0; a < p.L1 * p.L2; ++a)
        for (int b = 0; b < a; ++b) {
            const Site i = m.lattice.site_at(a), j = m.lattice.site_at(b);
            const double dx = (i.i1 - j.i1) * p.d1, dy = (i.i2 - j.i2) * p.d2;
            if (std::hypot(dx, dy) > reach) continue;
            for (int f = 0; f < nf; ++f) {
                const double J = coulomb_coupling(p, i, j, p.axes[f]) / (2.0 * pi * ref);
                if (J != 0.0) m.lattice.coupling.entries.push_back({i, j, f, cplx(J)});
            }
        }

    m.drive.omega_d = p.beatnote_hz / ref;
    m.drive.phi1 = -p.delta_k[0] * p.d1;
    m.drive.phi2 = -p.delta_k[1] * p.d2;
    int r = 0;
    for (int f = 0; f < nf; ++f) {
        const std::string& a = p.axes[f];
        const double g = lookup(p.gradient_hz, a);
        const double eta = lookup(p.lamb_dicke, a);
        m.omega0.push_back(lookup(p.trap_hz, a) / ref);
        m.drive.delta_omega.push_back(g / ref);
        m.drive.eta_d.push_back(-p.rabi_hz * eta * eta / p.beatnote_hz);
        if (g == 0.0) continue;
        const double q = std::abs(g) / p.beatnote_hz;
        const int rf = static_cast<int>(std::lround(q));
        if (rf < 1 || std::abs(q - rf) > 1e-9 * q)
            throw ValidationError("ion.beatnote_hz", "gradient of axis " + a + " is not an integer multiple of the beatnote");
        if (r != 0 && rf != r) throw ValidationError("ion.gradient_hz", "axes need the same resonance order r");
        r = rf;
    }
    m.drive.r = r == 0 ? 1 : r;

    if (p.standing_wave) {
        const auto& sw = *p.standing_wave;
        m.onsite_interactions.assign(static_cast<std::size_t>(m.lattice.num_sites()) * nf * nf, 0.0);
        for (int k = 0; k < m.lattice.num_sites(); ++k) {
            const auto r0 = position(p, m.lattice.site_at(k));
            const double c = std::cos(sw.delta_k[0] * r0[0] + sw.delta_k[1] * r0[1] + sw.delta_k[2] * r0[2] + sw.phase);
            for (int f = 0; f < nf; ++f)
                for (int g = 0; g < nf; ++g) {
                    const double ef = lookup(sw.lamb_dicke, p.axes[f]), eg = lookup(sw.lamb_dicke, p.axes[g]);
                    m.onsite_interactions[(static_cast<std::size_t>(k) * nf + f) * nf + g] =
                        0.5 * sw.rabi_hz * ef * ef * eg * eg * c / ref;
                }
        }
    }
    if (p.sideband) {
        for (int f = 0; f < nf; ++f) {
            const double eta = lookup(p.lamb_dicke, p.axes[f]);
            m.site_disorder_strength.push_back(p.sideband->rabi_hz * p.sideband->rabi_hz * eta * eta /
                                               (4.0 * p.sideband->detuning_hz) / ref);
        }
    }

    if (p.mode)
        m.mode = mode_from_string(*p.mode);
    else
        m.mode = nf > 1 ? Mode::NonAbelian : Mode::PlainPAT;
    validate(m);
    return m;
}

const std::vector<std::string>& constraint_names() {
    static const std::vector<std::string> names{
        "tunneling_vs_gradient",      // J_c << dw
        "lamb_dicke_rwa",             // eta Omega_L << w
        "gradient_beatnote_vs_trap",  // dw, w_L << w, |w - w'|
        "crystal_stability",          // dw, eta_d w_d << w
        "higher_order_drive",         // Omega_L eta^4 << w_L
        "standing_wave_rwa",          // ~Omega ~eta << w
        "standing_wave_shift",        // ~Omega ~eta^2 << dw
        "sideband_perturbative",      // bar Omega eta << bar delta
        "site_disorder_vs_gradient",  // eps << dw
    };
    return names;
}

bool ConstraintReport::all_pass() const {
    for (const auto& e : entries)
        if (e.applicable && !e.pass) return false;
    return true;
}

const ConstraintEntry& ConstraintReport::get(const std::string& name) const {
    for (const auto& e : entries)
        if (e.name == name) return e;
    throw std::out_of_range("no constraint named " + name);
}

ConstraintReport check_constraints(const IonArrayParams& p, double threshold) {
    ConstraintReport rep;
    rep.threshold = threshold;

    struct Worst {
        double lhs = 0, rhs = 1, ratio = -1;
        bool any = false;
        void take(double l, double r) {
            const double q = r > 0 ? l / r : std::numeric_limits<double>::infinity();
            if (!any || q > ratio) {
                lhs = l;
                rhs = r;
                ratio = q;
                any = true;
            }
        }
    };
    std::map<std::string, Worst> w;
    for (const auto& n : constraint_names()) w[n];

    const char* all_axes[] = {"x", "y", "z"};
    int extent = std::numeric_limits<int>::max();
    double max_correction = 0.0;
    for (const auto& a : p.axes) {
        const double wa = lookup(p.trap_hz, a);
        const double dw = std::abs(lookup(p.gradient_hz, a));
        const double eta = lookup(p.lamb_dicke, a);

        if (dw > 0.0) {
            double jmax = 0.0;
            const double dmin = std::min(p.L1 > 1 ? p.d1 : p.d2, p.L2 > 1 ? p.d2 : p.d1);
            const double reach = p.cutoff_range * dmin * (1.0 + 1e-12);
            for (int a1 = 0; a1 < p.L1; ++a1)
                for (int a2 = 0; a2 < p.L2; ++a2)
                    if (std::hypot(a1 * p.d1, a2 * p.d2) <= reach && (a1 || a2))
                        jmax = std::max(jmax, std::abs(coulomb_coupling(p, {a1, a2}, {0, 0}, a)) / (2 * pi));
            w["tunneling_vs_gradient"].take(jmax, dw);
        }
        w["lamb_dicke_rwa"].take(eta * p.rabi_hz, wa);

        double split = wa;
        for (const char* g : all_axes)
            if (g != a && p.trap_hz.count(g)) split = std::min(split, std::abs(wa - p.trap_hz.at(g)));
        w["gradient_beatnote_vs_trap"].take(std::max(dw, p.beatnote_hz), split);

        w["crystal_stability"].take(std::max(dw, p.rabi_hz * eta * eta), wa);
        if (p.beatnote_hz > 0.0) w["higher_order_drive"].take(p.rabi_hz * std::pow(eta, 4), p.beatnote_hz);

        if (p.standing_wave) {
            const double et = lookup(p.standing_wave->lamb_dicke, a);
            w["standing_wave_rwa"].take(p.standing_wave->rabi_hz * et, wa);
            if (dw > 0.0) w["standing_wave_shift"].take(p.standing_wave->rabi_hz * et * et, dw);
        }
        if (p.sideband) {
            w["sideband_perturbative"].take(p.sideband->rabi_hz * eta, p.sideband->detuning_hz);
            const double eps = p.sideband->detuning_hz > 0
                                   ? p.sideband->rabi_hz * p.sideband->rabi_hz * eta * eta / (4 * p.sideband->detuning_hz)
                                   : 0.0;
            if (dw > 0.0) w["site_disorder_vs_gradient"].take(eps, dw);
            rep.notes["sideband_detuning_over_trap_" + a] = wa > 0 ? p.sideband->detuning_hz / wa : 0.0;
        }

        if (dw > 0.0) extent = std::min(extent, static_cast<int>(std::floor(wa / (2.0 * dw) * (1.0 + 1e-12))));
        if (wa > 0.0 && p.d1 > 0 && p.d2 > 0 && p.mass_amu > 0)
            for (int a1 = 0; a1 < p.L1; ++a1)
                for (int a2 = 0; a2 < p.L2; ++a2)
                    if (p.L1 * p.L2 > 1)
                        max_correction = std::max(max_correction, std::abs(frequency_correction_hz(p, {a1, a2}, a)));
    }
    rep.notes["max_frequency_correction_hz"] = max_correction;
    rep.notes["reference_hz"] = p.axes.empty() ? 0.0 : reference_frequency_hz(p);
    if (p.beatnote_hz > 0 && !p.axes.empty())
        rep.notes["eta_d"] = -p.rabi_hz * std::pow(lookup(p.lamb_dicke, p.axes[0]), 2) / p.beatnote_hz;

    rep.max_gradient_extent = extent == std::numeric_limits<int>::max() ? -1 : extent;
    rep.extent_fits = rep.max_gradient_extent < 0 || p.L1 - 1 <= rep.max_gradient_extent;

    static const std::map<std::string, std::string> text{
        {"tunneling_vs_gradient", "J_c << dw"},
        {"lamb_dicke_rwa", "eta*Omega_L << w"},
        {"gradient_beatnote_vs_trap", "dw, w_L << w, |w - w'|"},
        {"crystal_stability", "dw, |eta_d|*w_d << w"},
        {"higher_order_drive", "Omega_L*eta^4 << w_L"},
        {"standing_wave_rwa", "~Omega*~eta << w"},
        {"standing_wave_shift", "~Omega*~eta^2 << dw"},
        {"sideband_perturbative", "barOmega*eta << bar_delta"},
        {"site_disorder_vs_gradient", "eps << dw"},
    };
    for (const auto& n : constraint_names()) {
        const Worst& x = w[n];
        ConstraintEntry e;
        e.name = n;
        e.inequality = text.at(n);
        e.applicable = x.any;
        if (x.any) {
            e.lhs_hz = x.lhs;
            e.rhs_hz = x.rhs;
            e.ratio = x.ratio;
            e.pass = x.ratio <= threshold;
            e.margin = x.ratio > 0 ? threshold / x.ratio : std::numeric_limits<double>::infinity();
        }
        rep.entries.push_back(e);
    }
    return rep;
}

std::string ConstraintReport::table() const {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-27s %-26s %12s %12s %10s %8s  %s\n", "constraint", "inequality", "lhs [Hz]",
                  "rhs [Hz]", "ratio", "margin", "status");
    out += buf;
    for (const auto& e : entries) {
        if (!e.applicable) {
            std::snprintf(buf, sizeof buf, "%-27s %-26s %12s %12s %10s %8s  %s\n", e.name.c_str(), e.inequality.c_str(),
                          "-", "-", "-", "-", "n/a");
        } else {
            std::snprintf(buf, sizeof buf, "%-27s %-26s %12.4g %12.4g %10.4g %8.3g  %s\n", e.name.c_str(),
                          e.inequality.c_str(), e.lhs_hz, e.rhs_hz, e.ratio, e.margin, e.pass ? "pass" : "FAIL");
        }
        out += buf;
    }
    if (max_gradient_extent >= 0)
        std::snprintf(buf, sizeof buf, "%-27s max i1 with dw*i1 <= w/2: %d (%s)\n", "scalability", max_gradient_extent,
                      extent_fits ? "fits" : "array too long");
    else
        std::snprintf(buf, sizeof buf, "%-27s no gradient\n", "scalability");
    out += buf;
    for (const auto& [k, v] : notes) {
        std::snprintf(buf, sizeof buf, "  %s = %.6g\n", k.c_str(), v);
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "threshold %.3g: %s\n", threshold, all_pass() ? "all constraints pass" : "constraints violated");
    out += buf;
    return out;
}

std::string ConstraintReport::to_json() const {
    nlohmann::ordered_json j;
    j["threshold"] = threshold;
    j["all_pass"] = all_pass();
    auto arr = nlohmann::ordered_json::array();
    for (const auto& e : entries) {
        nlohmann::ordered_json x;
        x["name"] = e.name;
        x["inequality"] = e.inequality;
        x["applicable"] = e.applicable;
        if (e.applicable) {
            x["lhs_hz"] = e.lhs_hz;
            x["rhs_hz"] = e.rhs_hz;
            x["ratio"] = e.ratio;
            x["margin"] = std::isfinite(e.margin) ? nlohmann::ordered_json(e.margin) : nlohmann::ordered_json(nullptr);
            x["pass"] = e.pass;
        }
        arr.push_back(x);
    }
    j["constraints"] = arr;
    nlohmann::ordered_json s;
    s["max_gradient_extent"] = max_gradient_extent;
    s["fits"] = extent_fits;
    j["scalability"] = s;
    nlohmann::ordered_json n;
    for (const auto& [k, v] : notes) n[k] = v;
    j["notes"] = n;
    return j.dump(2);
}

}  // namespace patsim
