#include "patsim/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace patsim {

namespace fs = std::filesystem;

namespace cfg {

namespace {
std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
}  // namespace

const Json& require(const Json& obj, const std::string& key, const std::string& path) {
    expect_object(obj, path);
    auto it = obj.find(key);
    if (it == obj.end()) throw ValidationError(join(path, key), "required field is missing");
    return *it;
}

double number(const Json& v, const std::string& path) {
    if (!v.is_number()) throw ValidationError(path, "expected a number");
    return v.get<double>();
}

int integer(const Json& v, const std::string& path) {
    if (v.is_number_integer()) return v.get<int>();
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (d == std::floor(d)) return static_cast<int>(d);
    }
    throw ValidationError(path, "expected an integer");
}

std::string string(const Json& v, const std::string& path) {
    if (!v.is_string()) throw ValidationError(path, "expected a string");
    return v.get<std::string>();
}

bool boolean(const Json& v, const std::string& path) {
    if (!v.is_boolean()) throw ValidationError(path, "expected true or false");
    return v.get<bool>();
}

cplx complex(const Json& v, const std::string& path) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2) return {number(v[0], path + "[0]"), number(v[1], path + "[1]")};
    if (v.is_object() && v.contains("re")) {
        only_keys(v, {"re", "im"}, path);
        return {number(v["re"], path + ".re"), v.contains("im") ? number(v["im"], path + ".im") : 0.0};
    }
    throw ValidationError(path, "expected a number, [re, im] or {\"re\":..,\"im\":..}");
}

Site site(const Json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2) throw ValidationError(path, "expected [i1, i2]");
    return {integer(v[0], path + "[0]"), integer(v[1], path + "[1]")};
}

void expect_object(const Json& v, const std::string& path) {
    if (!v.is_object()) throw ValidationError(path, "expected an object");
}

void only_keys(const Json& obj, std::initializer_list<const char*> allowed, const std::string& path) {
    expect_object(obj, path);
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed)
            if (it.key() == a) ok = true;
        if (!ok) throw ValidationError(join(path, it.key()), "unknown field");
    }
}

}  // namespace cfg

using namespace cfg;

// JSON merge patch: objects merge recursively, null removes a key, anything else replaces.
void deep_merge(Json& into, const Json& from) {
    into.merge_patch(from);
}

namespace {

Json parse_file(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw ValidationError(p.string(), "cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return Json::parse(ss.str(), nullptr, true, true);
    } catch (const Json::parse_error& e) {
        throw ValidationError(p.string(), std::string("malformed JSON: ") + e.what());
    }
}

Json resolve(const Json& j, const fs::path& dir, std::vector<fs::path>& stack) {
    if (j.is_array()) {
        Json out = Json::array();
        for (const auto& e : j) out.push_back(resolve(e, dir, stack));
        return out;
    }
    if (!j.is_object()) return j;
    if (!j.contains("$include")) {
        Json out = Json::object();
        for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = resolve(it.value(), dir, stack);
        return out;
    }
    Json base = Json::object();
    {
        const Json& inc = j["$include"];
        std::vector<std::string> files;
        if (inc.is_string())
            files.push_back(inc.get<std::string>());
        else if (inc.is_array())
            for (const auto& e : inc) files.push_back(string(e, "$include"));
        else
            throw ValidationError("$include", "expected a path or a list of paths");
        for (const auto& f : files) {
            const fs::path p = fs::weakly_canonical(dir / f);
            for (const auto& s : stack)
                if (s == p) throw ValidationError("$include", "include cycle through " + p.string());
            stack.push_back(p);
            Json sub = resolve(parse_file(p), p.parent_path(), stack);
            stack.pop_back();
            deep_merge(base, sub);
        }
    }
    // nulls survive until the final merge so they can delete included keys
    Json local = Json::object();
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() == "$include") continue;
        local[it.key()] = resolve(it.value(), dir, stack);
    }
    deep_merge(base, local);
    return base;
}

// scalar broadcast or one value per flavor
std::vector<double> per_flavor(const Json& v, int nf, const std::string& path) {
    if (v.is_number()) return std::vector<double>(nf, v.get<double>());
    if (!v.is_array()) throw ValidationError(path, "expected a number or a list with one value per flavor");
    if (v.size() != static_cast<std::size_t>(nf)) throw ValidationError(path, "one value per flavor required");
    std::vector<double> out;
    for (std::size_t k = 0; k < v.size(); ++k) out.push_back(number(v[k], path + "[" + std::to_string(k) + "]"));
    return out;
}

int flavor_of(const Json& v, const std::vector<std::string>& flavors, const std::string& path) {
    if (v.is_string()) {
        for (std::size_t k = 0; k < flavors.size(); ++k)
            if (flavors[k] == v.get<std::string>()) return static_cast<int>(k);
        throw ValidationError(path, "unknown flavor '" + v.get<std::string>() + "'");
    }
    const int f = integer(v, path);
    if (f < 0 || f >= static_cast<int>(flavors.size())) throw ValidationError(path, "flavor index out of range");
    return f;
}

Json complex_json(cplx z) {
    if (z.imag() == 0.0) return z.real();
    return Json::array({z.real(), z.imag()});
}

std::map<std::string, double> axis_map(const Json& v, const std::string& path) {
    expect_object(v, path);
    std::map<std::string, double> out;
    for (auto it = v.begin(); it != v.end(); ++it) out[it.key()] = number(it.value(), path + "." + it.key());
    return out;
}

std::array<double, 3> vec3(const Json& v, const std::string& path) {
    if (!v.is_array() || v.size() < 2 || v.size() > 3) throw ValidationError(path, "expected [kx, ky] or [kx, ky, kz]");
    std::array<double, 3> out{0, 0, 0};
    for (std::size_t k = 0; k < v.size(); ++k) out[k] = number(v[k], path + "[" + std::to_string(k) + "]");
    return out;
}

}  // namespace

Json resolve_includes(const Json& j, const fs::path& base_dir) {
    std::vector<fs::path> stack;
    Json out = Json::object();
    deep_merge(out, resolve(j, base_dir, stack));
    return out;
}

Json load_config(const fs::path& path) {
    std::vector<fs::path> stack{fs::weakly_canonical(path)};
    Json out = Json::object();
    deep_merge(out, resolve(parse_file(path), fs::absolute(path).parent_path(), stack));
    return out;
}

ModelSpec model_from_json(const Json& j, const std::string& path) {
    only_keys(j, {"flavors", "lattice", "drive", "omega0", "onsite_interactions", "site_disorder_strength", "mode"}, path);
    ModelSpec m;
    if (j.contains("flavors")) {
        const Json& f = j["flavors"];
        if (!f.is_array() || f.empty()) throw ValidationError(path + ".flavors", "expected a non-empty list of names");
        m.flavors.clear();
        std::set<std::string> seen;
        for (std::size_t k = 0; k < f.size(); ++k) {
            m.flavors.push_back(string(f[k], path + ".flavors[" + std::to_string(k) + "]"));
            if (!seen.insert(m.flavors.back()).second) throw ValidationError(path + ".flavors", "duplicate flavor name");
        }
    }
    const int nf = m.num_flavors();

    const std::string lp = path + ".lattice";
    const Json& lat = require(j, "lattice", path);
    only_keys(lat, {"L1", "L2", "d1", "d2", "coupling"}, lp);
    m.lattice.L1 = integer(require(lat, "L1", lp), lp + ".L1");
    m.lattice.L2 = integer(require(lat, "L2", lp), lp + ".L2");
    if (lat.contains("d1")) m.lattice.d1 = number(lat["d1"], lp + ".d1");
    if (lat.contains("d2")) m.lattice.d2 = number(lat["d2"], lp + ".d2");
    if (m.lattice.L1 < 1) throw ValidationError(lp + ".L1", "must be positive");
    if (m.lattice.L2 < 1) throw ValidationError(lp + ".L2", "must be positive");

    const std::string cp = lp + ".coupling";
    const Json& c = require(lat, "coupling", lp);
    only_keys(c, {"kind", "entries", "J0", "cutoff_range"}, cp);
    const std::string kind = string(require(c, "kind", cp), cp + ".kind");
    if (kind == "Explicit") {
        m.lattice.coupling.kind = CouplingKind::Explicit;
        const Json& es = require(c, "entries", cp);
        if (!es.is_array()) throw ValidationError(cp + ".entries", "expected a list");
        for (std::size_t k = 0; k < es.size(); ++k) {
            const std::string ep = cp + ".entries[" + std::to_string(k) + "]";
            only_keys(es[k], {"i", "j", "flavor", "J"}, ep);
            ExplicitCoupling e;
            e.i = site(require(es[k], "i", ep), ep + ".i");
            e.j = site(require(es[k], "j", ep), ep + ".j");
            e.flavor = es[k].contains("flavor") ? flavor_of(es[k]["flavor"], m.flavors, ep + ".flavor") : 0;
            e.J = complex(require(es[k], "J", ep), ep + ".J");
            m.lattice.coupling.entries.push_back(e);
        }
    } else if (kind == "Dipolar") {
        m.lattice.coupling.kind = CouplingKind::Dipolar;
        m.lattice.coupling.J0 = number(require(c, "J0", cp), cp + ".J0");
        if (c.contains("cutoff_range")) m.lattice.coupling.cutoff_range = integer(c["cutoff_range"], cp + ".cutoff_range");
    } else {
        throw ValidationError(cp + ".kind", "expected \"Explicit\" or \"Dipolar\"");
    }

    const std::string dp = path + ".drive";
    const Json& d = require(j, "drive", path);
    only_keys(d, {"delta_omega", "eta_d", "omega_d", "phi1", "phi2", "r"}, dp);
    m.drive.delta_omega = d.contains("delta_omega") ? per_flavor(d["delta_omega"], nf, dp + ".delta_omega")
                                                    : std::vector<double>(nf, 0.0);
    m.drive.eta_d = d.contains("eta_d") ? per_flavor(d["eta_d"], nf, dp + ".eta_d") : std::vector<double>(nf, 0.0);
    m.drive.omega_d = number(require(d, "omega_d", dp), dp + ".omega_d");
    if (d.contains("phi1")) m.drive.phi1 = number(d["phi1"], dp + ".phi1");
    if (d.contains("phi2")) m.drive.phi2 = number(d["phi2"], dp + ".phi2");
    if (d.contains("r")) m.drive.r = integer(d["r"], dp + ".r");

    if (j.contains("omega0")) m.omega0 = per_flavor(j["omega0"], nf, path + ".omega0");
    if (j.contains("site_disorder_strength"))
        m.site_disorder_strength = per_flavor(j["site_disorder_strength"], nf, path + ".site_disorder_strength");
    if (j.contains("onsite_interactions")) {
        const Json& u = j["onsite_interactions"];
        const std::string up = path + ".onsite_interactions";
        const std::size_t n = static_cast<std::size_t>(m.lattice.num_sites()) * nf * nf;
        if (u.is_number())
            m.onsite_interactions.assign(n, u.get<double>());
        else if (u.is_array()) {
            for (std::size_t k = 0; k < u.size(); ++k)
                m.onsite_interactions.push_back(number(u[k], up + "[" + std::to_string(k) + "]"));
        } else
            throw ValidationError(up, "expected a number or a flattened [site][flavor][flavor] list");
    }
    if (j.contains("mode")) {
        try {
            m.mode = mode_from_string(string(j["mode"], path + ".mode"));
        } catch (const ValidationError&) {
            throw ValidationError(path + ".mode", "unknown mode '" + j["mode"].dump() + "'");
        }
    }
    validate(m);
    return m;
}

Json model_to_json(const ModelSpec& m) {
    Json j;
    j["flavors"] = m.flavors;
    Json lat;
    lat["L1"] = m.lattice.L1;
    lat["L2"] = m.lattice.L2;
    lat["d1"] = m.lattice.d1;
    lat["d2"] = m.lattice.d2;
    Json c;
    if (m.lattice.coupling.kind == CouplingKind::Explicit) {
        c["kind"] = "Explicit";
        Json es = Json::array();
        for (const auto& e : m.lattice.coupling.entries) {
            Json x;
            x["i"] = {e.i.i1, e.i.i2};
            x["j"] = {e.j.i1, e.j.i2};
            x["flavor"] = m.flavors.at(e.flavor);
            x["J"] = complex_json(e.J);
            es.push_back(x);
        }
        c["entries"] = es;
    } else {
        c["kind"] = "Dipolar";
        c["J0"] = m.lattice.coupling.J0;
        c["cutoff_range"] = m.lattice.coupling.cutoff_range;
    }
    lat["coupling"] = c;
    j["lattice"] = lat;
    Json d;
    d["delta_omega"] = m.drive.delta_omega;
    d["eta_d"] = m.drive.eta_d;
    d["omega_d"] = m.drive.omega_d;
    d["phi1"] = m.drive.phi1;
    d["phi2"] = m.drive.phi2;
    d["r"] = m.drive.r;
    j["drive"] = d;
    std::vector<double> w0;
    for (int f = 0; f < m.num_flavors(); ++f) w0.push_back(m.offset(f));
    j["omega0"] = w0;
    if (!m.onsite_interactions.empty()) j["onsite_interactions"] = m.onsite_interactions;
    if (!m.site_disorder_strength.empty()) j["site_disorder_strength"] = m.site_disorder_strength;
    j["mode"] = to_string(m.mode);
    return j;
}

IonArrayParams ion_from_json(const Json& j, const std::string& path) {
    only_keys(j,
              {"axes", "trap_hz", "gradient_hz", "beatnote_hz", "rabi_hz", "lamb_dicke", "delta_k", "L1", "L2", "d1",
               "d2", "mass_amu", "charge", "cutoff_range", "standing_wave", "sideband", "reference_hz", "mode"},
              path);
    IonArrayParams p;
    if (j.contains("axes")) {
        p.axes.clear();
        const Json& a = j["axes"];
        if (!a.is_array() || a.empty()) throw ValidationError(path + ".axes", "expected a non-empty list such as [\"z\"]");
        for (std::size_t k = 0; k < a.size(); ++k) p.axes.push_back(string(a[k], path + ".axes[" + std::to_string(k) + "]"));
    }
    p.trap_hz = axis_map(require(j, "trap_hz", path), path + ".trap_hz");
    if (j.contains("gradient_hz")) p.gradient_hz = axis_map(j["gradient_hz"], path + ".gradient_hz");
    if (j.contains("beatnote_hz")) p.beatnote_hz = number(j["beatnote_hz"], path + ".beatnote_hz");
    if (j.contains("rabi_hz")) p.rabi_hz = number(j["rabi_hz"], path + ".rabi_hz");
    if (j.contains("lamb_dicke")) p.lamb_dicke = axis_map(j["lamb_dicke"], path + ".lamb_dicke");
    if (j.contains("delta_k")) p.delta_k = vec3(j["delta_k"], path + ".delta_k");
    if (j.contains("L1")) p.L1 = integer(j["L1"], path + ".L1");
    if (j.contains("L2")) p.L2 = integer(j["L2"], path + ".L2");
    if (j.contains("d1")) p.d1 = number(j["d1"], path + ".d1");
    if (j.contains("d2")) p.d2 = number(j["d2"], path + ".d2");
    if (j.contains("mass_amu")) p.mass_amu = number(j["mass_amu"], path + ".mass_amu");
    if (j.contains("charge")) p.charge = number(j["charge"], path + ".charge");
    if (j.contains("cutoff_range")) p.cutoff_range = integer(j["cutoff_range"], path + ".cutoff_range");
    if (j.contains("reference_hz")) p.reference_hz = number(j["reference_hz"], path + ".reference_hz");
    if (j.contains("mode")) p.mode = string(j["mode"], path + ".mode");
    if (j.contains("standing_wave")) {
        const std::string sp = path + ".standing_wave";
        const Json& s = j["standing_wave"];
        only_keys(s, {"rabi_hz", "lamb_dicke", "delta_k", "phase"}, sp);
        StandingWave w;
        w.rabi_hz = number(require(s, "rabi_hz", sp), sp + ".rabi_hz");
        w.lamb_dicke = axis_map(require(s, "lamb_dicke", sp), sp + ".lamb_dicke");
        if (s.contains("delta_k")) w.delta_k = vec3(s["delta_k"], sp + ".delta_k");
        if (s.contains("phase")) w.phase = number(s["phase"], sp + ".phase");
        p.standing_wave = w;
    }
    if (j.contains("sideband")) {
        const std::string sp = path + ".sideband";
        const Json& s = j["sideband"];
        only_keys(s, {"rabi_hz", "detuning_hz"}, sp);
        p.sideband = Sideband{number(require(s, "rabi_hz", sp), sp + ".rabi_hz"),
                              number(require(s, "detuning_hz", sp), sp + ".detuning_hz")};
    }
    validate(p);
    return p;
}

Json ion_to_json(const IonArrayParams& p) {
    Json j;
    j["axes"] = p.axes;
    j["trap_hz"] = p.trap_hz;
    j["gradient_hz"] = p.gradient_hz;
    j["beatnote_hz"] = p.beatnote_hz;
    j["rabi_hz"] = p.rabi_hz;
    j["lamb_dicke"] = p.lamb_dicke;
    j["delta_k"] = p.delta_k;
    j["L1"] = p.L1;
    j["L2"] = p.L2;
    j["d1"] = p.d1;
    j["d2"] = p.d2;
    j["mass_amu"] = p.mass_amu;
    j["charge"] = p.charge;
    j["cutoff_range"] = p.cutoff_range;
    if (p.standing_wave) {
        Json s;
        s["rabi_hz"] = p.standing_wave->rabi_hz;
        s["lamb_dicke"] = p.standing_wave->lamb_dicke;
        s["delta_k"] = p.standing_wave->delta_k;
        s["phase"] = p.standing_wave->phase;
        j["standing_wave"] = s;
    }
    if (p.sideband) j["sideband"] = {{"rabi_hz", p.sideband->rabi_hz}, {"detuning_hz", p.sideband->detuning_hz}};
    j["reference_hz"] = reference_frequency_hz(p);
    if (p.mode) j["mode"] = *p.mode;
    return j;
}

}  // namespace patsim
