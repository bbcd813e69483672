#include "patsim/scenario.hpp"

#include "patsim/parallel.hpp"

#include <boost/math/tools/minima.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <random>

namespace patsim {

using namespace cfg;

namespace {

const double nan_v = std::numeric_limits<double>::quiet_NaN();

// reads `key` or `key_pi` (multiplied by pi); returns fallback when neither is present
double num_or_pi(const Json& obj, const std::string& key, const std::string& path, std::optional<double> fallback) {
    const bool a = obj.contains(key), b = obj.contains(key + "_pi");
    if (a && b) throw ValidationError(path + "." + key, "give either " + key + " or " + key + "_pi, not both");
    if (a) return number(obj[key], path + "." + key);
    if (b) return pi * number(obj[key + "_pi"], path + "." + key + "_pi");
    if (!fallback) throw ValidationError(path + "." + key, "required field is missing");
    return *fallback;
}

std::string fmt(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

Json num_json(double v) {
    return std::isfinite(v) ? Json(v) : Json(nullptr);
}

TaskKind task_from_string(const std::string& s, const std::string& path) {
    if (s == "evolve") return TaskKind::Evolve;
    if (s == "compare") return TaskKind::Compare;
    if (s == "sweep") return TaskKind::Sweep;
    if (s == "flux_map") return TaskKind::FluxMap;
    if (s == "constraints") return TaskKind::Constraints;
    if (s == "decorate") return TaskKind::Decorate;
    throw ValidationError(path, "unknown task '" + s + "' (evolve, compare, sweep, flux_map, constraints, decorate)");
}

const char* task_name(TaskKind t) {
    switch (t) {
    case TaskKind::Evolve: return "evolve";
    case TaskKind::Compare: return "compare";
    case TaskKind::Sweep: return "sweep";
    case TaskKind::FluxMap: return "flux_map";
    case TaskKind::Constraints: return "constraints";
    case TaskKind::Decorate: return "decorate";
    }
    return "?";
}

int mode_of(const ModelSpec& m, const Json& e, const std::string& path) {
    const Site s = site(require(e, "site", path), path + ".site");
    if (!m.lattice.contains(s)) throw ValidationError(path + ".site", "site outside lattice");
    int f = 0;
    if (e.contains("flavor")) {
        const Json& fv = e["flavor"];
        if (fv.is_string()) {
            f = -1;
            for (int k = 0; k < m.num_flavors(); ++k)
                if (m.flavors[k] == fv.get<std::string>()) f = k;
            if (f < 0) throw ValidationError(path + ".flavor", "unknown flavor");
        } else {
            f = integer(fv, path + ".flavor");
            if (f < 0 || f >= m.num_flavors()) throw ValidationError(path + ".flavor", "flavor index out of range");
        }
    }
    return m.lattice.site_index(s) * m.num_flavors() + f;
}

InitialSpec parse_initial(const Json& j, const ModelSpec& m, const std::string& path) {
    InitialSpec s;
    const std::string kind = string(require(j, "kind", path), path + ".kind");
    const int modes = m.lattice.num_sites() * m.num_flavors();
    if (j.contains("n_trunc")) s.n_trunc = integer(j["n_trunc"], path + ".n_trunc");
    if (s.n_trunc < 1) throw ValidationError(path + ".n_trunc", "must be at least 1");
    if (kind == "basis") {
        only_keys(j, {"kind", "occupations", "n_trunc"}, path);
        s.kind = InitialSpec::Kind::Basis;
        s.occupations.assign(modes, 0);
        const Json& occ = require(j, "occupations", path);
        if (!occ.is_array()) throw ValidationError(path + ".occupations", "expected a list");
        for (std::size_t k = 0; k < occ.size(); ++k) {
            const std::string ep = path + ".occupations[" + std::to_string(k) + "]";
            only_keys(occ[k], {"site", "flavor", "n"}, ep);
            const int n = integer(require(occ[k], "n", ep), ep + ".n");
            if (n < 0 || n > s.n_trunc) throw ValidationError(ep + ".n", "occupation must lie in [0, n_trunc]");
            s.occupations[mode_of(m, occ[k], ep)] = static_cast<std::uint8_t>(n);
        }
    } else if (kind == "thermal") {
        only_keys(j, {"kind", "nbar", "default_nbar", "n_trunc"}, path);
        s.kind = InitialSpec::Kind::Thermal;
        const double def = j.contains("default_nbar") ? number(j["default_nbar"], path + ".default_nbar") : 0.0;
        s.nbar.assign(modes, def);
        if (j.contains("nbar")) {
            const Json& nb = j["nbar"];
            if (!nb.is_array()) throw ValidationError(path + ".nbar", "expected a list");
            for (std::size_t k = 0; k < nb.size(); ++k) {
                const std::string ep = path + ".nbar[" + std::to_string(k) + "]";
                only_keys(nb[k], {"site", "flavor", "nbar"}, ep);
                s.nbar[mode_of(m, nb[k], ep)] = number(require(nb[k], "nbar", ep), ep + ".nbar");
            }
        }
        for (double v : s.nbar)
            if (!(v >= 0.0)) throw ValidationError(path + ".nbar", "mean occupations must be non-negative");
    } else if (kind == "random") {
        only_keys(j, {"kind", "sector", "n_trunc"}, path);
        s.kind = InitialSpec::Kind::Random;
        s.sector = integer(require(j, "sector", path), path + ".sector");
    } else {
        throw ValidationError(path + ".kind", "expected basis, thermal or random");
    }
    return s;
}

SpinEnsemble parse_ensemble(const Json& j, int nsites, const std::string& path) {
    only_keys(j, {"members", "uniform", "amplitudes", "allow_large"}, path);
    const int given = j.contains("members") + j.contains("uniform") + j.contains("amplitudes");
    if (given != 1) throw ValidationError(path, "give exactly one of members, uniform, amplitudes");
    if (j.contains("members")) {
        const Json& ms = j["members"];
        if (!ms.is_array()) throw ValidationError(path + ".members", "expected a list");
        std::vector<EnsembleMember> out;
        for (std::size_t k = 0; k < ms.size(); ++k) {
            const std::string ep = path + ".members[" + std::to_string(k) + "]";
            only_keys(ms[k], {"spins", "weight"}, ep);
            EnsembleMember e;
            e.spins = parse_spin_string(string(require(ms[k], "spins", ep), ep + ".spins"));
            if (e.spins.size() != static_cast<std::size_t>(nsites)) throw ValidationError(ep + ".spins", "one spin per site required");
            e.weight = ms[k].contains("weight") ? number(ms[k]["weight"], ep + ".weight") : 1.0;
            out.push_back(e);
        }
        return make_ensemble(std::move(out));
    }
    if (j.contains("uniform")) {
        if (!boolean(j["uniform"], path + ".uniform")) throw ValidationError(path + ".uniform", "must be true when given");
        if (nsites > 16) throw ValidationError(path + ".uniform", "more than 16 sites");
        std::vector<EnsembleMember> out;
        for (long code = 0; code < (1L << nsites); ++code) {
            EnsembleMember e;
            for (int s = 0; s < nsites; ++s) e.spins.push_back((code >> (nsites - 1 - s)) & 1 ? -1 : 1);
            e.weight = 1.0;
            out.push_back(e);
        }
        return make_ensemble(std::move(out));
    }
    const Json& a = j["amplitudes"];
    if (!a.is_array() || a.size() != static_cast<std::size_t>(nsites))
        throw ValidationError(path + ".amplitudes", "one [c_up, c_down] pair per site required");
    std::vector<std::pair<cplx, cplx>> amps;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const std::string ep = path + ".amplitudes[" + std::to_string(k) + "]";
        if (!a[k].is_array() || a[k].size() != 2) throw ValidationError(ep, "expected [c_up, c_down]");
        amps.emplace_back(complex(a[k][0], ep + "[0]"), complex(a[k][1], ep + "[1]"));
    }
    const bool large = j.contains("allow_large") && boolean(j["allow_large"], path + ".allow_large");
    return ensemble_from_product_state(amps, large);
}

Horizon parse_horizon(const Json& j, const std::string& path) {
    only_keys(j, {"t", "t_pi", "scale", "scale_pi", "chi", "theta", "theta_pi", "floor"}, path);
    Horizon h;
    if (j.contains("t") || j.contains("t_pi")) {
        h.fixed = num_or_pi(j, "t", path, std::nullopt);
        if (!(h.fixed > 0)) throw ValidationError(path + ".t", "must be positive");
        return h;
    }
    h.from_modulation = true;
    h.scale = num_or_pi(j, "scale", path, std::nullopt);
    h.chi = j.contains("chi") ? integer(j["chi"], path + ".chi") : 0;
    h.theta = num_or_pi(j, "theta", path, pi);
    h.floor = j.contains("floor") ? number(j["floor"], path + ".floor") : 1e-2;
    if (!(h.floor > 0)) throw ValidationError(path + ".floor", "must be positive");
    return h;
}

SweepSpec parse_sweep(const Json& t, const std::string& path) {
    only_keys(t,
              {"kind", "parameter", "min", "min_pi", "max", "max_pi", "points", "observable", "extremum", "observables",
               "horizon", "samples", "refine_minima", "reference"},
              path);
    SweepSpec s;
    s.parameter = string(require(t, "parameter", path), path + ".parameter");
    if (s.parameter != "phase" && s.parameter != "flux" && s.parameter != "eta_d")
        throw ValidationError(path + ".parameter", "expected phase, flux or eta_d");
    s.min = num_or_pi(t, "min", path, std::nullopt);
    s.max = num_or_pi(t, "max", path, std::nullopt);
    s.points = integer(require(t, "points", path), path + ".points");
    if (s.points < 1) throw ValidationError(path + ".points", "must be at least 1");
    auto ext = [&](const Json& v, const std::string& p) {
        const std::string e = string(v, p);
        if (e == "max") return Extremum::Max;
        if (e == "min") return Extremum::Min;
        throw ValidationError(p, "expected max or min");
    };
    if (t.contains("observables")) {
        const Json& os = t["observables"];
        if (!os.is_array() || os.empty()) throw ValidationError(path + ".observables", "expected a non-empty list");
        for (std::size_t k = 0; k < os.size(); ++k) {
            const std::string ep = path + ".observables[" + std::to_string(k) + "]";
            only_keys(os[k], {"name", "extremum"}, ep);
            s.observables.push_back({string(require(os[k], "name", ep), ep + ".name"),
                                     os[k].contains("extremum") ? ext(os[k]["extremum"], ep + ".extremum") : Extremum::Max});
        }
    } else {
        s.observables.push_back({string(require(t, "observable", path), path + ".observable"),
                                 t.contains("extremum") ? ext(t["extremum"], path + ".extremum") : Extremum::Max});
    }
    s.horizon = parse_horizon(require(t, "horizon", path), path + ".horizon");
    if (t.contains("samples")) s.samples = integer(t["samples"], path + ".samples");
    if (s.samples < 2) throw ValidationError(path + ".samples", "must be at least 2");
    if (t.contains("refine_minima")) s.refine_minima = boolean(t["refine_minima"], path + ".refine_minima");
    if (t.contains("reference")) {
        const std::string r = string(t["reference"], path + ".reference");
        if (r != "interference") throw ValidationError(path + ".reference", "only \"interference\" is supported");
        s.interference_reference = true;
    }
    return s;
}

std::string sweep_label(const SweepObservable& o) {
    return o.name + (o.extremum == Extremum::Max ? "_max" : "_min");
}

}  // namespace

EngineChoice engine_choice_from_string(const std::string& s, const std::string& path) {
    if (s == "full") return EngineChoice::Full;
    if (s == "effective") return EngineChoice::Effective;
    if (s == "both") return EngineChoice::Both;
    throw ValidationError(path, "expected full, effective or both");
}

std::string to_string(EngineChoice e) {
    switch (e) {
    case EngineChoice::Full: return "full";
    case EngineChoice::Effective: return "effective";
    case EngineChoice::Both: return "both";
    }
    return "?";
}

double Horizon::evaluate(const ModelSpec& m) const {
    if (!from_modulation) return fixed;
    const double eta = m.drive.eta_d.empty() ? 0.0 : m.drive.eta_d[0];
    const double F = std::abs(modulation_amplitude(chi, eta, eta, theta));
    return scale / std::max(F, floor);
}

Scenario parse_scenario(const Json& j) {
    only_keys(j,
              {"name", "description", "model", "ion", "task", "initial", "spins", "spin_grid", "ensemble", "time",
               "engine", "frame", "ode", "seed", "output"},
              "");
    Scenario sc;
    sc.resolved = j;
    sc.name = j.contains("name") ? string(j["name"], "name") : "scenario";

    const Json& task = require(j, "task", "");
    if (task.is_string())
        sc.task = task_from_string(task.get<std::string>(), "task");
    else
        sc.task = task_from_string(string(require(task, "kind", "task"), "task.kind"), "task.kind");
    const Json empty = Json::object();
    const Json& tj = task.is_object() ? task : empty;

    if (j.contains("model") && j.contains("ion")) throw ValidationError("model", "give either model or ion, not both");
    if (j.contains("ion")) sc.ion = ion_from_json(j["ion"], "ion");
    if (j.contains("model")) sc.model = model_from_json(j["model"], "model");
    if (sc.ion && sc.task != TaskKind::Constraints) sc.model = map_to_model(*sc.ion);

    if (j.contains("seed")) {
        const Json& s = j["seed"];
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
            throw ValidationError("seed", "expected a non-negative integer");
        sc.seed = s.get<std::uint64_t>();
    }
    if (j.contains("engine")) sc.engine = engine_choice_from_string(string(j["engine"], "engine"), "engine");
    if (sc.task == TaskKind::Compare) sc.engine = EngineChoice::Both;
    if (j.contains("frame")) {
        const std::string f = string(j["frame"], "frame");
        if (f == "interaction") sc.frame = Frame::Interaction;
        else if (f == "lab") sc.frame = Frame::Lab;
        else throw ValidationError("frame", "expected interaction or lab");
    }
    if (j.contains("ode")) {
        const Json& o = j["ode"];
        only_keys(o, {"rtol", "atol", "h_max", "max_steps"}, "ode");
        if (o.contains("rtol")) sc.ode.rtol = number(o["rtol"], "ode.rtol");
        if (o.contains("atol")) sc.ode.atol = number(o["atol"], "ode.atol");
        if (o.contains("h_max")) sc.ode.h_max = number(o["h_max"], "ode.h_max");
        if (o.contains("max_steps")) sc.ode.max_steps = integer(o["max_steps"], "ode.max_steps");
        if (!(sc.ode.rtol > 0) || !(sc.ode.atol > 0)) throw ValidationError("ode", "tolerances must be positive");
    }

    const std::string stem = "out/" + sc.name;
    sc.outputs = {stem + ".csv", stem + ".json", stem + ".txt", stem + ".manifest.json"};
    if (j.contains("output")) {
        const Json& o = j["output"];
        only_keys(o, {"csv", "json", "text", "manifest"}, "output");
        if (o.contains("csv")) sc.outputs.csv = string(o["csv"], "output.csv");
        if (o.contains("json")) sc.outputs.json = string(o["json"], "output.json");
        if (o.contains("text")) sc.outputs.text = string(o["text"], "output.text");
        if (o.contains("manifest")) sc.outputs.manifest = string(o["manifest"], "output.manifest");
    }

    const bool dynamic = sc.task == TaskKind::Evolve || sc.task == TaskKind::Compare || sc.task == TaskKind::Sweep;
    const bool needs_model = dynamic || sc.task == TaskKind::FluxMap;
    if (needs_model && !sc.model) throw ValidationError("model", "required field is missing");
    if (sc.task == TaskKind::Constraints && !sc.ion) throw ValidationError("ion", "required field is missing");

    if (sc.model) {
        const int ns = sc.model->lattice.num_sites();
        if (j.contains("spins") && j.contains("spin_grid")) throw ValidationError("spins", "give spins or spin_grid, not both");
        if (j.contains("spins")) {
            sc.spins = parse_spin_string(string(j["spins"], "spins"));
        } else if (j.contains("spin_grid")) {
            const Json& g = j["spin_grid"];
            std::string text;
            if (g.is_string())
                text = g.get<std::string>();
            else if (g.is_array())
                for (std::size_t k = 0; k < g.size(); ++k) text += string(g[k], "spin_grid[" + std::to_string(k) + "]") + "\n";
            else
                throw ValidationError("spin_grid", "expected a string or a list of rows");
            int L1 = 0, L2 = 0;
            sc.spins = parse_spin_grid(text, L1, L2);
            if (L1 != sc.model->lattice.L1 || L2 != sc.model->lattice.L2)
                throw ValidationError("spin_grid", "grid size does not match the lattice");
        }
        if (j.contains("ensemble")) sc.ensemble = parse_ensemble(j["ensemble"], ns, "ensemble");
        if (!sc.ensemble) validate_spins(*sc.model, sc.spins);
        else if (sc.spins) throw ValidationError("spins", "give either spins or an ensemble");
    }

    if (dynamic) {
        sc.initial = parse_initial(require(j, "initial", ""), *sc.model, "initial");
        if (sc.task != TaskKind::Sweep) {
            const Json& t = require(j, "time", "");
            only_keys(t, {"t_final", "t_final_pi", "samples"}, "time");
            sc.t_final = num_or_pi(t, "t_final", "time", std::nullopt);
            if (!(sc.t_final > 0)) throw ValidationError("time.t_final", "must be positive");
            sc.samples = integer(require(t, "samples", "time"), "time.samples");
            if (sc.samples < 2) throw ValidationError("time.samples", "need at least two samples");
        }
    }
    if (sc.task == TaskKind::Sweep) {
        sc.sweep = parse_sweep(tj, "task");
        if (sc.ensemble) throw ValidationError("ensemble", "sweeps run a single spin configuration");
    } else if (sc.task == TaskKind::Constraints) {
        only_keys(tj, {"kind", "threshold"}, "task");
        if (tj.contains("threshold")) sc.constraint_threshold = number(tj["threshold"], "task.threshold");
        if (!(sc.constraint_threshold > 0)) throw ValidationError("task.threshold", "must be positive");
    } else if (sc.task == TaskKind::Decorate) {
        only_keys(tj, {"kind", "pattern", "phi1", "phi1_pi", "phi2", "phi2_pi", "r", "eta_d"}, "task");
        const Json& p = require(tj, "pattern", "task");
        if (p.is_string())
            sc.decoration_pattern = p.get<std::string>();
        else if (p.is_array())
            for (std::size_t k = 0; k < p.size(); ++k)
                sc.decoration_pattern += string(p[k], "task.pattern[" + std::to_string(k) + "]") + "\n";
        else
            throw ValidationError("task.pattern", "expected a string or a list of rows");
        sc.deco_phi1 = num_or_pi(tj, "phi1", "task", std::nullopt);
        sc.deco_phi2 = num_or_pi(tj, "phi2", "task", std::nullopt);
        sc.deco_r = tj.contains("r") ? integer(tj["r"], "task.r") : 1;
        sc.deco_eta_d = tj.contains("eta_d") ? number(tj["eta_d"], "task.eta_d") : 1.0;
        if (sc.deco_r < 1) throw ValidationError("task.r", "must be a positive integer");
    } else {
        only_keys(tj, {"kind"}, "task");
    }
    return sc;
}

Scenario load_scenario(const std::string& path) {
    return parse_scenario(load_config(path));
}

QuantumState make_initial_state(const ModelSpec& model, const InitialSpec& spec, std::uint64_t seed) {
    switch (spec.kind) {
    case InitialSpec::Kind::Basis: {
        int N = 0;
        for (auto n : spec.occupations) N += n;
        auto space = build_fock_space(model, spec.n_trunc, N);
        return QuantumState::basis(space, spec.occupations);
    }
    case InitialSpec::Kind::Thermal: {
        auto space = build_fock_space(model, spec.n_trunc);
        return thermal_state(space, spec.nbar);
    }
    case InitialSpec::Kind::Random: {
        auto space = build_fock_space(model, spec.n_trunc, spec.sector);
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> g;
        Eigen::VectorXcd psi(space->dim());
        for (int b = 0; b < space->dim(); ++b) {
            const double re = g(rng);
            const double im = g(rng);
            psi[b] = cplx(re, im);
        }
        psi.normalize();
        return QuantumState::pure(space, psi);
    }
    }
    throw ValidationError("initial.kind", "unknown initial state");
}

void apply_sweep_parameter(ModelSpec& m, const std::string& parameter, double x) {
    if (parameter == "phase")
        m.drive.phi1 = x;
    else if (parameter == "flux")
        m.drive.phi2 = x / m.drive.r;
    else if (parameter == "eta_d")
        for (auto& e : m.drive.eta_d) e = x;
    else
        throw ValidationError("task.parameter", "unknown sweep parameter '" + parameter + "'");
}

SweepRow sweep_point(const ModelSpec& base, const InitialSpec& init, std::uint64_t seed,
                     const std::optional<SpinConfiguration>& spins, const SweepSpec& spec, double x, bool full,
                     bool effective, const OdeOptions& ode, Frame frame, std::optional<double> horizon) {
    ModelSpec m = base;
    apply_sweep_parameter(m, spec.parameter, x);
    validate(m);
    SweepRow row;
    row.x = x;
    row.horizon = horizon ? *horizon : spec.horizon.evaluate(m);
    row.full.assign(spec.observables.size(), nan_v);
    row.effective.assign(spec.observables.size(), nan_v);

    EvolutionTask t;
    t.model = m;
    t.initial = make_initial_state(m, init, seed);
    t.space = t.initial.space;
    t.spins = spins;
    t.t_final = row.horizon;
    t.sample_times = uniform_samples(row.horizon, spec.samples);
    t.frame = frame;
    t.ode = ode;
    t.jobs = 1;
    auto fill = [&](Engine e, std::vector<double>& out) {
        t.engine = e;
        const auto s = evolve(t);
        for (std::size_t k = 0; k < spec.observables.size(); ++k)
            out[k] = max_transfer(s, spec.observables[k].name, row.horizon, spec.observables[k].extremum);
    };
    if (full) fill(Engine::FullDriven, row.full);
    if (effective) fill(Engine::Effective, row.effective);
    return row;
}

SweepResult run_sweep(const ModelSpec& base, const InitialSpec& init, std::uint64_t seed,
                      const std::optional<SpinConfiguration>& spins, const SweepSpec& spec, EngineChoice engine,
                      const OdeOptions& ode, Frame frame, int jobs, std::ostream* progress) {
    const bool full = engine != EngineChoice::Effective, eff = engine != EngineChoice::Full;
    SweepResult res;
    res.rows.resize(spec.points);
    std::vector<double> xs(spec.points);
    for (int k = 0; k < spec.points; ++k)
        xs[k] = spec.points == 1 ? spec.min : spec.min + (spec.max - spec.min) * k / (spec.points - 1);
    std::atomic<int> done{0};
    std::mutex io;
    parallel_for(xs.size(), jobs, [&](std::size_t k) {
        res.rows[k] = sweep_point(base, init, seed, spins, spec, xs[k], full, eff, ode, frame);
        const int d = ++done;
        if (progress) {
            std::lock_guard<std::mutex> lock(io);
            *progress << "sweep point " << d << "/" << xs.size() << "\n";
        }
    });

    if (spec.refine_minima && spec.points >= 3) {
        // The extremum over a horizon that scales with the dressed period is flat away from the zeros and
        // only dips in a narrow window, so minima are located on fixed shorter horizons first, where the
        // transfer still grows monotonically with the dressed rate, and then on the true horizon.
        double t_max = 0.0;
        for (const auto& r : res.rows) t_max = std::max(t_max, r.horizon);
        const std::vector<double> stages{t_max / 100, t_max / 10};
        auto value = [&](double x, std::optional<double> h) {
            const auto r = sweep_point(base, init, seed, spins, spec, x, full, !full, ode, frame, h);
            return full ? r.full[0] : r.effective[0];
        };
        std::vector<double> coarse(xs.size());
        parallel_for(xs.size(), jobs, [&](std::size_t k) { coarse[k] = value(xs[k], stages[0]); });
        std::vector<std::size_t> cand;
        for (std::size_t k = 1; k + 1 < xs.size(); ++k)
            if (coarse[k] < coarse[k - 1] && coarse[k] <= coarse[k + 1]) cand.push_back(k);
        res.minima.resize(cand.size());
        parallel_for(cand.size(), jobs, [&](std::size_t c) {
            double lo = xs[cand[c] - 1], hi = xs[cand[c] + 1], x = xs[cand[c]];
            for (std::size_t s = 0; s <= stages.size(); ++s) {
                const std::optional<double> h = s < stages.size() ? std::optional<double>(stages[s]) : std::nullopt;
                std::uintmax_t iters = 60;
                x = boost::math::tools::brent_find_minima([&](double y) { return value(y, h); }, lo, hi, 30, iters).first;
                const double w = (hi - lo) / 10;
                lo = std::max(lo, x - w);
                hi = std::min(hi, x + w);
            }
            res.minima[c] = sweep_point(base, init, seed, spins, spec, x, full, eff, ode, frame);
        });
    }
    return res;
}

std::string SweepResult::to_csv(const SweepSpec& spec) const {
    std::string out = spec.parameter + ",horizon";
    for (const auto& o : spec.observables) out += "," + sweep_label(o) + "_full," + sweep_label(o) + "_effective";
    if (spec.interference_reference) out += ",interference";
    out += "\r\n";
    for (const auto& r : rows) {
        out += fmt(r.x) + "," + fmt(r.horizon);
        for (std::size_t k = 0; k < spec.observables.size(); ++k) out += "," + fmt(r.full[k]) + "," + fmt(r.effective[k]);
        if (spec.interference_reference) out += "," + fmt(interference_probability(r.x));
        out += "\r\n";
    }
    return out;
}

std::string comparison_csv(const ObservableSeries& full, const ObservableSeries& effective) {
    std::string out = "time";
    for (const auto& n : full.names) out += "," + n + "_full";
    for (const auto& n : effective.names) out += "," + n + "_effective";
    out += "\r\n";
    for (std::size_t k = 0; k < full.times.size(); ++k) {
        out += fmt(full.times[k]);
        for (const auto& v : full.values) out += "," + fmt(v[k]);
        for (const auto& v : effective.values) out += "," + fmt(v[k]);
        out += "\r\n";
    }
    return out;
}

namespace {

Json series_json(const ObservableSeries& s) {
    return Json::parse(s.to_json());
}

Json initial_json(const ModelSpec& m, const InitialSpec& s) {
    Json j;
    j["n_trunc"] = s.n_trunc;
    switch (s.kind) {
    case InitialSpec::Kind::Basis: j["kind"] = "basis"; j["occupations"] = s.occupations; break;
    case InitialSpec::Kind::Thermal: j["kind"] = "thermal"; j["nbar"] = s.nbar; break;
    case InitialSpec::Kind::Random: j["kind"] = "random"; j["sector"] = s.sector; break;
    }
    Json modes = Json::array();
    for (int k = 0; k < m.lattice.num_sites(); ++k)
        for (int f = 0; f < m.num_flavors(); ++f) {
            const Site st = m.lattice.site_at(k);
            modes.push_back({{"site", {st.i1, st.i2}}, {"flavor", m.flavors[f]}});
        }
    j["mode_order"] = modes;
    return j;
}

Json flux_json(const FluxMap& fm) {
    return Json::parse(flux_map_json(fm));
}

}  // namespace

RunResult run_scenario(const Scenario& sc, const RunFlags& flags) {
    const auto t0 = std::chrono::steady_clock::now();
    RunResult out;
    Json& man = out.manifest;
    man["name"] = sc.name;
    man["patsim_version"] = patsim_version;
    man["task"] = task_name(sc.task);
    const std::uint64_t seed = flags.seed ? *flags.seed : sc.seed;
    const EngineChoice engine = sc.task == TaskKind::Compare ? EngineChoice::Both : flags.engine.value_or(sc.engine);
    man["seed"] = seed;
    man["jobs"] = flags.jobs;
    man["config"] = sc.resolved;
    if (sc.model) man["model"] = model_to_json(*sc.model);
    if (sc.ion) man["ion"] = ion_to_json(*sc.ion);
    Json warnings = Json::array();
    auto say = [&](const std::string& s) {
        if (flags.progress) *flags.progress << s << "\n";
    };

    switch (sc.task) {
    case TaskKind::Evolve:
    case TaskKind::Compare: {
        const ModelSpec& m = *sc.model;
        EvolutionTask t;
        t.model = m;
        t.initial = make_initial_state(m, sc.initial, seed);
        t.space = t.initial.space;
        t.spins = sc.spins;
        t.t_final = sc.t_final;
        t.sample_times = uniform_samples(sc.t_final, sc.samples);
        t.frame = sc.frame;
        t.ode = sc.ode;
        t.jobs = flags.jobs;
        man["engine"] = to_string(engine);
        man["frame"] = sc.frame == Frame::Interaction ? "interaction" : "lab";
        man["initial"] = initial_json(m, sc.initial);
        man["space_dim"] = t.space->dim();
        man["time"] = {{"t_final", sc.t_final}, {"samples", sc.samples}};
        OdeOptions eff = sc.ode;
        if (m.drive.omega_d > 0) eff.h_max = std::min(eff.h_max, (2 * pi / m.drive.omega_d) / 50);
        man["ode"] = {{"method", "dopri5"}, {"rtol", eff.rtol}, {"atol", eff.atol}, {"h_max", num_json(eff.h_max)}};
        if (sc.spins) man["spins"] = spin_string(*sc.spins);

        auto run_one = [&](Engine e) {
            EvolutionTask u = t;
            u.engine = e;
            say(std::string("running ") + (e == Engine::FullDriven ? "full" : "effective") + " engine");
            if (!sc.ensemble) return evolve(u);
            auto avg = disorder_average(u, *sc.ensemble);
            for (const auto& w : avg.warnings) {
                warnings.push_back(w);
                say("warning: " + w);
            }
            return avg.mean;
        };
        if (sc.ensemble) {
            Json ms = Json::array();
            for (const auto& mem : sc.ensemble->members) ms.push_back({{"spins", spin_string(mem.spins)}, {"weight", mem.weight}});
            man["ensemble"] = ms;
        }
        Json result;
        if (engine == EngineChoice::Both) {
            const auto full = run_one(Engine::FullDriven);
            const auto effs = run_one(Engine::Effective);
            out.artifacts.push_back({sc.outputs.csv, comparison_csv(full, effs)});
            Json dev;
            double overall = 0.0, when = 0.0;
            for (std::size_t o = 0; o < full.names.size(); ++o) {
                double mx = 0.0, tm = 0.0;
                for (std::size_t k = 0; k < full.times.size(); ++k) {
                    const double d = std::abs(full.values[o][k] - effs.values[o][k]);
                    if (d > mx) { mx = d; tm = full.times[k]; }
                }
                dev[full.names[o]] = {{"max_abs_deviation", mx}, {"time_of_max", tm}};
                if (mx > overall) { overall = mx; when = tm; }
            }
            result["deviation"] = dev;
            result["overall_max_deviation"] = overall;
            result["overall_time"] = when;
            result["full"] = series_json(full);
            result["effective"] = series_json(effs);
            man["diagnostics"] = {{"norm_drift_full", full.norm_drift}, {"norm_drift_effective", effs.norm_drift},
                                  {"hermiticity_drift", full.hermiticity_drift}, {"steps", full.steps},
                                  {"overall_max_deviation", overall}};
        } else {
            const auto s = run_one(engine == EngineChoice::Full ? Engine::FullDriven : Engine::Effective);
            out.artifacts.push_back({sc.outputs.csv, s.to_csv()});
            result = series_json(s);
            man["diagnostics"] = {{"norm_drift", s.norm_drift}, {"hermiticity_drift", s.hermiticity_drift}, {"steps", s.steps}};
        }
        out.artifacts.push_back({sc.outputs.json, result.dump(2)});
        break;
    }
    case TaskKind::Sweep: {
        const ModelSpec& m = *sc.model;
        const auto& sp = *sc.sweep;
        man["engine"] = to_string(engine);
        man["initial"] = initial_json(m, sc.initial);
        if (sc.spins) man["spins"] = spin_string(*sc.spins);
        OdeOptions eff = sc.ode;
        if (m.drive.omega_d > 0) eff.h_max = std::min(eff.h_max, (2 * pi / m.drive.omega_d) / 50);
        man["ode"] = {{"method", "dopri5"}, {"rtol", eff.rtol}, {"atol", eff.atol}, {"h_max", num_json(eff.h_max)}};
        const auto res = run_sweep(m, sc.initial, seed, sc.spins, sp, engine, sc.ode, sc.frame, flags.jobs, flags.progress);
        out.artifacts.push_back({sc.outputs.csv, res.to_csv(sp)});
        Json j;
        j["parameter"] = sp.parameter;
        j["samples_per_run"] = sp.samples;
        Json obs = Json::array();
        for (const auto& o : sp.observables) obs.push_back(sweep_label(o));
        j["observables"] = obs;
        auto row_json = [&](const SweepRow& r) {
            Json x;
            x["x"] = r.x;
            x["horizon"] = r.horizon;
            Json f = Json::array(), e = Json::array();
            for (double v : r.full) f.push_back(num_json(v));
            for (double v : r.effective) e.push_back(num_json(v));
            x["full"] = f;
            x["effective"] = e;
            return x;
        };
        Json rows = Json::array(), mins = Json::array();
        for (const auto& r : res.rows) rows.push_back(row_json(r));
        for (const auto& r : res.minima) mins.push_back(row_json(r));
        j["rows"] = rows;
        j["refined_minima"] = mins;
        out.artifacts.push_back({sc.outputs.json, j.dump(2)});
        man["sweep"] = j;
        break;
    }
    case TaskKind::FluxMap: {
        const ModelSpec& m = *sc.model;
        const auto dressed = build_dressed_matrix(m, sc.spins);
        Json j;
        std::string text;
        for (int f = 0; f < m.num_flavors(); ++f) {
            const auto fm = plaquette_flux_map(dressed, m.lattice, f);
            j["flux"][m.flavors[f]] = flux_json(fm);
            j["diagonal_residual"][m.flavors[f]] = diagonal_residual(dressed, f);
            text += "flavor " + m.flavors[f] + " (flux / pi, top row = largest i2)\n" + flux_map_ascii(fm, m.lattice);
        }
        j["dressed"] = Json::parse(dressed_to_json(dressed, m));
        out.artifacts.push_back({sc.outputs.text, text});
        out.artifacts.push_back({sc.outputs.json, j.dump(2)});
        if (sc.spins) man["spins"] = spin_string(*sc.spins);
        break;
    }
    case TaskKind::Constraints: {
        const auto rep = check_constraints(*sc.ion, sc.constraint_threshold);
        out.artifacts.push_back({sc.outputs.text, rep.table()});
        out.artifacts.push_back({sc.outputs.json, rep.to_json()});
        man["report"] = Json::parse(rep.to_json());
        break;
    }
    case TaskKind::Decorate: {
        int L1 = 0, L2 = 0;
        const auto spins = parse_spin_grid(sc.decoration_pattern, L1, L2);
        LatticeSpec L;
        L.L1 = L1;
        L.L2 = L2;
        L.coupling.kind = CouplingKind::Explicit;
        const auto deco = compile_decoration(L, spins, sc.deco_phi1, sc.deco_phi2, sc.deco_r, sc.deco_eta_d);
        Json j;
        j["spins"] = spin_string(spins);
        j["flux"] = flux_json(deco.flux);
        j["coupling_over_shift"] = deco.coupling_over_shift;
        out.artifacts.push_back({sc.outputs.text, flux_map_ascii(deco.flux, deco.model.lattice)});
        out.artifacts.push_back({sc.outputs.json, j.dump(2)});
        man["model"] = model_to_json(deco.model);
        man["spins"] = spin_string(spins);
        break;
    }
    }

    man["warnings"] = warnings;
    Json outs = Json::array();
    for (const auto& a : out.artifacts) outs.push_back(a.path);
    man["outputs"] = outs;
    man["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.artifacts.push_back({sc.outputs.manifest, man.dump(2)});
    return out;
}

}  // namespace patsim
