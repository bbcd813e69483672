// Acceptance runs: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "patsim/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>

using namespace patsim;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [x]");
    }
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string fmt(const char* f, double a, double b) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

int jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

Scenario scenario(const std::string& name) { return load_scenario(std::string(PATSIM_SCENARIOS) + "/" + name + ".json"); }

EvolutionTask task_from(const Scenario& sc) {
    EvolutionTask t;
    t.model = *sc.model;
    t.initial = make_initial_state(t.model, sc.initial, sc.seed);
    t.space = t.initial.space;
    t.spins = sc.spins;
    t.t_final = sc.t_final;
    t.sample_times = uniform_samples(sc.t_final, sc.samples);
    t.ode = sc.ode;
    t.frame = sc.frame;
    t.jobs = jobs();
    return t;
}

void retime(EvolutionTask& t, double t_final, int samples) {
    t.t_final = t_final;
    t.sample_times = uniform_samples(t_final, samples);
}

bool same_phase(double a, double b, double tol) { return std::abs(std::polar(1.0, a) - std::polar(1.0, b)) < tol; }

double max_dev_until(const EngineComparison& c, const std::vector<std::string>& names, double t_end) {
    double m = 0.0;
    for (const auto& n : names) {
        const auto& a = c.full.get(n);
        const auto& b = c.effective.get(n);
        for (std::size_t k = 0; k < c.full.times.size(); ++k)
            if (c.full.times[k] <= t_end * (1 + 1e-12)) m = std::max(m, std::abs(a[k] - b[k]));
    }
    return m;
}

// J_n(x) for integer n and real x, from the standard library
double bessel_j(int n, double x) {
    const double v = std::cyl_bessel_j(static_cast<double>(std::abs(n)), std::abs(x));
    const int parity = (n < 0 ? std::abs(n) : 0) + (x < 0 ? std::abs(n) : 0);
    return parity % 2 ? -v : v;
}

Outcome c1() {
    Outcome o;
    const double f1 = std::abs(modulation_amplitude(1, 1, 1, pi));
    const double f0 = std::abs(modulation_amplitude(0, 1, 1, pi));
    o.require(f1 >= 0.55 && f1 <= 0.62, fmt("|F1(1,1,pi)|=%.6f in [0.55,0.62]", f1));
    o.require(f0 >= 0.20 && f0 <= 0.25, fmt("|F0(1,1,pi)|=%.6f in [0.20,0.25]", f0));
    double worst = 0.0;
    for (int k = 1; k <= 40; ++k) {
        const double eta = 0.1 * k;
        worst = std::max(worst, std::abs(std::abs(modulation_amplitude(0, eta, eta, pi)) - std::abs(bessel_j(0, 2 * eta))));
    }
    o.require(worst < 1e-10, fmt("max ||F0(eta,eta,pi)|-|J0(2eta)||=%.2e over eta=0.1..4", worst));
    return o;
}

Outcome c2() {
    Outcome o;
    auto t = task_from(scenario("fig3a"));
    retime(t, 800.0, 1601);
    t.engine = Engine::FullDriven;
    const double T = estimate_period(evolve(t), "n_1_0");
    const double want = 100 * pi;
    o.require(std::abs(T / want - 1) < 0.01, fmt("period=%.4f, 100pi=%.4f", T, want));
    return o;
}

Outcome c3() {
    Outcome o;
    auto t = task_from(scenario("fig3b"));
    t.engine = Engine::FullDriven;
    const double n2 = max_transfer(evolve(t), "n_1_0", t.t_final);
    o.require(n2 < 0.01, fmt("n2*=%.5f over t<=%.1f", n2, t.t_final));
    return o;
}

Outcome c4() {
    Outcome o;
    const auto sc = scenario("fig3c");
    auto t = task_from(sc);
    const double F1 = std::abs(modulation_amplitude(1, 1, 1, pi));
    const double P = pi / (0.01 * F1);
    const auto c = compare_engines(t);
    const double dev = max_dev_until(c, {"n_0_0", "n_1_0"}, P);
    o.require(dev < 0.05, fmt("full vs effective max dev=%.4f over t<=%.1f", dev, P));
    const double T = estimate_period(c.full, "n_1_0");
    o.require(std::abs(T / P - 1) < 0.03, fmt("dressed period=%.2f, 100pi/|F1|=%.2f", T, P));
    return o;
}

Outcome c5() {
    Outcome o;
    const auto sc = scenario("fig3d");
    const auto res = run_sweep(*sc.model, sc.initial, sc.seed, sc.spins, *sc.sweep, EngineChoice::Full, sc.ode, sc.frame,
                               jobs());
    for (double target : {1.20, 2.76}) {
        const SweepRow* best = nullptr;
        for (const auto& m : res.minima)
            if (!best || std::abs(m.x - target) < std::abs(best->x - target)) best = &m;
        if (!best) {
            o.require(false, "no refined minimum");
            continue;
        }
        o.require(std::abs(best->x - target) <= 0.05 && best->full[0] < 0.05,
                  fmt("minimum at eta_d=%.4f", best->x) + fmt(" (target %.2f+-0.05), n2*=%.4f", target, best->full[0]));
    }
    return o;
}

Outcome sweep_agreement(const std::string& name, double tol) {
    Outcome o;
    const auto sc = scenario(name);
    const auto res = run_sweep(*sc.model, sc.initial, sc.seed, sc.spins, *sc.sweep, EngineChoice::Both, sc.ode, sc.frame,
                               jobs());
    for (std::size_t q = 0; q < sc.sweep->observables.size(); ++q) {
        double worst = 0.0, at = 0.0;
        for (const auto& r : res.rows) {
            const double d = std::abs(r.full[q] - r.effective[q]);
            if (d > worst) worst = d, at = r.x;
        }
        o.require(worst < tol, sc.sweep->observables[q].name + fmt(" max |full-eff|=%.4f at x=%.4f", worst, at) + " over " +
                                   std::to_string(res.rows.size()) + " points");
    }
    return o;
}

Outcome c8() {
    Outcome o;
    {
        auto t = task_from(scenario("fig4b"));
        const auto c = compare_engines(t);
        const double eff = max_transfer(c.effective, "n_1_1", t.t_final), full = max_transfer(c.full, "n_1_1", t.t_final);
        o.require(eff > 0.5 && full > 0.5, fmt("flux 0: n3* eff=%.3f full=%.3f", eff, full));
    }
    {
        auto t = task_from(scenario("fig4c"));
        const auto c = compare_engines(t);
        const double eff = max_transfer(c.effective, "n_1_1", t.t_final), full = max_transfer(c.full, "n_1_1", t.t_final);
        o.require(eff < 0.01 && full < 0.05, fmt("flux pi: max n3 eff=%.2e full=%.2e", eff, full));
    }
    // thermal: rise of the far corner above its initial occupation
    const auto sc = scenario("fig4e");
    auto rise = [&](double phi2, bool effective) {
        auto t = task_from(sc);
        t.model.drive.phi2 = phi2;
        t.engine = effective ? Engine::Effective : Engine::FullDriven;
        const auto s = evolve(t);
        const auto& n3 = s.get("n_1_1");
        return *std::max_element(n3.begin(), n3.end()) - n3.front();
    };
    const auto& nbar = sc.initial.nbar;
    const double excess = nbar.at(0) - nbar.at(sc.model->lattice.site_index({1, 1}));
    const double r0 = rise(0.0, true), r0f = rise(0.0, false);
    o.require(r0 > 0.5 * excess && r0f > 0.5 * excess,
              fmt("thermal flux 0: n3 rise eff=%.3f full=%.3f", r0, r0f) + fmt(" (> %.3f)", 0.5 * excess));
    const double rp = rise(pi, true), rpf = rise(pi, false);
    o.require(rp < 0.01 && rpf < 0.05, fmt("thermal flux pi: n3 rise eff=%.2e full=%.2e", rp, rpf));
    return o;
}

ModelSpec nn_lattice(int L1, int L2, double phi1, double phi2, int r, int flavors = 1) {
    ModelSpec m;
    m.lattice.L1 = L1;
    m.lattice.L2 = L2;
    m.lattice.coupling.kind = CouplingKind::Explicit;
    for (int f = 0; f < flavors; ++f)
        for (int a = 0; a < L1; ++a)
            for (int b = 0; b < L2; ++b) {
                if (a + 1 < L1) m.lattice.coupling.entries.push_back({{a + 1, b}, {a, b}, f, cplx(0.01)});
                if (b + 1 < L2) m.lattice.coupling.entries.push_back({{a, b + 1}, {a, b}, f, cplx(0.01)});
            }
    m.drive.delta_omega = {0.5};
    m.drive.eta_d = {1.0};
    m.drive.omega_d = 0.5 / r;
    m.drive.r = r;
    m.drive.phi1 = phi1;
    m.drive.phi2 = phi2;
    return m;
}

Outcome c9() {
    Outcome o;
    ModelSpec m = nn_lattice(4, 4, 1.3, 0.9, 1);
    m.lattice.coupling = {};
    m.lattice.coupling.kind = CouplingKind::Dipolar;
    m.lattice.coupling.J0 = 0.01;
    const auto d = build_dressed_matrix(m, std::nullopt);
    std::vector<LoopPath> loops;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) loops.push_back(unit_plaquette({a, b}));
    loops.push_back(double_plaquette({0, 0}));
    loops.push_back(double_plaquette({1, 2}, false));
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-10, 10);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> chi(16);
        for (auto& x : chi) x = u(rng);
        const auto g = apply_gauge_transform(d, m.lattice, chi);
        for (const auto& l : loops) {
            const cplx a = wilson_loop(d, l), b = wilson_loop(g, l);
            worst = std::max(worst, std::abs(a - b) / std::abs(a));
        }
    }
    o.require(worst <= 1e-12, fmt("max relative Wilson-loop change=%.2e over 100 transforms", worst));

    double unit_err = 0.0, double_err = 0.0;
    for (int r : {1, 2, 3})
        for (double phi2 : {0.3, -1.1, 2.0}) {
            const auto mm = nn_lattice(4, 3, 0.83, phi2, r);
            const auto dd = build_dressed_matrix(mm, std::nullopt);
            for (const auto& [c, f] : plaquette_flux_map(dd, mm.lattice))
                unit_err = std::max(unit_err, f ? std::abs(std::polar(1.0, *f) - std::polar(1.0, r * phi2)) : 1.0);
            for (const auto& l : {double_plaquette({0, 0}), double_plaquette({1, 0}, false)})
                double_err = std::max(double_err,
                                      std::abs(std::polar(1.0, std::arg(wilson_loop(dd, l))) - std::polar(1.0, 2 * r * phi2)));
        }
    o.require(unit_err < 1e-12, fmt("unit plaquette flux - r phi2: %.2e", unit_err));
    o.require(double_err < 1e-12, fmt("double plaquette flux - 2 r phi2: %.2e", double_err));
    return o;
}

Outcome c10() {
    Outcome o;
    ModelSpec m = nn_lattice(2, 1, 1.5 * pi, 0.0, 1);
    m.mode = Mode::SpinBondDisorder;
    auto F = [&](int si, int sj) {
        // spins in site-index order: (0,0) then (1,0)
        return dressed_coupling(1.0, {1, 0}, {0, 0}, m, 0, SpinConfiguration{sj, si}).amplitude_factor;
    };
    const cplx uu = F(1, 1), ud = F(1, -1), du = F(-1, 1), dd = F(-1, -1), I(0, 1);
    const double rel = std::max({std::abs(ud + du), std::abs(ud - I * dd), std::abs(ud + I * uu)});
    o.require(rel < 1e-10, fmt("F_ud=-F_du=iF_dd=-iF_uu residual %.2e", rel));
    double lo = 1, hi = 0;
    for (cplx v : {uu, ud, du, dd}) lo = std::min(lo, std::abs(v)), hi = std::max(hi, std::abs(v));
    o.require(lo >= 0.45 && hi <= 0.55, fmt("|F| in [%.4f, %.4f]", lo, hi));
    return o;
}

Outcome c11() {
    Outcome o;
    const auto sc = scenario("bond_disorder");
    o.require(sc.ensemble && sc.ensemble->members.size() == 16,
              "ensemble of " + std::to_string(sc.ensemble ? sc.ensemble->members.size() : 0) + " members");
    for (Engine e : {Engine::Effective, Engine::FullDriven}) {
        auto t = task_from(sc);
        t.engine = e;
        if (e == Engine::FullDriven) retime(t, 100 * pi, 101);
        const auto avg = disorder_average(t, *sc.ensemble);
        double worst = 0.0;
        std::vector<std::vector<double>> brute(avg.mean.values.size(), std::vector<double>(avg.mean.times.size(), 0.0));
        for (const auto& mem : sc.ensemble->members) {
            auto tm = t;
            tm.spins = mem.spins;
            const auto s = evolve(tm);
            for (std::size_t q = 0; q < s.values.size(); ++q)
                for (std::size_t k = 0; k < s.times.size(); ++k) brute[q][k] += mem.weight * s.values[q][k];
        }
        for (std::size_t q = 0; q < brute.size(); ++q)
            for (std::size_t k = 0; k < brute[q].size(); ++k)
                worst = std::max(worst, std::abs(brute[q][k] - avg.mean.values[q][k]));
        o.require(worst < 1e-12, std::string(e == Engine::Effective ? "effective" : "full") +
                                     fmt(" |average - weighted mean|=%.2e", worst));
    }
    return o;
}

Outcome c12() {
    Outcome o;
    const double p1 = 0.7, p2 = 1.1;
    std::vector<double> f;
    for (const auto& t : enumerate_tiles(p1, p2, 1)) f.push_back(t.flux);
    const auto d = distinct_fluxes(f);
    o.require(d.size() == 9, "distinct fluxes at (0.7, 1.1): " + std::to_string(d.size()));
    const double pp = 0.5 * (p1 + p2), pm = 0.5 * (p1 - p2);
    int outside = 0;
    std::string stray;
    for (double v : d) {
        bool hit = false;
        for (double c : {0.0, p1, -p1, p2, -p2, pp, -pp, pm, -pm}) hit |= same_phase(v, c, 1e-9);
        if (!hit) {
            ++outside;
            stray += fmt(" %.4f", v);
        }
    }
    o.require(outside == 0, "values outside {0,+-phi1,+-phi2,+-phi_+,+-phi_-}: " + std::to_string(outside) +
                                (stray.empty() ? "" : " (" + stray.substr(1) + ")"));

    int zero = 0, half = 0, other = 0;
    for (const auto& t : enumerate_tiles(pi, pi, 1))
        (same_phase(t.flux, 0.0, 1e-9) ? zero : same_phase(t.flux, pi, 1e-9) ? half : other)++;
    o.require(other == 0 && zero > 0 && half > 0, "pi phases: " + std::to_string(zero) + " tiles at 0, " +
                                                      std::to_string(half) + " at pi, " + std::to_string(other) + " other");

    const auto sc = scenario("decorate_defect");
    int L1 = 0, L2 = 0;
    const auto spins = parse_spin_grid(sc.decoration_pattern, L1, L2);
    LatticeSpec L;
    L.L1 = L1;
    L.L2 = L2;
    L.coupling.kind = CouplingKind::Explicit;
    const auto deco = compile_decoration(L, spins, sc.deco_phi1, sc.deco_phi2, sc.deco_r, sc.deco_eta_d);
    int pis = 0, zeros = 0, rest = 0;
    for (const auto& [c, v] : deco.flux) {
        if (!v) ++rest;
        else if (same_phase(*v, pi, 1e-9)) ++pis;
        else if (same_phase(*v, 0.0, 1e-9)) ++zeros;
        else ++rest;
    }
    o.require(zeros == 1 && rest == 0 && pis + 1 == static_cast<int>(deco.flux.size()),
              "defect pattern: " + std::to_string(pis) + " pi plaquettes, " + std::to_string(zeros) + " zero");
    return o;
}

Outcome c13() {
    Outcome o;
    ModelSpec m = nn_lattice(4, 3, 0.83, 0.45, 1, 2);
    m.flavors = {"x", "y"};
    m.drive.delta_omega = {0.5, -0.5};
    m.drive.eta_d = {1.0, 1.0};
    m.mode = Mode::NonAbelian;
    const auto d = build_dressed_matrix(m, std::nullopt);
    const auto fx = plaquette_flux_map(d, m.lattice, 0), fy = plaquette_flux_map(d, m.lattice, 1);
    double worst = 0.0, smallest = 10.0;
    for (const auto& [c, f] : fx) {
        worst = std::max(worst, std::abs(std::polar(1.0, *f) - std::polar(1.0, -*fy.at(c))));
        smallest = std::min(smallest, std::abs(std::sin(*f)));
    }
    o.require(worst < 1e-12, fmt("max |exp(i Phi_x) - exp(-i Phi_y)|=%.2e", worst) + " over " +
                                 std::to_string(fx.size()) + " plaquettes");
    o.require(smallest > 0.1, fmt("fluxes away from 0 and pi (min |sin Phi|=%.3f)", smallest));
    return o;
}

Outcome c14() {
    Outcome o;
    const auto t1 = scenario("ion_table1");
    const auto r1 = check_constraints(*t1.ion, t1.constraint_threshold);
    std::string failing;
    for (const auto& e : r1.entries)
        if (e.applicable && !e.pass) failing += " " + e.name + fmt("=%.3f", e.ratio);
    o.require(r1.all_pass(), "table midpoints: " + (failing.empty() ? std::string("all pass") : "failing" + failing));
    const auto t2 = scenario("ion_scalability");
    const auto r2 = check_constraints(*t2.ion, t2.constraint_threshold);
    o.require(r2.max_gradient_extent >= 9 && r2.max_gradient_extent <= 11 && r2.all_pass(),
              "50 kHz gradient, 1 MHz trap: extent " + std::to_string(r2.max_gradient_extent) +
                  (r2.all_pass() ? ", all constraints pass" : ", constraints fail"));
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "modulation values", 1, c1},
        {2, "bare two-site period", 5, c2},
        {3, "gradient suppression", 10, c3},
        {4, "resonant assisted tunnelling", 30, c4},
        {5, "coherent destruction of tunnelling", 120, c5},
        {6, "phase dependence", 120, [] { return sweep_agreement("fig5a", 0.05); }},
        {7, "thermal robustness", 120, [] { return sweep_agreement("fig5b", 0.05); }},
        {8, "plaquette interference", 180, c8},
        {9, "gauge properties", 1, c9},
        {10, "bond-disorder values", 1, c10},
        {11, "ensemble linearity", 60, c11},
        {12, "flux palette", 1, c12},
        {13, "non-Abelian antisymmetry", 10, c13},
        {14, "constraint checker", 1, c14},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (s > c.budget_s) o.require(false, fmt("runtime %.1f s over budget %.0f s", s, c.budget_s));
        failed += !o.pass;
        std::printf("%s criterion %2d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), s);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria pass\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed ? 1 : 0;
}
