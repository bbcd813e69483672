#include "patsim/parallel.hpp"
#include "patsim/scenario.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace patsim;

namespace {

void write_file(const std::string& path, const std::string& content) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << content;
}

int cmd_run(const std::string& config, int jobs, const std::string& engine, std::optional<std::uint64_t> seed,
            bool to_stdout, bool quiet) {
    const Scenario sc = load_scenario(config);
    RunFlags flags;
    flags.jobs = jobs > 0 ? jobs : default_jobs();
    if (!engine.empty()) flags.engine = engine_choice_from_string(engine, "--engine");
    flags.seed = seed;
    flags.to_stdout = to_stdout;
    flags.progress = quiet ? nullptr : &std::cerr;
    if (!quiet) std::cerr << "patsim: scenario '" << sc.name << "'\n";
    const RunResult r = run_scenario(sc, flags);
    if (to_stdout) {
        std::cout << r.artifacts.front().content;
        return 0;
    }
    for (const auto& a : r.artifacts) {
        write_file(a.path, a.content);
        if (!quiet) std::cerr << "wrote " << a.path << "\n";
    }
    return 0;
}

int cmd_validate(const std::string& config) {
    const Scenario sc = load_scenario(config);
    std::cout << "ok: " << sc.name << "\n";
    if (sc.model) std::cout << model_to_json(*sc.model).dump(2) << "\n";
    return 0;
}

int cmd_constraints(const std::string& path, double threshold, bool json) {
    const Json j = load_config(path);
    const IonArrayParams p = j.contains("ion") ? ion_from_json(j["ion"], "ion") : ion_from_json(j, "ion");
    const auto rep = check_constraints(p, threshold);
    std::cout << (json ? rep.to_json() + "\n" : rep.table());
    return 0;
}

double over_pi(double f) {
    const double v = f / pi;
    return std::abs(v) < 5e-7 ? 0.0 : v;
}

int cmd_palette(double phi1, double phi2, int r, double eta_d) {
    const auto tiles = enumerate_tiles(phi1, phi2, r, eta_d);
    std::vector<double> fluxes;
    std::printf("corners (c0 c1 c2 c3)   flux/pi\n");
    for (const auto& t : tiles) {
        std::printf("%c %c %c %c               %9.6f\n", t.spin_corners[0] > 0 ? '+' : '-', t.spin_corners[1] > 0 ? '+' : '-',
                    t.spin_corners[2] > 0 ? '+' : '-', t.spin_corners[3] > 0 ? '+' : '-', over_pi(t.flux));
        fluxes.push_back(t.flux);
    }
    const auto d = distinct_fluxes(fluxes);
    std::printf("%zu distinct fluxes (/pi):", d.size());
    for (double f : d) std::printf(" %.6f", over_pi(f));
    std::printf("\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"patsim: photon-assisted tunneling simulator"};
    app.require_subcommand(1);

    std::string config, engine;
    int jobs = 0;
    std::optional<std::uint64_t> seed;
    bool to_stdout = false, quiet = false;
    auto* run = app.add_subcommand("run", "run a scenario file");
    run->add_option("config", config, "scenario file")->required();
    run->add_option("--jobs,-j", jobs, "worker threads (default: logical cores)");
    run->add_option("--engine", engine, "full, effective or both")->check(CLI::IsMember({"full", "effective", "both"}));
    run->add_option("--seed", seed, "seed for random initial states");
    run->add_flag("--stdout", to_stdout, "print the primary table instead of writing files");
    run->add_flag("--quiet,-q", quiet, "no progress on stderr");

    auto* val = app.add_subcommand("validate", "parse and validate a scenario file");
    val->add_option("config", config, "scenario file")->required();

    std::string ion_path;
    double threshold = 0.1;
    bool json = false;
    auto* con = app.add_subcommand("constraints", "check ion-array parameters against the derivation constraints");
    con->add_option("params", ion_path, "ion parameter file")->required();
    con->add_option("--threshold", threshold, "ratio counted as much smaller (default 0.1)");
    con->add_flag("--json", json, "JSON report");

    double phi1 = 0.0, phi2 = 0.0, eta_d = 1.0;
    int r = 1;
    auto* pal = app.add_subcommand("palette", "list the plaquette fluxes of all 16 spin corner tuples");
    pal->add_option("--phi1", phi1, "driving phase along e1")->required();
    pal->add_option("--phi2", phi2, "driving phase along e2")->required();
    pal->add_option("--r", r, "resonance order");
    pal->add_option("--eta-d", eta_d, "driving strength");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*run) return cmd_run(config, jobs, engine, seed, to_stdout, quiet);
        if (*val) return cmd_validate(config);
        if (*con) return cmd_constraints(ion_path, threshold, json);
        if (*pal) return cmd_palette(phi1, phi2, r, eta_d);
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
