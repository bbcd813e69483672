#pragma once

#include "patsim/config.hpp"
#include "patsim/dynamics.hpp"
#include "patsim/ensembles.hpp"
#include "patsim/fluxdecor.hpp"
#include "patsim/ionmap.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace patsim {

inline constexpr const char* patsim_version = "1.0.0";

enum class TaskKind { Evolve, Compare, Sweep, FluxMap, Constraints, Decorate };
enum class EngineChoice { Full, Effective, Both };

EngineChoice engine_choice_from_string(const std::string& s, const std::string& path = "engine");
std::string to_string(EngineChoice e);

struct InitialSpec {
    enum class Kind { Basis, Thermal, Random } kind = Kind::Basis;
    std::vector<std::uint8_t> occupations;  // per mode (Basis)
    std::vector<double> nbar;               // per mode (Thermal)
    int sector = 1;                         // Random
    int n_trunc = 4;
};

// Duration either fixed or scale / max(|F_chi(eta_d, eta_d, theta)|, floor), eta_d of the first flavor.
struct Horizon {
    double fixed = 0.0;
    bool from_modulation = false;
    double scale = 0.0;
    int chi = 0;
    double theta = pi;
    double floor = 1e-2;

    double evaluate(const ModelSpec& m) const;
};

struct SweepObservable {
    std::string name;
    Extremum extremum = Extremum::Max;
};

struct SweepSpec {
    std::string parameter;  // "phase" (phi1), "flux" (r*phi2), "eta_d" (all flavors)
    double min = 0.0;
    double max = 0.0;
    int points = 2;
    std::vector<SweepObservable> observables;
    Horizon horizon;
    int samples = 2001;
    bool refine_minima = false;
    bool interference_reference = false;
};

struct OutputPaths {
    std::string csv;
    std::string json;
    std::string text;
    std::string manifest;
};

struct Scenario {
    std::string name;
    Json resolved;  // config after include resolution
    TaskKind task = TaskKind::Evolve;
    std::optional<ModelSpec> model;
    std::optional<IonArrayParams> ion;
    InitialSpec initial;
    std::optional<SpinConfiguration> spins;
    std::optional<SpinEnsemble> ensemble;
    double t_final = 0.0;
    int samples = 2;
    EngineChoice engine = EngineChoice::Both;
    Frame frame = Frame::Interaction;
    OdeOptions ode{};
    std::optional<SweepSpec> sweep;
    double constraint_threshold = 0.1;
    // decorate
    std::string decoration_pattern;
    double deco_phi1 = 0.0, deco_phi2 = 0.0, deco_eta_d = 1.0;
    int deco_r = 1;
    std::uint64_t seed = 0;
    OutputPaths outputs;
};

Scenario parse_scenario(const Json& resolved);
Scenario load_scenario(const std::string& path);

struct RunFlags {
    int jobs = 1;
    std::optional<EngineChoice> engine;
    std::optional<std::uint64_t> seed;
    bool to_stdout = false;
    std::ostream* progress = nullptr;
};

struct Artifact {
    std::string path;
    std::string content;
};

struct RunResult {
    std::vector<Artifact> artifacts;  // primary table first, manifest last
    Json manifest;
};

// Builds the state and space for a model; the space is sectored for basis and random states.
QuantumState make_initial_state(const ModelSpec& model, const InitialSpec& spec, std::uint64_t seed);

void apply_sweep_parameter(ModelSpec& m, const std::string& parameter, double x);

struct SweepRow {
    double x = 0.0;
    double horizon = 0.0;
    std::vector<double> full;       // per observable, NaN if not run
    std::vector<double> effective;  // per observable, NaN if not run
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<SweepRow> minima;  // refined interior minima of the first observable
    std::string to_csv(const SweepSpec& spec) const;
};

// One value per observable for a single parameter value; `horizon` overrides the spec's horizon.
SweepRow sweep_point(const ModelSpec& base, const InitialSpec& init, std::uint64_t seed,
                     const std::optional<SpinConfiguration>& spins, const SweepSpec& spec, double x, bool full,
                     bool effective, const OdeOptions& ode, Frame frame, std::optional<double> horizon = std::nullopt);

SweepResult run_sweep(const ModelSpec& base, const InitialSpec& init, std::uint64_t seed,
                      const std::optional<SpinConfiguration>& spins, const SweepSpec& spec, EngineChoice engine,
                      const OdeOptions& ode, Frame frame, int jobs, std::ostream* progress = nullptr);

RunResult run_scenario(const Scenario& sc, const RunFlags& flags);

// Two-engine series as one CSV: time, <obs>_full..., <obs>_effective...
std::string comparison_csv(const ObservableSeries& full, const ObservableSeries& effective);

}  // namespace patsim
