#pragma once

#include "patsim/fock.hpp"
#include "patsim/ode.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace patsim {

enum class Engine { FullDriven, Effective };
enum class Frame { Interaction, Lab };

struct EvolutionTask {
    ModelSpec model;
    FockSpacePtr space;
    QuantumState initial;
    std::optional<SpinConfiguration> spins;
    double t_final = 0.0;
    std::vector<double> sample_times;
    Engine engine = Engine::FullDriven;
    Frame frame = Frame::Interaction;
    OdeOptions ode{};  // h_max is tightened to (2 pi / omega_d) / 50 when driven
    int jobs = 1;      // worker threads for independent number sectors
};

struct ObservableSeries {
    std::vector<double> times;
    std::vector<std::string> names;
    std::vector<std::vector<double>> values;  // values[observable][time]

    // diagnostics of the run
    double norm_drift = 0.0;        // max |norm-1| (pure) or |trace-1| (density) at samples
    double hermiticity_drift = 0.0; // density runs only
    long steps = 0;

    const std::vector<double>& get(const std::string& name) const;
    std::string to_csv() const;
    std::string to_json() const;
};

std::vector<double> uniform_samples(double t_final, int count);

// observable names: "n_<i1>_<i2>" (one flavor) or "n_<i1>_<i2>_<flavor>", then "n_total"
std::vector<std::string> observable_names(const ModelSpec& model, const FockSpace& space);

ObservableSeries evolve_pure_full(const EvolutionTask& task);
ObservableSeries evolve_density_full(const EvolutionTask& task);
ObservableSeries evolve_effective(const EvolutionTask& task);
ObservableSeries evolve(const EvolutionTask& task);  // dispatch on engine and state kind

// exp(-i H_eff t) applied exactly through per-sector eigendecompositions
class EffectivePropagator {
public:
    EffectivePropagator(const OperatorMatrix& H, const FockSpace& space);
    QuantumState apply(const QuantumState& s, double t) const;
    Eigen::VectorXd populations(const QuantumState& s, double t) const;

private:
    struct Block {
        std::vector<int> idx;
        Eigen::VectorXd E;
        Eigen::MatrixXcd V;
    };
    std::vector<Block> blocks_;
    int dim_;
};

struct EngineComparison {
    std::map<std::string, double> max_abs_deviation;
    std::map<std::string, double> time_of_max;
    double overall_max = 0.0;
    double overall_time = 0.0;
    ObservableSeries full;
    ObservableSeries effective;
};

EngineComparison compare_engines(const EvolutionTask& task);

enum class Extremum { Max, Min };
double max_transfer(const ObservableSeries& s, const std::string& name, double t_star, Extremum e = Extremum::Max);

// Oscillation period from successive downward crossings of the mid level.
// NaN when fewer than two crossings are found.
double estimate_period(const ObservableSeries& s, const std::string& name);

}  // namespace patsim
