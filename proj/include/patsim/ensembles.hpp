#pragma once

#include "patsim/dynamics.hpp"

#include <complex>
#include <string>
#include <utility>
#include <vector>

namespace patsim {

struct EnsembleMember {
    SpinConfiguration spins;
    double weight = 0.0;
};

struct SpinEnsemble {
    std::vector<EnsembleMember> members;
};

// "+-+-" style string, one character per site in site-index order
SpinConfiguration parse_spin_string(const std::string& s);
std::string spin_string(const SpinConfiguration& s);

// explicit members; weights must be >= 0 and are normalised to sum 1
SpinEnsemble make_ensemble(std::vector<EnsembleMember> members);

inline constexpr double prune_threshold = 1e-12;

// Product state prod_i (c_up|up> + c_down|down>); members with weight below 1e-12 are pruned.
SpinEnsemble ensemble_from_product_state(const std::vector<std::pair<cplx, cplx>>& amplitudes, bool allow_large = false);

struct DisorderAverage {
    ObservableSeries mean;
    std::vector<ObservableSeries> members;  // filled when requested
    std::vector<std::string> warnings;
};

// Runs every member with `task` (engine as set in the task) and sums weight * series in member order.
DisorderAverage disorder_average(const EvolutionTask& task, const SpinEnsemble& ensemble, bool keep_members = false);

}  // namespace patsim
