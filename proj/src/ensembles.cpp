#include "patsim/ensembles.hpp"

#include "patsim/parallel.hpp"

#include <cmath>
#include <sstream>

namespace patsim {

SpinConfiguration parse_spin_string(const std::string& s) {
    SpinConfiguration out;
    for (char c : s) {
        if (c == '+' || c == 'u' || c == 'U') out.push_back(1);
        else if (c == '-' || c == 'd' || c == 'D') out.push_back(-1);
        else if (c == ' ' || c == ',') continue;
        else throw ValidationError("spins", std::string("unexpected character '") + c + "' in spin string");
    }
    return out;
}

std::string spin_string(const SpinConfiguration& s) {
    std::string out;
    for (int v : s) out += v > 0 ? '+' : '-';
    return out;
}

SpinEnsemble make_ensemble(std::vector<EnsembleMember> members) {
    if (members.empty()) throw ValidationError("ensemble", "empty ensemble");
    double tot = 0.0;
    for (const auto& m : members) {
        if (!(m.weight >= 0.0)) throw ValidationError("ensemble.weight", "weights must be non-negative");
        tot += m.weight;
    }
    if (!(tot > 0.0)) throw ValidationError("ensemble.weight", "weights sum to zero");
    for (auto& m : members) m.weight /= tot;
    return {std::move(members)};
}

SpinEnsemble ensemble_from_product_state(const std::vector<std::pair<cplx, cplx>>& amps, bool allow_large) {
    const std::size_t N = amps.size();
    if (N == 0) throw ValidationError("ensemble.amplitudes", "no sites");
    if (N > 16 && !allow_large) throw ValidationError("ensemble.amplitudes", "more than 16 sites needs an explicit override");
    std::vector<double> pu(N), pd(N);
    for (std::size_t i = 0; i < N; ++i) {
        pu[i] = std::norm(amps[i].first);
        pd[i] = std::norm(amps[i].second);
        if (std::abs(pu[i] + pd[i] - 1.0) > 1e-9)
            throw ValidationError("ensemble.amplitudes[" + std::to_string(i) + "]", "|c_up|^2 + |c_down|^2 must be 1");
    }
    // depth-first over sites, skipping zero-probability branches early
    std::vector<EnsembleMember> members;
    SpinConfiguration cur(N);
    auto rec = [&](auto&& self, std::size_t i, double w) -> void {
        if (w < prune_threshold) return;
        if (i == N) {
            members.push_back({cur, w});
            return;
        }
        cur[i] = 1;
        self(self, i + 1, w * pu[i]);
        cur[i] = -1;
        self(self, i + 1, w * pd[i]);
    };
    rec(rec, 0, 1.0);
    return make_ensemble(std::move(members));
}

DisorderAverage disorder_average(const EvolutionTask& task, const SpinEnsemble& ensemble, bool keep_members) {
    if (ensemble.members.empty()) throw ValidationError("ensemble", "empty ensemble");
    const auto m = task.model.mode;
    if (m != Mode::SpinBondDisorder && m != Mode::SpinSiteDisorder && m != Mode::SpinFluxDecoration)
        throw ValidationError("model.mode", "disorder averaging needs a spin-dependent mode");

    DisorderAverage out;
    if (m == Mode::SpinSiteDisorder) {
        for (int f = 0; f < task.model.num_flavors(); ++f) {
            const double dw = std::abs(task.model.drive.delta_omega[f]);
            if (task.model.eps(f) >= dw / 10.0) {
                std::ostringstream os;
                os << "site disorder epsilon=" << task.model.eps(f) << " is not small against the gradient "
                   << dw << " for flavor '" << task.model.flavors[f] << "'";
                out.warnings.push_back(os.str());
            }
        }
    }

    std::vector<ObservableSeries> runs(ensemble.members.size());
    // members run one per worker; each member runs single-threaded inside
    EvolutionTask base = task;
    const int jobs = task.jobs;
    base.jobs = 1;
    parallel_for(runs.size(), jobs, [&](std::size_t k) {
        EvolutionTask t = base;
        t.spins = ensemble.members[k].spins;
        runs[k] = evolve(t);
    });

    out.mean = runs.front();
    for (auto& v : out.mean.values) std::fill(v.begin(), v.end(), 0.0);
    out.mean.norm_drift = 0.0;
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const double w = ensemble.members[k].weight;
        for (std::size_t o = 0; o < out.mean.values.size(); ++o)
            for (std::size_t s = 0; s < out.mean.times.size(); ++s) out.mean.values[o][s] += w * runs[k].values[o][s];
        out.mean.norm_drift = std::max(out.mean.norm_drift, runs[k].norm_drift);
        out.mean.hermiticity_drift = std::max(out.mean.hermiticity_drift, runs[k].hermiticity_drift);
    }
    if (keep_members) out.members = std::move(runs);
    return out;
}

}  // namespace patsim
