#include "patsim/dynamics.hpp"

#include "patsim/parallel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace patsim {

namespace {

const cplx I(0.0, 1.0);

struct BlockResult {
    std::vector<Eigen::VectorXd> pops;  // per sample, over the block's indices
    double norm_drift = 0.0;
    double herm_drift = 0.0;
    long steps = 0;
};

void check_samples(const EvolutionTask& task) {
    const auto& s = task.sample_times;
    if (s.empty()) throw ValidationError("task.sample_times", "no sample times");
    if (!std::is_sorted(s.begin(), s.end())) throw ValidationError("task.sample_times", "must be sorted");
    if (s.front() < 0.0 || s.back() > task.t_final * (1 + 1e-12) + 1e-12)
        throw ValidationError("task.sample_times", "must lie within [0, t_final]");
    if (!task.space) throw ValidationError("task.space", "missing Fock space");
    if (task.initial.space && task.initial.space->dim() != task.space->dim())
        throw ValidationError("task.initial", "state does not belong to the task's Fock space");
}

OdeOptions effective_options(const EvolutionTask& task) {
    OdeOptions o = task.ode;
    if (task.model.drive.omega_d > 0.0) o.h_max = std::min(o.h_max, (2.0 * pi / task.model.drive.omega_d) / 50.0);
    return o;
}

BlockResult integrate_block(const DrivenHamiltonian& H, Eigen::MatrixXcd y0, bool density, Frame frame,
                            const OdeOptions& opt, const std::vector<double>& samples) {
    const int d = H.dim();
    const bool driven = H.drive_amp.size() && H.drive_amp.cwiseAbs().maxCoeff() > 0.0;
    Eigen::MatrixXcd tmp(d, y0.cols()), X(d, y0.cols());
    Eigen::VectorXcd u(d);

    Dopri5::Rhs rhs;
    if (frame == Frame::Interaction) {
        rhs = [&, driven](double t, const Eigen::MatrixXcd& y, Eigen::MatrixXcd& dy) {
            const Eigen::VectorXd th = driven ? H.diag_phase(t) : Eigen::VectorXd(H.static_diag * t);
            for (int b = 0; b < d; ++b) u[b] = std::polar(1.0, th[b]);
            tmp.noalias() = u.conjugate().asDiagonal() * y;
            X.noalias() = H.hopping * tmp;
            X = u.asDiagonal() * X;
            if (density)
                dy = -I * (X - X.adjoint());
            else
                dy = -I * X;
        };
    } else {
        rhs = [&](double t, const Eigen::MatrixXcd& y, Eigen::MatrixXcd& dy) {
            const Eigen::VectorXd dg = H.diag_at(t);
            X.noalias() = H.hopping * y;
            X += dg.asDiagonal() * y;
            if (density)
                dy = -I * (X - X.adjoint());
            else
                dy = -I * X;
        };
    }

    BlockResult res;
    res.pops.resize(samples.size());
    Dopri5 ode(opt);
    ode.integrate(rhs, 0.0, std::move(y0), samples, [&](std::size_t k, double, const Eigen::MatrixXcd& y) {
        if (density) {
            res.pops[k] = y.diagonal().real();
            res.herm_drift = std::max(res.herm_drift, (y - y.adjoint()).cwiseAbs().maxCoeff());
        } else {
            res.pops[k] = y.col(0).cwiseAbs2();
        }
    });
    res.steps = ode.stats().accepted;
    return res;
}

Eigen::MatrixXd occupation_matrix(const FockSpace& space) {
    Eigen::MatrixXd O(space.dim(), space.num_modes() + 1);
    for (int b = 0; b < space.dim(); ++b) {
        for (int m = 0; m < space.num_modes(); ++m) O(b, m) = space.occ(b, m);
        O(b, space.num_modes()) = space.total(b);
    }
    return O;
}

ObservableSeries make_series(const EvolutionTask& task) {
    ObservableSeries s;
    s.times = task.sample_times;
    s.names = observable_names(task.model, *task.space);
    s.values.assign(s.names.size(), std::vector<double>(s.times.size(), 0.0));
    return s;
}

// Adds block populations into the series; blocks are added in a fixed order.
void accumulate(ObservableSeries& s, const Eigen::MatrixXd& O, const std::vector<int>& idx,
                const std::vector<Eigen::VectorXd>& pops, std::vector<double>& trace) {
    for (std::size_t k = 0; k < pops.size(); ++k) {
        const auto& p = pops[k];
        for (std::size_t b = 0; b < idx.size(); ++b) {
            const double w = p[static_cast<Eigen::Index>(b)];
            trace[k] += w;
            if (w == 0.0) continue;
            for (std::size_t o = 0; o < s.names.size(); ++o) s.values[o][k] += w * O(idx[b], static_cast<Eigen::Index>(o));
        }
    }
}

}  // namespace

const std::vector<double>& ObservableSeries::get(const std::string& name) const {
    for (std::size_t k = 0; k < names.size(); ++k)
        if (names[k] == name) return values[k];
    throw ValidationError("observable", "unknown observable '" + name + "'");
}

std::string ObservableSeries::to_csv() const {
    std::string out = "time";
    for (const auto& n : names) out += "," + n;
    out += "\r\n";
    char buf[64];
    for (std::size_t k = 0; k < times.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.15g", times[k]);
        out += buf;
        for (const auto& v : values) {
            std::snprintf(buf, sizeof buf, ",%.15g", v[k]);
            out += buf;
        }
        out += "\r\n";
    }
    return out;
}

std::string ObservableSeries::to_json() const {
    nlohmann::ordered_json j;
    j["times"] = times;
    nlohmann::ordered_json obs = nlohmann::ordered_json::object();
    for (std::size_t k = 0; k < names.size(); ++k) obs[names[k]] = values[k];
    j["observables"] = obs;
    j["diagnostics"] = {{"norm_drift", norm_drift}, {"hermiticity_drift", hermiticity_drift}, {"steps", steps}};
    return j.dump(2);
}

std::vector<double> uniform_samples(double t_final, int count) {
    if (count < 2) throw ValidationError("task.samples", "need at least two samples");
    std::vector<double> t(count);
    for (int k = 0; k < count; ++k) t[k] = t_final * k / (count - 1);
    t.back() = t_final;
    return t;
}

std::vector<std::string> observable_names(const ModelSpec& model, const FockSpace& space) {
    std::vector<std::string> out;
    for (const auto& m : space.modes()) {
        std::string n = "n_" + std::to_string(m.site.i1) + "_" + std::to_string(m.site.i2);
        if (model.num_flavors() > 1) n += "_" + model.flavors[m.flavor];
        out.push_back(n);
    }
    out.push_back("n_total");
    return out;
}

ObservableSeries evolve_pure_full(const EvolutionTask& task) {
    check_samples(task);
    if (task.initial.kind != StateKind::PureVector) throw ValidationError("task.initial", "pure state required");
    task.initial.check();
    const auto H = build_driven_hamiltonian(task.model, *task.space, task.spins);
    auto res = integrate_block(H, task.initial.psi, false, task.frame, effective_options(task), task.sample_times);

    ObservableSeries s = make_series(task);
    std::vector<int> idx(task.space->dim());
    for (int b = 0; b < task.space->dim(); ++b) idx[b] = b;
    std::vector<double> trace(s.times.size(), 0.0);
    accumulate(s, occupation_matrix(*task.space), idx, res.pops, trace);
    for (double tr : trace) s.norm_drift = std::max(s.norm_drift, std::abs(tr - 1.0));
    s.steps = res.steps;
    return s;
}

ObservableSeries evolve_density_full(const EvolutionTask& task) {
    check_samples(task);
    if (task.initial.kind != StateKind::DensityMatrix) throw ValidationError("task.initial", "density matrix required");
    task.initial.check();
    const auto H = build_driven_hamiltonian(task.model, *task.space, task.spins);
    // H(t) conserves total number, so the diagonal sector blocks of rho evolve on their own;
    // populations only depend on those blocks.
    const auto sectors = task.space->sectors();
    std::vector<BlockResult> results(sectors.size());
    const auto opt = effective_options(task);
    parallel_for(sectors.size(), task.jobs, [&](std::size_t k) {
        const auto& idx = sectors[k];
        const int n = static_cast<int>(idx.size());
        Eigen::MatrixXcd r0(n, n);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) r0(a, b) = task.initial.rho(idx[a], idx[b]);
        if (r0.cwiseAbs().maxCoeff() == 0.0) {
            results[k].pops.assign(task.sample_times.size(), Eigen::VectorXd::Zero(n));
            return;
        }
        results[k] = integrate_block(H.restrict(idx), std::move(r0), true, task.frame, opt, task.sample_times);
    });
    ObservableSeries s = make_series(task);
    const auto O = occupation_matrix(*task.space);
    std::vector<double> trace(s.times.size(), 0.0);
    for (std::size_t k = 0; k < sectors.size(); ++k) {
        accumulate(s, O, sectors[k], results[k].pops, trace);
        s.hermiticity_drift = std::max(s.hermiticity_drift, results[k].herm_drift);
        s.steps = std::max(s.steps, results[k].steps);
    }
    for (double tr : trace) s.norm_drift = std::max(s.norm_drift, std::abs(tr - 1.0));
    return s;
}

EffectivePropagator::EffectivePropagator(const OperatorMatrix& H, const FockSpace& space) : dim_(space.dim()) {
    if (H.dim() != space.dim()) throw ValidationError("hamiltonian", "dimension mismatch");
    for (const auto& idx : space.sectors()) {
        const int n = static_cast<int>(idx.size());
        if (n > 1024) throw NumericalError("effective propagator: sector dimension above 1024 is not supported");
        Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
        std::unordered_map<int, int> pos;
        for (int a = 0; a < n; ++a) pos[idx[a]] = a;
        for (int a = 0; a < n; ++a)
            for (SparseC::InnerIterator it(H.entries, idx[a]); it; ++it) {
                auto p = pos.find(static_cast<int>(it.col()));
                if (p == pos.end()) throw NumericalError("effective propagator: Hamiltonian mixes number sectors");
                h(a, p->second) = it.value();
            }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
        if (es.info() != Eigen::Success) throw NumericalError("effective propagator: eigendecomposition failed");
        blocks_.push_back({idx, es.eigenvalues(), es.eigenvectors()});
    }
}

QuantumState EffectivePropagator::apply(const QuantumState& s, double t) const {
    if (s.kind == StateKind::PureVector) {
        Eigen::VectorXcd out = Eigen::VectorXcd::Zero(dim_);
        for (const auto& B : blocks_) {
            const int n = static_cast<int>(B.idx.size());
            Eigen::VectorXcd v(n);
            for (int a = 0; a < n; ++a) v[a] = s.psi[B.idx[a]];
            Eigen::VectorXcd c = B.V.adjoint() * v;
            for (int k = 0; k < n; ++k) c[k] *= std::polar(1.0, -B.E[k] * t);
            v = B.V * c;
            for (int a = 0; a < n; ++a) out[B.idx[a]] = v[a];
        }
        return QuantumState::pure(s.space, out);
    }
    Eigen::MatrixXcd U = Eigen::MatrixXcd::Zero(dim_, dim_);
    for (const auto& B : blocks_) {
        const int n = static_cast<int>(B.idx.size());
        Eigen::VectorXcd ph(n);
        for (int k = 0; k < n; ++k) ph[k] = std::polar(1.0, -B.E[k] * t);
        Eigen::MatrixXcd u = B.V * ph.asDiagonal() * B.V.adjoint();
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) U(B.idx[a], B.idx[b]) = u(a, b);
    }
    return QuantumState::density(s.space, U * s.rho * U.adjoint());
}

Eigen::VectorXd EffectivePropagator::populations(const QuantumState& s, double t) const {
    if (s.kind == StateKind::PureVector) return apply(s, t).psi.cwiseAbs2();
    Eigen::VectorXd p = Eigen::VectorXd::Zero(dim_);
    for (const auto& B : blocks_) {
        const int n = static_cast<int>(B.idx.size());
        Eigen::MatrixXcd r(n, n);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) r(a, b) = s.rho(B.idx[a], B.idx[b]);
        if (r.cwiseAbs().maxCoeff() == 0.0) continue;
        Eigen::VectorXcd ph(n);
        for (int k = 0; k < n; ++k) ph[k] = std::polar(1.0, -B.E[k] * t);
        Eigen::MatrixXcd R = B.V.adjoint() * r * B.V;
        R = ph.asDiagonal() * R * ph.conjugate().asDiagonal();
        Eigen::MatrixXcd W = B.V * R;
        for (int a = 0; a < n; ++a) p[B.idx[a]] = (W.row(a).cwiseProduct(B.V.row(a).conjugate())).sum().real();
    }
    return p;
}

ObservableSeries evolve_effective(const EvolutionTask& task) {
    check_samples(task);
    task.initial.check();
    const auto H = build_effective_hamiltonian(task.model, *task.space, task.spins);
    const EffectivePropagator P(H, *task.space);
    ObservableSeries s = make_series(task);
    const auto O = occupation_matrix(*task.space);
    std::vector<Eigen::VectorXd> pops(s.times.size());
    parallel_for(s.times.size(), task.jobs, [&](std::size_t k) { pops[k] = P.populations(task.initial, s.times[k]); });
    std::vector<int> idx(task.space->dim());
    for (int b = 0; b < task.space->dim(); ++b) idx[b] = b;
    std::vector<double> trace(s.times.size(), 0.0);
    accumulate(s, O, idx, pops, trace);
    for (double tr : trace) s.norm_drift = std::max(s.norm_drift, std::abs(tr - 1.0));
    return s;
}

ObservableSeries evolve(const EvolutionTask& task) {
    if (task.engine == Engine::Effective) return evolve_effective(task);
    return task.initial.kind == StateKind::PureVector ? evolve_pure_full(task) : evolve_density_full(task);
}

EngineComparison compare_engines(const EvolutionTask& task) {
    EngineComparison c;
    EvolutionTask t = task;
    t.engine = Engine::FullDriven;
    c.full = evolve(t);
    t.engine = Engine::Effective;
    c.effective = evolve(t);
    for (std::size_t o = 0; o < c.full.names.size(); ++o) {
        double m = 0.0, tm = c.full.times.empty() ? 0.0 : c.full.times.front();
        for (std::size_t k = 0; k < c.full.times.size(); ++k) {
            const double d = std::abs(c.full.values[o][k] - c.effective.values[o][k]);
            if (d > m) { m = d; tm = c.full.times[k]; }
        }
        c.max_abs_deviation[c.full.names[o]] = m;
        c.time_of_max[c.full.names[o]] = tm;
        if (m > c.overall_max) { c.overall_max = m; c.overall_time = tm; }
    }
    return c;
}

double max_transfer(const ObservableSeries& s, const std::string& name, double t_star, Extremum e) {
    const auto& v = s.get(name);
    if (s.times.empty() || t_star < s.times.front())
        throw ValidationError("t_star", "horizon precedes the first sample");
    double best = e == Extremum::Max ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < s.times.size() && s.times[k] <= t_star; ++k)
        best = e == Extremum::Max ? std::max(best, v[k]) : std::min(best, v[k]);
    return best;
}

double estimate_period(const ObservableSeries& s, const std::string& name) {
    const auto& v = s.get(name);
    if (v.size() < 3) return std::numeric_limits<double>::quiet_NaN();
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double mid = 0.5 * (*lo + *hi), arm = mid + 0.25 * (*hi - *lo);
    std::vector<double> cross;
    // a crossing counts only after the signal has been well above the mid level, so that
    // fast micromotion around the mid level is not taken for extra periods
    bool armed = false;
    for (std::size_t k = 1; k < v.size(); ++k) {
        if (v[k - 1] > arm) armed = true;
        if (armed && v[k - 1] > mid && v[k] <= mid) {
            const double f = (v[k - 1] - mid) / (v[k - 1] - v[k]);
            cross.push_back(s.times[k - 1] + f * (s.times[k] - s.times[k - 1]));
            armed = false;
        }
    }
    if (cross.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    return (cross.back() - cross.front()) / static_cast<double>(cross.size() - 1);
}

}  // namespace patsim
