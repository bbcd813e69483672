#include "patsim/fock.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <sstream>

namespace patsim {

FockSpace::FockSpace(std::vector<FockMode> modes, int n_trunc, std::optional<int> sector)
    : modes_(std::move(modes)), n_trunc_(n_trunc), sector_(sector) {
    if (n_trunc < 1) throw ValidationError("n_trunc", "must be >= 1");
    if (n_trunc > 255) throw ValidationError("n_trunc", "must be <= 255");
    const int M = num_modes();
    if (M < 1) throw ValidationError("modes", "empty mode list");
    if (sector) {
        if (*sector < 0 || *sector > M * n_trunc)
            throw ValidationError("sector", "N=" + std::to_string(*sector) + " not reachable with " +
                                                std::to_string(M) + " modes and n_trunc=" + std::to_string(n_trunc));
    } else {
        const double d = std::pow(n_trunc + 1.0, M);
        if (d > 5e6) throw ValidationError("n_trunc", "unsectored space too large (" + std::to_string(d) + " states)");
    }
    std::vector<std::uint8_t> cur(M, 0);
    // depth-first in ascending occupation per slot gives lexicographic order
    std::function<void(int, int)> rec = [&](int m, int left) {
        if (m == M) {
            if (!sector || left == 0) states_.push_back(cur);
            return;
        }
        const int rest = M - m - 1;
        for (int n = 0; n <= n_trunc; ++n) {
            if (sector) {
                if (n > left) break;
                if (left - n > rest * n_trunc) continue;
            }
            cur[m] = static_cast<std::uint8_t>(n);
            rec(m + 1, sector ? left - n : 0);
        }
        cur[m] = 0;
    };
    rec(0, sector.value_or(0));
    lookup_.reserve(states_.size() * 2);
    for (int b = 0; b < dim(); ++b) lookup_.emplace(encode(states_[b]), b);
}

std::uint64_t FockSpace::encode(const std::vector<std::uint8_t>& occ) const {
    std::uint64_t code = 0;
    for (auto n : occ) code = code * static_cast<std::uint64_t>(n_trunc_ + 1) + n;
    return code;
}

int FockSpace::index_of(const std::vector<std::uint8_t>& occ) const {
    if (occ.size() != modes_.size()) return -1;
    for (auto n : occ)
        if (n > n_trunc_) return -1;
    auto it = lookup_.find(encode(occ));
    return it == lookup_.end() ? -1 : it->second;
}

int FockSpace::total(int b) const {
    int s = 0;
    for (auto n : states_[b]) s += n;
    return s;
}

int FockSpace::mode_index(Site s, int flavor) const {
    for (int m = 0; m < num_modes(); ++m)
        if (modes_[m].site == s && modes_[m].flavor == flavor) return m;
    return -1;
}

std::vector<std::vector<int>> FockSpace::sectors() const {
    const int maxN = num_modes() * n_trunc_;
    std::vector<std::vector<int>> out(maxN + 1);
    for (int b = 0; b < dim(); ++b) out[total(b)].push_back(b);
    std::erase_if(out, [](const auto& v) { return v.empty(); });
    return out;
}

double OperatorMatrix::hermiticity_error() const {
    SparseC diff = entries - SparseC(entries.adjoint());
    double m = 0.0;
    for (int k = 0; k < diff.outerSize(); ++k)
        for (SparseC::InnerIterator it(diff, k); it; ++it) m = std::max(m, std::abs(it.value()));
    return m;
}

QuantumState QuantumState::pure(FockSpacePtr space, Eigen::VectorXcd psi) {
    if (psi.size() != space->dim()) throw ValidationError("initial", "state dimension mismatch");
    QuantumState s;
    s.kind = StateKind::PureVector;
    s.psi = std::move(psi);
    s.space = std::move(space);
    return s;
}

QuantumState QuantumState::density(FockSpacePtr space, Eigen::MatrixXcd rho) {
    if (rho.rows() != space->dim() || rho.cols() != space->dim())
        throw ValidationError("initial", "density matrix dimension mismatch");
    QuantumState s;
    s.kind = StateKind::DensityMatrix;
    s.rho = std::move(rho);
    s.space = std::move(space);
    return s;
}

QuantumState QuantumState::basis(FockSpacePtr space, const std::vector<std::uint8_t>& occ) {
    const int b = space->index_of(occ);
    if (b < 0) throw ValidationError("initial", "occupation tuple not in the Fock basis");
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(space->dim());
    psi[b] = 1.0;
    return pure(std::move(space), std::move(psi));
}

void QuantumState::check(double tol) const {
    if (kind == StateKind::PureVector) {
        if (std::abs(psi.norm() - 1.0) > tol) throw ValidationError("initial", "state is not normalised");
        return;
    }
    const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    if (herm > tol) throw ValidationError("initial", "density matrix is not Hermitian");
    if (std::abs(rho.trace() - cplx(1.0)) > tol) throw ValidationError("initial", "density matrix trace differs from 1");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol) throw ValidationError("initial", "density matrix is not positive semidefinite");
}

Eigen::VectorXd QuantumState::populations() const {
    if (kind == StateKind::PureVector) return psi.cwiseAbs2();
    return rho.diagonal().real();
}

FockSpacePtr build_fock_space(const ModelSpec& model, int n_trunc, std::optional<int> sector) {
    std::vector<FockMode> modes;
    const auto& L = model.lattice;
    for (int k = 0; k < L.num_sites(); ++k)
        for (int f = 0; f < model.num_flavors(); ++f) modes.push_back({L.site_at(k), f});
    return std::make_shared<const FockSpace>(std::move(modes), n_trunc, sector);
}

OperatorMatrix ladder_operator(const FockSpace& space, int mode, Ladder kind) {
    if (space.sector()) throw ValidationError("ladder", "single ladder operators do not act within a number sector");
    if (mode < 0 || mode >= space.num_modes()) throw ValidationError("mode", "mode index out of range");
    std::vector<Eigen::Triplet<cplx>> trip;
    for (int b = 0; b < space.dim(); ++b) {
        auto occ = space.occupation(b);
        const int n = occ[mode];
        if (kind == Ladder::Create) {
            if (n == space.n_trunc()) continue;
            occ[mode] = n + 1;
            trip.emplace_back(space.index_of(occ), b, std::sqrt(n + 1.0));
        } else {
            if (n == 0) continue;
            occ[mode] = n - 1;
            trip.emplace_back(space.index_of(occ), b, std::sqrt(static_cast<double>(n)));
        }
    }
    OperatorMatrix op;
    op.entries.resize(space.dim(), space.dim());
    op.entries.setFromTriplets(trip.begin(), trip.end());
    return op;
}

OperatorMatrix number_operator(const FockSpace& space, int mode) {
    std::vector<Eigen::Triplet<cplx>> trip;
    for (int b = 0; b < space.dim(); ++b)
        if (space.occ(b, mode)) trip.emplace_back(b, b, static_cast<double>(space.occ(b, mode)));
    OperatorMatrix op;
    op.entries.resize(space.dim(), space.dim());
    op.entries.setFromTriplets(trip.begin(), trip.end());
    return op;
}

OperatorMatrix total_number_operator(const FockSpace& space) {
    std::vector<Eigen::Triplet<cplx>> trip;
    for (int b = 0; b < space.dim(); ++b)
        if (space.total(b)) trip.emplace_back(b, b, static_cast<double>(space.total(b)));
    OperatorMatrix op;
    op.entries.resize(space.dim(), space.dim());
    op.entries.setFromTriplets(trip.begin(), trip.end());
    return op;
}

SparseC hopping_operator(const FockSpace& space, const std::vector<BarePair>& links) {
    std::vector<Eigen::Triplet<cplx>> trip;
    for (const auto& l : links) {
        const int mi = space.mode_index(l.i, l.flavor), mj = space.mode_index(l.j, l.flavor);
        if (mi < 0 || mj < 0) throw ValidationError("coupling", "link references a mode outside the Fock space");
        for (int b = 0; b < space.dim(); ++b) {
            const int nj = space.occ(b, mj), ni = space.occ(b, mi);
            if (nj == 0 || ni == space.n_trunc()) continue;
            auto occ = space.occupation(b);
            occ[mj] = nj - 1;
            occ[mi] = ni + 1;
            const int c = space.index_of(occ);
            if (c < 0) continue;
            const cplx v = l.J * std::sqrt(nj * (ni + 1.0));
            trip.emplace_back(c, b, v);
            trip.emplace_back(b, c, std::conj(v));
        }
    }
    SparseC H(space.dim(), space.dim());
    H.setFromTriplets(trip.begin(), trip.end());
    H.makeCompressed();
    return H;
}

namespace {

double interaction_energy(const ModelSpec& model, const FockSpace& space, int b) {
    if (model.onsite_interactions.empty()) return 0.0;
    const auto& L = model.lattice;
    const int nf = model.num_flavors();
    double e = 0.0;
    for (int k = 0; k < L.num_sites(); ++k) {
        for (int f = 0; f < nf; ++f) {
            const int nfm = space.occ(b, k * nf + f);
            for (int g = 0; g < nf; ++g) {
                const double u = model.U(k, f, g);
                if (u == 0.0) continue;
                const int ng = space.occ(b, k * nf + g);
                e += u * (f == g ? nfm * (nfm - 1.0) : static_cast<double>(nfm) * ng);
            }
        }
    }
    return e;
}

int spin_of(const std::optional<SpinConfiguration>& spins, int site) {
    return spins ? (*spins)[site] : 1;
}

void check_space(const ModelSpec& model, const FockSpace& space) {
    if (space.num_modes() != model.lattice.num_sites() * model.num_flavors())
        throw ValidationError("fock", "Fock space does not match the model's modes");
}

}  // namespace

DrivenHamiltonian build_driven_hamiltonian(const ModelSpec& model, const FockSpace& space,
                                           const std::optional<SpinConfiguration>& spins) {
    validate(model);
    validate_spins(model, spins);
    check_space(model, space);
    const auto& L = model.lattice;
    const auto& d = model.drive;
    const bool site_eps = model.mode == Mode::SpinSiteDisorder || model.mode == Mode::SpinFluxDecoration;
    const bool spin_drive = model.mode == Mode::SpinBondDisorder;

    // per-mode coefficients
    std::vector<double> lin(space.num_modes());
    std::vector<cplx> amp(space.num_modes());
    for (int m = 0; m < space.num_modes(); ++m) {
        const auto& md = space.modes()[m];
        const int k = L.site_index(md.site);
        const int f = md.flavor;
        const int sg = spin_of(spins, k);
        lin[m] = model.offset(f) + d.delta_omega[f] * md.site.i1 + (site_eps ? model.eps(f) * sg : 0.0);
        const double a = d.eta_d[f] * d.omega_d * (spin_drive ? sg : 1);
        amp[m] = a * std::polar(1.0, phase_at_site(d, md.site));
    }
    DrivenHamiltonian H;
    H.omega_d = d.omega_d;
    H.static_diag.resize(space.dim());
    H.drive_amp.resize(space.dim());
    for (int b = 0; b < space.dim(); ++b) {
        double s = 0.0;
        cplx a(0.0);
        for (int m = 0; m < space.num_modes(); ++m) {
            const int n = space.occ(b, m);
            if (!n) continue;
            s += n * lin[m];
            a += static_cast<double>(n) * amp[m];
        }
        H.static_diag[b] = s + interaction_energy(model, space, b);
        H.drive_amp[b] = a;
    }
    H.hopping = hopping_operator(space, enumerate_ordered_pairs(L, model.num_flavors()));
    return H;
}

Eigen::VectorXd DrivenHamiltonian::diag_at(double t) const {
    const cplx e = std::polar(1.0, omega_d * t);
    return static_diag + (drive_amp * e).real();
}

Eigen::VectorXd DrivenHamiltonian::diag_phase(double t) const {
    Eigen::VectorXd th = static_diag * t;
    if (omega_d != 0.0) {
        const cplx e = std::polar(1.0, omega_d * t) - 1.0;
        th += (drive_amp * e).imag() / omega_d;
    } else {
        th += drive_amp.real() * t;
    }
    return th;
}

OperatorMatrix DrivenHamiltonian::at(double t) const {
    OperatorMatrix op;
    op.entries = hopping;
    const Eigen::VectorXd dg = diag_at(t);
    SparseC D(dim(), dim());
    std::vector<Eigen::Triplet<cplx>> trip;
    for (int b = 0; b < dim(); ++b) trip.emplace_back(b, b, dg[b]);
    D.setFromTriplets(trip.begin(), trip.end());
    op.entries += D;
    return op;
}

DrivenHamiltonian DrivenHamiltonian::restrict(const std::vector<int>& idx) const {
    DrivenHamiltonian out;
    out.omega_d = omega_d;
    const int n = static_cast<int>(idx.size());
    out.static_diag.resize(n);
    out.drive_amp.resize(n);
    std::unordered_map<int, int> pos;
    for (int k = 0; k < n; ++k) {
        out.static_diag[k] = static_diag[idx[k]];
        out.drive_amp[k] = drive_amp[idx[k]];
        pos[idx[k]] = k;
    }
    std::vector<Eigen::Triplet<cplx>> trip;
    for (int k = 0; k < n; ++k) {
        for (SparseC::InnerIterator it(hopping, idx[k]); it; ++it) {
            auto p = pos.find(static_cast<int>(it.col()));
            if (p == pos.end()) throw std::logic_error("restrict: index set not closed under hopping");
            trip.emplace_back(k, p->second, it.value());
        }
    }
    out.hopping.resize(n, n);
    out.hopping.setFromTriplets(trip.begin(), trip.end());
    out.hopping.makeCompressed();
    return out;
}

OperatorMatrix build_full_hamiltonian(const ModelSpec& model, const FockSpace& space,
                                      const std::optional<SpinConfiguration>& spins, double t) {
    return build_driven_hamiltonian(model, space, spins).at(t);
}

OperatorMatrix build_effective_hamiltonian(const ModelSpec& model, const FockSpace& space,
                                           const std::optional<SpinConfiguration>& spins) {
    validate(model);
    validate_spins(model, spins);
    check_space(model, space);
    const auto dressed = build_dressed_matrix(model, spins);
    std::vector<BarePair> links;
    links.reserve(dressed.size());
    for (const auto& [k, v] : dressed) links.push_back({k.i, k.j, k.flavor, v.value});
    OperatorMatrix op;
    op.entries = hopping_operator(space, links);

    const auto& L = model.lattice;
    const bool site_eps = model.mode == Mode::SpinSiteDisorder;
    std::vector<Eigen::Triplet<cplx>> trip;
    for (int b = 0; b < space.dim(); ++b) {
        double e = interaction_energy(model, space, b);
        if (site_eps) {
            for (int m = 0; m < space.num_modes(); ++m) {
                const auto& md = space.modes()[m];
                e += model.eps(md.flavor) * spin_of(spins, L.site_index(md.site)) * space.occ(b, m);
            }
        }
        if (e != 0.0) trip.emplace_back(b, b, e);
    }
    if (!trip.empty()) {
        SparseC D(space.dim(), space.dim());
        D.setFromTriplets(trip.begin(), trip.end());
        op.entries += D;
    }
    op.entries.makeCompressed();
    return op;
}

QuantumState thermal_state(FockSpacePtr space, const std::vector<double>& nbar) {
    if (space->sector()) throw ValidationError("initial.thermal", "thermal product states need an unsectored Fock space");
    if (static_cast<int>(nbar.size()) != space->num_modes())
        throw ValidationError("initial.thermal.nbar", "one mean occupation per mode required");
    const int nt = space->n_trunc();
    std::vector<std::vector<double>> p(nbar.size(), std::vector<double>(nt + 1));
    for (std::size_t m = 0; m < nbar.size(); ++m) {
        if (!(nbar[m] >= 0.0)) throw ValidationError("initial.thermal.nbar", "mean occupations must be >= 0");
        const double q = nbar[m] / (1.0 + nbar[m]);
        double z = 0.0;
        for (int n = 0; n <= nt; ++n) z += (p[m][n] = std::pow(q, n));
        for (int n = 0; n <= nt; ++n) p[m][n] /= z;
    }
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(space->dim(), space->dim());
    double tr = 0.0;
    for (int b = 0; b < space->dim(); ++b) {
        double w = 1.0;
        for (int m = 0; m < space->num_modes(); ++m) w *= p[m][space->occ(b, m)];
        rho(b, b) = w;
        tr += w;
    }
    rho /= tr;
    return QuantumState::density(std::move(space), std::move(rho));
}

std::string to_triplets(const OperatorMatrix& op) {
    std::ostringstream os;
    os << std::setprecision(17);
    for (int k = 0; k < op.entries.outerSize(); ++k)
        for (SparseC::InnerIterator it(op.entries, k); it; ++it)
            os << it.row() << " " << it.col() << " " << it.value().real() << " " << it.value().imag() << "\n";
    return os.str();
}

}  // namespace patsim
