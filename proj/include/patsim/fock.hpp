#pragma once

#include "patsim/model.hpp"
#include "patsim/modulation.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace patsim {

using SparseC = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

struct FockMode {
    Site site;
    int flavor = 0;
};

class FockSpace {
public:
    // modes are ordered by (site index, flavor)
    FockSpace(std::vector<FockMode> modes, int n_trunc, std::optional<int> sector);

    int dim() const { return static_cast<int>(states_.size()); }
    int num_modes() const { return static_cast<int>(modes_.size()); }
    int n_trunc() const { return n_trunc_; }
    std::optional<int> sector() const { return sector_; }
    const std::vector<FockMode>& modes() const { return modes_; }
    const std::vector<std::uint8_t>& occupation(int b) const { return states_[b]; }
    int occ(int b, int m) const { return states_[b][m]; }
    int total(int b) const;

    // -1 if the tuple is not in the basis
    int index_of(const std::vector<std::uint8_t>& occ) const;

    int mode_index(Site s, int flavor) const;

    // basis indices grouped by total particle number, ascending N
    std::vector<std::vector<int>> sectors() const;

private:
    std::uint64_t encode(const std::vector<std::uint8_t>& occ) const;

    std::vector<FockMode> modes_;
    int n_trunc_;
    std::optional<int> sector_;
    std::vector<std::vector<std::uint8_t>> states_;
    std::unordered_map<std::uint64_t, int> lookup_;
};

using FockSpacePtr = std::shared_ptr<const FockSpace>;

struct OperatorMatrix {
    SparseC entries;
    int dim() const { return static_cast<int>(entries.rows()); }
    double hermiticity_error() const;
    Eigen::MatrixXcd dense() const { return Eigen::MatrixXcd(entries); }
};

enum class StateKind { PureVector, DensityMatrix };

struct QuantumState {
    StateKind kind = StateKind::PureVector;
    Eigen::VectorXcd psi;
    Eigen::MatrixXcd rho;
    FockSpacePtr space;

    static QuantumState pure(FockSpacePtr space, Eigen::VectorXcd psi);
    static QuantumState density(FockSpacePtr space, Eigen::MatrixXcd rho);
    // |n_0 n_1 ...> basis state
    static QuantumState basis(FockSpacePtr space, const std::vector<std::uint8_t>& occ);

    void check(double tol = 1e-9) const;
    Eigen::VectorXd populations() const;  // diagonal probabilities
};

FockSpacePtr build_fock_space(const ModelSpec& model, int n_trunc, std::optional<int> sector = std::nullopt);

enum class Ladder { Create, Annihilate };
OperatorMatrix ladder_operator(const FockSpace& space, int mode, Ladder kind);
OperatorMatrix number_operator(const FockSpace& space, int mode);
OperatorMatrix total_number_operator(const FockSpace& space);

// H(t) = sum (omega0 + dw*i1 + [sigma]*eta_d*omega_d*cos(omega_d t + phi_i) + eps*sigma) n + hopping + V.
// Split into pieces evaluated cheaply at any t.
struct DrivenHamiltonian {
    Eigen::VectorXd static_diag;   // offsets, gradient, disorder, interactions
    Eigen::VectorXcd drive_amp;    // diagonal drive is Re(drive_amp * exp(i omega_d t))
    double omega_d = 0.0;
    SparseC hopping;               // bare tunnelling, time independent

    Eigen::VectorXd diag_at(double t) const;
    // integral of the diagonal from 0 to t
    Eigen::VectorXd diag_phase(double t) const;
    OperatorMatrix at(double t) const;
    int dim() const { return static_cast<int>(static_diag.size()); }
    // restriction to a list of basis indices (closed under the hopping)
    DrivenHamiltonian restrict(const std::vector<int>& idx) const;
};

DrivenHamiltonian build_driven_hamiltonian(const ModelSpec& model, const FockSpace& space,
                                           const std::optional<SpinConfiguration>& spins);

OperatorMatrix build_full_hamiltonian(const ModelSpec& model, const FockSpace& space,
                                      const std::optional<SpinConfiguration>& spins, double t);

OperatorMatrix build_effective_hamiltonian(const ModelSpec& model, const FockSpace& space,
                                           const std::optional<SpinConfiguration>& spins);

// Hopping operator sum_{links} J a_i^dag a_j + h.c. for arbitrary complex link values
SparseC hopping_operator(const FockSpace& space, const std::vector<BarePair>& links);

QuantumState thermal_state(FockSpacePtr space, const std::vector<double>& nbar);

// "row col re im" per line, row-major deterministic order
std::string to_triplets(const OperatorMatrix& op);

}  // namespace patsim
