#pragma once

#include <complex>
#include <compare>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace patsim {

using cplx = std::complex<double>;

inline constexpr double pi = 3.141592653589793238462643383279502884;

// Raised for malformed input. `path` names the offending field (e.g. "model.drive.omega_d").
struct ValidationError : std::runtime_error {
    std::string path;
    ValidationError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), path(std::move(field)) {}
};

// Raised when an integrator or solver cannot proceed.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Lattice coordinate. The defaulted comparison is the site ordering:
// i > j iff i1 > j1, or i1 == j1 and i2 > j2.
struct Site {
    int i1 = 0;
    int i2 = 0;
    auto operator<=>(const Site&) const = default;
};

enum class CouplingKind { Explicit, Dipolar };

struct ExplicitCoupling {
    Site i;
    Site j;
    int flavor = 0;
    cplx J{0.0, 0.0};
};

struct CouplingLaw {
    CouplingKind kind = CouplingKind::Dipolar;
    std::vector<ExplicitCoupling> entries;   // Explicit
    double J0 = 0.0;                          // Dipolar
    int cutoff_range = 3;                     // Dipolar, in nearest-neighbour units
};

struct LatticeSpec {
    int L1 = 1;
    int L2 = 1;
    double d1 = 1.0;
    double d2 = 1.0;
    CouplingLaw coupling;

    int num_sites() const { return L1 * L2; }
    int site_index(Site s) const { return s.i1 * L2 + s.i2; }
    Site site_at(int k) const { return {k / L2, k % L2}; }
    bool contains(Site s) const { return s.i1 >= 0 && s.i1 < L1 && s.i2 >= 0 && s.i2 < L2; }
};

struct DriveSpec {
    std::vector<double> delta_omega;  // per flavor
    std::vector<double> eta_d;        // per flavor
    double omega_d = 0.0;
    double phi1 = 0.0;
    double phi2 = 0.0;
    int r = 1;
};

using SpinConfiguration = std::vector<int>;  // +1/-1 per site, indexed by LatticeSpec::site_index

enum class Mode { PlainPAT, SpinBondDisorder, SpinSiteDisorder, SpinFluxDecoration, NonAbelian };

std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

struct ModelSpec {
    std::vector<std::string> flavors{"a"};
    LatticeSpec lattice;
    DriveSpec drive;
    std::vector<double> omega0;                 // on-site offset per flavor, defaults to 1
    std::vector<double> onsite_interactions;    // U[site][flavor][flavor'], flattened; empty means zero
    std::vector<double> site_disorder_strength; // epsilon per flavor; empty means zero
    Mode mode = Mode::PlainPAT;

    int num_flavors() const { return static_cast<int>(flavors.size()); }
    double U(int site, int f, int g) const;
    double eps(int f) const;
    double offset(int f) const;
    bool needs_spins() const;
};

struct BarePair {
    Site i;
    Site j;
    int flavor = 0;
    cplx J{0.0, 0.0};
};

void validate(const ModelSpec& model);
void validate_spins(const ModelSpec& model, const std::optional<SpinConfiguration>& spins);

// Every (i, j, flavor) with i > j and a nonzero bare coupling, sorted by (i, j, flavor).
std::vector<BarePair> enumerate_ordered_pairs(const LatticeSpec& lattice, int num_flavors = 1);

double phase_at_site(const DriveSpec& drive, Site i);

// Reduction to (-pi, pi], for display and flux reporting.
double wrap_phase(double x);

}  // namespace patsim
