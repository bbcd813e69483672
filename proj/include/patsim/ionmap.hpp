#pragma once

#include "patsim/model.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace patsim {

// Hardware description of a microtrap array. Frequencies are ordinary
// frequencies in Hz (omega / 2 pi), lengths in meters, wavevectors in rad/m.
struct StandingWave {
    double rabi_hz = 0.0;
    std::map<std::string, double> lamb_dicke;  // per axis
    std::array<double, 3> delta_k{0.0, 0.0, 0.0};
    double phase = 0.0;
};

struct Sideband {
    double rabi_hz = 0.0;
    double detuning_hz = 0.0;
};

struct IonArrayParams {
    std::vector<std::string> axes{"z"};          // vibrational axes carried as flavors
    std::map<std::string, double> trap_hz;       // any of x, y, z; used axes required
    std::map<std::string, double> gradient_hz;   // signed, per used axis
    double beatnote_hz = 0.0;
    double rabi_hz = 0.0;
    std::map<std::string, double> lamb_dicke;    // per used axis
    std::array<double, 3> delta_k{0.0, 0.0, 0.0};
    int L1 = 2;
    int L2 = 1;
    double d1 = 20e-6;
    double d2 = 20e-6;
    double mass_amu = 25.0;
    double charge = 1.0;                         // in units of e
    int cutoff_range = 3;
    std::optional<StandingWave> standing_wave;
    std::optional<Sideband> sideband;
    std::optional<double> reference_hz;          // unit of frequency for the model; default: trap of first axis
    std::optional<std::string> mode;             // default PlainPAT (one axis) or NonAbelian
};

void validate(const IonArrayParams& p);

double reference_frequency_hz(const IonArrayParams& p);

// Exchange rate J_c between sites i and j along `axis`, in rad/s.
// Uses the local trap frequencies including the gradient along e1.
double coulomb_coupling(const IonArrayParams& p, Site i, Site j, const std::string& axis);

// Frequency shift omega' - omega of site i along `axis`, in Hz.
double frequency_correction_hz(const IonArrayParams& p, Site i, const std::string& axis);

ModelSpec map_to_model(const IonArrayParams& p);

struct ConstraintEntry {
    std::string name;
    std::string inequality;
    double lhs_hz = 0.0;
    double rhs_hz = 0.0;
    double ratio = 0.0;
    bool applicable = true;
    bool pass = true;
    double margin = 0.0;  // threshold / ratio; > 1 means headroom
};

struct ConstraintReport {
    double threshold = 0.1;
    std::vector<ConstraintEntry> entries;  // the nine inequalities, in fixed order
    int max_gradient_extent = 0;           // largest i1 with |dw| i1 <= omega_alpha / 2
    bool extent_fits = true;               // L1 - 1 <= max_gradient_extent
    std::map<std::string, double> notes;   // informational numbers

    bool all_pass() const;
    const ConstraintEntry& get(const std::string& name) const;
    std::string table() const;
    std::string to_json() const;
};

// Names of the nine inequalities, in report order.
const std::vector<std::string>& constraint_names();

ConstraintReport check_constraints(const IonArrayParams& p, double threshold = 0.1);

}  // namespace patsim
