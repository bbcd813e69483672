#pragma once

#include "patsim/model.hpp"

#include <map>
#include <optional>
#include <string>
#include <tuple>

namespace patsim {

// F_chi(zeta, xi, theta) = sum_s J_s(zeta) J_{s+chi}(xi) exp(i (s + chi/2) theta)
cplx modulation_amplitude(int chi, double zeta, double xi, double theta);

int modulation_cutoff(int chi, double zeta, double xi);

int f_exponent(Site i, Site j, const ModelSpec& model, int flavor,
               const std::optional<SpinConfiguration>& spins);

struct DressedCoupling {
    cplx value{0.0, 0.0};
    cplx amplitude_factor{0.0, 0.0};
    double phase_factor = 0.0;
    int f = 0;
};

DressedCoupling dressed_coupling(cplx J_t, Site i, Site j, const ModelSpec& model, int flavor,
                                 const std::optional<SpinConfiguration>& spins);

struct LinkKey {
    Site i;  // i > j
    Site j;
    int flavor = 0;
    auto operator<=>(const LinkKey&) const = default;
};

using DressedMap = std::map<LinkKey, DressedCoupling>;

DressedMap build_dressed_matrix(const ModelSpec& model, const std::optional<SpinConfiguration>& spins);

// JSON array of {"i":[i1,i2],"j":[j1,j2],"flavor":name,"re":..,"im":..}
std::string dressed_to_json(const DressedMap& map, const ModelSpec& model);

}  // namespace patsim
