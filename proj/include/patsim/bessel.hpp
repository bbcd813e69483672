#pragma once

#include <vector>

namespace patsim {

// Integer-order Bessel functions of the first kind, J_n(x).
// Miller's downward recurrence normalised by J_0 + 2*sum J_2k = 1.
// Accurate to ~1e-14 absolute for |x| <= 10 and all orders.
double bessel_j(int n, double x);

// J_0(x) .. J_nmax(x) in one recurrence pass.
std::vector<double> bessel_j_table(int nmax, double x);

}  // namespace patsim
