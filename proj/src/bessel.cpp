#include "patsim/bessel.hpp"

#include <algorithm>
#include <cmath>

namespace patsim {

std::vector<double> bessel_j_table(int nmax, double x) {
    if (nmax < 0) nmax = 0;
    std::vector<double> J(nmax + 1, 0.0);
    if (x == 0.0) {
        J[0] = 1.0;
        return J;
    }
    const double ax = std::abs(x);
    const double scale = std::max<double>(nmax, ax);
    int start = static_cast<int>(scale + 30.0 + std::sqrt(160.0 * std::max(scale, 1.0)));
    start += start % 2;

    // unnormalised backward sweep; rescale whenever values grow too large
    std::vector<double> w(start + 2, 0.0);
    w[start + 1] = 0.0;
    w[start] = 1e-300;
    for (int k = start; k > 0; --k) {
        w[k - 1] = (2.0 * k / ax) * w[k] - w[k + 1];
        if (std::abs(w[k - 1]) > 1e250) {
            for (int m = k - 1; m <= start + 1; ++m) w[m] *= 1e-250;
        }
    }
    double norm = w[0];
    for (int k = 2; k <= start; k += 2) norm += 2.0 * w[k];
    for (int n = 0; n <= nmax; ++n) {
        double v = w[n] / norm;
        if (x < 0 && (n % 2)) v = -v;
        J[n] = v;
    }
    return J;
}

double bessel_j(int n, double x) {
    const int an = std::abs(n);
    double v = bessel_j_table(an, x)[an];
    if (n < 0 && (an % 2)) v = -v;
    return v;
}

}  // namespace patsim
