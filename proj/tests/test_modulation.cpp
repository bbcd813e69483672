#include "doctest.h"

#include "patsim/bessel.hpp"
#include "patsim/modulation.hpp"

#include <cmath>
#include <random>

using namespace patsim;

namespace {

bool near(cplx a, cplx b, double tol) { return std::abs(a - b) <= tol; }

ModelSpec chain(int L1, double eta, double phi1, int r = 1) {
    ModelSpec m;
    m.lattice.L1 = L1;
    m.lattice.coupling.kind = CouplingKind::Explicit;
    for (int k = 1; k < L1; ++k) m.lattice.coupling.entries.push_back({{k, 0}, {k - 1, 0}, 0, cplx(0.01)});
    m.drive.delta_omega = {0.5};
    m.drive.eta_d = {eta};
    m.drive.omega_d = 0.5 / r;
    m.drive.r = r;
    m.drive.phi1 = phi1;
    return m;
}

}  // namespace

TEST_CASE("modulation reference values") {
    // 50-digit evaluations of the Bessel sum
    CHECK(near(modulation_amplitude(1, 1, 1, pi), {0.0, 0.57672480775687339}, 1e-12));
    CHECK(near(modulation_amplitude(0, 1, 1, pi), {0.22389077914123567, 0.0}, 1e-12));
    CHECK(near(modulation_amplitude(2, 0.7, 1.3, 0.4), {0.022518613784263728, 0.055999294105530163}, 1e-12));
    CHECK(near(modulation_amplitude(-1, 1.5, -0.8, 2.0), {0.4855871536400951, 0.23016522993503896}, 1e-12));
    CHECK(near(modulation_amplitude(3, 2.2, 2.2, 1.1), {0.0, -0.17994736543719125}, 1e-12));
}

TEST_CASE("modulation trivial and quoted magnitudes") {
    CHECK(near(modulation_amplitude(0, 0, 0, 1.234), 1.0, 1e-15));
    CHECK(std::abs(modulation_amplitude(1, 1, 1, pi)) == doctest::Approx(0.6).epsilon(0.05));
    CHECK(std::abs(modulation_amplitude(0, 1, 1, pi)) == doctest::Approx(0.2).epsilon(0.15));
    CHECK(std::abs(modulation_amplitude(0, 1.2024, 1.2024, pi)) < 1e-3);
}

TEST_CASE("modulation at zero phase is Bessel orthogonality") {
    for (double z : {0.5, 1.0, 2.0})
        for (int chi : {-2, -1, 0, 1, 2}) {
            const double expect = chi == 0 ? 1.0 : 0.0;
            CHECK(std::abs(modulation_amplitude(chi, z, z, 0.0) - expect) < 1e-10);
        }
}

TEST_CASE("modulation closed form for equal arguments") {
    // Graf addition: F_chi(eta, eta, theta) = i^chi J_chi(2 eta sin(theta/2))
    for (int k = 1; k <= 40; ++k) {
        const double eta = 0.1 * k;
        CHECK(std::abs(std::abs(modulation_amplitude(0, eta, eta, pi)) - std::abs(bessel_j(0, 2 * eta))) < 1e-10);
    }
    const cplx ipow[4] = {1.0, {0, 1}, -1.0, {0, -1}};
    for (double eta : {0.3, 1.0, 2.5})
        for (double th : {-2.0, 0.4, 1.7, pi})
            for (int chi = 0; chi < 4; ++chi)
                CHECK(near(modulation_amplitude(chi, eta, eta, th), ipow[chi] * bessel_j(chi, 2 * eta * std::sin(th / 2)),
                           1e-10));
}

TEST_CASE("modulation conjugation identity") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int k = 0; k < 60; ++k) {
        const double z = u(rng), x = u(rng), th = u(rng);
        for (int chi : {1, 2, 3}) {
            const double sign = (chi % 2) ? -1.0 : 1.0;
            const cplx lhs = modulation_amplitude(-chi, z, x, th);
            CHECK(near(lhs, sign * std::conj(modulation_amplitude(chi, z, x, th)), 1e-12));
            CHECK(near(lhs, sign * modulation_amplitude(chi, z, x, -th), 1e-12));
        }
    }
}

TEST_CASE("modulation decays with range") {
    CHECK(std::abs(modulation_amplitude(2, 1, 1, pi)) <= std::abs(modulation_amplitude(1, 1, 1, pi)));
    CHECK(std::abs(modulation_amplitude(3, 1, 1, pi)) <= std::abs(modulation_amplitude(2, 1, 1, pi)));
}

TEST_CASE("f exponent") {
    auto m = chain(3, 1.0, pi);
    CHECK(f_exponent({2, 0}, {0, 0}, m, 0, std::nullopt) == 2);
    CHECK(f_exponent({0, 1}, {0, 0}, m, 0, std::nullopt) == 0);
    m.drive.delta_omega = {-0.5};
    CHECK(f_exponent({2, 0}, {0, 0}, m, 0, std::nullopt) == -2);

    m.mode = Mode::SpinFluxDecoration;
    CHECK(f_exponent({1, 0}, {0, 0}, m, 0, SpinConfiguration{-1, 1, 1}) == 1);
    CHECK(f_exponent({1, 0}, {0, 0}, m, 0, SpinConfiguration{1, -1, 1}) == -1);
    CHECK(f_exponent({1, 0}, {0, 0}, m, 0, SpinConfiguration{1, 1, 1}) == 0);
    CHECK(f_exponent({1, 0}, {0, 0}, m, 0, SpinConfiguration{-1, -1, 1}) == 0);
    CHECK_THROWS_AS(f_exponent({1, 0}, {0, 0}, m, 0, std::nullopt), ValidationError);
}

TEST_CASE("dressed coupling of a resonant link") {
    const auto m = chain(2, 1.0, pi);
    const auto dc = dressed_coupling(0.01, {1, 0}, {0, 0}, m, 0, std::nullopt);
    CHECK(dc.f == 1);
    CHECK(std::abs(dc.value) == doctest::Approx(0.6 * 0.01).epsilon(0.05));
    CHECK(near(dc.value, 0.01 * dc.amplitude_factor * std::polar(1.0, dc.phase_factor), 1e-16));
    CHECK(dc.phase_factor == doctest::Approx(-0.5 * pi));

    auto off = chain(2, 0.0, pi);
    CHECK(std::abs(dressed_coupling(0.01, {1, 0}, {0, 0}, off, 0, std::nullopt).value) < 1e-16);
}

TEST_CASE("bond disorder takes four related values") {
    auto m = chain(2, 1.0, 1.5 * pi);
    m.mode = Mode::SpinBondDisorder;
    auto F = [&](int si, int sj) {
        return dressed_coupling(1.0, {1, 0}, {0, 0}, m, 0, SpinConfiguration{sj, si}).amplitude_factor;
    };
    const cplx uu = F(1, 1), ud = F(1, -1), du = F(-1, 1), dd = F(-1, -1);
    const cplx I(0, 1);
    CHECK(near(ud, -du, 1e-10));
    CHECK(near(ud, I * dd, 1e-10));
    CHECK(near(ud, -I * uu, 1e-10));
    for (cplx v : {uu, ud, du, dd}) {
        CHECK(std::abs(v) >= 0.45);
        CHECK(std::abs(v) <= 0.55);
    }
}

TEST_CASE("dressed matrix") {
    SUBCASE("two sites") {
        const auto d = build_dressed_matrix(chain(2, 1.0, pi), std::nullopt);
        REQUIRE(d.size() == 1);
        CHECK(std::abs(d.begin()->second.value) == doctest::Approx(0.0057672480775687339));
    }
    SUBCASE("no couplings") {
        auto m = chain(1, 1.0, pi);
        CHECK(build_dressed_matrix(m, std::nullopt).empty());
    }
    SUBCASE("plaquette loop phase") {
        ModelSpec m;
        m.lattice.L1 = m.lattice.L2 = 2;
        m.lattice.coupling.kind = CouplingKind::Explicit;
        m.lattice.coupling.entries = {{{1, 0}, {0, 0}, 0, 0.01}, {{1, 1}, {0, 1}, 0, 0.01},
                                      {{0, 1}, {0, 0}, 0, 0.01}, {{1, 1}, {1, 0}, 0, 0.01}};
        m.drive.delta_omega = {0.5};
        m.drive.eta_d = {1.0};
        m.drive.omega_d = 0.5;
        m.drive.phi1 = pi;
        m.drive.phi2 = pi;
        const auto d = build_dressed_matrix(m, std::nullopt);
        REQUIRE(d.size() == 4);
        auto J = [&](Site a, Site b) { return a > b ? d.at({a, b, 0}).value : std::conj(d.at({b, a, 0}).value); };
        const cplx loop = J({0, 1}, {1, 1}) * J({1, 1}, {1, 0}) * J({1, 0}, {0, 0}) * J({0, 0}, {0, 1});
        CHECK(std::abs(wrap_phase(std::arg(loop)) - pi) < 1e-12);
    }
    SUBCASE("independent of entry order") {
        auto m = chain(4, 1.3, 0.7);
        const auto a = build_dressed_matrix(m, std::nullopt);
        std::reverse(m.lattice.coupling.entries.begin(), m.lattice.coupling.entries.end());
        const auto b = build_dressed_matrix(m, std::nullopt);
        REQUIRE(a.size() == b.size());
        for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib) {
            CHECK(ia->first == ib->first);
            CHECK(ia->second.value == ib->second.value);
        }
    }
}
