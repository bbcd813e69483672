#include "doctest.h"

#include "patsim/ode.hpp"

#include <cmath>

using namespace patsim;

TEST_CASE("dopri5 integrates a phase rotation") {
    OdeOptions o;
    o.rtol = 1e-10;
    o.atol = 1e-12;
    Dopri5 ode(o);
    Dopri5::State y0(2, 1);
    y0 << 1.0, cplx(0.0, 1.0);
    const cplx I(0, 1);
    std::vector<double> ts;
    for (int k = 0; k <= 40; ++k) ts.push_back(0.25 * k);
    double worst = 0.0;
    ode.integrate([&](double, const Dopri5::State& y, Dopri5::State& dy) { dy = -I * 3.0 * y; }, 0.0, y0, ts,
                  [&](std::size_t, double t, const Dopri5::State& y) {
                      worst = std::max(worst, (y - y0 * std::polar(1.0, -3.0 * t)).cwiseAbs().maxCoeff());
                  });
    CHECK(worst < 1e-8);
    CHECK(ode.stats().accepted > 0);
}

TEST_CASE("dopri5 dense output between steps") {
    OdeOptions o;
    o.rtol = 1e-11;
    o.atol = 1e-13;
    o.h_max = 0.5;
    Dopri5 ode(o);
    Dopri5::State y0(1, 1);
    y0(0, 0) = 0.0;
    std::vector<double> ts;
    for (int k = 0; k <= 301; ++k) ts.push_back(3.0 * k / 301);
    double worst = 0.0;
    ode.integrate([](double t, const Dopri5::State&, Dopri5::State& dy) { dy(0, 0) = std::cos(t); }, 0.0, y0, ts,
                  [&](std::size_t, double t, const Dopri5::State& y) {
                      worst = std::max(worst, std::abs(y(0, 0) - std::sin(t)));
                  });
    CHECK(worst < 1e-9);
}

TEST_CASE("dopri5 reports the samples in order, including t0") {
    Dopri5 ode;
    Dopri5::State y0 = Dopri5::State::Ones(1, 1);
    std::vector<double> ts{0.0, 0.0, 0.1, 1.0};
    std::vector<std::size_t> seen;
    const auto y = ode.integrate([](double, const Dopri5::State& y, Dopri5::State& dy) { dy = -y; }, 0.0, y0, ts,
                                 [&](std::size_t k, double, const Dopri5::State&) { seen.push_back(k); });
    CHECK(seen == std::vector<std::size_t>{0, 1, 2, 3});
    CHECK(std::abs(y(0, 0) - std::exp(-1.0)) < 1e-8);
}

TEST_CASE("dopri5 step budget") {
    OdeOptions o;
    o.max_steps = 5;
    o.h_max = 1e-3;
    Dopri5 ode(o);
    Dopri5::State y0 = Dopri5::State::Ones(1, 1);
    CHECK_THROWS_AS(ode.integrate([](double, const Dopri5::State& y, Dopri5::State& dy) { dy = y; }, 0.0, y0, {1.0},
                                  [](std::size_t, double, const Dopri5::State&) {}),
                    NumericalError);
}
