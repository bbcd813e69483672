#pragma once

#include "patsim/model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

namespace patsim {

struct OdeOptions {
    double rtol = 1e-9;
    double atol = 1e-11;
    double h_max = std::numeric_limits<double>::infinity();
    double h_init = 0.0;  // 0: pick from h_max and the first derivative
    long max_steps = 50'000'000;
};

struct OdeStats {
    long accepted = 0;
    long rejected = 0;
    long rhs_calls = 0;
};

// Dormand-Prince 5(4) with FSAL and Hairer's continuous extension of order 4.
// State is a complex matrix (a column for state vectors).
class Dopri5 {
public:
    using State = Eigen::MatrixXcd;
    using Rhs = std::function<void(double, const State&, State&)>;
    using Sink = std::function<void(std::size_t, double, const State&)>;

    explicit Dopri5(OdeOptions opt = {}) : opt_(opt) {}

    // Integrates from t0 and reports y at every entry of `samples` (sorted, >= t0).
    // Returns the state at the last sample.
    State integrate(const Rhs& f, double t0, State y, const std::vector<double>& samples, const Sink& sink) {
        stats_ = {};
        std::size_t next = 0;
        for (; next < samples.size() && samples[next] <= t0; ++next) sink(next, samples[next], y);
        if (next == samples.size()) return y;
        const double t_end = samples.back();

        const auto rows = y.rows(), cols = y.cols();
        for (auto* k : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &ytmp_, &ynew_, &rc3_, &rc4_, &rc5_, &out_})
            k->resize(rows, cols);

        double t = t0;
        call(f, t, y, k1_);
        double h = opt_.h_init > 0 ? opt_.h_init : initial_step(f, t, y);
        h = std::min({h, opt_.h_max, t_end - t});
        bool last_rejected = false;

        while (t < t_end) {
            if (stats_.accepted + stats_.rejected > opt_.max_steps) fail("step budget exhausted", t);
            if (h < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)))
                fail("step size underflow", t);
            if (t + h > t_end) h = t_end - t;

            ytmp_ = y + h * (a21 * k1_);
            call(f, t + c2 * h, ytmp_, k2_);
            ytmp_ = y + h * (a31 * k1_ + a32 * k2_);
            call(f, t + c3 * h, ytmp_, k3_);
            ytmp_ = y + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
            call(f, t + c4 * h, ytmp_, k4_);
            ytmp_ = y + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
            call(f, t + c5 * h, ytmp_, k5_);
            ytmp_ = y + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
            call(f, t + h, ytmp_, k6_);
            ynew_ = y + h * (a71 * k1_ + a73 * k3_ + a74 * k4_ + a75 * k5_ + a76 * k6_);
            call(f, t + h, ynew_, k7_);

            // embedded error estimate
            double acc = 0.0;
            for (Eigen::Index c = 0; c < cols; ++c) {
                for (Eigen::Index r = 0; r < rows; ++r) {
                    const cplx e = h * (e1 * k1_(r, c) + e3 * k3_(r, c) + e4 * k4_(r, c) + e5 * k5_(r, c) +
                                        e6 * k6_(r, c) + e7 * k7_(r, c));
                    const double sc = opt_.atol + opt_.rtol * std::max(std::abs(y(r, c)), std::abs(ynew_(r, c)));
                    acc += std::norm(e) / (sc * sc);
                }
            }
            const double err = std::sqrt(acc / static_cast<double>(rows * cols));
            if (!std::isfinite(err)) fail("non-finite error estimate", t);

            if (err <= 1.0) {
                ++stats_.accepted;
                const double t_new = t + h;
                if (next < samples.size() && samples[next] <= t_new) {
                    // continuous extension coefficients
                    rc3_ = h * k1_ - (ynew_ - y);
                    rc4_ = (ynew_ - y) - h * k7_ - rc3_;
                    rc5_ = h * (d1 * k1_ + d3 * k3_ + d4 * k4_ + d5 * k5_ + d6 * k6_ + d7 * k7_);
                    while (next < samples.size() && samples[next] <= t_new) {
                        const double th = (samples[next] - t) / h, th1 = 1.0 - th;
                        out_ = y + th * ((ynew_ - y) + th1 * (rc3_ + th * (rc4_ + th1 * rc5_)));
                        sink(next, samples[next], out_);
                        ++next;
                    }
                }
                y.swap(ynew_);
                k1_.swap(k7_);
                t = t_new;
                double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
                fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 10.0);
                h = std::min(h * fac, opt_.h_max);
                last_rejected = false;
            } else {
                ++stats_.rejected;
                h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
                last_rejected = true;
            }
        }
        return y;
    }

    const OdeStats& stats() const { return stats_; }

private:
    void call(const Rhs& f, double t, const State& y, State& dy) {
        ++stats_.rhs_calls;
        f(t, y, dy);
    }

    // Hairer's starting step guess with error-weighted norms
    double initial_step(const Rhs& f, double t, const State& y) {
        auto wnorm = [&](const State& v) {
            double acc = 0.0;
            for (Eigen::Index c = 0; c < y.cols(); ++c)
                for (Eigen::Index r = 0; r < y.rows(); ++r) {
                    const double sc = opt_.atol + opt_.rtol * std::abs(y(r, c));
                    acc += std::norm(v(r, c)) / (sc * sc);
                }
            return std::sqrt(acc / static_cast<double>(y.size()));
        };
        const double dny = wnorm(y), dnf = wnorm(k1_);
        double h = (dny <= 1e-10 || dnf <= 1e-10) ? 1e-6 : 0.01 * dny / dnf;
        h = std::min(h, opt_.h_max);
        ytmp_ = y + h * k1_;
        call(f, t + h, ytmp_, k2_);
        const double der2 = wnorm(k2_ - k1_) / h;
        const double der12 = std::max(der2, dnf);
        const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
        return std::min(100.0 * h, h1);
    }

    [[noreturn]] void fail(const char* what, double t) const {
        std::ostringstream os;
        os.precision(12);
        os << "integrator: " << what << " at t=" << t;
        throw NumericalError(os.str());
    }

    OdeOptions opt_;
    OdeStats stats_;
    State k1_, k2_, k3_, k4_, k5_, k6_, k7_, ytmp_, ynew_, rc3_, rc4_, rc5_, out_;

    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                            a76 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
    static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                            d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                            d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
};

}  // namespace patsim
