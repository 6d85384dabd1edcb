#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

#include "errors.hpp"

namespace vss {

// One accepted Dormand-Prince step with its 4th-order continuous extension.
template <class Real, std::size_t Dim>
struct DenseStep {
    using State = std::array<Real, Dim>;

    Real t0 = 0, h = 0;
    State y0{}, y1{};
    std::array<State, 5> rc{};

    Real t1() const { return t0 + h; }

    State operator()(Real t) const
    {
        if (t == t1())
            return y1;
        const Real th = (t - t0) / h;
        const Real th1 = 1 - th;
        State y;
        for (std::size_t i = 0; i < Dim; ++i)
            y[i] = rc[0][i] + th * (rc[1][i] + th1 * (rc[2][i] + th * (rc[3][i] + th1 * rc[4][i])));
        return y;
    }
};

template <class Real>
struct Dopri5Options {
    Real rtol = Real(1e-12);
    Real atol = Real(1e-20);
    std::size_t max_steps = 10'000'000;
    // Trailing components controlled by rtol alone (quadratures of tiny integrands).
    std::size_t relative_tail = 0;
};

template <class Real, std::size_t Dim>
inline bool all_finite(const std::array<Real, Dim>& y)
{
    return std::all_of(y.begin(), y.end(), [](Real v) { return std::isfinite(v); });
}

// Integrates y' = rhs(t, y) from t0 to t_end. The observer receives every
// accepted step and returns false to stop. Returns the number of attempted steps.
template <class Real, std::size_t Dim, class Rhs, class Observer>
std::size_t dopri5(Rhs&& rhs, Real t0, const std::array<Real, Dim>& y_init, Real t_end,
                   const Dopri5Options<Real>& opt, Observer&& observe)
{
    using State = std::array<Real, Dim>;
    static constexpr Real c2 = Real(1) / 5, c3 = Real(3) / 10, c4 = Real(4) / 5, c5 = Real(8) / 9;
    static constexpr Real a21 = Real(1) / 5;
    static constexpr Real a31 = Real(3) / 40, a32 = Real(9) / 40;
    static constexpr Real a41 = Real(44) / 45, a42 = Real(-56) / 15, a43 = Real(32) / 9;
    static constexpr Real a51 = Real(19372) / 6561, a52 = Real(-25360) / 2187,
                          a53 = Real(64448) / 6561, a54 = Real(-212) / 729;
    static constexpr Real a61 = Real(9017) / 3168, a62 = Real(-355) / 33, a63 = Real(46732) / 5247,
                          a64 = Real(49) / 176, a65 = Real(-5103) / 18656;
    static constexpr Real a71 = Real(35) / 384, a73 = Real(500) / 1113, a74 = Real(125) / 192,
                          a75 = Real(-2187) / 6784, a76 = Real(11) / 84;
    static constexpr Real e1 = Real(71) / 57600, e3 = Real(-71) / 16695, e4 = Real(71) / 1920,
                          e5 = Real(-17253) / 339200, e6 = Real(22) / 525, e7 = Real(-1) / 40;
    static constexpr Real d1 = Real(-12715105075.0L) / Real(11282082432.0L),
                          d3 = Real(87487479700.0L) / Real(32700410799.0L),
                          d4 = Real(-10690763975.0L) / Real(1880347072.0L),
                          d5 = Real(701980252875.0L) / Real(199316789632.0L),
                          d6 = Real(-1453857185.0L) / Real(822651844.0L),
                          d7 = Real(69997945.0L) / Real(29380423.0L);

    const Real eps = std::numeric_limits<Real>::epsilon();
    const Real dir = t_end > t0 ? 1 : -1;

    const std::size_t rel_from = Dim - std::min(opt.relative_tail, Dim);
    auto scale_i = [&](std::size_t i, Real a, Real b) {
        const Real m = opt.rtol * std::max(std::abs(a), std::abs(b));
        return i < rel_from ? opt.atol + m : std::max(m, std::numeric_limits<Real>::min());
    };

    Real t = t0;
    State y = y_init;
    State k1 = rhs(t, y);
    if (!all_finite(y) || !all_finite(k1))
        throw NonFiniteState("non-finite initial state");

    Real h;
    {
        Real dnf = 0, dny = 0;
        for (std::size_t i = 0; i < Dim; ++i) {
            const Real sk = opt.atol + opt.rtol * std::abs(y[i]);
            dnf += (k1[i] / sk) * (k1[i] / sk);
            dny += (y[i] / sk) * (y[i] / sk);
        }
        h = (dnf <= Real(1e-10) || dny <= Real(1e-10)) ? Real(1e-6) * std::abs(t_end - t0)
                                                         : std::sqrt(dny / dnf) * Real(0.01);
        h = std::min(h, std::abs(t_end - t0));
        State y1;
        for (std::size_t i = 0; i < Dim; ++i)
            y1[i] = y[i] + dir * h * k1[i];
        const State f1 = rhs(t + dir * h, y1);
        Real der2 = 0;
        for (std::size_t i = 0; i < Dim; ++i) {
            const Real sk = opt.atol + opt.rtol * std::abs(y[i]);
            der2 += ((f1[i] - k1[i]) / sk) * ((f1[i] - k1[i]) / sk);
        }
        der2 = std::sqrt(der2) / h;
        const Real der12 = std::max(std::abs(der2), std::sqrt(dnf));
        const Real h1 = der12 <= Real(1e-15) ? std::max(Real(1e-6), h * Real(1e-3))
                                             : std::pow(Real(0.01) / der12, Real(0.2));
        h = std::min({Real(100) * h, h1, std::abs(t_end - t0)});
    }

    const Real beta = Real(0.04), expo1 = Real(0.2) - beta * Real(0.75);
    const Real facc1 = 5, facc2 = Real(0.1), safe = Real(0.9);
    Real facold = Real(1e-4);
    bool last_rejected = false;
    std::size_t steps = 0;

    DenseStep<Real, Dim> ds;
    State k2, k3, k4, k5, k6, k7, ys, y1;

    while (dir * (t_end - t) > 0) {
        if (++steps > opt.max_steps)
            throw StepLimitError("step budget exhausted at t = " + std::to_string(double(t)));
        if (h < 16 * eps * std::abs(t))
            throw NonFiniteState("step size underflow at t = " + std::to_string(double(t)));
        bool last = false;
        if (h >= std::abs(t_end - t)) {
            h = std::abs(t_end - t);
            last = true;
        }
        const Real hs = dir * h;

        for (std::size_t i = 0; i < Dim; ++i) ys[i] = y[i] + hs * a21 * k1[i];
        k2 = rhs(t + c2 * hs, ys);
        for (std::size_t i = 0; i < Dim; ++i) ys[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
        k3 = rhs(t + c3 * hs, ys);
        for (std::size_t i = 0; i < Dim; ++i) ys[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        k4 = rhs(t + c4 * hs, ys);
        for (std::size_t i = 0; i < Dim; ++i)
            ys[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        k5 = rhs(t + c5 * hs, ys);
        for (std::size_t i = 0; i < Dim; ++i)
            ys[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        const Real t_new = last ? t_end : t + hs;
        k6 = rhs(t_new, ys);
        for (std::size_t i = 0; i < Dim; ++i)
            y1[i] = y[i] + hs * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        k7 = rhs(t_new, y1);

        Real err = 0;
        for (std::size_t i = 0; i < Dim; ++i) {
            const Real ei = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const Real sk = scale_i(i, y[i], y1[i]);
            err += (ei / sk) * (ei / sk);
        }
        err = std::sqrt(err / Dim);

        if (!std::isfinite(err) || !all_finite(y1) || !all_finite(k7)) {
            h *= Real(0.2);
            last_rejected = true;
            continue;
        }

        const Real fac11 = std::pow(err, expo1);
        Real fac = fac11 / std::pow(facold, beta);
        fac = std::max(facc2, std::min(facc1, fac / safe));
        Real h_new = h / fac;

        if (err <= 1) {
            facold = std::max(err, Real(1e-4));
            ds.t0 = t;
            ds.h = t_new - t;
            ds.y0 = y;
            ds.y1 = y1;
            for (std::size_t i = 0; i < Dim; ++i) {
                const Real ydiff = y1[i] - y[i];
                const Real bspl = hs * k1[i] - ydiff;
                ds.rc[0][i] = y[i];
                ds.rc[1][i] = ydiff;
                ds.rc[2][i] = bspl;
                ds.rc[3][i] = ydiff - hs * k7[i] - bspl;
                ds.rc[4][i] = hs * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
            }
            t = t_new;
            y = y1;
            k1 = k7;
            if (!observe(static_cast<const DenseStep<Real, Dim>&>(ds)))
                return steps;
            if (last_rejected)
                h_new = std::min(h_new, h);
            last_rejected = false;
        } else {
            h_new = h / std::min(facc1, fac11 / safe);
            last_rejected = true;
        }
        h = h_new;
    }
    return steps;
}

} // namespace vss
