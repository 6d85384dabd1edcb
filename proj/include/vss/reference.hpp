#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "errors.hpp"
#include "params.hpp"
#include "shooter.hpp"

namespace vss {

// Classical fixed-step RK4 on (f, F) from the series value at r0, landing
// exactly on each requested radius. Used only as a brute-force cross-check.
template <class Real>
std::vector<std::array<Real, 2>> rk4_reference(Real a, Real r0, std::span<const Real> radii, Real h,
                                               const DerivedConstants<Real>& c)
{
    const auto sp = series_eval(a, r0, c);
    std::array<Real, 2> y{sp.f, std::pow(std::abs(sp.fprime), c.p - 1)};
    auto f = [&](Real r, const std::array<Real, 2>& u) { return detail::flux_rhs(r, u[0], u[1], c, 1); };
    std::vector<std::array<Real, 2>> out;
    Real r = r0;
    for (Real target : radii) {
        if (target < r)
            throw DomainError("rk4_reference radii must be sorted and >= r0");
        while (r < target) {
            const Real dt = std::min(h, target - r);
            const auto k1 = f(r, y);
            const auto k2 = f(r + dt / 2, {y[0] + dt / 2 * k1[0], y[1] + dt / 2 * k1[1]});
            const auto k3 = f(r + dt / 2, {y[0] + dt / 2 * k2[0], y[1] + dt / 2 * k2[1]});
            const auto k4 = f(r + dt, {y[0] + dt * k3[0], y[1] + dt * k3[1]});
            for (int i = 0; i < 2; ++i)
                y[i] += dt / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
            r = (target - r <= h) ? target : r + dt;
        }
        out.push_back(y);
    }
    return out;
}

} // namespace vss
