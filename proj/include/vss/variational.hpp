#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "dopri5.hpp"
#include "errors.hpp"
#include "params.hpp"
#include "shooter.hpp"

namespace vss {

// The a-derivative is carried through the defect of the scaling symmetry,
//   Phi = a f_a - (f + r f'/mu),   Psi = a F_a - (2(p-1)/p F + r F'/mu),
// which vanish at r = 0 and are integrated without cancellation.
// The monotonicity gap mu a w_a - r w' equals mu r^mu Phi.
template <class Real>
struct VarSample {
    Real r;
    Real fa, fa_prime, wa;
    Real phi, psi;
    Real f, F, fprime, w, wprime; // base trajectory from the joint integration
};

template <class Real>
struct VariationalProfile {
    Real a;
    Real r_switch;
    std::vector<VarSample<Real>> samples;
};

template <class Real>
struct VariationalPoint {
    Real fa, fa_prime;
};

template <class Real>
VariationalPoint<Real> variational_series(Real a, Real r, const DerivedConstants<Real>& c)
{
    if (r == 0)
        return {1, 0};
    const Real p = c.p, q = c.q, s = c.s();
    const Real k = a * c.alpha / c.N;
    const Real ck[3] = {s, (q - p + 2) * s, (3 - p) * s};
    const Real rk[3] = {p * s, (p + q) * s, 2 * p * s};
    const Real t[3] = {-c.C1 * std::pow(k, ck[0]) * std::pow(r, rk[0]),
                       c.C2 * std::pow(k, ck[1]) * std::pow(r, rk[1]),
                       c.C3 * std::pow(k, ck[2]) * std::pow(r, rk[2])};
    Real fa = 1, fap = 0;
    for (int i = 0; i < 3; ++i) {
        fa += ck[i] * t[i] / a;
        fap += ck[i] * rk[i] * t[i] / (a * r);
    }
    return {fa, fap};
}

namespace detail {

template <class Real>
struct Jet {
    Real f, F, fp, Fp;
};

template <class Real>
inline Jet<Real> base_jet(Real r, Real f, Real F, const DerivedConstants<Real>& c)
{
    const auto d = flux_rhs(r, f, F, c, 1);
    return {f, F, d[0], d[1]};
}

template <class Real>
inline VarSample<Real> var_sample(Real r, Real a, Real f, Real F, Real phi, Real psi, const DerivedConstants<Real>& c)
{
    const auto j = base_jet(r, f, F, c);
    const Real s = c.s();
    const Real fa = (phi + f + r * j.fp / c.mu) / a;
    const Real Fa = (psi + 2 * (c.p - 1) / c.p * F + r * j.Fp / c.mu) / a;
    const Real fa_p = -s * std::pow(F, s - 1) * Fa;
    const Real rm = std::pow(r, c.mu);
    return {r, fa, fa_p, rm * fa, phi, psi, f, F, j.fp, rm * f, rm / r * (r * j.fp + c.mu * f)};
}

} // namespace detail

// Joint integration of (f, F, Phi, Psi) sampled on the radii of `base`.
template <class Real>
VariationalProfile<Real> integrate_variational(const Profile<Real>& base, const IntegratorSettings& st,
                                               const DerivedConstants<Real>& c,
                                               std::optional<Real> r_end = std::nullopt)
{
    if (base.kappa != 1)
        throw DomainError("variational system is defined for the absorbing problem only");
    const Real end = r_end.value_or(base.r_end);
    if (end > base.r_end)
        throw BaseProfileTerminated("base profile stops at r = " + std::to_string(double(base.r_end)) +
                                    " before requested r = " + std::to_string(double(end)));

    const Real a = base.a, p = c.p, q = c.q, s = c.s();
    const Real r0 = base.r_switch;
    VariationalProfile<Real> vp{a, r0, {}};

    const auto sp = series_eval(a, r0, c);
    const Real F0 = std::pow(std::abs(sp.fprime), p - 1);
    const Real k = a * c.alpha / c.N;
    const Real phi0 = c.C2 * std::pow(k, (q - p + 2) * s) * std::pow(r0, (p + q) * s) * (2 * q - p) / p;
    const Real psi0 = -((p + q) * s * phi0 / r0) / (s * std::pow(F0, s - 1));

    using State = std::array<Real, 4>;
    const Real defect = (2 * q - p) / p;
    auto sys = [&](Real r, const State& y) -> State {
        const auto d = detail::flux_rhs(r, y[0], y[1], c, 1);
        const Real F = std::abs(y[1]);
        const Real g = s * std::pow(F, s - 1);
        const Real Fqs = std::pow(F, q * s);
        const Real dphi = -g * y[3];
        const Real dpsi = -(c.N - 1) / r * y[3] + c.alpha * y[2] - c.beta * r * g * y[3] -
                          q * s * Fqs / F * y[3] - defect * Fqs;
        return {d[0], d[1], dphi, dpsi};
    };

    std::size_t i = 0;
    const auto& bs = base.samples;
    for (; i < bs.size() && bs[i].r < r0; ++i) {
        const Real r = bs[i].r;
        if (r == 0) {
            vp.samples.push_back({0, 1, 0, 0, 0, 0, a, 0, 0, 0, 0});
            continue;
        }
        const auto b = series_eval(a, r, c);
        const Real Fb = std::pow(std::abs(b.fprime), p - 1);
        const Real ph = c.C2 * std::pow(k, (q - p + 2) * s) * std::pow(r, (p + q) * s) * (2 * q - p) / p;
        const Real ps = -((p + q) * s * ph / r) / (s * std::pow(Fb, s - 1));
        vp.samples.push_back(detail::var_sample(r, a, b.f, Fb, ph, ps, c));
    }

    const State y0{sp.f, F0, phi0, psi0};
    if (i < bs.size() && bs[i].r == r0) {
        vp.samples.push_back(detail::var_sample(r0, a, sp.f, F0, phi0, psi0, c));
        ++i;
    }
    if (i >= bs.size() || bs[i].r > end)
        return vp;

    Dopri5Options<Real> opt;
    opt.rtol = Real(st.rel_tol);
    opt.atol = Real(st.abs_tol);
    opt.max_steps = st.max_steps;
    dopri5<Real, 4>(sys, r0, y0, end, opt, [&](const DenseStep<Real, 4>& ds) {
        while (i < bs.size() && bs[i].r <= ds.t1() && bs[i].r <= end) {
            const auto y = ds(bs[i].r);
            vp.samples.push_back(detail::var_sample(bs[i].r, a, y[0], y[1], y[2], y[3], c));
            ++i;
        }
        return true;
    });
    return vp;
}

template <class Real>
struct MonotonicityReport {
    bool holds = true;
    std::size_t checked = 0;
    Real interval_end = 0;         // last sample of the initial w' > 0 run
    std::optional<Real> first_violation;
    Real min_gap_ratio = 0;        // min of mu a w_a / (r w') - 1 on the run
    Real min_wa = 0;
};

template <class Real>
MonotonicityReport<Real> monotonicity_check(const Profile<Real>& base, const VariationalProfile<Real>& vp,
                                            const DerivedConstants<Real>& c)
{
    if (base.samples.size() < vp.samples.size())
        throw DomainError("variational samples exceed the base profile");
    MonotonicityReport<Real> rep;
    rep.min_gap_ratio = std::numeric_limits<Real>::infinity();
    rep.min_wa = std::numeric_limits<Real>::infinity();
    for (std::size_t i = 0; i < vp.samples.size(); ++i) {
        const auto& b = base.samples[i];
        const auto& v = vp.samples[i];
        if (b.r != v.r)
            throw DomainError("base and variational grids are not aligned");
        if (b.r == 0)
            continue;
        if (!(b.wprime > 0))
            break;
        ++rep.checked;
        rep.interval_end = b.r;
        const Real gap = c.mu * std::pow(v.r, c.mu) * v.phi;
        rep.min_gap_ratio = std::min(rep.min_gap_ratio, gap / (v.r * v.wprime));
        rep.min_wa = std::min(rep.min_wa, v.wa);
        if (!(gap > 0) || !(v.wa > 0)) {
            rep.holds = false;
            if (!rep.first_violation)
                rep.first_violation = v.r;
        }
    }
    return rep;
}

template <class Real>
struct LinearizedPoint {
    Real r;
    Real La_wa, La_wa_scale;   // residual and sum of |terms|
    Real La_rwp, closed_form;  // L_a(r w') and eta r^eta |W|^{q-p+2}
};

template <class Real>
struct LinearizedReport {
    std::vector<LinearizedPoint<Real>> points;
    Real max_wa_residual = 0;     // max |L_a(w_a)| / scale
    Real max_closed_form_dev = 0; // max |L_a(r w') / closed - 1|
    bool rwp_negative = true;
};

namespace detail {

template <class Real>
struct LaTerms {
    Real sum, scale;
};

// L_a(r^mu g) / r^mu. The Euler part collapses to (p-1) r^2 g'' + (N-1) r g'
// because mu (mu (2-p) - p) = 0, and r phi' - mu phi = r^{mu+1} g'.
// Wr = W / r^mu = r f', wr = w / r^mu = f.
template <class Real>
LaTerms<Real> apply_La(Real r, Real f, Real fp, Real g, Real gp, Real gpp, const DerivedConstants<Real>& c)
{
    const Real p = c.p, q = c.q, mu = c.mu;
    const Real rm = std::pow(r, mu);
    const Real W = rm * r * fp;
    const Real aW = std::abs(W);
    const Real reta = std::pow(r, c.eta);
    const Real bracket = rm * (c.alpha * f + c.beta * r * fp) - reta * std::pow(aW, q);
    const Real t[] = {
        (p - 1) * r * r * gpp,
        (c.N - 1) * r * gp,
        (2 - p) * std::pow(aW, -p) * W * r * gp * bracket,
        std::pow(aW, 2 - p) * (c.alpha * g + c.beta * r * gp),
        -std::pow(aW, 2 - p) * q * reta * std::pow(aW, q - 2) * W * r * gp,
    };
    Real sum = 0, scale = 0;
    for (Real v : t) {
        sum += v;
        scale += std::abs(v);
    }
    return {sum, scale};
}

} // namespace detail

// Second and third derivatives come from the first-order system, never from
// differencing. Evaluated in Work precision: the terms of L_a(r w') exceed the
// result by about r^{-(p+2q-2)/(p-1)} near the origin.
template <class Real, class Work = long double>
LinearizedReport<Real> linearized_residual(const VariationalProfile<Real>& vp, const DerivedConstants<Real>& cr,
                                           Real r_min = Real(1e-4))
{
    DerivedConstants<Work> c;
    c.N = cr.N;
    c.p = cr.p;
    c.q = cr.q;
    c.alpha = (c.p - c.q) / (2 * c.q - c.p);
    c.beta = (c.q - c.p + 1) / (2 * c.q - c.p);
    c.mu = c.p / (2 - c.p);
    c.eta = -(2 * c.q - c.p) / (2 - c.p);

    LinearizedReport<Real> rep;
    const Work p = c.p, q = c.q, s = c.s(), mu = c.mu, N = c.N;
    for (const auto& v : vp.samples) {
        if (v.r < r_min || !(v.r > 0) || !(v.F > 0))
            continue;
        const Work r = v.r, f = v.f, F = v.F;
        const auto d = detail::flux_rhs(r, f, F, c, 1);
        const Work fp = d[0], Fp = d[1];
        const Work Fs1 = std::pow(F, s - 1), Fs2 = std::pow(F, s - 2), Fqs1 = std::pow(F, q * s - 1);
        const Work fpp = -s * Fs1 * Fp;
        const Work Fpp = (N - 1) / (r * r) * F - (N - 1) / r * Fp + (c.alpha + c.beta) * fp + c.beta * r * fpp -
                         q * s * Fqs1 * Fp;
        const Work fppp = -s * ((s - 1) * Fs2 * Fp * Fp + Fs1 * Fpp);
        const Work rm = std::pow(r, mu);
        const Work W = rm * r * fp;

        const Work Fa = (Work(v.psi) + 2 * (p - 1) / p * F + r * Fp / mu) / Work(vp.a);
        const Work fa = v.fa;
        const Work fap = -s * Fs1 * Fa;
        const Work Fap = -(N - 1) / r * Fa + c.alpha * fa + c.beta * r * fap - q * s * Fqs1 * Fa;
        const Work fapp = -s * ((s - 1) * Fs2 * Fp * Fa + Fs1 * Fap);

        // r w' = r^mu g with g = r f' + mu f
        const Work g = r * fp + mu * f;
        const Work gp = r * fpp + (1 + mu) * fp;
        const Work gpp = r * fppp + (2 + mu) * fpp;

        const auto La = detail::apply_La(r, f, fp, fa, fap, fapp, c);
        const auto Lr = detail::apply_La(r, f, fp, g, gp, gpp, c);
        const Work La_rwp = rm * Lr.sum;
        const Work closed = c.eta * std::pow(r, c.eta) * std::pow(std::abs(W), q - p + 2);

        rep.points.push_back({Real(r), Real(rm * La.sum), Real(rm * La.scale), Real(La_rwp), Real(closed)});
        rep.max_wa_residual = std::max(rep.max_wa_residual, Real(std::abs(La.sum) / La.scale));
        rep.max_closed_form_dev = std::max(rep.max_closed_form_dev, Real(std::abs(La_rwp / closed - 1)));
        if (!(La_rwp < 0))
            rep.rwp_negative = false;
    }
    return rep;
}

} // namespace vss
