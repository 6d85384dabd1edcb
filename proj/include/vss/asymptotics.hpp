#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "params.hpp"
#include "shooter.hpp"

namespace vss {

template <class Real>
struct Window {
    Real r_min, r_max;

    Real decades() const { return std::log10(r_max / r_min); }
};

enum class OrbitKind { Fast, Slow };

inline const char* to_string(OrbitKind k) { return k == OrbitKind::Fast ? "fast" : "slow"; }

template <class Real>
struct TailFit {
    Real exponent;  // f ~ amplitude * r^{-exponent}
    Real amplitude;
    Window<Real> window;
    Real residual;  // max |f / fit - 1| on the window
    std::size_t n;
    OrbitKind kind;
};

template <class Real>
struct SlowLimit {
    Real k;
    Real oscillation; // (max - min) / k over the last decade
    bool converged;
    Window<Real> window;
};

template <class Real>
struct LambdaDiagnostic {
    std::vector<std::pair<Real, Real>> tau_samples;
    Real limit_estimate;
    Real rate_estimate;
    Real amplitude;
    Real residual; // max misfit relative to max |Lambda - limit| on the fit window
    Window<Real> fit_window;
    bool bounds_ok; // 0 < Lambda < mu everywhere
    Real lambda_min, lambda_max;
};

template <class Real>
struct CriticalReport {
    Window<Real> window;
    Real max_rwprime;  // max |r w'| / (mu w*)
    Real slope_ratio_min, slope_ratio_max;
    Real max_w_deviation; // max |w / w* - 1|
    Real slope_constant;  // (w* / (p(N+1) - 2N))^{1/(p-1)}
    Real plateau_identity; // |mu w* - slope_constant| / (mu w*)
};

template <class Real>
struct LineFit {
    Real slope, intercept;
};

template <class Real>
LineFit<Real> least_squares(std::span<const Real> x, std::span<const Real> y)
{
    const std::size_t n = x.size();
    Real mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    Real sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    const Real slope = sxy / sxx;
    return {slope, my - slope * mx};
}

template <class Real>
OrbitKind orbit_kind(Real exponent, const DerivedConstants<Real>& c)
{
    return std::abs(exponent - c.fast_exponent) < std::abs(exponent - c.slow_exponent) ? OrbitKind::Fast
                                                                                         : OrbitKind::Slow;
}

// Longest log-interval of consecutive samples with |w - w*| / w* < tol.
template <class Real>
std::optional<Window<Real>> plateau_window(std::span<const Sample<Real>> s, Real w_star, Real tol = Real(0.05))
{
    std::optional<Window<Real>> best;
    std::size_t i = 0;
    while (i < s.size()) {
        if (!(s[i].r > 0) || !(std::abs(s[i].w - w_star) < tol * w_star)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < s.size() && std::abs(s[j + 1].w - w_star) < tol * w_star)
            ++j;
        const Window<Real> win{s[i].r, s[j].r};
        if (!best || win.decades() > best->decades())
            best = win;
        i = j + 1;
    }
    return best;
}

template <class Real>
std::optional<Window<Real>> plateau_window(const Profile<Real>& p, Real w_star, Real tol = Real(0.05))
{
    return plateau_window<Real>(std::span<const Sample<Real>>(p.samples), w_star, tol);
}

// Last two decades of a profile that did not end by extinction.
template <class Real>
Window<Real> default_tail_window(const Profile<Real>& p)
{
    if (p.termination == Termination::FHitZero)
        throw WindowTooNarrow("profile ends by extinction at R = " + std::to_string(double(p.r_end)) +
                              "; no tail to fit");
    const Real hi = p.samples.back().r;
    const Real lo = std::max(hi / 100, Real(1));
    if (hi / lo < 10)
        throw WindowTooNarrow("profile ends at r = " + std::to_string(double(hi)) +
                              " before one decade of tail beyond r = 1");
    return {lo, hi};
}

template <class Real>
TailFit<Real> fit_tail(std::span<const Sample<Real>> s, Window<Real> win, const DerivedConstants<Real>& c)
{
    std::vector<Real> x, y;
    for (const auto& v : s) {
        if (v.r >= win.r_min && v.r <= win.r_max && v.r > 0 && v.f > 0) {
            x.push_back(std::log(v.r));
            y.push_back(std::log(v.f));
        }
    }
    if (x.size() < 16)
        throw WindowTooNarrow("fit window holds " + std::to_string(x.size()) + " usable samples, need 16");
    const Window<Real> used{std::exp(x.front()), std::exp(x.back())};
    if (used.decades() < Real(1) - Real(1e-9))
        throw WindowTooNarrow("fit window spans " + std::to_string(double(used.decades())) + " decades, need 1");
    const auto lf = least_squares<Real>(x, y);
    Real res = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        res = std::max(res, std::abs(std::exp(y[i] - lf.intercept - lf.slope * x[i]) - 1));
    const Real expo = -lf.slope;
    return {expo, std::exp(lf.intercept), used, res, x.size(), orbit_kind(expo, c)};
}

template <class Real>
TailFit<Real> fit_tail(const Profile<Real>& p, Window<Real> win, const DerivedConstants<Real>& c)
{
    return fit_tail<Real>(std::span<const Sample<Real>>(p.samples), win, c);
}

template <class Real>
SlowLimit<Real> slow_limit_k(std::span<const Sample<Real>> s, const DerivedConstants<Real>& c, bool strict = true)
{
    if (s.empty())
        throw InsufficientTail("empty profile");
    const Real r_end = s.back().r;
    std::vector<Real> t, k;
    for (const auto& v : s) {
        if (v.r >= r_end / 10 && v.r > 0 && v.f > 0) {
            t.push_back(std::log(v.r));
            k.push_back(std::pow(v.r, c.slow_exponent) * v.f);
        }
    }
    if (k.size() < 16)
        throw InsufficientTail("last decade holds " + std::to_string(k.size()) + " samples, need 16");
    Real area = 0;
    for (std::size_t i = 1; i < k.size(); ++i)
        area += (t[i] - t[i - 1]) * (k[i] + k[i - 1]) / 2;
    const Real mean = area / (t.back() - t.front());
    const auto [lo, hi] = std::minmax_element(k.begin(), k.end());
    const Real osc = (*hi - *lo) / mean;
    SlowLimit<Real> out{mean, osc, osc < Real(0.01), {std::exp(t.front()), std::exp(t.back())}};
    if (strict && !out.converged)
        throw NotConverged("r^{alpha/beta} f oscillates by " + std::to_string(double(osc)) + " over the last decade",
                           double(osc));
    return out;
}

template <class Real>
SlowLimit<Real> slow_limit_k(const Profile<Real>& p, const DerivedConstants<Real>& c, bool strict = true)
{
    return slow_limit_k<Real>(std::span<const Sample<Real>>(p.samples), c, strict);
}

// Lambda = -r f'/f against tau = log r for r >= 1. Fit Lambda = L + B exp(-theta tau)
// over the last fit_decades: theta from successive differences, then L, B linearly.
template <class Real>
LambdaDiagnostic<Real> lambda_diagnostic(std::span<const Sample<Real>> s, const DerivedConstants<Real>& c,
                                         Real fit_decades = 2)
{
    LambdaDiagnostic<Real> d{};
    d.bounds_ok = true;
    d.lambda_min = std::numeric_limits<Real>::infinity();
    d.lambda_max = -d.lambda_min;
    for (const auto& v : s) {
        if (v.r >= 1 && v.f > 0) {
            const Real lam = -v.r * v.fprime / v.f;
            d.tau_samples.emplace_back(std::log(v.r), lam);
            d.lambda_min = std::min(d.lambda_min, lam);
            d.lambda_max = std::max(d.lambda_max, lam);
            if (!(lam > 0 && lam < c.mu))
                d.bounds_ok = false;
        }
    }
    const auto& ts = d.tau_samples;
    if (ts.size() < 16 || ts.back().first - ts.front().first < std::log(Real(10)))
        throw InsufficientTail("need at least 16 samples over one decade with r >= 1");

    const Real tau_lo = std::max(ts.front().first, ts.back().first - fit_decades * std::log(Real(10)));
    std::size_t i0 = 0;
    while (ts[i0].first < tau_lo)
        ++i0;
    d.fit_window = {std::exp(ts[i0].first), std::exp(ts.back().first)};
    if (ts.size() - i0 < 16)
        throw InsufficientTail("fit window holds fewer than 16 samples");

    Real lo = ts[i0].second, hi = lo;
    for (std::size_t i = i0; i < ts.size(); ++i) {
        lo = std::min(lo, ts[i].second);
        hi = std::max(hi, ts[i].second);
    }
    if (hi - lo <= 64 * std::numeric_limits<Real>::epsilon() * std::abs(hi)) {
        d.limit_estimate = (lo + hi) / 2;
        d.amplitude = 0;
        d.rate_estimate = std::numeric_limits<Real>::infinity();
        d.residual = 0;
        return d;
    }

    std::vector<Real> x, y;
    for (std::size_t i = i0; i + 1 < ts.size(); ++i) {
        const Real dl = ts[i + 1].second - ts[i].second;
        const Real dt = ts[i + 1].first - ts[i].first;
        if (dl == 0 || !(dt > 0))
            continue;
        x.push_back((ts[i].first + ts[i + 1].first) / 2);
        y.push_back(std::log(std::abs(dl / dt)));
    }
    if (x.size() < 8)
        throw InsufficientTail("Lambda is flat to rounding on the fit window");
    const Real theta = -least_squares<Real>(x, y).slope;

    std::vector<Real> e, l;
    for (std::size_t i = i0; i < ts.size(); ++i) {
        e.push_back(std::exp(-theta * (ts[i].first - ts.back().first)));
        l.push_back(ts[i].second);
    }
    const auto lf = least_squares<Real>(e, l);
    d.limit_estimate = lf.intercept;
    d.amplitude = lf.slope * std::exp(theta * ts.back().first);
    d.rate_estimate = theta;

    Real mis = 0, span = 0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        mis = std::max(mis, std::abs(l[i] - lf.intercept - lf.slope * e[i]));
        span = std::max(span, std::abs(l[i] - lf.intercept));
    }
    d.residual = span > 0 ? mis / span : Real(0);
    return d;
}

template <class Real>
LambdaDiagnostic<Real> lambda_diagnostic(const Profile<Real>& p, const DerivedConstants<Real>& c,
                                         Real fit_decades = 2)
{
    return lambda_diagnostic<Real>(std::span<const Sample<Real>>(p.samples), c, fit_decades);
}

template <class Real>
CriticalReport<Real> critical_asymptotics(std::span<const Sample<Real>> s, const DerivedConstants<Real>& c,
                                          std::optional<Window<Real>> win = std::nullopt)
{
    if (!win)
        win = plateau_window<Real>(s, c.w_star);
    if (!win || !(win->r_max > win->r_min))
        throw NoPlateau("no sample run with |w - w*| / w* < 0.05");

    CriticalReport<Real> rep{*win};
    rep.max_rwprime = 0;
    rep.slope_ratio_min = std::numeric_limits<Real>::infinity();
    rep.slope_ratio_max = -rep.slope_ratio_min;
    rep.max_w_deviation = 0;
    rep.slope_constant = std::pow(c.w_star / c.uniq_denominator, 1 / (c.p - 1));
    rep.plateau_identity = std::abs(c.mu * c.w_star - rep.slope_constant) / (c.mu * c.w_star);
    const Real slope_pow = -2 / (2 - c.p);
    for (const auto& v : s) {
        if (v.r < win->r_min || v.r > win->r_max)
            continue;
        rep.max_rwprime = std::max(rep.max_rwprime, std::abs(v.r * v.wprime) / (c.mu * c.w_star));
        const Real ratio = v.fprime / (-rep.slope_constant * std::pow(v.r, slope_pow));
        rep.slope_ratio_min = std::min(rep.slope_ratio_min, ratio);
        rep.slope_ratio_max = std::max(rep.slope_ratio_max, ratio);
        rep.max_w_deviation = std::max(rep.max_w_deviation, std::abs(v.w / c.w_star - 1));
    }
    return rep;
}

template <class Real>
CriticalReport<Real> critical_asymptotics(const Profile<Real>& p, const DerivedConstants<Real>& c,
                                          std::optional<Window<Real>> win = std::nullopt)
{
    return critical_asymptotics<Real>(std::span<const Sample<Real>>(p.samples), c, win);
}

} // namespace vss
