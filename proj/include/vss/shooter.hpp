#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dopri5.hpp"
#include "errors.hpp"
#include "params.hpp"

namespace vss {

struct IntegratorSettings {
    std::optional<double> r_switch;
    double rel_tol = 1e-12;
    double abs_tol = 1e-20;
    double R_max = 1e4;
    std::size_t max_steps = 10'000'000;
    int samples_per_decade = 64;
    double plateau_margin = 1e-3;
    // When false the w* crossing is only recorded and integration goes on.
    bool stop_at_plateau = true;

    void check() const
    {
        if (r_switch && !(*r_switch > 0))
            throw DomainError("r_switch must be positive");
        if (!(rel_tol > 0) || !(abs_tol > 0))
            throw DomainError("tolerances must be positive");
        if (!(R_max > 0) || (r_switch && !(R_max > *r_switch)))
            throw DomainError("R_max must exceed r_switch");
        if (samples_per_decade < 1)
            throw DomainError("samples_per_decade must be >= 1");
        if (!(plateau_margin >= 0))
            throw DomainError("plateau_margin must be >= 0");
        if (max_steps == 0)
            throw DomainError("max_steps must be >= 1");
    }
};

enum class Termination { FHitZero, WCrossedPlateau, HorizonReached };

inline const char* to_string(Termination t)
{
    switch (t) {
    case Termination::FHitZero: return "FHitZero";
    case Termination::WCrossedPlateau: return "WCrossedPlateau";
    case Termination::HorizonReached: return "HorizonReached";
    }
    return "?";
}

inline Termination termination_from_string(const std::string& s)
{
    if (s == "FHitZero") return Termination::FHitZero;
    if (s == "WCrossedPlateau") return Termination::WCrossedPlateau;
    if (s == "HorizonReached") return Termination::HorizonReached;
    throw DomainError("unknown termination '" + s + "'");
}

// energy_drop = E(r) - E(0), integrated directly so that it stays strictly
// monotone where E itself is flat to machine precision.
template <class Real>
struct Sample {
    Real r, f, fprime, w, wprime, E, energy_drop, flux;
};

template <class Real>
struct Profile {
    Real a = 0;
    Real r_switch = 0;
    std::vector<Sample<Real>> samples;
    Termination termination = Termination::HorizonReached;
    Real r_end = 0;
    std::optional<Real> R, R1, r_cross;
    std::size_t steps = 0;
    IntegratorSettings settings;
    // 1 for the full problem, 0 for the absorption-free limit problem.
    int kappa = 1;
};

template <class Real>
struct SeriesPoint {
    Real f, fprime;
    Real deviation; // f - a, summed termwise
};

template <class Real>
SeriesPoint<Real> series_eval(Real a, Real r, const DerivedConstants<Real>& c, int kappa = 1)
{
    const Real p = c.p, q = c.q, s = c.s();
    if (r == 0)
        return {a, 0, 0};
    const Real k = a * c.alpha / c.N;
    const Real e1 = p * s, e2 = (p + q) * s, e3 = 2 * p * s;
    const Real t1 = -c.C1 * std::pow(k, s) * std::pow(r, e1);
    const Real t2 = kappa ? c.C2 * std::pow(k, (q - p + 2) * s) * std::pow(r, e2) : Real(0);
    const Real t3 = c.C3 * std::pow(k, (3 - p) * s) * std::pow(r, e3);
    const Real dev = t1 + t2 + t3;
    return {a + dev, (e1 * t1 + e2 * t2 + e3 * t3) / r, dev};
}

namespace detail {

template <class Real>
inline std::array<Real, 2> flux_rhs(Real r, Real f, Real F, const DerivedConstants<Real>& c, int kappa)
{
    const Real aF = std::abs(F);
    const Real g = std::pow(aF, c.s() - 1) * aF; // |F|^s
    const Real fp = F >= 0 ? -g : g;
    Real dF = -(c.N - 1) / r * F + c.alpha * f + c.beta * r * fp;
    if (kappa)
        dF -= std::pow(aF, c.q * c.s());
    return {fp, dF};
}

// E'(r) along a trajectory.
template <class Real>
inline Real energy_rate(Real r, Real fp, const DerivedConstants<Real>& c, int kappa)
{
    const Real g = std::abs(fp);
    Real d = -(c.N - 1) / r * std::pow(g, c.p) - c.beta * r * g * g;
    if (kappa)
        d -= std::pow(g, c.q + 1);
    return d;
}

template <class Real>
inline Real fprime_of(Real F, const DerivedConstants<Real>& c)
{
    const Real aF = std::abs(F);
    const Real g = std::pow(aF, c.s());
    return F >= 0 ? -g : g;
}

template <class Real>
inline Sample<Real> make_sample(Real r, Real f, Real F, Real D, Real a, const DerivedConstants<Real>& c)
{
    const Real fp = fprime_of(F, c);
    const Real rm = std::pow(r, c.mu);
    const Real E0 = c.alpha / 2 * a * a;
    return {r, f, fp, rm * f, rm / r * (r * fp + c.mu * f), E0 + D, D, F};
}

// Smallest x in (lo, hi] with pred(x) true, given pred(hi) and !pred(lo).
template <class Real, class Pred>
Real localize(Real lo, Real hi, Real rel, Pred&& pred)
{
    const Real floor = 4 * std::numeric_limits<Real>::epsilon() * std::abs(hi);
    while (hi - lo > std::max(rel * std::abs(hi), floor)) {
        const Real mid = lo + (hi - lo) / 2;
        if (mid <= lo || mid >= hi)
            break;
        if (pred(mid))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

// Requested sample radii: anchored log grid 10^{k/n} merged with extras.
template <class Real>
class RadiusStream {
public:
    RadiusStream(Real start, int per_decade, std::span<const Real> extra)
        : n_(per_decade), extra_(extra)
    {
        k_ = static_cast<long>(std::floor(std::log10(double(start)) * n_)) - 1;
        while (grid(k_) <= start)
            ++k_;
        while (idx_ < extra_.size() && extra_[idx_] <= start)
            ++idx_;
    }

    Real peek() const
    {
        const Real g = grid(k_);
        return idx_ < extra_.size() ? std::min(g, extra_[idx_]) : g;
    }

    void pop()
    {
        const Real v = peek();
        while (grid(k_) <= v)
            ++k_;
        while (idx_ < extra_.size() && extra_[idx_] <= v)
            ++idx_;
    }

private:
    Real grid(long k) const { return std::pow(Real(10), Real(k) / Real(n_)); }

    int n_;
    long k_ = 0;
    std::span<const Real> extra_;
    std::size_t idx_ = 0;
};

template <class Real>
Profile<Real> shoot(Real a, const IntegratorSettings& st, const DerivedConstants<Real>& c, int kappa,
                    bool plateau_event, std::span<const Real> extra);

} // namespace detail

// Handoff radius between the series starter and the integrator.
template <class Real>
Real switch_radius(Real a, const IntegratorSettings& st, const DerivedConstants<Real>& c)
{
    if (st.r_switch)
        return Real(*st.r_switch);
    const Real p = c.p;
    const Real r = std::pow(Real(st.abs_tol), (p - 1) / (2 * p)) * std::pow(a * c.alpha / c.N, -1 / (2 * p));
    return std::min(Real(1e-2), r);
}

template <class Real>
std::array<Real, 2> rhs(Real r, const std::array<Real, 2>& state, const DerivedConstants<Real>& c, int kappa = 1)
{
    if (!(r > 0))
        throw DomainError("rhs evaluated at r <= 0");
    return detail::flux_rhs(r, state[0], state[1], c, kappa);
}

template <class Real>
Profile<Real> integrate(Real a, const IntegratorSettings& st, const DerivedConstants<Real>& c,
                        std::span<const Real> extra = {})
{
    return detail::shoot(a, st, c, 1, true, extra);
}

// Absorption-free problem with h(0) = 1; the first zero S0 is stored in R.
template <class Real>
Profile<Real> limit_profile(const IntegratorSettings& st, const DerivedConstants<Real>& c,
                            std::span<const Real> extra = {})
{
    auto prof = detail::shoot(Real(1), st, c, 0, false, extra);
    if (prof.termination != Termination::FHitZero)
        throw HorizonError("limit profile has no zero before R_max = " + std::to_string(st.R_max));
    return prof;
}

template <class Real>
Profile<Real> detail::shoot(Real a, const IntegratorSettings& st, const DerivedConstants<Real>& c, int kappa,
                            bool plateau_event, std::span<const Real> extra)
{
    st.check();
    if (!(a > 0))
        throw DomainError("shooting parameter must be positive");
    if (!std::is_sorted(extra.begin(), extra.end()))
        throw DomainError("extra sample radii must be sorted");

    Profile<Real> prof;
    prof.a = a;
    prof.settings = st;
    prof.kappa = kappa;
    const Real r0 = switch_radius(a, st, c);
    const Real R_max = st.R_max;
    if (!(R_max > r0))
        throw DomainError("R_max must exceed r_switch");
    prof.r_switch = r0;

    const Real rel = st.rel_tol;
    const Real w_cross = (1 + Real(st.plateau_margin)) * c.w_star;
    const Real E0 = c.alpha / 2 * a * a;

    prof.samples.push_back({0, a, 0, 0, 0, E0, 0, 0});
    std::size_t xi = 0;
    while (xi < extra.size() && extra[xi] < r0) {
        if (extra[xi] > 0) {
            const auto sp = series_eval(a, extra[xi], c, kappa);
            const Real F = std::pow(std::abs(sp.fprime), c.p - 1);
            const Real D = (c.p - 1) / c.p * std::pow(std::abs(sp.fprime), c.p) + c.alpha / 2 * sp.deviation * (sp.f + a);
            prof.samples.push_back(detail::make_sample(Real(extra[xi]), sp.f, F, D, a, c));
        }
        ++xi;
    }

    const auto sp = series_eval(a, r0, c, kappa);
    const Real F0 = std::pow(std::abs(sp.fprime), c.p - 1);
    const Real D0 = (c.p - 1) / c.p * std::pow(std::abs(sp.fprime), c.p) + c.alpha / 2 * sp.deviation * (sp.f + a);
    prof.samples.push_back(detail::make_sample(r0, sp.f, F0, D0, a, c));

    using State = std::array<Real, 3>;
    auto sys = [&](Real r, const State& y) -> State {
        const auto d = detail::flux_rhs(r, y[0], y[1], c, kappa);
        return {d[0], d[1], detail::energy_rate(r, d[0], c, kappa)};
    };

    auto g_w = [&](Real r, const State& y) { return std::pow(r, c.mu) * y[0] - w_cross; };
    auto g_wp = [&](Real r, const State& y) { return r * detail::fprime_of(y[1], c) + c.mu * y[0]; };

    detail::RadiusStream<Real> radii(r0, st.samples_per_decade, extra);
    bool wp_positive = g_wp(r0, State{sp.f, F0, D0}) > 0;
    bool below_plateau = g_w(r0, State{sp.f, F0, D0}) < 0;
    bool done = false;

    Dopri5Options<Real> opt;
    opt.rtol = Real(st.rel_tol);
    opt.atol = Real(st.abs_tol);
    opt.max_steps = st.max_steps;
    opt.relative_tail = 1;

    auto observe = [&](const DenseStep<Real, 3>& ds) {
        const Real t0 = ds.t0, t1 = ds.t1();
        for (const auto& v : ds.y1)
            if (!std::isfinite(v))
                throw NonFiniteState("non-finite state at r = " + std::to_string(double(t1)));

        std::optional<Real> t_stop;
        std::optional<Termination> cause;

        if (ds.y1[0] <= 0) {
            t_stop = detail::localize(t0, t1, rel, [&](Real r) { return ds(r)[0] <= 0; });
            cause = Termination::FHitZero;
        }
        if (plateau_event && below_plateau && g_w(t1, ds.y1) >= 0) {
            const Real rc = detail::localize(t0, t1, rel, [&](Real r) { return g_w(r, ds(r)) >= 0; });
            if (!t_stop || rc < *t_stop) {
                prof.r_cross = rc;
                below_plateau = false;
                if (st.stop_at_plateau) {
                    t_stop = rc;
                    cause = Termination::WCrossedPlateau;
                }
            }
        }
        if (wp_positive && g_wp(t1, ds.y1) <= 0) {
            const Real r1 = detail::localize(t0, t1, rel, [&](Real r) { return g_wp(r, ds(r)) <= 0; });
            if (!t_stop || r1 <= *t_stop) {
                prof.R1 = r1;
                wp_positive = false;
            }
        }

        const bool final_step = t_stop.has_value() || t1 >= R_max;
        const Real end = t_stop ? *t_stop : t1;
        for (Real r = radii.peek(); final_step ? r < end : r <= end; r = radii.peek()) {
            const State y = ds(r);
            prof.samples.push_back(detail::make_sample(r, y[0], y[1], y[2], a, c));
            radii.pop();
        }
        if (final_step) {
            const State y = ds(end);
            prof.samples.push_back(detail::make_sample(end, y[0], y[1], y[2], a, c));
            prof.r_end = end;
            prof.termination = cause.value_or(Termination::HorizonReached);
            if (cause == Termination::FHitZero)
                prof.R = end;
            done = true;
            return false;
        }
        return true;
    };

    prof.steps = dopri5<Real, 3>(sys, r0, State{sp.f, F0, D0}, R_max, opt, observe);
    if (!done)
        throw NonFiniteState("integration ended without reaching a termination event");
    return prof;
}

// f(r) minus the four-term expansion, integrated in deviation form d = f - a
// from r_start so that the difference keeps its relative accuracy at small r.
template <class Real>
std::vector<Real> series_remainder(Real a, std::span<const Real> radii, const DerivedConstants<Real>& c,
                                   Real r_start = Real(1e-6), Real rtol = Real(1e-17), Real atol = Real(1e-40),
                                   int kappa = 1)
{
    if (!std::is_sorted(radii.begin(), radii.end()) || radii.empty() || !(radii.front() > r_start))
        throw DomainError("radii must be sorted and exceed r_start");
    using State = std::array<Real, 2>;
    const auto s0 = series_eval(a, r_start, c, kappa);
    const State y0{s0.deviation, std::pow(std::abs(s0.fprime), c.p - 1)};
    auto sys = [&](Real r, const State& y) -> State {
        const auto d = detail::flux_rhs(r, a + y[0], y[1], c, kappa);
        return {d[0], d[1]};
    };
    std::vector<Real> out;
    std::size_t i = 0;
    Dopri5Options<Real> opt;
    opt.rtol = rtol;
    opt.atol = atol;
    dopri5<Real, 2>(sys, r_start, y0, radii.back(), opt, [&](const DenseStep<Real, 2>& ds) {
        while (i < radii.size() && radii[i] <= ds.t1()) {
            out.push_back(ds(radii[i])[0] - series_eval(a, radii[i], c, kappa).deviation);
            ++i;
        }
        return i < radii.size();
    });
    return out;
}

} // namespace vss
