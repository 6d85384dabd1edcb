#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "asymptotics.hpp"
#include "classifier.hpp"
#include "errors.hpp"
#include "params.hpp"
#include "reference.hpp"
#include "shooter.hpp"
#include "variational.hpp"

namespace vss {

struct Check {
    std::string name;
    std::string property;
    bool passed = false;
    double measured = 0;
    double tolerance = 0;
    std::string detail;
};

struct VerificationReport {
    std::vector<Check> checks;

    bool passed() const
    {
        for (const auto& c : checks)
            if (!c.passed)
                return false;
        return !checks.empty();
    }
};

struct VerifyOptions {
    double bisect_width = 1e-9;
    double tail_horizon = 1e6;
    int random_configs = 200;
    unsigned seed = 20240611;
    ExponentConfig second{2, 1.6, 0.9};
};

namespace verify_detail {

inline std::string fmt(const char* f, double v)
{
    char buf[128];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

template <class Real>
struct Part {
    bool ok;
    std::string detail;
};

// A...A [U...] C...C with A-orbits below w* and one w' sign change, C-orbits increasing up to r_cross.
template <class Real>
Part<Real> classification_structure(const IntegratorSettings& st, const DerivedConstants<Real>& c,
                                    Real center = 1)
{
    int stage = 0, counts[3] = {0, 0, 0}, bad_shape = 0;
    bool ordered = true;
    const Real w_cross = (1 + Real(st.plateau_margin)) * c.w_star;
    for (int i = 0; i < 61; ++i) {
        const Real a = center * std::pow(Real(10), Real(-3) + Real(6) * i / 60);
        const auto prof = integrate(a, st, c);
        const auto lab = label_of(prof);
        const int k = static_cast<int>(lab.index());
        ++counts[k];
        const int rank = k == 0 ? 0 : (k == 2 ? 1 : 2);
        if (rank < stage)
            ordered = false;
        stage = std::max(stage, rank);
        if (k == 0) {
            Real wmax = 0;
            int changes = 0;
            for (std::size_t j = 1; j < prof.samples.size(); ++j) {
                wmax = std::max(wmax, prof.samples[j].w);
                if (j > 1 && (prof.samples[j].wprime > 0) != (prof.samples[j - 1].wprime > 0))
                    ++changes;
            }
            if (!(wmax < c.w_star) || changes != 1)
                ++bad_shape;
        } else if (k == 1) {
            bool inc = prof.samples.back().w >= w_cross * (1 - 4 * std::numeric_limits<Real>::epsilon());
            for (std::size_t j = 1; j < prof.samples.size(); ++j)
                inc = inc && prof.samples[j].wprime > 0;
            if (!inc)
                ++bad_shape;
        }
    }
    const bool ok = ordered && bad_shape == 0 && counts[0] > 0 && counts[1] > 0;
    return {ok, "A=" + std::to_string(counts[0]) + " U=" + std::to_string(counts[2]) + " C=" +
                    std::to_string(counts[1]) + (ordered ? " ordered" : " interleaved") +
                    ", shape violations " + std::to_string(bad_shape)};
}

template <class Real>
Part<Real> critical_bracket(const IntegratorSettings& st, const DerivedConstants<Real>& c, Real width,
                            std::optional<Bracket<Real>>& out)
{
    const auto seed = seed_bracket(st, c);
    auto b = bisect(seed.a_A, seed.a_C, width, st, c);
    const auto win = plateau_window(b.midpoint_profile, c.w_star);
    bool ok = b.iterations <= 60 && (b.a_hi - b.a_lo) / b.a_lo <= width;
    std::string d = "a* in [" + fmt("%.12g", double(b.a_lo)) + ", " + fmt("%.12g", double(b.a_hi)) + "], " +
                    std::to_string(b.iterations) + " iterations";
    if (!win) {
        ok = false;
        d += ", no plateau";
    } else {
        const auto cr = critical_asymptotics(b.midpoint_profile, c, win);
        ok = ok && win->decades() >= 1 && cr.max_rwprime < Real(0.05) && cr.slope_ratio_min >= Real(0.9) &&
             cr.slope_ratio_max <= Real(1.1);
        d += ", plateau " + fmt("%.3g", double(win->decades())) + " decades, max|rw'|/(mu w*) " +
             fmt("%.3g", double(cr.max_rwprime)) + ", slope ratio [" + fmt("%.4g", double(cr.slope_ratio_min)) +
             ", " + fmt("%.4g", double(cr.slope_ratio_max)) + "]";
    }
    out = std::move(b);
    return {ok, d};
}

template <class Real>
Part<Real> slow_orbit(Real a, const IntegratorSettings& st, const DerivedConstants<Real>& c, double horizon)
{
    IntegratorSettings ts = st;
    ts.R_max = horizon;
    ts.stop_at_plateau = false;
    const auto prof = integrate(a, ts, c);
    const auto tf = fit_tail(prof, default_tail_window(prof), c);
    const auto k = slow_limit_k(prof, c, false);
    const auto L = lambda_diagnostic(prof, c);
    const Real target = c.slow_exponent;
    const bool ok = std::abs(tf.exponent / target - 1) < Real(0.02) && k.converged &&
                    std::abs(L.limit_estimate / target - 1) < Real(0.01) && L.rate_estimate > 0 &&
                    L.residual < Real(0.1) && L.bounds_ok;
    return {ok, "a = " + fmt("%.6g", double(a)) + ": exponent " + fmt("%.5g", double(tf.exponent)) + " vs " +
                    fmt("%.5g", double(target)) + ", k " + fmt("%.6g", double(k.k)) + " (osc " +
                    fmt("%.3g", double(k.oscillation)) + "), Lambda -> " + fmt("%.6g", double(L.limit_estimate)) +
                    " at rate " + fmt("%.4g", double(L.rate_estimate)) + " (fit residual " +
                    fmt("%.3g", double(L.residual)) + ")"};
}

template <class Real>
Check run_check(const std::string& name, const std::string& property, double tol,
                const std::function<void(Check&)>& body)
{
    Check ch{name, property, false, 0, tol, ""};
    try {
        body(ch);
    } catch (const std::exception& e) {
        ch.passed = false;
        ch.detail = std::string("error: ") + e.what();
    }
    return ch;
}

} // namespace verify_detail

template <class Real>
VerificationReport run_verification(const ExponentConfig& cfg, const IntegratorSettings& st,
                                    const VerifyOptions& opt = {})
{
    using namespace verify_detail;
    const auto c = validate<Real>(cfg);
    VerificationReport rep;
    std::optional<Bracket<Real>> bracket;

    rep.checks.push_back(run_check<Real>(
        "exponent_algebra", "derived constants satisfy mu>N, eta<0, alpha-beta*mu=-1/(2-p), alpha-N*beta>0 and the plateau identity",
        1e-12, [&](Check& ch) {
            std::mt19937_64 rng(opt.seed);
            std::uniform_real_distribution<double> u(0.01, 0.99);
            std::uniform_int_distribution<int> nd(1, 4);
            double worst = 0;
            bool signs = true;
            for (int i = 0; i < opt.random_configs; ++i) {
                ExponentConfig x;
                x.N = nd(rng);
                const double pc = 2.0 * x.N / (x.N + 1);
                x.p = pc + (2 - pc) * u(rng);
                const double qs = x.p - double(x.N) / (x.N + 1);
                x.q = x.p / 2 + (qs - x.p / 2) * u(rng);
                const auto d = validate<double>(x);
                signs = signs && d.mu > d.N && d.eta < 0 && d.alpha - d.N * d.beta > 0 &&
                        d.alpha - d.beta * d.mu < 0;
                worst = std::max(worst, std::abs((d.alpha - d.beta * d.mu) * (2 - x.p) + 1));
                const double lhs = d.mu * d.w_star;
                worst = std::max(worst, std::abs(lhs - std::pow(d.w_star / d.uniq_denominator, 1 / (x.p - 1))) / lhs);
            }
            ch.measured = worst;
            ch.passed = signs && worst <= ch.tolerance;
            ch.detail = std::to_string(opt.random_configs) + " random configs, max relative defect " + fmt("%.3g", worst);
        }));

    rep.checks.push_back(run_check<Real>(
        "sign_bound_energy", "f'<0 inside, |f'| <= (alpha a)^{1/q}, energy strictly decreasing", 0, [&](Check& ch) {
            int bad = 0;
            for (int i = 0; i < 20; ++i) {
                const Real a = std::pow(Real(10), Real(-2) + Real(4) * i / 19);
                const auto prof = integrate(a, st, c);
                const Real bound = std::pow(c.alpha * a, 1 / c.q) + 10 * Real(st.abs_tol);
                const auto& s = prof.samples;
                for (std::size_t j = 0; j < s.size(); ++j) {
                    if (std::abs(s[j].fprime) > bound)
                        ++bad;
                    if (j > 0 && j + 1 < s.size() && !(s[j].fprime < 0 && s[j].f > 0))
                        ++bad;
                    if (j > 1 && !(s[j].energy_drop < s[j - 1].energy_drop))
                        ++bad;
                }
            }
            ch.measured = bad;
            ch.passed = bad == 0;
            ch.detail = std::to_string(bad) + " violations over 20 profiles";
        }));

    rep.checks.push_back(run_check<Real>(
        "expansion_order", "|f - four-term series| / r^{2p/(p-1)} drops by >= 10x from r=1e-2 to r=1e-3", 10,
        [&](Check& ch) {
            const auto cl = validate<long double>(cfg);
            const long double radii[] = {1e-3L, 1e-2L};
            const auto res = series_remainder<long double>(1.0L, radii, cl);
            const long double e = 2 * cl.p / (cl.p - 1);
            const long double r1 = std::abs(res[1]) / std::pow(1e-2L, e);
            const long double r2 = std::abs(res[0]) / std::pow(1e-3L, e);
            ch.measured = double(r1 / r2);
            ch.passed = ch.measured >= ch.tolerance;
            ch.detail = "scaled residual " + fmt("%.4g", double(r1)) + " at 1e-2, " + fmt("%.4g", double(r2)) +
                        " at 1e-3, ratio " + fmt("%.4g", ch.measured);
        }));

    rep.checks.push_back(run_check<Real>(
        "oracle_equivalence", "adaptive run matches fixed-step RK4 (h=1e-6) on [r_switch, 1] at a=1", 1e-6,
        [&](Check& ch) {
            const auto prof = integrate(Real(1), st, c);
            std::vector<Real> radii;
            for (const auto& s : prof.samples)
                if (s.r > prof.r_switch && s.r <= 1)
                    radii.push_back(s.r);
            const auto ref = rk4_reference<Real>(1, prof.r_switch, radii, Real(1e-6), c);
            double worst = 0;
            std::size_t k = 0;
            for (const auto& s : prof.samples) {
                if (s.r > prof.r_switch && s.r <= 1) {
                    worst = std::max(worst, double(std::abs(s.f - ref[k][0]) / std::abs(ref[k][0])));
                    worst = std::max(worst, double(std::abs(s.flux - ref[k][1]) / std::abs(ref[k][1])));
                    ++k;
                }
            }
            ch.measured = worst;
            ch.passed = worst <= ch.tolerance && k > 0;
            ch.detail = std::to_string(k) + " radii, max relative deviation " + fmt("%.3g", worst);
        }));

    rep.checks.push_back(run_check<Real>(
        "classification_structure", "61-point sweep is A..A [U] C..C; A below w* with one w' sign change; C crosses (1+eps)w*",
        0, [&](Check& ch) {
            const auto r = classification_structure(st, c);
            ch.passed = r.ok;
            ch.measured = r.ok ? 0 : 1;
            ch.detail = r.detail;
        }));

    rep.checks.push_back(run_check<Real>(
        "critical_bracket", "bisection to 1e-9 in <= 60 steps; plateau >= 1 decade; |rw'|/(mu w*) < 0.05; slope ratio in [0.9, 1.1]",
        0.05, [&](Check& ch) {
            const auto r = critical_bracket(st, c, Real(opt.bisect_width), bracket);
            ch.passed = r.ok;
            ch.measured = double(bracket ? bracket->iterations : -1);
            ch.detail = r.detail;
        }));

    rep.checks.push_back(run_check<Real>(
        "slow_orbit", "a = 4 a_hi: tail exponent within 2% of alpha/beta, k converged, Lambda -> alpha/beta within 1%",
        0.02, [&](Check& ch) {
            if (!bracket)
                throw Error("no bracket available");
            const auto r = slow_orbit(4 * bracket->a_hi, st, c, opt.tail_horizon);
            ch.passed = r.ok;
            ch.measured = r.ok ? 0 : 1;
            ch.detail = r.detail;
        }));

    rep.checks.push_back(run_check<Real>(
        "variational", "f_a matches finite differences; mu a w_a > r w', w_a > 0 while w'>0; L_a(w_a)=0; L_a(rw') closed form and < 0",
        1e-3, [&](Check& ch) {
            if (!bracket)
                throw Error("no bracket available");
            double fd = 0, la = 0, closed = 0;
            bool mono = true, neg = true;
            for (Real a : {bracket->a_lo / 2, 2 * bracket->a_hi}) {
                const auto prof = integrate(a, st, c);
                const auto vp = integrate_variational(prof, st, c);
                const Real h = Real(1e-6) * a;
                IntegratorSettings fixed = st;
                fixed.r_switch = double(prof.r_switch);
                const auto pp = integrate(a + h, fixed, c);
                const auto pm = integrate(a - h, fixed, c);
                Real num = 0, den = 0;
                for (std::size_t i = 1; i < vp.samples.size(); ++i) {
                    const Real r = vp.samples[i].r;
                    if (r > 10 || i >= pp.samples.size() || i >= pm.samples.size() || pp.samples[i].r != r ||
                        pm.samples[i].r != r || r >= prof.r_end)
                        break;
                    num = std::max(num, std::abs((pp.samples[i].f - pm.samples[i].f) / (2 * h) - vp.samples[i].fa));
                    den = std::max(den, std::abs(vp.samples[i].fa));
                }
                fd = std::max(fd, double(num / den));
                const auto m = monotonicity_check(prof, vp, c);
                mono = mono && m.holds && m.checked > 0;
                const auto lr = linearized_residual(vp, c);
                la = std::max(la, double(lr.max_wa_residual));
                closed = std::max(closed, double(lr.max_closed_form_dev));
                neg = neg && lr.rwp_negative;
            }
            ch.measured = fd;
            ch.passed = fd <= 1e-3 && mono && la <= 1e-6 && closed <= 1e-8 && neg;
            ch.detail = "finite-difference deviation " + fmt("%.3g", fd) + ", monotonicity " +
                        (mono ? "holds" : "violated") + ", |L_a(w_a)| " + fmt("%.3g", la) + ", closed-form deviation " +
                        fmt("%.3g", closed) + (neg ? ", L_a(rw') < 0" : ", L_a(rw') not negative");
        }));

    rep.checks.push_back(run_check<Real>(
        "limit_problem", "limit profile has finite S0 with h'(S0)<0; rescaled a=1e-3 profile within 0.05 of h on [0, S0/2]",
        0.05, [&](Check& ch) {
            IntegratorSettings ls = st;
            ls.R_max = std::max(st.R_max, 1e3);
            const auto h = limit_profile(ls, c);
            const Real S0 = *h.R, hp = h.samples.back().fprime;
            const Real a = Real(1e-3);
            const Real scale = std::pow(a, -(2 - c.p) / c.p);
            std::vector<Real> radii, hv;
            for (const auto& s : h.samples)
                if (s.r > 0 && s.r <= S0 / 2) {
                    radii.push_back(s.r * scale);
                    hv.push_back(s.f);
                }
            IntegratorSettings fs = st;
            fs.stop_at_plateau = true;
            const auto prof = integrate(a, fs, c, std::span<const Real>(radii));
            Real dev = 0;
            std::size_t k = 0;
            for (const auto& s : prof.samples) {
                if (k < radii.size() && s.r == radii[k]) {
                    dev = std::max(dev, std::abs(s.f / a - hv[k]));
                    ++k;
                }
            }
            ch.measured = double(dev);
            ch.passed = std::isfinite(double(S0)) && hp < 0 && k == radii.size() && dev < Real(ch.tolerance);
            ch.detail = "S0 = " + fmt("%.8g", double(S0)) + ", h'(S0) = " + fmt("%.6g", double(hp)) +
                        ", max |g - h| = " + fmt("%.4g", double(dev)) + " over " + std::to_string(k) + " points";
        }));

    rep.checks.push_back(run_check<Real>(
        "robustness", "classification (grid centred on the seed bracket), critical bracket and slow orbit repeated on a second config", 0,
        [&](Check& ch) {
            const auto c2 = validate<Real>(opt.second);
            std::optional<Bracket<Real>> b2;
            const auto seed = seed_bracket(st, c2);
            const auto s5 = classification_structure(st, c2, std::sqrt(seed.a_A * seed.a_C));
            const auto s6 = critical_bracket(st, c2, Real(opt.bisect_width), b2);
            const auto s7 = slow_orbit(4 * b2->a_hi, st, c2, opt.tail_horizon);
            ch.passed = s5.ok && s6.ok && s7.ok;
            ch.measured = (s5.ok ? 0 : 1) + (s6.ok ? 0 : 1) + (s7.ok ? 0 : 1);
            ch.detail = "N=" + std::to_string(opt.second.N) + " p=" + fmt("%g", opt.second.p) + " q=" +
                        fmt("%g", opt.second.q) + ": structure {" + s5.detail + "}; bracket {" + s6.detail +
                        "}; slow {" + s7.detail + "}";
        }));

    return rep;
}

} // namespace vss
