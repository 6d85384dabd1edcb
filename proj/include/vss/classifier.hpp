#pragma once

#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "params.hpp"
#include "shooter.hpp"

namespace vss {

template <class Real>
struct InA {
    Real R;
    std::optional<Real> R1;
};

template <class Real>
struct InC {
    Real r_cross;
};

template <class Real>
struct Undetermined {
    Real w_at_horizon;
    Real wprime_at_horizon;
};

template <class Real>
using ClassLabel = std::variant<InA<Real>, InC<Real>, Undetermined<Real>>;

template <class Real>
const char* label_name(const ClassLabel<Real>& l)
{
    switch (l.index()) {
    case 0: return "A";
    case 1: return "C";
    default: return "U";
    }
}

template <class Real>
ClassLabel<Real> label_of(const Profile<Real>& prof)
{
    switch (prof.termination) {
    case Termination::FHitZero:
        return InA<Real>{*prof.R, prof.R1};
    case Termination::WCrossedPlateau:
        return InC<Real>{*prof.r_cross};
    default: {
        const auto& s = prof.samples.back();
        return Undetermined<Real>{s.w, s.wprime};
    }
    }
}

template <class Real>
ClassLabel<Real> classify(Real a, IntegratorSettings st, const DerivedConstants<Real>& c)
{
    st.stop_at_plateau = true;
    return label_of(integrate(a, st, c));
}

// Radius-free lower bound on sup w for large a; returns the a above which it exceeds 2 w*.
template <class Real>
Real c_bound_cap(const DerivedConstants<Real>& c)
{
    const Real p = c.p, q = c.q;
    const Real lhs = 2 * c.w_star * std::pow(c.alpha, p / (q * (2 - p))) * std::pow(Real(2), 2 / (2 - p));
    return std::pow(lhs, q * (2 - p) / (2 * q - p));
}

template <class Real>
struct Seed {
    Real a_A, a_C;
};

template <class Real>
Seed<Real> seed_bracket(const IntegratorSettings& st, const DerivedConstants<Real>& c)
{
    constexpr int max_sweeps = 60;
    const Real cap = c_bound_cap(c);

    std::optional<Real> a_C;
    for (int k = 0; k <= max_sweeps && !a_C; ++k) {
        const Real a = std::min(std::ldexp(Real(1), k), cap);
        const auto l = classify(a, st, c);
        if (std::holds_alternative<InC<Real>>(l))
            a_C = a;
        else if (a == cap)
            throw SweepExhausted("cap a = " + std::to_string(double(cap)) + " did not classify as C");
    }
    if (!a_C)
        throw SweepExhausted("no C member among 2^k, k <= 60");

    std::optional<Real> a_A;
    for (int k = 0; k <= max_sweeps && !a_A; ++k) {
        const Real a = std::ldexp(Real(1), -k);
        if (a >= *a_C)
            continue;
        if (std::holds_alternative<InA<Real>>(classify(a, st, c)))
            a_A = a;
    }
    if (!a_A)
        throw SweepExhausted("no A member among 2^-k, k <= 60");
    return {*a_A, *a_C};
}

template <class Real>
struct BisectionStep {
    Real a_lo, a_hi;
};

template <class Real>
struct Bracket {
    Real a_lo, a_hi;
    int iterations = 0;
    Profile<Real> midpoint_profile;
    std::vector<BisectionStep<Real>> trail;
    int retries = 0;
    int heuristic_decisions = 0;
};

// Side of a* for one midpoint: true when on the A side.
template <class Real>
bool a_side(Real a, const IntegratorSettings& st, const DerivedConstants<Real>& c, Bracket<Real>& b)
{
    auto l = classify(a, st, c);
    if (std::holds_alternative<Undetermined<Real>>(l)) {
        ++b.retries;
        IntegratorSettings wide = st;
        wide.R_max = 4 * st.R_max;
        l = classify(a, wide, c);
    }
    if (auto* u = std::get_if<Undetermined<Real>>(&l)) {
        ++b.heuristic_decisions;
        return u->w_at_horizon < c.w_star;
    }
    return std::holds_alternative<InA<Real>>(l);
}

template <class Real>
Bracket<Real> bisect(Real a_A, Real a_C, Real target_width, const IntegratorSettings& st,
                     const DerivedConstants<Real>& c)
{
    if (!(a_A > 0) || !(a_A < a_C))
        throw DomainError("bisect needs 0 < a_A < a_C");
    Bracket<Real> b{a_A, a_C};
    b.trail.push_back({a_A, a_C});
    const Real eps = std::numeric_limits<Real>::epsilon();
    while ((b.a_hi - b.a_lo) / b.a_lo > target_width) {
        if (b.a_hi - b.a_lo <= 32 * eps * b.a_lo)
            throw ResolutionFloor("bracket width reached 32 ulp at a = " + std::to_string(double(b.a_lo)));
        const Real m = b.a_lo + (b.a_hi - b.a_lo) / 2;
        if (a_side(m, st, c, b))
            b.a_lo = m;
        else
            b.a_hi = m;
        ++b.iterations;
        b.trail.push_back({b.a_lo, b.a_hi});
    }
    IntegratorSettings wide = st;
    wide.R_max = 4 * st.R_max;
    b.midpoint_profile = integrate(b.a_lo + (b.a_hi - b.a_lo) / 2, wide, c);
    return b;
}

template <class Real>
struct SweepItem {
    Real a;
    std::optional<ClassLabel<Real>> label;
    std::string error;
};

template <class Real>
std::vector<SweepItem<Real>> sweep(const std::vector<Real>& a_values, const IntegratorSettings& st,
                                   const DerivedConstants<Real>& c, unsigned jobs = 1)
{
    std::vector<SweepItem<Real>> out(a_values.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < a_values.size();) {
            out[i].a = a_values[i];
            try {
                if (!(a_values[i] > 0))
                    throw DomainError("shooting parameter must be positive");
                out[i].label = classify(a_values[i], st, c);
            } catch (const std::exception& e) {
                out[i].error = e.what();
            }
        }
    };
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(a_values.size())));
    if (jobs == 1) {
        work();
        return out;
    }
    std::vector<std::jthread> pool;
    for (unsigned j = 0; j < jobs; ++j)
        pool.emplace_back(work);
    pool.clear();
    return out;
}

} // namespace vss
