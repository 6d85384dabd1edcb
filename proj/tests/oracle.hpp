#pragma once

// Independent re-derivations used as test oracles. Nothing here includes the library.

#include <cmath>
#include <cstddef>
#include <vector>

#include <quadmath.h>

namespace oracle {

using quad = __float128;

inline double pw(double x, double y) { return std::pow(x, y); }
inline quad pw(quad x, quad y) { return powq(x, y); }
inline double ab(double x) { return std::fabs(x); }
inline quad ab(quad x) { return fabsq(x); }
inline double ex(double x) { return std::exp(x); }
inline quad ex(quad x) { return expq(x); }
inline double lg(double x) { return std::log(x); }
inline quad lg(quad x) { return logq(x); }

template <class T>
struct Consts {
    int N;
    T p, q;
    T alpha, beta, mu, eta, w_star, q_star, p_c, slow, fast, C1, C2, C3;
};

// Written from the closed forms, with no shared code paths.
template <class T = double>
Consts<T> consts(int N, T p, T q)
{
    Consts<T> k{};
    k.N = N;
    k.p = p;
    k.q = q;
    const T d = 2 * q - p;
    k.alpha = (p - q) / d;
    k.beta = (1 + q - p) / d;
    k.mu = p / (2 - p);
    k.eta = (p - 2 * q) / (2 - p);
    k.q_star = p - T(N) / T(N + 1);
    k.p_c = T(2 * N) / T(N + 1);
    k.slow = (p - q) / (1 + q - p);
    k.fast = k.mu;
    const T num = pw(k.mu, p - 1) * (k.mu - N);
    k.w_star = pw(num / (k.mu * k.beta - k.alpha), 1 / (2 - p));
    k.C1 = (p - 1) / p;
    k.C2 = (p - 1) / ((p + q) * (q + N * (p - 1)));
    k.C3 = (p - 1) * q / (2 * p * p * (p + N * (p - 1)) * d);
    return k;
}

template <class T>
struct FG {
    T f, fp;
};

// Four-term small-r expansion and its term-by-term derivative.
template <class T>
FG<T> series(T a, T r, const Consts<T>& k)
{
    if (r == 0)
        return {a, 0};
    const T p = k.p, q = k.q, c = a * k.alpha / k.N;
    const T e1 = p / (p - 1), e2 = (p + q) / (p - 1), e3 = 2 * p / (p - 1);
    const T t1 = k.C1 * pw(c, 1 / (p - 1));
    const T t2 = k.C2 * pw(c, (q - p + 2) / (p - 1));
    const T t3 = k.C3 * pw(c, (3 - p) / (p - 1));
    return {a - t1 * pw(r, e1) + t2 * pw(r, e2) + t3 * pw(r, e3),
            -t1 * e1 * pw(r, e1 - 1) + t2 * e2 * pw(r, e2 - 1) + t3 * e3 * pw(r, e3 - 1)};
}

// State (f, G) with G = |f'|^{p-2} f'. Profile equation
// G' + (N-1)/r G + beta r f' + alpha f - kappa |f'|^q = 0.
template <class T>
struct State {
    T f, G;
};

template <class T>
T fprime_from_G(T G, const Consts<T>& k)
{
    const T m = pw(ab(G), 1 / (k.p - 1));
    return G < 0 ? -m : m;
}

template <class T>
T G_from_fprime(T fp, const Consts<T>& k)
{
    const T m = pw(ab(fp), k.p - 1);
    return fp < 0 ? -m : m;
}

template <class T>
State<T> deriv(T r, const State<T>& s, const Consts<T>& k, int kappa = 1)
{
    const T fp = fprime_from_G(s.G, k);
    const T dG = -(T(k.N) - 1) / r * s.G - k.beta * r * fp - k.alpha * s.f + T(kappa) * pw(ab(fp), k.q);
    return {fp, dG};
}

template <class T>
State<T> rk4_step(T r, const State<T>& y, T h, const Consts<T>& k, int kappa)
{
    auto add = [](const State<T>& a, const State<T>& b, T s) { return State<T>{a.f + s * b.f, a.G + s * b.G}; };
    const auto k1 = deriv(r, y, k, kappa);
    const auto k2 = deriv(r + h / 2, add(y, k1, h / 2), k, kappa);
    const auto k3 = deriv(r + h / 2, add(y, k2, h / 2), k, kappa);
    const auto k4 = deriv(r + h, add(y, k3, h), k, kappa);
    return {y.f + h / 6 * (k1.f + 2 * k2.f + 2 * k3.f + k4.f), y.G + h / 6 * (k1.G + 2 * k2.G + 2 * k3.G + k4.G)};
}

// Classical RK4 with step h from r0 (series start), landing exactly on each sorted radius.
template <class T>
std::vector<State<T>> rk4(T a, T r0, const std::vector<T>& radii, T h, const Consts<T>& k, int kappa = 1)
{
    const auto s0 = series(a, r0, k);
    State<T> y{s0.f, G_from_fprime(s0.fp, k)};
    T r = r0;
    std::vector<State<T>> out;
    out.reserve(radii.size());
    for (T target : radii) {
        while (r < target) {
            const T step = target - r < h * T(1.000001) ? target - r : h;
            y = rk4_step(r, y, step, k, kappa);
            r = r + step == r ? target : r + step;
            if (target - r < h * T(1e-9))
                r = target;
        }
        out.push_back(y);
    }
    return out;
}

// RK4 in t = ln r, for tiny radii where uniform r-steps would be wasteful.
template <class T>
std::vector<State<T>> rk4_log(T a, T r0, const std::vector<T>& radii, int steps_per_unit, const Consts<T>& k)
{
    const auto s0 = series(a, r0, k);
    State<T> y{s0.f, G_from_fprime(s0.fp, k)};
    auto g = [&](T t, const State<T>& s) {
        const T r = ex(t);
        const auto d = deriv(r, s, k, 1);
        return State<T>{r * d.f, r * d.G};
    };
    auto add = [](const State<T>& a, const State<T>& b, T s) { return State<T>{a.f + s * b.f, a.G + s * b.G}; };
    T t = lg(r0);
    std::vector<State<T>> out;
    for (T target : radii) {
        const T te = lg(target);
        const int n = static_cast<int>(double((te - t) * steps_per_unit)) + 1;
        const T h = (te - t) / n;
        for (int i = 0; i < n; ++i) {
            const auto k1 = g(t, y);
            const auto k2 = g(t + h / 2, add(y, k1, h / 2));
            const auto k3 = g(t + h / 2, add(y, k2, h / 2));
            const auto k4 = g(t + h, add(y, k3, h));
            y = {y.f + h / 6 * (k1.f + 2 * k2.f + 2 * k3.f + k4.f), y.G + h / 6 * (k1.G + 2 * k2.G + 2 * k3.G + k4.G)};
            t += h;
        }
        t = te;
        out.push_back(y);
    }
    return out;
}

// First zero of f for fixed-step RK4, refined by linear interpolation.
template <class T>
struct Zero {
    T S0, fp_at_zero;
    bool found;
};

template <class T>
Zero<T> first_zero(T a, T r0, T h, T r_max, const Consts<T>& k, int kappa)
{
    const auto s0 = series(a, r0, k);
    State<T> y{s0.f, G_from_fprime(s0.fp, k)};
    T r = r0;
    while (r < r_max) {
        const auto next = rk4_step(r, y, h, k, kappa);
        if (next.f <= 0) {
            const T th = y.f / (y.f - next.f);
            const T fp = fprime_from_G(y.G + th * (next.G - y.G), k);
            return {r + th * h, fp, true};
        }
        y = next;
        r += h;
    }
    return {0, 0, false};
}

struct Fit {
    double slope, intercept;
};

inline Fit linear_fit(const std::vector<double>& x, const std::vector<double>& y)
{
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return {slope, (sy - slope * sx) / n};
}

} // namespace oracle
