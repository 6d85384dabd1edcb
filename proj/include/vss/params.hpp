#pragma once

#include <cmath>
#include <vector>

#include "errors.hpp"

namespace vss {

// Dimension N and exponents p (diffusion), q (gradient absorption).
struct ExponentConfig {
    int N = 1;
    double p = 1.5;
    double q = 0.9;
};

template <class Real = double>
struct DerivedConstants {
    int N;
    Real p, q;
    Real alpha, beta;
    Real mu, eta;
    Real w_star;
    Real q_star, p_c;
    Real slow_exponent, fast_exponent;
    Real alpha_minus_beta_mu;
    Real uniq_denominator;
    Real C1, C2, C3;

    // f' = -|F|^{s-1} F
    Real s() const { return Real(1) / (p - Real(1)); }
};

template <class Real = double>
struct ExpansionCoefficients {
    Real C1, C2, C3;
};

template <class Real = double>
ExpansionCoefficients<Real> expansion_coefficients(const ExponentConfig& cfg)
{
    const Real N = cfg.N, p = cfg.p, q = cfg.q;
    return {
        (p - 1) / p,
        (p - 1) / ((p + q) * (q + N * (p - 1))),
        (p - 1) * q / (2 * p * p * (p + N * (p - 1)) * (2 * q - p)),
    };
}

template <class Real = double>
DerivedConstants<Real> validate(const ExponentConfig& cfg)
{
    std::vector<Violation> bad;
    if (cfg.N < 1)
        bad.push_back({"N >= 1", double(cfg.N - 1)});
    if (!std::isfinite(cfg.p) || !std::isfinite(cfg.q)) {
        bad.push_back({"p, q finite", 0.0});
        throw WindowViolation(std::move(bad));
    }

    const Real N = cfg.N < 1 ? 1 : cfg.N;
    const Real p = cfg.p, q = cfg.q;
    const Real p_c = 2 * N / (N + 1);
    const Real q_star = p - N / (N + 1);

    if (!(p > p_c))
        bad.push_back({"p > p_c = 2N/(N+1)", double(p - p_c)});
    if (!(p < 2))
        bad.push_back({"p < 2", double(2 - p)});
    if (!(q > p / 2))
        bad.push_back({"q > p/2", double(q - p / 2)});
    if (!(q < q_star))
        bad.push_back({"q < q_star = p - N/(N+1)", double(q_star - q)});
    if (!bad.empty())
        throw WindowViolation(std::move(bad));

    DerivedConstants<Real> c{};
    c.N = cfg.N;
    c.p = p;
    c.q = q;
    c.alpha = (p - q) / (2 * q - p);
    c.beta = (q - p + 1) / (2 * q - p);
    c.mu = p / (2 - p);
    c.eta = -(2 * q - p) / (2 - p);
    c.w_star = std::pow(std::pow(c.mu, p - 1) * (c.mu - N) / (c.mu * c.beta - c.alpha),
                        1 / (2 - p));
    c.q_star = q_star;
    c.p_c = p_c;
    c.slow_exponent = (p - q) / (q - p + 1);
    c.fast_exponent = c.mu;
    c.alpha_minus_beta_mu = -1 / (2 - p);
    c.uniq_denominator = p * (N + 1) - 2 * N;
    const auto e = expansion_coefficients<Real>(cfg);
    c.C1 = e.C1;
    c.C2 = e.C2;
    c.C3 = e.C3;

    if (!(c.uniq_denominator > 0))
        throw WindowViolation({{"p(N+1) - 2N > 0", double(c.uniq_denominator)}});
    return c;
}

} // namespace vss
