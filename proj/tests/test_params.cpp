#include <catch_amalgamated.hpp>

#include <random>

#include <vss/params.hpp>

#include "oracle.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

vss::ExponentConfig random_valid(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.005, 0.995);
    std::uniform_int_distribution<int> nd(1, 6);
    vss::ExponentConfig x;
    x.N = nd(rng);
    const double pc = 2.0 * x.N / (x.N + 1);
    x.p = pc + (2 - pc) * u(rng);
    const double qs = x.p - double(x.N) / (x.N + 1);
    x.q = x.p / 2 + (qs - x.p / 2) * u(rng);
    return x;
}

bool has_bound(const vss::WindowViolation& e, const std::string& prefix)
{
    for (const auto& v : e.violations)
        if (v.bound.rfind(prefix, 0) == 0)
            return true;
    return false;
}

} // namespace

TEST_CASE("reference config constants")
{
    const auto c = vss::validate({1, 1.5, 0.9});
    CHECK_THAT(c.alpha, WithinRel(2.0, 1e-14));
    CHECK_THAT(c.beta, WithinRel(4.0 / 3, 1e-14));
    CHECK_THAT(c.mu, WithinRel(3.0, 1e-14));
    CHECK_THAT(c.eta, WithinRel(-0.6, 1e-14));
    CHECK_THAT(c.w_star, WithinRel(3.0, 1e-13));
    CHECK_THAT(c.q_star, WithinRel(1.0, 1e-14));
    CHECK_THAT(c.p_c, WithinRel(1.0, 1e-14));
    CHECK_THAT(c.slow_exponent, WithinRel(1.5, 1e-14));
    CHECK_THAT(c.fast_exponent, WithinRel(3.0, 1e-14));
    CHECK_THAT(c.uniq_denominator, WithinRel(1.0, 1e-14));
}

TEST_CASE("expansion coefficients for the reference config")
{
    const auto e = vss::expansion_coefficients({1, 1.5, 0.9});
    CHECK_THAT(e.C1, WithinRel(1.0 / 3, 1e-14));
    CHECK_THAT(e.C2, WithinRel(0.1488095, 1e-6));
    CHECK_THAT(e.C3, WithinRel(1.0 / 6, 1e-13));
}

TEST_CASE("C1 tends to one half as p approaches 2")
{
    const auto e = vss::expansion_coefficients({1, 2 - 1e-9, 1.0});
    CHECK_THAT(e.C1, WithinAbs(0.5, 1e-8));
}

TEST_CASE("q above q_star is rejected")
{
    try {
        vss::validate({1, 1.5, 1.2});
        FAIL("expected WindowViolation");
    } catch (const vss::WindowViolation& e) {
        CHECK(has_bound(e, "q < q_star"));
        CHECK(e.violations.size() == 1);
        CHECK_THAT(e.violations[0].margin, WithinAbs(-0.2, 1e-12));
    }
}

TEST_CASE("p below p_c is rejected")
{
    try {
        vss::validate({2, 1.0, 0.6});
        FAIL("expected WindowViolation");
    } catch (const vss::WindowViolation& e) {
        CHECK(has_bound(e, "p > p_c"));
    }
}

TEST_CASE("every violated bound is reported")
{
    try {
        vss::validate({1, 2.5, 1.0});
        FAIL("expected WindowViolation");
    } catch (const vss::WindowViolation& e) {
        CHECK(has_bound(e, "p < 2"));
        CHECK(has_bound(e, "q > p/2"));
        CHECK(e.violations.size() == 2);
    }
}

TEST_CASE("window boundaries are rejected exactly")
{
    CHECK_THROWS_AS(vss::validate({1, 1.5, 0.75}), vss::WindowViolation);
    CHECK_THROWS_AS(vss::validate({1, 1.5, 1.0}), vss::WindowViolation);
    CHECK_THROWS_AS(vss::validate({1, 1.0, 0.6}), vss::WindowViolation);
    CHECK_THROWS_AS(vss::validate({0, 1.5, 0.9}), vss::WindowViolation);
    CHECK_THROWS_AS(vss::validate({1, std::nan(""), 0.9}), vss::WindowViolation);
}

TEST_CASE("derived constants match the oracle on random configs")
{
    std::mt19937_64 rng(7);
    for (int i = 0; i < 300; ++i) {
        const auto x = random_valid(rng);
        const auto c = vss::validate(x);
        const auto k = oracle::consts<double>(x.N, x.p, x.q);
        INFO("N=" << x.N << " p=" << x.p << " q=" << x.q);
        CHECK_THAT(c.alpha, WithinRel(k.alpha, 1e-12));
        CHECK_THAT(c.beta, WithinRel(k.beta, 1e-12));
        CHECK_THAT(c.mu, WithinRel(k.mu, 1e-12));
        CHECK_THAT(c.eta, WithinRel(k.eta, 1e-12));
        CHECK_THAT(c.w_star, WithinRel(k.w_star, 1e-11));
        CHECK_THAT(c.slow_exponent, WithinRel(k.slow, 1e-12));
        CHECK_THAT(c.C1, WithinRel(k.C1, 1e-12));
        CHECK_THAT(c.C2, WithinRel(k.C2, 1e-12));
        CHECK_THAT(c.C3, WithinRel(k.C3, 1e-12));
    }
}

TEST_CASE("structural inequalities hold on random configs")
{
    std::mt19937_64 rng(11);
    for (int i = 0; i < 300; ++i) {
        const auto x = random_valid(rng);
        const auto c = vss::validate(x);
        INFO("N=" << x.N << " p=" << x.p << " q=" << x.q);
        CHECK(c.mu > c.N);
        CHECK(c.eta < 0);
        CHECK(c.alpha_minus_beta_mu < 0);
        CHECK_THAT(c.alpha - c.beta * c.mu, WithinRel(-1 / (2 - x.p), 1e-11));
        CHECK(c.alpha - c.N * c.beta > 0);
        CHECK(c.slow_exponent < c.fast_exponent);
        CHECK(c.uniq_denominator > 0);
        CHECK(c.C1 > 0);
        CHECK(c.C2 > 0);
        CHECK(c.C3 > 0);
    }
}

TEST_CASE("plateau identity on a grid of configs")
{
    int n = 0;
    for (int N = 1; N <= 4; ++N)
        for (int i = 1; i < 6; ++i)
            for (int j = 1; j < 6; ++j) {
                const double pc = 2.0 * N / (N + 1);
                const double p = pc + (2 - pc) * i / 6;
                const double qs = p - double(N) / (N + 1);
                const double q = p / 2 + (qs - p / 2) * j / 6;
                const auto c = vss::validate({N, p, q});
                const double lhs = c.mu * c.w_star;
                const double rhs = std::pow(c.w_star / (p * (N + 1) - 2 * N), 1 / (p - 1));
                CHECK(std::abs(lhs - rhs) <= 1e-12 * lhs);
                ++n;
            }
    CHECK(n >= 100);
}

TEST_CASE("valid q values form one contiguous run")
{
    for (int N = 1; N <= 3; ++N) {
        const double p = 2.0 * N / (N + 1) + 0.3 * (2 - 2.0 * N / (N + 1));
        int runs = 0;
        bool prev = false;
        for (int i = 0; i <= 400; ++i) {
            const double q = 0.2 + 1.6 * i / 400;
            bool ok = true;
            try {
                vss::validate({N, p, q});
            } catch (const vss::WindowViolation&) {
                ok = false;
            }
            if (ok && !prev)
                ++runs;
            prev = ok;
        }
        CHECK(runs == 1);
    }
}

TEST_CASE("extended precision agrees with double")
{
    const auto d = vss::validate<double>({2, 1.6, 0.9});
    const auto l = vss::validate<long double>({2, 1.6, 0.9});
    CHECK_THAT(double(l.w_star), WithinRel(d.w_star, 1e-14));
    CHECK_THAT(double(l.alpha), WithinRel(d.alpha, 1e-15));
}
