#include <catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include <vss/classifier.hpp>

#include "oracle.hpp"

using Catch::Matchers::WithinRel;

namespace {

const auto ref = vss::validate({1, 1.5, 0.9});
const vss::IntegratorSettings st;

std::vector<double> log_grid(double lo, double hi, int n)
{
    std::vector<double> a;
    for (int i = 0; i < n; ++i)
        a.push_back(lo * std::pow(hi / lo, double(i) / (n - 1)));
    return a;
}

int rank_of(const vss::ClassLabel<double>& l)
{
    if (std::holds_alternative<vss::InA<double>>(l))
        return 0;
    return std::holds_alternative<vss::Undetermined<double>>(l) ? 1 : 2;
}

} // namespace

TEST_CASE("classify small and large a")
{
    const auto a = vss::classify(0.01, st, ref);
    REQUIRE(std::holds_alternative<vss::InA<double>>(a));
    const auto& A = std::get<vss::InA<double>>(a);
    REQUIRE(A.R1);
    CHECK(*A.R1 < A.R);
    CHECK(std::holds_alternative<vss::InC<double>>(vss::classify(100.0, st, ref)));
    CHECK(std::string(vss::label_name<double>(a)) == "A");
}

TEST_CASE("classify ignores stop_at_plateau = false")
{
    vss::IntegratorSettings s = st;
    s.stop_at_plateau = false;
    CHECK(std::holds_alternative<vss::InC<double>>(vss::classify(100.0, s, ref)));
}

TEST_CASE("closed-form cap classifies as C")
{
    const auto k = oracle::consts<double>(1, 1.5, 0.9);
    const double expected = std::pow(2 * k.w_star * std::pow(2.0, 4.0) * std::pow(2.0, 10.0 / 3), 1.5);
    const double cap = vss::c_bound_cap(ref);
    CHECK_THAT(cap, WithinRel(expected, 1e-12));
    CHECK(std::holds_alternative<vss::InC<double>>(vss::classify(cap, st, ref)));
}

TEST_CASE("seed bracket")
{
    const auto s = vss::seed_bracket(st, ref);
    CHECK(s.a_A < s.a_C);
    CHECK(std::holds_alternative<vss::InA<double>>(vss::classify(s.a_A, st, ref)));
    CHECK(std::holds_alternative<vss::InC<double>>(vss::classify(s.a_C, st, ref)));
    CHECK(std::log2(s.a_A) == std::round(std::log2(s.a_A)));
    CHECK(std::log2(s.a_C) == std::round(std::log2(s.a_C)));
    // The upward sweep starts at 1, so a_C is minimal only above 1.
    if (s.a_C > 1)
        CHECK_FALSE(std::holds_alternative<vss::InC<double>>(vss::classify(s.a_C / 2, st, ref)));
    // No power of two strictly between a_A and a_C is A.
    for (double a = 2 * s.a_A; a < s.a_C; a *= 2)
        CHECK_FALSE(std::holds_alternative<vss::InA<double>>(vss::classify(a, st, ref)));
}

TEST_CASE("seed bracket on a second config")
{
    const auto c = vss::validate({2, 1.6, 0.9});
    const auto s = vss::seed_bracket(st, c);
    CHECK(s.a_A < s.a_C);
    CHECK(std::holds_alternative<vss::InA<double>>(vss::classify(s.a_A, st, c)));
}

TEST_CASE("bisection converges with a plateau midpoint")
{
    const auto s = vss::seed_bracket(st, ref);
    const auto b = vss::bisect(s.a_A, s.a_C, 1e-8, st, ref);
    CHECK((b.a_hi - b.a_lo) / b.a_lo <= 1e-8);
    CHECK(b.iterations <= 60);
    CHECK(b.trail.size() == std::size_t(b.iterations + 1));

    // Plateau: some window [r1, 10 r1] with |w - 3| / 3 < 0.05.
    const auto& smp = b.midpoint_profile.samples;
    bool plateau = false;
    for (std::size_t i = 0; i < smp.size() && !plateau; ++i) {
        if (smp[i].r <= 0)
            continue;
        bool ok = true;
        std::size_t j = i;
        for (; j < smp.size() && smp[j].r <= 10 * smp[i].r; ++j)
            ok = ok && std::abs(smp[j].w - 3) / 3 < 0.05;
        plateau = ok && j < smp.size();
    }
    CHECK(plateau);

    const double mid = b.a_lo + (b.a_hi - b.a_lo) / 2;
    const auto l = vss::classify(mid, st, ref);
    REQUIRE(std::holds_alternative<vss::Undetermined<double>>(l));
    CHECK(std::abs(std::get<vss::Undetermined<double>>(l).w_at_horizon / 3 - 1) < 0.05);
}

TEST_CASE("bracket endpoints keep their labels and brackets nest")
{
    const auto s = vss::seed_bracket(st, ref);
    const auto coarse = vss::bisect(s.a_A, s.a_C, 1e-6, st, ref);
    const auto fine = vss::bisect(s.a_A, s.a_C, 1e-8, st, ref);
    CHECK(std::abs(fine.a_lo / coarse.a_lo - 1) <= 1e-6);
    CHECK(fine.a_lo >= coarse.a_lo);
    CHECK(fine.a_hi <= coarse.a_hi);
    for (std::size_t i = 1; i < fine.trail.size(); ++i) {
        CHECK(fine.trail[i].a_lo >= fine.trail[i - 1].a_lo);
        CHECK(fine.trail[i].a_hi <= fine.trail[i - 1].a_hi);
    }
    // Every trail endpoint that was decided outright keeps its label.
    for (std::size_t i = 0; i < fine.trail.size(); i += 4) {
        const auto lo = vss::classify(fine.trail[i].a_lo, st, ref);
        const auto hi = vss::classify(fine.trail[i].a_hi, st, ref);
        CHECK_FALSE(std::holds_alternative<vss::InC<double>>(lo));
        CHECK_FALSE(std::holds_alternative<vss::InA<double>>(hi));
    }
}

TEST_CASE("bisection in double hits the resolution floor")
{
    const auto s = vss::seed_bracket(st, ref);
    CHECK_THROWS_AS(vss::bisect(s.a_A, s.a_C, 1e-17, st, ref), vss::ResolutionFloor);
}

TEST_CASE("bisect rejects a reversed bracket")
{
    CHECK_THROWS_AS(vss::bisect(1.0, 0.5, 1e-6, st, ref), vss::DomainError);
}

TEST_CASE("log sweep has interval structure and orbit shapes")
{
    const auto grid = log_grid(1e-3, 1e3, 61);
    const auto items = vss::sweep(grid, st, ref, 4);
    REQUIRE(items.size() == grid.size());
    int stage = 0, nA = 0, nC = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
        CHECK(items[i].a == grid[i]);
        REQUIRE(items[i].label);
        const int r = rank_of(*items[i].label);
        CHECK(r >= stage);
        stage = std::max(stage, r);
        nA += r == 0;
        nC += r == 2;

        const auto prof = vss::integrate(grid[i], st, ref);
        if (r == 0) {
            double wmax = 0;
            int changes = 0;
            for (std::size_t j = 1; j < prof.samples.size(); ++j) {
                wmax = std::max(wmax, prof.samples[j].w);
                if (j > 1 && (prof.samples[j].wprime > 0) != (prof.samples[j - 1].wprime > 0))
                    ++changes;
            }
            CHECK(wmax < 3);
            CHECK(changes == 1);
        } else if (r == 2) {
            for (std::size_t j = 1; j < prof.samples.size(); ++j)
                CHECK(prof.samples[j].wprime > 0);
        }
    }
    CHECK(nA > 0);
    CHECK(nC > 0);
}

TEST_CASE("singleton sweep equals classify")
{
    const auto items = vss::sweep(std::vector<double>{0.3}, st, ref);
    REQUIRE(items.size() == 1);
    REQUIRE(items[0].label);
    const auto l = vss::classify(0.3, st, ref);
    CHECK(items[0].label->index() == l.index());
    if (auto* c = std::get_if<vss::InC<double>>(&l))
        CHECK(std::get<vss::InC<double>>(*items[0].label).r_cross == c->r_cross);
}

TEST_CASE("sweep output follows input order under permutation and threads")
{
    auto grid = log_grid(1e-2, 1e2, 24);
    const auto serial = vss::sweep(grid, st, ref, 1);
    std::mt19937 rng(1);
    std::vector<std::size_t> perm(grid.size());
    for (std::size_t i = 0; i < perm.size(); ++i)
        perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> shuffled;
    for (auto i : perm)
        shuffled.push_back(grid[i]);
    const auto par = vss::sweep(shuffled, st, ref, 8);
    for (std::size_t k = 0; k < perm.size(); ++k) {
        const auto& x = serial[perm[k]];
        const auto& y = par[k];
        CHECK(x.a == y.a);
        REQUIRE(x.label);
        REQUIRE(y.label);
        CHECK(x.label->index() == y.label->index());
        if (auto* a = std::get_if<vss::InA<double>>(&*x.label))
            CHECK(std::get<vss::InA<double>>(*y.label).R == a->R);
        if (auto* c = std::get_if<vss::InC<double>>(&*x.label))
            CHECK(std::get<vss::InC<double>>(*y.label).r_cross == c->r_cross);
    }
}

TEST_CASE("sweep captures per-item errors")
{
    const auto items = vss::sweep(std::vector<double>{0.01, -1.0, 100.0}, st, ref, 2);
    CHECK(items[0].label);
    CHECK_FALSE(items[1].label);
    CHECK_FALSE(items[1].error.empty());
    CHECK(items[2].label);
}
