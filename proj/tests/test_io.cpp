#include <catch_amalgamated.hpp>

#include <locale>
#include <sstream>

#include <vss/io.hpp>
#include <vss/svg.hpp>

using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinRel;

namespace {

const auto ref = vss::validate({1, 1.5, 0.9});

struct comma_decimal : std::numpunct<char> {
    char do_decimal_point() const override { return ','; }
    char do_thousands_sep() const override { return '.'; }
    std::string do_grouping() const override { return "\3"; }
};

} // namespace

TEST_CASE("profile CSV layout")
{
    const auto p = vss::integrate(1.0, vss::IntegratorSettings{}, ref);
    std::ostringstream os;
    vss::io::write_profile_csv(os, p);
    std::istringstream is(os.str());
    std::string header, row0;
    std::getline(is, header);
    std::getline(is, row0);
    CHECK(header == "r,f,fprime,w,wprime,E");
    const auto f = vss::io::split(row0);
    REQUIRE(f.size() == 6);
    CHECK(f[0] == "0");
    CHECK(f[1] == "1");
    CHECK(f[2] == "0");
    CHECK(f[3] == "0");
    CHECK(f[4] == "0");
    CHECK_THAT(vss::io::parse_num(f[5]), WithinRel(1.0, 1e-15));
}

TEST_CASE("numbers ignore the stream locale")
{
    const auto p = vss::integrate(0.5, vss::IntegratorSettings{}, ref);
    std::ostringstream plain, local;
    local.imbue(std::locale(std::locale::classic(), new comma_decimal));
    vss::io::write_profile_csv(plain, p);
    vss::io::write_profile_csv(local, p);
    CHECK(plain.str() == local.str());
}

TEST_CASE("profile CSV round trip with sidecar")
{
    vss::IntegratorSettings st;
    st.stop_at_plateau = false;
    const auto p = vss::integrate(2.0, st, ref);
    std::ostringstream os;
    vss::io::write_profile_csv(os, p);
    std::istringstream is(os.str());
    auto q = vss::io::read_profile_csv(is);
    vss::io::apply_meta(q, vss::io::profile_meta(p));
    REQUIRE(q.samples.size() == p.samples.size());
    for (std::size_t i = 0; i < p.samples.size(); ++i) {
        CHECK(q.samples[i].r == p.samples[i].r);
        CHECK(q.samples[i].f == p.samples[i].f);
        CHECK(q.samples[i].fprime == p.samples[i].fprime);
    }
    CHECK(q.termination == p.termination);
    CHECK(q.r_cross == p.r_cross);
    CHECK(q.settings.stop_at_plateau == false);
}

TEST_CASE("malformed profile CSV")
{
    std::istringstream bad_header("r,f\n0,1\n");
    CHECK_THROWS_AS(vss::io::read_profile_csv(bad_header), vss::DomainError);
    std::istringstream unsorted("r,f,fprime,w,wprime,E\n1,1,0,0,0,1\n0.5,1,0,0,0,1\n");
    CHECK_THROWS_AS(vss::io::read_profile_csv(unsorted), vss::DomainError);
    std::istringstream garbage("r,f,fprime,w,wprime,E\n0,x,0,0,0,1\n");
    CHECK_THROWS_AS(vss::io::read_profile_csv(garbage), vss::DomainError);
}

TEST_CASE("config and settings JSON round trip")
{
    const vss::ExponentConfig cfg{2, 1.6, 0.9};
    const auto back = vss::io::config_from_json(vss::io::to_json(cfg));
    CHECK(back.N == 2);
    CHECK(back.p == 1.6);
    CHECK(back.q == 0.9);

    vss::IntegratorSettings st;
    st.r_switch = 1e-3;
    st.R_max = 5e5;
    st.samples_per_decade = 32;
    const auto s2 = vss::io::settings_from_json(vss::io::to_json(st));
    CHECK(s2.r_switch == st.r_switch);
    CHECK(s2.R_max == st.R_max);
    CHECK(s2.samples_per_decade == 32);
    CHECK(s2.rel_tol == st.rel_tol);
}

TEST_CASE("sweep CSV columns")
{
    const auto items = vss::sweep(std::vector<double>{0.01, -1.0, 100.0}, vss::IntegratorSettings{}, ref);
    std::ostringstream os;
    vss::io::write_sweep_csv(os, items);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "a,label,R,R1,r_cross,w_at_horizon");
    while (std::getline(is, line))
        CHECK(vss::io::split(line).size() == 6);
    CHECK_THAT(os.str(), ContainsSubstring(",A,"));
    CHECK_THAT(os.str(), ContainsSubstring(",error,"));
    CHECK_THAT(os.str(), ContainsSubstring(",C,"));
}

TEST_CASE("SVG is self-contained with a labelled w* line")
{
    const auto p = vss::integrate(1.0, vss::IntegratorSettings{}, ref);
    std::ostringstream os;
    vss::write_profile_svg(os, p, ref.w_star);
    const auto svg = os.str();
    CHECK_THAT(svg, ContainsSubstring("<svg"));
    CHECK_THAT(svg, ContainsSubstring("w* = 3"));
    CHECK_THAT(svg, ContainsSubstring("stroke-dasharray"));
    CHECK(svg.find("href") == std::string::npos);
    CHECK(svg.find("<link") == std::string::npos);
}
