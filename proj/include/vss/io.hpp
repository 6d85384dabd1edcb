#pragma once

#include <cmath>
#include <cstdio>
#include <istream>
#include <locale>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "asymptotics.hpp"
#include "classifier.hpp"
#include "errors.hpp"
#include "params.hpp"
#include "shooter.hpp"
#include "variational.hpp"

namespace vss::io {

using json = nlohmann::json;

inline constexpr int schema_version = 1;

// 17 significant digits; snprintf ignores the global C++ locale.
inline std::string num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class Real>
json opt(const std::optional<Real>& v)
{
    return v ? json(double(*v)) : json(nullptr);
}

inline json to_json(const ExponentConfig& c)
{
    return {{"N", c.N}, {"p", c.p}, {"q", c.q}};
}

inline ExponentConfig config_from_json(const json& j)
{
    ExponentConfig c;
    c.N = j.at("N").get<int>();
    c.p = j.at("p").get<double>();
    c.q = j.at("q").get<double>();
    return c;
}

inline json to_json(const IntegratorSettings& s)
{
    return {{"r_switch", s.r_switch ? json(*s.r_switch) : json(nullptr)},
            {"rel_tol", s.rel_tol},
            {"abs_tol", s.abs_tol},
            {"R_max", s.R_max},
            {"max_steps", s.max_steps},
            {"samples_per_decade", s.samples_per_decade},
            {"plateau_margin", s.plateau_margin},
            {"stop_at_plateau", s.stop_at_plateau}};
}

inline IntegratorSettings settings_from_json(const json& j)
{
    IntegratorSettings s;
    if (j.contains("r_switch") && !j["r_switch"].is_null())
        s.r_switch = j["r_switch"].get<double>();
    s.rel_tol = j.value("rel_tol", s.rel_tol);
    s.abs_tol = j.value("abs_tol", s.abs_tol);
    s.R_max = j.value("R_max", s.R_max);
    s.max_steps = j.value("max_steps", s.max_steps);
    s.samples_per_decade = j.value("samples_per_decade", s.samples_per_decade);
    s.plateau_margin = j.value("plateau_margin", s.plateau_margin);
    s.stop_at_plateau = j.value("stop_at_plateau", s.stop_at_plateau);
    return s;
}

template <class Real>
json to_json(const DerivedConstants<Real>& c)
{
    return {{"alpha", double(c.alpha)},
            {"beta", double(c.beta)},
            {"mu", double(c.mu)},
            {"eta", double(c.eta)},
            {"w_star", double(c.w_star)},
            {"q_star", double(c.q_star)},
            {"p_c", double(c.p_c)},
            {"slow_exponent", double(c.slow_exponent)},
            {"fast_exponent", double(c.fast_exponent)},
            {"alpha_minus_beta_mu", double(c.alpha_minus_beta_mu)},
            {"uniq_denominator", double(c.uniq_denominator)},
            {"C1", double(c.C1)},
            {"C2", double(c.C2)},
            {"C3", double(c.C3)}};
}

template <class Real>
void write_profile_csv(std::ostream& os, const Profile<Real>& p)
{
    os << "r,f,fprime,w,wprime,E\n";
    for (const auto& s : p.samples)
        os << num(s.r) << ',' << num(s.f) << ',' << num(s.fprime) << ',' << num(s.w) << ',' << num(s.wprime)
           << ',' << num(s.E) << '\n';
}

template <class Real>
json profile_meta(const Profile<Real>& p)
{
    return {{"schema_version", schema_version},
            {"a", double(p.a)},
            {"termination", to_string(p.termination)},
            {"R", opt(p.R)},
            {"R1", opt(p.R1)},
            {"r_cross", opt(p.r_cross)},
            {"r_end", double(p.r_end)},
            {"r_switch", double(p.r_switch)},
            {"steps", p.steps},
            {"samples", p.samples.size()},
            {"settings", to_json(p.settings)}};
}

inline std::vector<std::string> split(const std::string& line, char sep = ',')
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, sep))
        out.push_back(cur);
    if (!line.empty() && line.back() == sep)
        out.emplace_back();
    return out;
}

inline double parse_num(const std::string& s)
{
    std::istringstream is(s);
    is.imbue(std::locale::classic());
    double v;
    if (!(is >> v))
        throw DomainError("cannot parse number '" + s + "'");
    return v;
}

// Reads `r,f,fprime,w,wprime,E`; energy_drop is relative to the first row.
inline Profile<double> read_profile_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line.rfind("r,f,fprime,w,wprime,E", 0) != 0)
        throw DomainError("profile CSV must start with header r,f,fprime,w,wprime,E");
    Profile<double> p;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        const auto f = split(line);
        if (f.size() < 6)
            throw DomainError("short profile row: " + line);
        Sample<double> s{parse_num(f[0]), parse_num(f[1]), parse_num(f[2]), parse_num(f[3]),
                         parse_num(f[4]), parse_num(f[5]), 0, std::nan("")};
        if (!p.samples.empty() && !(s.r > p.samples.back().r))
            throw DomainError("profile radii must increase strictly");
        s.energy_drop = p.samples.empty() ? 0 : s.E - p.samples.front().E;
        p.samples.push_back(s);
    }
    if (p.samples.empty())
        throw DomainError("profile CSV has no rows");
    p.a = p.samples.front().f;
    p.r_end = p.samples.back().r;
    p.termination = p.samples.back().f <= 0 ? Termination::FHitZero : Termination::HorizonReached;
    return p;
}

inline void apply_meta(Profile<double>& p, const json& m)
{
    p.termination = termination_from_string(m.at("termination").get<std::string>());
    auto get = [&](const char* k) -> std::optional<double> {
        if (!m.contains(k) || m[k].is_null())
            return std::nullopt;
        return m[k].get<double>();
    };
    p.R = get("R");
    p.R1 = get("R1");
    p.r_cross = get("r_cross");
    if (m.contains("settings"))
        p.settings = settings_from_json(m["settings"]);
}

template <class Real>
void write_sweep_csv(std::ostream& os, const std::vector<SweepItem<Real>>& items)
{
    os << "a,label,R,R1,r_cross,w_at_horizon\n";
    for (const auto& it : items) {
        os << num(it.a) << ',';
        if (!it.label) {
            os << "error,,,,\n";
            continue;
        }
        const auto& l = *it.label;
        os << label_name<Real>(l) << ',';
        if (auto* a = std::get_if<InA<Real>>(&l))
            os << num(a->R) << ',' << (a->R1 ? num(*a->R1) : "") << ",,\n";
        else if (auto* c = std::get_if<InC<Real>>(&l))
            os << ",," << num(c->r_cross) << ",\n";
        else
            os << ",,," << num(std::get<Undetermined<Real>>(l).w_at_horizon) << '\n';
    }
}

template <class Real>
json label_json(const ClassLabel<Real>& l)
{
    json j{{"label", label_name<Real>(l)}};
    if (auto* a = std::get_if<InA<Real>>(&l)) {
        j["R"] = double(a->R);
        j["R1"] = opt(a->R1);
    } else if (auto* c = std::get_if<InC<Real>>(&l)) {
        j["r_cross"] = double(c->r_cross);
    } else {
        const auto& u = std::get<Undetermined<Real>>(l);
        j["w_at_horizon"] = double(u.w_at_horizon);
        j["wprime_at_horizon"] = double(u.wprime_at_horizon);
    }
    return j;
}

template <class Real>
json bracket_json(const Bracket<Real>& b, const IntegratorSettings& st, const DerivedConstants<Real>& c)
{
    json trail = json::array();
    for (const auto& t : b.trail)
        trail.push_back({double(t.a_lo), double(t.a_hi)});
    const auto& mp = b.midpoint_profile;
    return {{"schema_version", schema_version},
            {"a_lo", double(b.a_lo)},
            {"a_hi", double(b.a_hi)},
            {"iterations", b.iterations},
            {"retries", b.retries},
            {"heuristic_decisions", b.heuristic_decisions},
            {"midpoint", {{"a", double(mp.a)},
                          {"termination", to_string(mp.termination)},
                          {"r_end", double(mp.r_end)},
                          {"w_at_end", double(mp.samples.back().w)}}},
            {"trail", trail},
            {"settings", to_json(st)},
            {"derived_constants", to_json(c)}};
}

template <class Real>
void write_variational_csv(std::ostream& os, const VariationalProfile<Real>& vp, const LinearizedReport<Real>& lr,
                           const DerivedConstants<Real>& c)
{
    os << "r,fa,fa_prime,wa,mono_gap,La_wa,La_rwprime\n";
    std::size_t j = 0;
    for (const auto& v : vp.samples) {
        const Real gap = c.mu * std::pow(v.r, c.mu) * v.phi;
        os << num(v.r) << ',' << num(v.fa) << ',' << num(v.fa_prime) << ',' << num(v.wa) << ',' << num(gap) << ',';
        while (j < lr.points.size() && lr.points[j].r < v.r)
            ++j;
        if (j < lr.points.size() && lr.points[j].r == v.r)
            os << num(lr.points[j].La_wa) << ',' << num(lr.points[j].La_rwp) << '\n';
        else
            os << ",\n";
    }
}

} // namespace vss::io
