#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <vss/asymptotics.hpp>
#include <vss/classifier.hpp>
#include <vss/io.hpp>
#include <vss/params.hpp>
#include <vss/shooter.hpp>
#include <vss/svg.hpp>
#include <vss/variational.hpp>
#include <vss/verify.hpp>

namespace fs = std::filesystem;
using vss::io::json;

namespace {

constexpr const char* tool_version = "1.0.0";

enum Exit { ok = 0, check_failed = 1, invalid_config = 2, solver_failure = 3, usage = 64 };

struct Globals {
    vss::ExponentConfig cfg;
    std::string config_file;
    vss::IntegratorSettings st;
    std::string out_dir = ".";
    unsigned jobs = 1;
    bool extended = false;
    bool json_out = false;
    std::vector<std::string> argv;
};

struct Outputs {
    Globals* g;
    std::string command;
    std::vector<fs::path> files;

    fs::path path(const std::string& name) const
    {
        const fs::path p(name);
        return p.is_absolute() ? p : fs::path(g->out_dir) / p;
    }

    void write(const std::string& name, const std::string& content)
    {
        const auto p = path(name);
        if (p.has_parent_path())
            fs::create_directories(p.parent_path());
        std::ofstream os(p, std::ios::binary);
        if (!os)
            throw std::runtime_error("cannot write " + p.string());
        os << content;
        files.push_back(p);
    }
};

std::string sha256_file(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    const std::string data = ss.str();
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
    std::string hex;
    char buf[3];
    for (unsigned i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        hex += buf;
    }
    return hex;
}

std::string timestamp()
{
    std::time_t t = std::time(nullptr);
    if (const char* e = std::getenv("SOURCE_DATE_EPOCH"))
        t = static_cast<std::time_t>(std::strtoll(e, nullptr, 10));
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

void write_manifest(Outputs& out)
{
    json files = json::array();
    for (const auto& f : out.files)
        files.push_back({{"path", f.string()}, {"sha256", sha256_file(f)}, {"bytes", fs::file_size(f)}});
    json m{{"schema_version", vss::io::schema_version},
           {"config", vss::io::to_json(out.g->cfg)},
           {"settings", vss::io::to_json(out.g->st)},
           {"extended_precision", out.g->extended},
           {"command", {{"subcommand", out.command}, {"argv", out.g->argv}}},
           {"timestamp", timestamp()},
           {"tool_version", tool_version},
           {"outputs", files}};
    const auto p = out.path("manifest.json");
    std::ofstream os(p, std::ios::binary);
    os << m.dump(2) << '\n';
}

std::string g6(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::vector<double> parse_grid(const std::string& spec)
{
    const auto parts = vss::io::split(spec, ':');
    std::vector<double> a;
    if (parts.size() == 4 && (parts[0] == "log" || parts[0] == "lin")) {
        const double lo = vss::io::parse_num(parts[1]), hi = vss::io::parse_num(parts[2]);
        const int n = std::stoi(parts[3]);
        if (n < 1 || !(lo > 0) || !(hi >= lo))
            throw CLI::ValidationError("--grid", "need 0 < lo <= hi and n >= 1");
        for (int i = 0; i < n; ++i) {
            const double t = n == 1 ? 0.0 : double(i) / (n - 1);
            a.push_back(parts[0] == "log" ? std::pow(10.0, std::log10(lo) + t * (std::log10(hi) - std::log10(lo)))
                                          : lo + t * (hi - lo));
        }
        return a;
    }
    if (parts.size() == 2 && parts[0] == "list") {
        for (const auto& s : vss::io::split(parts[1], ','))
            a.push_back(vss::io::parse_num(s));
        return a;
    }
    throw CLI::ValidationError("--grid", "expected log:lo:hi:n, lin:lo:hi:n or list:a,b,...");
}

template <class Real>
struct Runner {
    Globals& g;
    vss::DerivedConstants<Real> c;

    explicit Runner(Globals& gl) : g(gl), c(vss::validate<Real>(gl.cfg)) {}

    int solve(double a, bool tail, const std::string& name)
    {
        auto st = g.st;
        if (tail)
            st.stop_at_plateau = false;
        const auto prof = vss::integrate(Real(a), st, c);
        Outputs out{&g, "solve"};
        std::ostringstream csv, svg;
        vss::io::write_profile_csv(csv, prof);
        out.write(name + ".csv", csv.str());
        auto meta = vss::io::profile_meta(prof);
        meta["config"] = vss::io::to_json(g.cfg);
        meta["derived_constants"] = vss::io::to_json(c);
        out.write(name + ".meta.json", meta.dump(2) + "\n");
        vss::write_profile_svg(svg, prof, double(c.w_star));
        out.write(name + ".svg", svg.str());
        write_manifest(out);
        if (g.json_out)
            std::cout << meta.dump(2) << '\n';
        else
            std::cout << "a = " << g6(a) << ": " << vss::to_string(prof.termination) << " at r = " << g6(double(prof.r_end))
                      << ", " << prof.samples.size() << " samples\n";
        return ok;
    }

    int classify(double a)
    {
        const auto l = vss::classify(Real(a), g.st, c);
        auto j = vss::io::label_json(l);
        j["a"] = a;
        if (g.json_out)
            std::cout << j.dump(2) << '\n';
        else
            std::cout << "a = " << g6(a) << ": " << vss::label_name<Real>(l) << '\n';
        return ok;
    }

    int sweep(const std::string& grid, const std::string& name)
    {
        const auto av = parse_grid(grid);
        std::vector<Real> a(av.begin(), av.end());
        const auto items = vss::sweep(a, g.st, c, g.jobs);
        Outputs out{&g, "sweep"};
        std::ostringstream csv;
        vss::io::write_sweep_csv(csv, items);
        out.write(name, csv.str());
        write_manifest(out);
        if (g.json_out) {
            json arr = json::array();
            for (const auto& it : items) {
                json j = it.label ? vss::io::label_json(*it.label) : json{{"label", "error"}, {"error", it.error}};
                j["a"] = double(it.a);
                arr.push_back(j);
            }
            std::cout << arr.dump(2) << '\n';
        } else {
            std::string pattern;
            for (const auto& it : items)
                pattern += it.label ? vss::label_name<Real>(*it.label) : "!";
            std::cout << pattern << '\n';
        }
        return ok;
    }

    int bisect(double width, std::optional<double> lo, std::optional<double> hi, const std::string& name)
    {
        Real a_A, a_C;
        if (lo && hi) {
            a_A = *lo;
            a_C = *hi;
            if (!std::holds_alternative<vss::InA<Real>>(vss::classify(a_A, g.st, c)) ||
                !std::holds_alternative<vss::InC<Real>>(vss::classify(a_C, g.st, c)))
                throw vss::DomainError("--a-lo must classify as A and --a-hi as C");
        } else {
            const auto s = vss::seed_bracket(g.st, c);
            a_A = s.a_A;
            a_C = s.a_C;
        }
        const auto b = vss::bisect(a_A, a_C, Real(width), g.st, c);
        const auto j = vss::io::bracket_json(b, g.st, c);
        Outputs out{&g, "bisect"};
        out.write(name, j.dump(2) + "\n");
        write_manifest(out);
        if (g.json_out)
            std::cout << j.dump(2) << '\n';
        else
            std::cout << "a* in [" << vss::io::num(double(b.a_lo)) << ", " << vss::io::num(double(b.a_hi)) << "] after "
                      << b.iterations << " iterations\n";
        return ok;
    }

    int variational(double a, const std::string& name)
    {
        const auto prof = vss::integrate(Real(a), g.st, c);
        const auto vp = vss::integrate_variational(prof, g.st, c);
        const auto lr = vss::linearized_residual(vp, c, Real(0));
        const auto mono = vss::monotonicity_check(prof, vp, c);
        Outputs out{&g, "variational"};
        std::ostringstream csv;
        vss::io::write_variational_csv(csv, vp, lr, c);
        out.write(name, csv.str());
        write_manifest(out);
        json j{{"a", a},
               {"monotonicity_holds", mono.holds},
               {"checked_samples", mono.checked},
               {"interval_end", double(mono.interval_end)},
               {"max_La_wa_residual", double(lr.max_wa_residual)},
               {"max_closed_form_deviation", double(lr.max_closed_form_dev)},
               {"La_rwprime_negative", lr.rwp_negative}};
        if (g.json_out)
            std::cout << j.dump(2) << '\n';
        else
            std::cout << "monotonicity " << (mono.holds ? "holds" : "violated") << " on " << mono.checked
                      << " samples; |L_a(w_a)| <= " << g6(double(lr.max_wa_residual)) << "; L_a(rw') closed-form dev "
                      << g6(double(lr.max_closed_form_dev)) << '\n';
        return ok;
    }

    int verify(const std::string& name)
    {
        const auto rep = vss::run_verification<Real>(g.cfg, g.st);
        json checks = json::array();
        for (const auto& ch : rep.checks)
            checks.push_back({{"name", ch.name},
                              {"property", ch.property},
                              {"status", ch.passed ? "pass" : "fail"},
                              {"measured", ch.measured},
                              {"tolerance", ch.tolerance},
                              {"detail", ch.detail}});
        json j{{"schema_version", vss::io::schema_version},
               {"config", vss::io::to_json(g.cfg)},
               {"derived_constants", vss::io::to_json(c)},
               {"settings", vss::io::to_json(g.st)},
               {"checks", checks},
               {"status", rep.passed() ? "pass" : "fail"}};
        if (!name.empty()) {
            Outputs out{&g, "verify"};
            out.write(name, j.dump(2) + "\n");
            write_manifest(out);
        }
        if (g.json_out) {
            std::cout << j.dump(2) << '\n';
        } else {
            for (const auto& ch : rep.checks) {
                char line[160];
                std::snprintf(line, sizeof line, "%-26s %-4s measured %-12s tolerance %-10s ", ch.name.c_str(),
                              ch.passed ? "pass" : "FAIL", g6(ch.measured).c_str(), g6(ch.tolerance).c_str());
                std::cout << line << ch.detail << '\n';
            }
            std::cout << "overall: " << (rep.passed() ? "pass" : "FAIL") << '\n';
        }
        return rep.passed() ? ok : check_failed;
    }
};

int tails(Globals& g, const std::string& in, std::string meta_path, const std::string& name)
{
    const auto c = vss::validate<double>(g.cfg);
    std::ifstream is(in);
    if (!is)
        throw vss::DomainError("cannot open " + in);
    auto prof = vss::io::read_profile_csv(is);
    if (meta_path.empty()) {
        fs::path p(in);
        meta_path = (p.parent_path() / p.stem()).string() + ".meta.json";
    }
    if (fs::exists(meta_path)) {
        std::ifstream ms(meta_path);
        vss::io::apply_meta(prof, json::parse(ms));
    }

    json j{{"schema_version", vss::io::schema_version}, {"input", in}};
    const auto plateau = vss::plateau_window(prof, c.w_star);
    const bool critical = plateau && plateau->decades() >= 1;
    const auto win = critical ? *plateau : vss::default_tail_window(prof);
    const auto tf = vss::fit_tail(prof, win, c);
    j["exponent"] = tf.exponent;
    j["amplitude"] = tf.amplitude;
    j["window"] = {tf.window.r_min, tf.window.r_max};
    j["residual"] = tf.residual;
    j["kind"] = vss::to_string(tf.kind);
    j["lambda"] = nullptr;
    j["k"] = nullptr;
    j["critical"] = nullptr;
    if (critical) {
        const auto cr = vss::critical_asymptotics(prof, c, plateau);
        j["critical"] = {{"max_rwprime", cr.max_rwprime},
                         {"slope_ratio_range", {cr.slope_ratio_min, cr.slope_ratio_max}},
                         {"max_w_deviation", cr.max_w_deviation},
                         {"window", {cr.window.r_min, cr.window.r_max}}};
    } else if (tf.kind == vss::OrbitKind::Slow) {
        const auto L = vss::lambda_diagnostic(prof, c);
        j["lambda"] = {{"limit", L.limit_estimate}, {"rate", L.rate_estimate}, {"residual", L.residual},
                       {"bounds_ok", L.bounds_ok}};
        const auto k = vss::slow_limit_k(prof, c, false);
        j["k"] = {{"value", k.k}, {"oscillation", k.oscillation}, {"converged", k.converged}};
    }
    Outputs out{&g, "tails"};
    out.write(name, j.dump(2) + "\n");
    write_manifest(out);
    if (g.json_out)
        std::cout << j.dump(2) << '\n';
    else
        std::cout << vss::to_string(tf.kind) << " tail: exponent " << g6(tf.exponent) << " on [" << g6(tf.window.r_min)
                  << ", " << g6(tf.window.r_max) << "]\n";
    return ok;
}

template <class F>
int dispatch(Globals& g, F&& f)
{
    if (g.extended) {
        Runner<long double> r(g);
        return f(r);
    }
    Runner<double> r(g);
    return f(r);
}

} // namespace

int main(int argc, char** argv)
{
    Globals g;
    g.argv.assign(argv + 1, argv + argc);
    CLI::App app{"Very singular self-similar profiles of fast diffusion with gradient absorption"};
    app.require_subcommand(1);
    app.fallthrough();

    app.add_option("--N", g.cfg.N, "spatial dimension");
    app.add_option("--p", g.cfg.p, "diffusion exponent");
    app.add_option("--q", g.cfg.q, "absorption exponent");
    app.add_option("--config", g.config_file, "JSON file with keys N, p, q and optional settings");
    app.add_option("--rmax", g.st.R_max, "integration horizon");
    app.add_option("--rtol", g.st.rel_tol, "relative tolerance");
    app.add_option("--atol", g.st.abs_tol, "absolute tolerance");
    app.add_option("--out-dir", g.out_dir, "output directory");
    app.add_option("--jobs", g.jobs, "worker threads for sweep");
    app.add_flag("--extended-precision", g.extended, "use long double arithmetic");
    app.add_flag("--json", g.json_out, "machine-readable stdout");

    double a = 0, width = 1e-9;
    bool tail = false;
    std::optional<double> a_lo, a_hi;
    std::string grid = "log:1e-3:1e3:61", out_name, in_file, meta_file;

    auto* solve = app.add_subcommand("solve", "integrate one profile");
    solve->add_option("--a", a, "shooting parameter f(0)")->required();
    solve->add_flag("--tail", tail, "continue past the w* crossing");
    solve->add_option("--name", out_name, "output file stem (default: profile)");

    auto* classify = app.add_subcommand("classify", "label one shooting parameter A, C or U");
    classify->add_option("--a", a, "shooting parameter")->required();

    auto* sweep = app.add_subcommand("sweep", "classify a grid of shooting parameters");
    sweep->add_option("--grid", grid, "log:lo:hi:n, lin:lo:hi:n or list:a,b,...");
    sweep->add_option("--out", out_name, "CSV file (default: sweep.csv)");

    auto* bisect = app.add_subcommand("bisect", "bracket the critical parameter");
    bisect->add_option("--width", width, "target relative bracket width");
    bisect->add_option("--a-lo", a_lo, "known A member");
    bisect->add_option("--a-hi", a_hi, "known C member");
    bisect->add_option("--out", out_name, "JSON file (default: bracket.json)");

    auto* tails_cmd = app.add_subcommand("tails", "fit tail asymptotics of a stored profile");
    tails_cmd->add_option("--in", in_file, "profile CSV")->required();
    tails_cmd->add_option("--meta", meta_file, "sidecar JSON (default: <stem>.meta.json)");
    tails_cmd->add_option("--out", out_name, "JSON file (default: tails.json)");

    auto* var = app.add_subcommand("variational", "integrate the a-derivative and check monotonicity");
    var->add_option("--a", a, "shooting parameter")->required();
    var->add_option("--out", out_name, "CSV file (default: var.csv)");

    auto* verify = app.add_subcommand("verify", "run every verification check");
    verify->add_option("--out", out_name, "also write the JSON report to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return usage;
    }

    auto pick = [&](const char* def) { return out_name.empty() ? std::string(def) : out_name; };

    try {
        if (!g.config_file.empty()) {
            std::ifstream is(g.config_file);
            if (!is)
                throw vss::DomainError("cannot open " + g.config_file);
            const auto j = json::parse(is);
            g.cfg = vss::io::config_from_json(j);
            if (j.contains("settings"))
                g.st = vss::io::settings_from_json(j["settings"]);
        }
        g.st.check();
        (void)vss::validate<double>(g.cfg);

        if (*solve)
            return dispatch(g, [&](auto& r) { return r.solve(a, tail, pick("profile")); });
        if (*classify)
            return dispatch(g, [&](auto& r) { return r.classify(a); });
        if (*sweep)
            return dispatch(g, [&](auto& r) { return r.sweep(grid, pick("sweep.csv")); });
        if (*bisect)
            return dispatch(g, [&](auto& r) { return r.bisect(width, a_lo, a_hi, pick("bracket.json")); });
        if (*tails_cmd)
            return tails(g, in_file, meta_file, pick("tails.json"));
        if (*var)
            return dispatch(g, [&](auto& r) { return r.variational(a, pick("var.csv")); });
        if (*verify)
            return dispatch(g, [&](auto& r) { return r.verify(out_name); });
    } catch (const vss::WindowViolation& e) {
        std::cerr << "invalid config: " << e.what() << '\n';
        return invalid_config;
    } catch (const json::exception& e) {
        std::cerr << "invalid config file: " << e.what() << '\n';
        return invalid_config;
    } catch (const vss::DomainError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return invalid_config;
    } catch (const std::exception& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return solver_failure;
    }
    return usage;
}
