#pragma once

#include "bjet/experiments.hpp"
#include "bjet/identity_suite.hpp"
#include "bjet/kernel_expr.hpp"
#include "bjet/report.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace bjet::cli {

using report::json;

enum ExitCode : int { kPass = 0, kFail = 1, kUsage = 2 };

// ---------------------------------------------------------------------------
// verify-model report

inline json checks_to_json(const std::vector<suite::IdentityCheck>& v, const suite::SuiteConfig& c)
{
    json j;
    j["version"] = report::kVersion;
    j["command"] = "verify-model";
    j["config"] = {{"n_max", c.n_max},         {"k_max", c.k_max},         {"seed", c.seed},
                   {"oracle_samples", c.oracle_samples}, {"oracle_degree", c.oracle_degree},
                   {"oracle_trials", c.oracle_trials},   {"oracle_tol", c.oracle_tol},
                   {"fock_cutoff", c.fock_cutoff}};
    json a = json::array();
    for (auto& x : v)
        a.push_back({{"group", x.group}, {"identity", x.name}, {"passed", x.passed}, {"max_error", x.max_error},
                     {"cases", x.cases}, {"detail", x.detail}});
    j["identities"] = a;
    j["passed"] = suite::all_passed(v);
    return j;
}

inline std::string checks_to_csv(const std::vector<suite::IdentityCheck>& v, const suite::SuiteConfig& c)
{
    std::string s = "# " + std::string(report::kVersion) + " verify-model\n";
    s += "# config " + checks_to_json({}, c)["config"].dump() + "\n";
    s += "group,identity,passed,max_error,cases,detail\n";
    for (auto& x : v)
        s += report::csv_field(x.group) + "," + report::csv_field(x.name) + "," + (x.passed ? "1" : "0") + "," +
             report::format_number(x.max_error) + "," + std::to_string(x.cases) + "," + report::csv_field(x.detail) + "\n";
    return s;
}

inline std::string check_line(const suite::IdentityCheck& x)
{
    std::string s = std::string(x.passed ? "PASS" : "FAIL") + " [" + x.group + "] " + x.name + "  max_error " +
                    report::format_number(x.max_error) + "  cases " + std::to_string(x.cases);
    if (!x.passed && !x.detail.empty()) s += "  first failure: " + x.detail;
    return s;
}

/** Every identity the suite knows, restricted to the requested dimensions; empty groups are dropped. */
inline std::vector<suite::IdentityCheck> run_suite(const suite::SuiteConfig& c, const suite::ComposeFn& fn = suite::default_compose())
{
    std::vector<suite::IdentityCheck> all;
    for (auto part : {suite::symbolic_identities(c, fn), suite::oracle_equivalence(c, fn), suite::fock_ladder(c)})
        for (auto& x : part)
            if (x.cases > 0) all.push_back(x);
    return all;
}

// ---------------------------------------------------------------------------

inline void write_file(const std::string& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw experiments::UsageError("cannot write " + path);
    f << text;
}

/** `--out PREFIX` writes PREFIX.csv and PREFIX.json; without it the chosen format goes to stdout. */
inline void emit(const std::string& out, const std::string& format, const std::string& csv, const json& j, std::ostream& os)
{
    if (!out.empty()) {
        write_file(out + ".csv", csv);
        write_file(out + ".json", j.dump(2) + "\n");
        return;
    }
    os << (format == "json" ? j.dump(2) + "\n" : csv);
}

/**
 * Entry point shared by the executable and the tests. Criterion and identity lines go to `os`
 * when reports are written to files, otherwise to `es` so stdout stays machine-readable.
 */
inline int run(int argc, const char* const* argv, std::ostream& os, std::ostream& es, const suite::ComposeFn& fn = suite::default_compose())
{
    CLI::App app{"Bergman kernel jet laboratory on Bargmann-Fock models and CP^n", "bjet"};
    app.set_config("--config", "", "TOML/INI config file; command-line flags override it");
    app.set_version_flag("--version", report::kVersion);
    app.require_subcommand(1);

    std::string out, format = "csv";
    auto add_io = [&](CLI::App* s) {
        s->add_option("--out", out, "output prefix; writes PREFIX.csv and PREFIX.json");
        s->add_option("--format", format, "stdout format when --out is absent")->check(CLI::IsMember({"csv", "json"}));
    };

    // verify-model
    suite::SuiteConfig sc;
    std::optional<unsigned> vseed;
    auto* verify = app.add_subcommand("verify-model", "run the model identity suite");
    verify->add_option("--n", sc.n_max, "largest model dimension")->check(CLI::Range(1, 3));
    verify->add_option("--k", sc.k_max, "largest jet order")->check(CLI::Range(0, 3));
    verify->add_option("--seed", vseed, "random seed for the randomized checks")->required();
    verify->add_option("--samples", sc.oracle_samples, "oracle point pairs per trial")->check(CLI::Range(1, 1000));
    verify->add_option("--oracle-tol", sc.oracle_tol, "oracle agreement tolerance")->check(CLI::PositiveNumber);
    add_io(verify);

    // compose
    std::vector<std::string> exprs;
    auto* compose = app.add_subcommand("compose", "compose kernels written as (amplitude|TAG) ∘ (amplitude|TAG) ...");
    compose->add_option("expression", exprs, "kernel expressions")->required();

    // experiment
    std::string name;
    experiments::RunConfig rc;
    std::string p_range;
    auto* exp = app.add_subcommand("experiment", "run a projective experiment");
    exp->add_option("name", name, "experiment")->required()->check(CLI::IsMember(experiments::experiment_names()));
    exp->add_option("--n", rc.n, "projective dimension (isometry)");
    exp->add_option("--m", rc.m, "submanifold dimension (isometry)");
    exp->add_option("--k", rc.k, "jet order");
    exp->add_option("--p", p_range, "p-range a..b or a..b:step");
    exp->add_option("--y-kind", rc.y_kind, "point, linear or conic (isometry)");
    exp->add_option("--eps", rc.eps, "profile chart radius")->check(CLI::PositiveNumber);
    exp->add_option("--radius", rc.radius, "profile radius in sqrt(p)-rescaled units")->check(CLI::PositiveNumber);
    exp->add_option("--distance", rc.distance, "distance from Y (logbk-decay)")->check(CLI::PositiveNumber);
    exp->add_option("--seed", rc.seed, "seed (echoed; experiments are deterministic)");
    exp->add_option("--threads", rc.threads, "worker threads, 0 for hardware concurrency");
    add_io(exp);

    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        os << app.help();
        return kPass;
    } catch (const CLI::CallForAllHelp&) {
        os << app.help("", CLI::AppFormatMode::All);
        return kPass;
    } catch (const CLI::CallForVersion&) {
        os << report::kVersion << "\n";
        return kPass;
    } catch (const CLI::ParseError& e) {
        es << "usage error: " << e.what() << "\n";
        return kUsage;
    }

    try {
        if (*verify) {
            sc.seed = *vseed;
            auto checks = run_suite(sc, fn);
            std::ostream& lines = out.empty() ? es : os;
            for (auto& x : checks) lines << check_line(x) << "\n";
            emit(out, format, checks_to_csv(checks, sc), checks_to_json(checks, sc), os);
            bool ok = suite::all_passed(checks);
            lines << (ok ? "ALL IDENTITIES PASS" : "IDENTITY FAILURE") << "\n";
            return ok ? kPass : kFail;
        }
        if (*compose) {
            std::vector<std::string> printed;
            for (auto& e : exprs) printed.push_back(compose_expression(e).pretty());
            for (auto& s : printed) os << s << "\n";
            return kPass;
        }
        // experiment: per-experiment defaults, then whatever was given explicitly
        experiments::RunConfig c = experiments::defaults_for(name);
        auto given = [&](const char* flag) { return exp->count(flag) > 0; };
        if (given("--n")) c.n = rc.n;
        if (given("--m")) c.m = rc.m;
        if (given("--k")) c.k = rc.k;
        if (given("--y-kind")) c.y_kind = rc.y_kind;
        if (given("--eps")) c.eps = rc.eps;
        if (given("--radius")) c.radius = rc.radius;
        if (given("--distance")) c.distance = rc.distance;
        if (given("--seed")) c.seed = rc.seed;
        c.threads = rc.threads;
        if (given("--p")) experiments::parse_p_range(p_range, c);
        if (name != "isometry" && (given("--n") || given("--m") || given("--y-kind")))
            throw experiments::UsageError("--n, --m and --y-kind only apply to the isometry experiment");
        report::Report r = experiments::run_experiment(c);
        std::ostream& lines = out.empty() ? es : os;
        emit(out, format, report::to_csv(r), report::to_json(r), os);
        for (auto& cr : r.criteria) lines << report::criterion_line(cr) << "\n";
        return r.passed() ? kPass : kFail;
    } catch (const experiments::UsageError& e) {
        es << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const ParseError& e) {
        es << "parse error: " << e.what() << "\n";
        return kUsage;
    } catch (const CompositionError& e) {
        es << "composition error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        es << "error: " << e.what() << "\n";
        return kFail;
    }
}

} // namespace bjet::cli
