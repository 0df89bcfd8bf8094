// ftslab command-line front end. Links the C API only; the core lives in
// libftslab. Exit codes: 0 all checks/verdicts passed, 2 violations or
// failed verdicts, 1 operational error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ftslab.h"

namespace {

struct StringGuard {
    char* value = nullptr;
    ~StringGuard() { ftslab_string_free(value); }
};

std::string make_overrides(const std::optional<std::uint64_t>& seed,
                           const std::optional<std::int64_t>& paths) {
    if (!seed && !paths) return {};
    std::string out = "{";
    if (seed) out += "\"seed\": " + std::to_string(*seed);
    if (paths) {
        if (seed) out += ", ";
        out += "\"paths\": " + std::to_string(*paths);
    }
    out += "}";
    return out;
}

int finish_run(ftslab_status status, int exit_code, const char* report, bool json_to_stdout,
               const std::string& report_path, const std::string& ran) {
    if (status != FTSLAB_OK) {
        std::cerr << "error: " << ftslab_last_error() << "\n";
        return 1;
    }
    if (!report_path.empty() && report) {
        std::ofstream os(report_path, std::ios::binary);
        if (!os) {
            std::cerr << "error: cannot write '" << report_path << "'\n";
            return 1;
        }
        os << report << '\n';
    }
    if (json_to_stdout && report) {
        std::cout << report << '\n';
    } else {
        std::cout << ran << ": " << (exit_code == 0 ? "all checks passed" : "violations or failed verdicts")
                  << " (exit " << exit_code << ")\n";
        if (!report_path.empty()) std::cout << "report: " << report_path << '\n';
    }
    return exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string("ftslab ") + ftslab_version() +
                 " - finite-time stability laboratory for stochastic nonlinear systems"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string report_path;
    std::string example_name;
    std::string expr_text;
    bool json_to_stdout = false;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> paths;

    auto* certify = app.add_subcommand("certify", "run the certificate checks of a config");
    certify->add_option("config", config_path, "run config (JSON)")->required();
    certify->add_flag("--json", json_to_stdout, "print the report JSON to stdout");
    certify->add_option("--out", report_path, "write the report JSON to this file");
    certify->add_option("--seed", seed, "override sim.seed");
    certify->add_option("--paths", paths, "override sim.paths");

    auto* simulate = app.add_subcommand("simulate", "simulate the ensemble and estimate verdicts");
    simulate->add_option("config", config_path, "run config (JSON)")->required();
    simulate->add_option("--out", out_dir, "output directory for CSVs and report.json")->required();
    simulate->add_flag("--json", json_to_stdout, "print the report JSON to stdout");
    simulate->add_option("--seed", seed, "override sim.seed");
    simulate->add_option("--paths", paths, "override sim.paths");

    auto* reproduce = app.add_subcommand("reproduce", "run a shipped example end to end");
    reproduce->add_option("name", example_name, "example1|example2|example3|instability1")->required();
    reproduce->add_option("--out", out_dir, "output directory for CSVs and report.json")->required();
    reproduce->add_flag("--json", json_to_stdout, "print the report JSON to stdout");
    reproduce->add_option("--seed", seed, "override sim.seed");
    reproduce->add_option("--paths", paths, "override sim.paths");

    auto* parse_check = app.add_subcommand("parse-check", "parse an expression and print its form");
    parse_check->add_option("expr", expr_text, "expression text")->required();

    CLI11_PARSE(app, argc, argv);

    const std::string overrides = make_overrides(seed, paths);
    const char* overrides_arg = overrides.empty() ? nullptr : overrides.c_str();

    if (certify->parsed()) {
        StringGuard report;
        int exit_code = 0;
        const ftslab_status status =
            ftslab_run_certify(config_path.c_str(), overrides_arg, &report.value, &exit_code);
        return finish_run(status, exit_code, report.value, json_to_stdout, report_path, "certify");
    }
    if (simulate->parsed()) {
        StringGuard report;
        int exit_code = 0;
        const ftslab_status status = ftslab_run_simulate(config_path.c_str(), out_dir.c_str(),
                                                         overrides_arg, &report.value, &exit_code);
        return finish_run(status, exit_code, report.value, json_to_stdout,
                          report_path.empty() ? std::string{} : report_path,
                          "simulate (files in " + out_dir + ")");
    }
    if (reproduce->parsed()) {
        StringGuard report;
        int exit_code = 0;
        const ftslab_status status = ftslab_run_reproduce(example_name.c_str(), out_dir.c_str(),
                                                          overrides_arg, &report.value, &exit_code);
        return finish_run(status, exit_code, report.value, json_to_stdout, {},
                          "reproduce " + example_name + " (files in " + out_dir + ")");
    }
    if (parse_check->parsed()) {
        ftslab_expr* expr = nullptr;
        if (ftslab_expr_parse(expr_text.c_str(), &expr) != FTSLAB_OK) {
            std::cerr << "parse error: " << ftslab_last_error() << "\n";
            return 1;
        }
        StringGuard printed;
        StringGuard variables;
        ftslab_expr_print(expr, &printed.value);
        ftslab_expr_variables(expr, &variables.value);
        std::cout << "ok: " << (printed.value ? printed.value : "") << "\n"
                  << "variables: " << (variables.value && *variables.value ? variables.value : "(none)")
                  << "\n";
        ftslab_expr_free(expr);
        return 0;
    }
    return 1;
}
