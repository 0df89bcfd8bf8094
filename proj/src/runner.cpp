#include "ftslab/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "canonical_configs.hpp"
#include "ftslab/version.hpp"

namespace ftslab {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
}

const ordered_json& need(const ordered_json& j, const std::string& key, const std::string& where) {
    const auto it = j.find(key);
    if (it == j.end()) fail(where, "missing required key '" + key + "'");
    return *it;
}

double need_number(const ordered_json& j, const std::string& key, const std::string& where) {
    const auto& v = need(j, key, where);
    if (!v.is_number()) fail(where + "." + key, "must be a number");
    return v.get<double>();
}

double number_or(const ordered_json& j, const std::string& key, double fallback,
                 const std::string& where) {
    const auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number()) fail(where + "." + key, "must be a number");
    return it->get<double>();
}

std::int64_t integer_or(const ordered_json& j, const std::string& key, std::int64_t fallback,
                        const std::string& where) {
    const auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number_integer()) fail(where + "." + key, "must be an integer");
    return it->get<std::int64_t>();
}

std::string need_string(const ordered_json& j, const std::string& key, const std::string& where) {
    const auto& v = need(j, key, where);
    if (!v.is_string()) fail(where + "." + key, "must be a string");
    return v.get<std::string>();
}

Expression parse_expr(const std::string& text, const std::string& where) {
    try {
        return Expression::parse(text);
    } catch (const ParseError& e) {
        fail(where, std::string("expression error: ") + e.what());
    }
}

PowerClassK parse_class_k(const ordered_json& j, const std::string& where) {
    PowerClassK k;
    k.a = need_number(j, "a", where);
    k.p = need_number(j, "p", where);
    try {
        k.validate();
    } catch (const std::exception& e) {
        fail(where, e.what());
    }
    return k;
}

SdeSystem parse_system(const ordered_json& j) {
    try {
        if (j.contains("builtin")) {
            std::map<std::string, double> params;
            if (j.contains("params"))
                for (const auto& [key, value] : j.at("params").items()) {
                    if (!value.is_number()) fail("system.params." + key, "must be a number");
                    params[key] = value.get<double>();
                }
            return builtin_system(j.at("builtin").get<std::string>(), params);
        }
        if (j.contains("custom")) {
            const auto& c = j.at("custom");
            SdeSystem sys;
            sys.name = c.contains("name") ? c.at("name").get<std::string>() : "custom";
            sys.dim = static_cast<int>(integer_or(c, "dim", 0, "system.custom"));
            sys.noise_dim = static_cast<int>(integer_or(c, "noise_dim", 0, "system.custom"));
            for (const auto& e : need(c, "drift", "system.custom"))
                sys.drift.push_back(parse_expr(e.get<std::string>(), "system.custom.drift"));
            for (const auto& row : need(c, "diffusion", "system.custom")) {
                std::vector<Expression> out_row;
                for (const auto& e : row)
                    out_row.push_back(parse_expr(e.get<std::string>(), "system.custom.diffusion"));
                sys.diffusion.push_back(std::move(out_row));
            }
            sys.assumed_unique = c.contains("assumed_unique") && c.at("assumed_unique").get<bool>();
            sys.validate();
            return sys;
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        fail("system", e.what());
    }
    fail("system", "need either 'builtin' or 'custom'");
}

std::string format_hex(std::uint64_t value) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::string config_hash(const ordered_json& doc) {
    const std::string text = doc.dump();
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return "fnv1a64:" + format_hex(h);
}

double norm2(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

ordered_json violation_json(const ViolationReport& r) {
    return ordered_json{{"n_samples", r.n_samples},
                        {"n_violations", r.n_violations},
                        {"worst", r.worst},
                        {"worst_t", r.worst_t},
                        {"worst_x", r.worst_x},
                        {"tolerance", r.tolerance},
                        {"passed", r.passed()}};
}

ordered_json certificate_json(const UasfCertificate& cert) {
    return ordered_json{{"mu", cert.mu_text},
                        {"c", cert.c},
                        {"d", cert.d},
                        {"t0", cert.t0},
                        {"horizon", cert.horizon},
                        {"n_grid", cert.n_grid},
                        {"max_residual", cert.max_residual},
                        {"residual_tolerance", 1e-6},
                        {"verified", cert.verified},
                        {"fitted", cert.fitted},
                        {"fit_failed", cert.fit_failed}};
}

struct PipelineTally {
    bool all_passed = true;
    std::int64_t violations = 0;
    std::vector<std::string> failures;

    void check(bool ok, const std::string& what, std::int64_t n_violations = 0) {
        violations += n_violations;
        if (!ok) {
            all_passed = false;
            failures.push_back(what);
        }
    }
};

void run_check(const RunConfig& cfg, const CheckRequest& request, ordered_json& entry,
               PipelineTally& tally) {
    if (request.name == "envelope") {
        const auto r = check_envelope(*cfg.lyapunov, *cfg.gamma_low, *cfg.gamma_high, cfg.sample,
                                      cfg.system.dim);
        entry.update(violation_json(r));
        tally.check(r.passed(), "envelope", r.n_violations);
    } else if (request.name == "fts") {
        const auto r = check_fts_condition(cfg.system, *cfg.lyapunov, *cfg.mu, cfg.sample);
        entry.update(violation_json(r));
        tally.check(r.passed(), "fts", r.n_violations);
    } else if (request.name == "instability") {
        const auto r = check_instability_conditions(cfg.system, *cfg.lyapunov, *cfg.mu,
                                                    cfg.instability->a,
                                                    cfg.instability->a_integral_bound, cfg.sample);
        entry["equality"] = violation_json(r.equality);
        entry["noise_bound"] = violation_json(r.noise_bound);
        entry["a_integral"] = r.a_integral;
        entry["a_integral_bound"] = r.a_integral_bound;
        entry["integral_within_bound"] = r.integral_within_bound;
        entry["passed"] = r.passed();
        tally.check(r.passed(), "instability",
                    r.equality.n_violations + r.noise_bound.n_violations +
                        (r.integral_within_bound ? 0 : 1));
    } else if (request.name == "linear_growth") {
        const auto r = check_linear_growth(cfg.system, cfg.sample, request.declared_H);
        entry["estimated_H"] = r.estimated_H;
        if (r.declared_H)
            entry["declared_H"] = *r.declared_H;
        else
            entry["declared_H"] = nullptr;
        entry.update(violation_json(r.report));
        tally.check(r.report.passed(), "linear_growth", r.report.n_violations);
    } else if (request.name == "lemma23") {
        const auto r = check_lemma23(cfg.system, *cfg.lyapunov, request.lemma23_l,
                                     request.lemma23_d_u, *cfg.gamma_low, cfg.sample);
        entry.update(violation_json(r));
        tally.check(r.passed(), "lemma23", r.n_violations);
    }
}

RunResult run_pipeline(ordered_json doc, const RunOverrides& overrides, bool do_checks,
                       bool do_simulate, const std::string& out_dir) {
    if (overrides.seed && doc.contains("sim")) doc["sim"]["seed"] = *overrides.seed;
    if (overrides.paths && doc.contains("sim")) doc["sim"]["paths"] = *overrides.paths;

    RunConfig cfg = load_config(doc);
    PipelineTally tally;

    ordered_json report;
    report["tool"] = ordered_json{{"name", "ftslab"}, {"version", kVersion}};
    report["config"] = doc;
    report["config_hash"] = config_hash(doc);

    const double t0 = cfg.sim ? cfg.sim->t0 : 0.0;
    double certify_ms = 0.0;
    double simulate_ms = 0.0;

    // Certificate stage.
    const auto certify_start = Clock::now();
    std::optional<UasfCertificate> cert;
    if (cfg.mu && cfg.uasf) {
        cert = cfg.uasf->fit
                   ? fit_uasf(*cfg.mu, t0, cfg.uasf->horizon, cfg.uasf->n_grid)
                   : verify_uasf(*cfg.mu, cfg.uasf->c, cfg.uasf->d, t0, cfg.uasf->horizon,
                                 cfg.uasf->n_grid);
        report["certificate"] = certificate_json(*cert);
        tally.check(cert->verified, "uasf_certificate");
    }

    if (do_checks) {
        ordered_json checks = ordered_json::array();
        for (const auto& request : cfg.checks) {
            ordered_json entry;
            entry["name"] = request.name;
            try {
                run_check(cfg, request, entry, tally);
            } catch (const EvalError& e) {
                // Check errors yield a partial report instead of aborting the run.
                entry["error"] = e.what();
                entry["passed"] = false;
                tally.check(false, request.name + " (evaluation error)");
            }
            checks.push_back(std::move(entry));
        }
        report["checks"] = std::move(checks);
    }

    // Closed-form conclusions.
    ordered_json bounds;
    std::optional<double> bound;
    if (cert && cert->verified && cfg.lyapunov && cfg.gamma_high && !cfg.x0.empty()) {
        bound = settling_bound(*cert, cfg.lyapunov->kappa, *cfg.gamma_high, norm2(cfg.x0), t0);
        bounds["settling_bound"] = *bound;
        bounds["kappa"] = cfg.lyapunov->kappa;
        bounds["x0_norm"] = norm2(cfg.x0);
    }
    if (cert && cert->verified && cfg.delta && cfg.lyapunov && cfg.gamma_low && cfg.gamma_high) {
        const auto delta = stability_delta(cfg.delta->first, cfg.delta->second,
                                           cfg.lyapunov->kappa, *cfg.gamma_low, *cfg.gamma_high,
                                           cert->d);
        ordered_json dj;
        dj["epsilon"] = cfg.delta->first;
        dj["R"] = cfg.delta->second;
        if (delta)
            dj["delta"] = *delta;
        else
            dj["delta"] = nullptr;  // vacuous for this (epsilon, R, d)
        bounds["stability_delta"] = std::move(dj);
    }
    if (!bounds.empty()) report["bounds"] = std::move(bounds);
    certify_ms = elapsed_ms(certify_start);

    std::vector<std::string> notes;
    notes.push_back("sampling-based certificate checks are statistical evidence, not proof");

    std::optional<TrajectoryEnsemble> ensemble;
    if (do_simulate) {
        const auto sim_start = Clock::now();
        if (!cfg.sim) fail("sim", "section required for simulation runs");
        SimConfig sim_cfg = *cfg.sim;
        if (cfg.instability && sim_cfg.record_stride != 1) {
            sim_cfg.record_stride = 1;  // min-norm fidelity for non-attraction estimates
            notes.push_back("record_stride forced to 1 for the instability run");
        }

        ensemble = simulate_ensemble(cfg.system, cfg.x0, sim_cfg);
        const SettlingStats stats = settling_statistics(*ensemble);

        ordered_json sim_json;
        sim_json["stats"] = ordered_json{{"n", stats.n},
                                         {"absorbed_count", stats.absorbed_count},
                                         {"fraction_absorbed", stats.fraction_absorbed},
                                         {"mean", stats.absorbed_count ? ordered_json(stats.mean)
                                                                       : ordered_json(nullptr)},
                                         {"stderr", stats.stderr_},
                                         {"max", stats.max},
                                         {"absorption_radius", stats.absorption_radius},
                                         {"blowup_count", stats.blowup_count}};

        const double blowup_fraction =
            static_cast<double>(stats.blowup_count) / static_cast<double>(stats.n);
        sim_json["blowup_fraction"] = blowup_fraction;
        tally.check(blowup_fraction <= 0.10, "blowup_fraction");

        if (bound && !cfg.instability) {
            const BoundCheck bc = bound_check(stats, *bound);
            sim_json["bound_check"] = ordered_json{{"verdict", to_string(bc.verdict)},
                                                   {"bound", bc.bound},
                                                   {"mean_plus_3se", bc.mean_plus_3se},
                                                   {"fraction_absorbed", bc.fraction_absorbed}};
            tally.check(bc.verdict == BoundVerdict::Pass, "bound_check");
            notes.push_back(
                "bound_check policy: PASS iff mean + 3*stderr <= bound and fraction absorbed >= 0.95");
        }

        const double nonatt_eps =
            cfg.estimate.nonattraction_epsilon.value_or(sim_cfg.absorption_radius);
        sim_json["nonattraction"] = ordered_json{
            {"epsilon", nonatt_eps}, {"fraction", nonattraction_fraction(*ensemble, nonatt_eps)}};
        if (cfg.estimate.containment_R) {
            const auto est = containment_probability(*ensemble, *cfg.estimate.containment_R);
            sim_json["containment"] = ordered_json{{"R", *cfg.estimate.containment_R},
                                                   {"estimate", est.estimate},
                                                   {"ci_low", est.ci_low},
                                                   {"ci_high", est.ci_high},
                                                   {"ci_level", 0.95}};
        }
        notes.push_back("absorption radius eps_abs = " + std::to_string(sim_cfg.absorption_radius));
        report["simulation"] = std::move(sim_json);
        simulate_ms = elapsed_ms(sim_start);
    }

    report["verdict"] = ordered_json{{"all_passed", tally.all_passed},
                                     {"violations", tally.violations},
                                     {"failures", tally.failures},
                                     {"notes", notes}};
    report["timing"] = ordered_json{{"certify_ms", certify_ms}, {"simulate_ms", simulate_ms}};

    if (!out_dir.empty() && ensemble) {
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) throw IoError("cannot create output directory '" + out_dir + "': " + ec.message());

        auto open = [&](const char* file) {
            std::ofstream os(fs::path(out_dir) / file, std::ios::binary);
            if (!os) throw IoError(std::string("cannot open '") + file + "' for writing");
            return os;
        };
        {
            auto os = open("trajectories.csv");
            if (cfg.system.gains) {
                const ControllerGains gains = *cfg.system.gains;
                write_trajectories_csv(os, *ensemble, "u",
                                       [gains](double, std::span<const double> x) {
                                           return controller_u(gains, x[1], x[2]);
                                       });
            } else {
                write_trajectories_csv(os, *ensemble);
            }
        }
        {
            auto os = open("summary.csv");
            write_summary_csv(os, *ensemble);
        }
        {
            auto os = open("report.json");
            os << report.dump(2) << '\n';
        }
    }

    return RunResult{std::move(report), tally.all_passed ? 0 : 2};
}

} // namespace

RunConfig load_config(const ordered_json& doc) {
    if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
    RunConfig cfg;
    cfg.echo = doc;
    cfg.system = parse_system(need(doc, "system", "config"));

    if (doc.contains("lyapunov")) {
        const auto& l = doc.at("lyapunov");
        LyapunovSpec spec;
        spec.v = parse_expr(need_string(l, "v", "lyapunov"), "lyapunov.v");
        spec.kappa = number_or(l, "kappa", 0.0, "lyapunov");
        spec.fd_step_rel = number_or(l, "fd_step", 1e-5, "lyapunov");
        spec.fd_step_abs = number_or(l, "fd_step_abs", 1e-7, "lyapunov");
        if (l.contains("grad"))
            for (const auto& e : l.at("grad"))
                spec.grad.push_back(parse_expr(e.get<std::string>(), "lyapunov.grad"));
        if (l.contains("hessian"))
            for (const auto& row : l.at("hessian")) {
                std::vector<Expression> out_row;
                for (const auto& e : row)
                    out_row.push_back(parse_expr(e.get<std::string>(), "lyapunov.hessian"));
                spec.hessian.push_back(std::move(out_row));
            }
        try {
            spec.validate(cfg.system.dim);
        } catch (const std::exception& e) {
            fail("lyapunov", e.what());
        }
        cfg.lyapunov = std::move(spec);
        if (l.contains("gamma_low")) cfg.gamma_low = parse_class_k(l.at("gamma_low"), "lyapunov.gamma_low");
        if (l.contains("gamma_high"))
            cfg.gamma_high = parse_class_k(l.at("gamma_high"), "lyapunov.gamma_high");
    }

    if (doc.contains("mu")) {
        cfg.mu = parse_expr(need_string(doc, "mu", "config"), "mu");
        if (!cfg.mu->is_time_only()) fail("mu", "must depend on t only");
    }

    if (doc.contains("uasf")) {
        const auto& u = doc.at("uasf");
        if (!cfg.mu) fail("uasf", "requires a 'mu' expression");
        UasfRequest request;
        request.fit = u.contains("fit") && u.at("fit").get<bool>();
        request.horizon = number_or(u, "horizon", 100.0, "uasf");
        request.n_grid = integer_or(u, "n_grid", 1000, "uasf");
        if (!request.fit) {
            request.c = need_number(u, "c", "uasf");
            request.d = need_number(u, "d", "uasf");
            if (!(request.c > 0.0)) fail("uasf.c", "must be > 0");
            if (!(request.d >= 0.0)) fail("uasf.d", "must be >= 0");
        }
        if (request.n_grid < 4) fail("uasf.n_grid", "must be >= 4");
        cfg.uasf = request;
    }

    if (doc.contains("instability")) {
        const auto& inst = doc.at("instability");
        InstabilityRequest request;
        request.a = parse_expr(need_string(inst, "a", "instability"), "instability.a");
        if (!request.a.is_time_only()) fail("instability.a", "must depend on t only");
        request.a_integral_bound = need_number(inst, "a_integral_bound", "instability");
        cfg.instability = std::move(request);
    }

    if (doc.contains("sim")) {
        const auto& s = doc.at("sim");
        SimConfig sim;
        sim.dt = need_number(s, "dt", "sim");
        sim.t0 = number_or(s, "t0", 0.0, "sim");
        sim.t_end = need_number(s, "t_end", "sim");
        sim.n_paths = integer_or(s, "paths", 1, "sim");
        sim.master_seed = static_cast<std::uint64_t>(integer_or(s, "seed", 0, "sim"));
        sim.absorption_radius = number_or(s, "absorption_radius", 1e-3, "sim");
        sim.record_stride = integer_or(s, "record_stride", 1, "sim");
        sim.store_paths = integer_or(s, "store_paths", std::min<std::int64_t>(sim.n_paths, 4), "sim");
        try {
            sim.validate();
        } catch (const std::exception& e) {
            fail("sim", e.what());
        }
        const auto& x0 = need(s, "x0", "sim");
        if (!x0.is_array() || x0.empty()) fail("sim.x0", "must be a non-empty array");
        for (const auto& v : x0) cfg.x0.push_back(v.get<double>());
        if (static_cast<int>(cfg.x0.size()) != cfg.system.dim)
            fail("sim.x0", "length must equal the system dimension");
        cfg.sim = sim;
    }

    if (doc.contains("sample")) {
        const auto& s = doc.at("sample");
        cfg.sample.t_min = number_or(s, "t_min", 0.0, "sample");
        cfg.sample.t_max = number_or(s, "t_max", 50.0, "sample");
        cfg.sample.radius_max = number_or(s, "x_max", 2.0, "sample");
        cfg.sample.radius_min = number_or(s, "origin_exclusion_radius", 1e-9, "sample");
        cfg.sample.n_samples = integer_or(s, "n_samples", 10000, "sample");
        cfg.sample.seed = static_cast<std::uint64_t>(integer_or(s, "seed", 0, "sample"));
        try {
            cfg.sample.validate();
        } catch (const std::exception& e) {
            fail("sample", e.what());
        }
    }

    if (doc.contains("checks")) {
        const auto& checks = doc.at("checks");
        if (!checks.is_array()) fail("checks", "must be an array");
        for (const auto& c : checks) {
            CheckRequest request;
            if (c.is_string()) {
                request.name = c.get<std::string>();
            } else if (c.is_object()) {
                request.name = need_string(c, "name", "checks[]");
                if (c.contains("H")) request.declared_H = c.at("H").get<double>();
                if (request.name == "lemma23") {
                    request.lemma23_l = parse_expr(need_string(c, "l", "checks.lemma23"),
                                                   "checks.lemma23.l");
                    request.lemma23_d_u = need_number(c, "d_U", "checks.lemma23");
                    if (!(request.lemma23_d_u >= 0.0)) fail("checks.lemma23.d_U", "must be >= 0");
                    if (!request.lemma23_l.is_time_only())
                        fail("checks.lemma23.l", "must depend on t only");
                }
            } else {
                fail("checks[]", "entries must be strings or objects");
            }

            if (request.name == "envelope") {
                if (!cfg.lyapunov || !cfg.gamma_low || !cfg.gamma_high)
                    fail("checks.envelope", "requires lyapunov with gamma_low and gamma_high");
            } else if (request.name == "fts") {
                if (!cfg.lyapunov || !cfg.mu) fail("checks.fts", "requires lyapunov and mu");
            } else if (request.name == "instability") {
                if (!cfg.lyapunov || !cfg.mu || !cfg.instability)
                    fail("checks.instability", "requires lyapunov, mu, and the instability section");
            } else if (request.name == "lemma23") {
                if (!cfg.lyapunov || !cfg.gamma_low)
                    fail("checks.lemma23", "requires lyapunov (as U) and gamma_low (as gamma)");
                if (request.lemma23_l.empty())
                    fail("checks.lemma23", "requires the 'l' expression and 'd_U'");
            } else if (request.name != "linear_growth") {
                fail("checks", "unknown check '" + request.name + "'");
            }
            cfg.checks.push_back(std::move(request));
        }
    }

    if (doc.contains("delta")) {
        const auto& d = doc.at("delta");
        const double eps = need_number(d, "epsilon", "delta");
        const double R = need_number(d, "R", "delta");
        if (!(eps > 0.0 && eps < 1.0)) fail("delta.epsilon", "must lie in (0, 1)");
        if (!(R > 0.0)) fail("delta.R", "must be > 0");
        cfg.delta = std::make_pair(eps, R);
    }

    if (doc.contains("estimate")) {
        const auto& e = doc.at("estimate");
        if (e.contains("nonattraction_epsilon"))
            cfg.estimate.nonattraction_epsilon = e.at("nonattraction_epsilon").get<double>();
        if (e.contains("containment_R"))
            cfg.estimate.containment_R = e.at("containment_R").get<double>();
    }

    return cfg;
}

ordered_json read_config_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open config file '" + path + "'");
    try {
        return ordered_json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
}

RunResult run_certify(const ordered_json& config, const RunOverrides& overrides) {
    return run_pipeline(config, overrides, /*do_checks=*/true, /*do_simulate=*/false, {});
}

RunResult run_certify_file(const std::string& config_path, const RunOverrides& overrides) {
    return run_certify(read_config_file(config_path), overrides);
}

RunResult run_simulate(const ordered_json& config, const std::string& out_dir,
                       const RunOverrides& overrides) {
    return run_pipeline(config, overrides, /*do_checks=*/false, /*do_simulate=*/true, out_dir);
}

RunResult run_simulate_file(const std::string& config_path, const std::string& out_dir,
                            const RunOverrides& overrides) {
    return run_simulate(read_config_file(config_path), out_dir, overrides);
}

RunResult run_reproduce(const std::string& name, const std::string& out_dir,
                        const RunOverrides& overrides) {
    const ordered_json config = ordered_json::parse(canonical_config_text(name));
    return run_pipeline(config, overrides, /*do_checks=*/true, /*do_simulate=*/true, out_dir);
}

const char* canonical_config_text(const std::string& name) {
    if (name == "example1") return embedded::kExample1;
    if (name == "example2") return embedded::kExample2;
    if (name == "example3") return embedded::kExample3;
    if (name == "instability1") return embedded::kInstability1;
    throw ConfigError("unknown example '" + name +
                      "' (expected example1, example2, example3, or instability1)");
}

} // namespace ftslab
