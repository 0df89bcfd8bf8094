#include "ftslab.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <sstream>

#include "ftslab/runner.hpp"
#include "ftslab/version.hpp"

using namespace ftslab;

struct ftslab_expr {
    Expression expr;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

template <typename Fn>
ftslab_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const ParseError& e) {
        g_last_error = e.what();
        return FTSLAB_ERROR_PARSE;
    } catch (const EvalError& e) {
        g_last_error = e.what();
        return FTSLAB_ERROR_EVAL;
    } catch (const ConfigError& e) {
        g_last_error = e.what();
        return FTSLAB_ERROR_CONFIG;
    } catch (const IoError& e) {
        g_last_error = e.what();
        return FTSLAB_ERROR_IO;
    } catch (const std::invalid_argument& e) {
        g_last_error = e.what();
        return FTSLAB_ERROR_INVALID;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return FTSLAB_ERROR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return FTSLAB_ERROR_INTERNAL;
    }
}

ftslab_status invalid(const char* message) {
    g_last_error = message;
    return FTSLAB_ERROR_INVALID;
}

RunOverrides parse_overrides(const char* overrides_json) {
    RunOverrides overrides;
    if (!overrides_json || !*overrides_json) return overrides;
    ordered_json doc;
    try {
        doc = ordered_json::parse(overrides_json);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("overrides are not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("overrides must be a JSON object");
    if (doc.contains("seed")) overrides.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("paths")) overrides.paths = doc.at("paths").get<std::int64_t>();
    return overrides;
}

ftslab_status emit_result(RunResult result, char** out_report_json, int* out_exit_code) {
    if (out_exit_code) *out_exit_code = result.exit_code;
    if (out_report_json) {
        *out_report_json = dup_string(result.report.dump(2));
        if (!*out_report_json) {
            g_last_error = "out of memory";
            return FTSLAB_ERROR_INTERNAL;
        }
    }
    return FTSLAB_OK;
}

} // namespace

extern "C" {

const char* ftslab_version(void) { return kVersion; }

const char* ftslab_last_error(void) { return g_last_error.c_str(); }

ftslab_status ftslab_expr_parse(const char* source, ftslab_expr** out_expr) {
    if (!source || !out_expr) return invalid("ftslab_expr_parse: null argument");
    *out_expr = nullptr;
    return guarded([&] {
        auto handle = std::make_unique<ftslab_expr>();
        handle->expr = Expression::parse(source);
        *out_expr = handle.release();
        return FTSLAB_OK;
    });
}

ftslab_status ftslab_expr_eval(const ftslab_expr* expr, double t, const double* x, size_t x_len,
                               double* out_value) {
    if (!expr || !out_value || (x_len > 0 && !x)) return invalid("ftslab_expr_eval: null argument");
    return guarded([&] {
        *out_value = expr->expr.evaluate(t, std::span<const double>(x, x_len));
        return FTSLAB_OK;
    });
}

ftslab_status ftslab_expr_print(const ftslab_expr* expr, char** out_text) {
    if (!expr || !out_text) return invalid("ftslab_expr_print: null argument");
    return guarded([&] {
        *out_text = dup_string(expr->expr.to_string());
        return *out_text ? FTSLAB_OK : FTSLAB_ERROR_INTERNAL;
    });
}

ftslab_status ftslab_expr_variables(const ftslab_expr* expr, char** out_csv) {
    if (!expr || !out_csv) return invalid("ftslab_expr_variables: null argument");
    return guarded([&] {
        std::ostringstream os;
        bool first = true;
        for (const auto& name : expr->expr.free_variables()) {
            if (!first) os << ',';
            os << name;
            first = false;
        }
        *out_csv = dup_string(os.str());
        return *out_csv ? FTSLAB_OK : FTSLAB_ERROR_INTERNAL;
    });
}

void ftslab_expr_free(ftslab_expr* expr) { delete expr; }

ftslab_status ftslab_run_certify(const char* config_path, const char* overrides_json,
                                 char** out_report_json, int* out_exit_code) {
    if (!config_path) return invalid("ftslab_run_certify: null config path");
    return guarded([&] {
        return emit_result(run_certify_file(config_path, parse_overrides(overrides_json)),
                           out_report_json, out_exit_code);
    });
}

ftslab_status ftslab_run_simulate(const char* config_path, const char* output_dir,
                                  const char* overrides_json, char** out_report_json,
                                  int* out_exit_code) {
    if (!config_path || !output_dir) return invalid("ftslab_run_simulate: null argument");
    return guarded([&] {
        return emit_result(
            run_simulate_file(config_path, output_dir, parse_overrides(overrides_json)),
            out_report_json, out_exit_code);
    });
}

ftslab_status ftslab_run_reproduce(const char* example_name, const char* output_dir,
                                   const char* overrides_json, char** out_report_json,
                                   int* out_exit_code) {
    if (!example_name || !output_dir) return invalid("ftslab_run_reproduce: null argument");
    return guarded([&] {
        return emit_result(
            run_reproduce(example_name, output_dir, parse_overrides(overrides_json)),
            out_report_json, out_exit_code);
    });
}

void ftslab_string_free(char* text) { std::free(text); }

} // extern "C"
