#include "trire/trire.h"

#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "trire/config.hpp"
#include "trire/errors.hpp"
#include "trire/experiment.hpp"

struct trire_config {
    trire::ExperimentConfig impl;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

template <typename Fn>
trire_status wrap(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return TRIRE_OK;
    } catch (const trire::ConfigError& e) {
        g_last_error = e.what();
        return TRIRE_ERR_CONFIG;
    } catch (const trire::DataError& e) {
        g_last_error = e.what();
        return TRIRE_ERR_DATA;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return TRIRE_ERR_RUNTIME;
    } catch (...) {
        g_last_error = "unknown error";
        return TRIRE_ERR_RUNTIME;
    }
}

trire_status require(bool ok, const char* message) {
    if (ok) return TRIRE_OK;
    g_last_error = message;
    return TRIRE_ERR_RUNTIME;
}

} // namespace

extern "C" {

const char* trire_version(void) { return trire::kVersion; }

const char* trire_last_error(void) { return g_last_error.c_str(); }

void trire_string_free(char* s) { std::free(s); }

trire_status trire_config_create(trire_config** out) {
    if (require(out != nullptr, "null output pointer")) return TRIRE_ERR_RUNTIME;
    return wrap([&] { *out = new trire_config{trire::ExperimentConfig{}}; });
}

trire_status trire_config_parse_text(const char* text, trire_config** out) {
    if (require(text && out, "null argument")) return TRIRE_ERR_RUNTIME;
    return wrap([&] { *out = new trire_config{trire::parse_config_text(text)}; });
}

trire_status trire_config_parse_file(const char* path, trire_config** out) {
    if (require(path && out, "null argument")) return TRIRE_ERR_RUNTIME;
    return wrap([&] { *out = new trire_config{trire::parse_config_file(path)}; });
}

trire_status trire_config_set(trire_config* cfg, const char* key, const char* value) {
    if (require(cfg && key && value, "null argument")) return TRIRE_ERR_RUNTIME;
    return wrap([&] { trire::apply_config_key(cfg->impl, key, value); });
}

trire_status trire_config_validate(trire_config* cfg) {
    if (require(cfg != nullptr, "null config")) return TRIRE_ERR_RUNTIME;
    return wrap([&] { cfg->impl.finalize(); });
}

trire_status trire_config_dump(const trire_config* cfg, char** text_out) {
    if (require(cfg && text_out, "null argument")) return TRIRE_ERR_RUNTIME;
    return wrap([&] { *text_out = dup_string(cfg->impl.resolved_text()); });
}

void trire_config_free(trire_config* cfg) { delete cfg; }

trire_status trire_run(const trire_config* cfg, char** manifest_path_out) {
    if (require(cfg != nullptr, "null config")) return TRIRE_ERR_RUNTIME;
    return wrap([&] {
        trire::ExperimentConfig config = cfg->impl;
        config.finalize();
        const trire::ExperimentResult result = trire::run_experiment(config);
        if (manifest_path_out) *manifest_path_out = dup_string(result.manifest.path);
    });
}

trire_status trire_sweep_rewind(const trire_config* cfg, const double* percentiles,
                                size_t count, char** csv_path_out) {
    if (require(cfg && (percentiles || count == 0), "null argument")) {
        return TRIRE_ERR_RUNTIME;
    }
    return wrap([&] {
        trire::ExperimentConfig config = cfg->impl;
        config.finalize();
        std::vector<double> p(percentiles, percentiles + count);
        const trire::SweepResult result = trire::sweep_rewind(config, std::move(p));
        if (csv_path_out) *csv_path_out = dup_string(result.csv_path);
    });
}

trire_status trire_sweep_ablation(const trire_config* cfg, char** csv_path_out) {
    if (require(cfg != nullptr, "null config")) return TRIRE_ERR_RUNTIME;
    return wrap([&] {
        trire::ExperimentConfig config = cfg->impl;
        config.finalize();
        const trire::SweepResult result = trire::sweep_ablation(config);
        if (csv_path_out) *csv_path_out = dup_string(result.csv_path);
    });
}

trire_status trire_sweep_pruning(const trire_config* cfg, char** csv_path_out) {
    if (require(cfg != nullptr, "null config")) return TRIRE_ERR_RUNTIME;
    return wrap([&] {
        trire::ExperimentConfig config = cfg->impl;
        config.finalize();
        const trire::SweepResult result = trire::sweep_pruning(config);
        if (csv_path_out) *csv_path_out = dup_string(result.csv_path);
    });
}

trire_status trire_evaluate_checkpoint(const trire_config* cfg, const char* checkpoint_path,
                                       char** metrics_json_out) {
    if (require(cfg && checkpoint_path, "null argument")) return TRIRE_ERR_RUNTIME;
    return wrap([&] {
        trire::ExperimentConfig config = cfg->impl;
        config.finalize();
        const trire::MetricsReport metrics =
            trire::evaluate_checkpoint_file(checkpoint_path, config);
        if (metrics_json_out) {
            *metrics_json_out = dup_string(
                trire::metrics_to_json(metrics, config.method, config.seeds.front()));
        }
    });
}

trire_status trire_inspect_buffer(const char* checkpoint_path, char** report_json_out) {
    if (require(checkpoint_path != nullptr, "null checkpoint path")) {
        return TRIRE_ERR_RUNTIME;
    }
    return wrap([&] {
        const std::string report = trire::inspect_buffer_file(checkpoint_path);
        if (report_json_out) *report_json_out = dup_string(report);
    });
}

trire_status trire_gen_digits(const char* dir, uint32_t train_per_class,
                              uint32_t test_per_class, uint64_t seed) {
    if (require(dir != nullptr, "null output directory")) return TRIRE_ERR_RUNTIME;
    return wrap([&] {
        trire::gen_digits_files(dir, train_per_class, test_per_class, seed);
    });
}

} // extern "C"
