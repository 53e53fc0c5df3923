#ifndef TRIRE_TRIRE_H
#define TRIRE_TRIRE_H

/* C interface to the continual-learning engine. All entry points return a
 * trire_status; on failure trire_last_error() holds a thread-local message.
 * Strings returned through char** out-parameters are heap-allocated and
 * must be released with trire_string_free(). */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TRIRE_API __declspec(dllexport)
#else
#define TRIRE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum trire_status {
    TRIRE_OK = 0,
    TRIRE_ERR_CONFIG = 2, /* bad keys, values, or constraint violations */
    TRIRE_ERR_DATA = 3,   /* missing or malformed data files */
    TRIRE_ERR_RUNTIME = 4 /* everything else */
} trire_status;

/* Opaque experiment configuration handle. */
typedef struct trire_config trire_config;

TRIRE_API const char* trire_version(void);

/* Message for the most recent failure on this thread; never NULL. */
TRIRE_API const char* trire_last_error(void);

TRIRE_API void trire_string_free(char* s);

/* Configuration: defaults, key=value text, or a file. */
TRIRE_API trire_status trire_config_create(trire_config** out);
TRIRE_API trire_status trire_config_parse_text(const char* text, trire_config** out);
TRIRE_API trire_status trire_config_parse_file(const char* path, trire_config** out);

/* Applies one key=value override. */
TRIRE_API trire_status trire_config_set(trire_config* cfg, const char* key,
                                        const char* value);

/* Cross-key validation; run entry points also validate internally. */
TRIRE_API trire_status trire_config_validate(trire_config* cfg);

/* Canonical resolved key=value text. */
TRIRE_API trire_status trire_config_dump(const trire_config* cfg, char** text_out);

TRIRE_API void trire_config_free(trire_config* cfg);

/* Full experiment: per-seed artifacts plus an aggregate, as declared in the
 * manifest written before training. Returns the manifest path. */
TRIRE_API trire_status trire_run(const trire_config* cfg, char** manifest_path_out);

/* Sweep drivers; each returns the path of the emitted CSV table. */
TRIRE_API trire_status trire_sweep_rewind(const trire_config* cfg,
                                          const double* percentiles, size_t count,
                                          char** csv_path_out);
TRIRE_API trire_status trire_sweep_ablation(const trire_config* cfg, char** csv_path_out);
TRIRE_API trire_status trire_sweep_pruning(const trire_config* cfg, char** csv_path_out);

/* Evaluates a stored checkpoint against the config's dataset; returns the
 * metrics report as JSON text. */
TRIRE_API trire_status trire_evaluate_checkpoint(const trire_config* cfg,
                                                 const char* checkpoint_path,
                                                 char** metrics_json_out);

/* Buffer section of a checkpoint as a JSON report. */
TRIRE_API trire_status trire_inspect_buffer(const char* checkpoint_path,
                                            char** report_json_out);

/* Renders the procedural digit corpus to IDX files under dir. */
TRIRE_API trire_status trire_gen_digits(const char* dir, uint32_t train_per_class,
                                        uint32_t test_per_class, uint64_t seed);

#ifdef __cplusplus
}
#endif

#endif /* TRIRE_TRIRE_H */
