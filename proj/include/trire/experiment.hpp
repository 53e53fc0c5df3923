#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "trire/config.hpp"
#include "trire/eval.hpp"
#include "trire/trainer.hpp"

namespace trire {

extern const char* const kVersion;

// Optional environment overrides.
constexpr const char* kEnvOutRoot = "TRIRE_OUT_ROOT";  // prefix for relative out dirs
constexpr const char* kEnvThreads = "TRIRE_THREADS";   // parallel seed workers

struct SeedArtifacts {
    std::uint64_t seed = 0;
    std::string dir;
    std::string losses_csv;
    std::string accuracy_csv;
    std::string masks_csv;
    std::string buffer_csv;
    std::string confusion_csv;
    std::string metrics_json;
    std::string checkpoint; // empty unless requested
};

// Written before training starts; the timestamp is the only field that
// differs between reruns of the same config.
struct RunManifest {
    std::string path;
    std::string out_dir;
    std::string version;
    std::string created_utc;
    std::string config_text; // canonical resolved config
    std::vector<SeedArtifacts> seeds;
    std::string aggregate_json;
};

struct SeedOutcome {
    std::uint64_t seed = 0;
    RunRecord record;
    MetricsReport metrics;
};

struct ExperimentResult {
    RunManifest manifest;
    std::vector<SeedOutcome> outcomes;
};

// One full experiment: per seed a training run plus artifact files, then a
// mean/std aggregate across seeds.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct SweepRow {
    std::string label;
    std::uint64_t seed = 0;
    double class_il = 0.0;
    double task_il = 0.0;
};

struct SweepResult {
    std::string csv_path;
    std::vector<SweepRow> rows;
};

// One full run per (percentile, seed); duplicates are removed first.
SweepResult sweep_rewind(const ExperimentConfig& config, std::vector<double> percentiles);
// The three feasible phase ablations plus the full method.
SweepResult sweep_ablation(const ExperimentConfig& config);
// Weight-scoring criterion comparison: magnitude, fisher, cwi.
SweepResult sweep_pruning(const ExperimentConfig& config);

// Builds the task stream a run would see (shared by runs and tools).
TaskStream build_stream(const ExperimentConfig& config, std::uint64_t seed);

// Trains one seed without touching the filesystem.
SeedOutcome run_single_seed(const ExperimentConfig& config, const TaskStream& stream,
                            std::uint64_t seed);

// Evaluates a stored checkpoint against the config's dataset.
MetricsReport evaluate_checkpoint_file(const std::string& checkpoint_path,
                                       const ExperimentConfig& config);

// Buffer section of a checkpoint as a JSON report.
std::string inspect_buffer_file(const std::string& checkpoint_path);

// Renders the procedural digit corpus into four IDX files under dir.
void gen_digits_files(const std::string& dir, std::size_t train_per_class,
                      std::size_t test_per_class, std::uint64_t seed);

std::string metrics_to_json(const MetricsReport& metrics, Method method,
                            std::uint64_t seed);

} // namespace trire
