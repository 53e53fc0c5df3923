#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trire/dataset.hpp"
#include "trire/trainer.hpp"

namespace trire {

enum class Method { TriRE, Sgd, Er, Joint };

enum class DatasetKind { Blobs, Idx };

std::string method_name(Method m);

// Everything a run needs, resolved from key=value text plus defaults.
// Unknown keys are rejected with their line number.
struct ExperimentConfig {
    Method method = Method::TriRE;

    DatasetKind dataset = DatasetKind::Blobs;
    std::string idx_train_images, idx_train_labels;
    std::string idx_test_images, idx_test_labels;
    std::size_t blobs_dim = 32;
    std::size_t blobs_train_per_class = 200;
    std::size_t blobs_test_per_class = 50;
    double blobs_separation = 3.0;

    std::size_t tasks = 5;
    std::size_t classes_per_task = 2;
    std::vector<std::size_t> hidden = {256, 256};
    std::size_t epochs = 5; // per-task budget; split 3:1:1 across phases
    TaskOrder task_order = TaskOrder::Ascending;
    double val_fraction = 0.0;

    TriREConfig trire;

    std::vector<std::uint64_t> seeds = {0};
    std::string out_dir = "trire_out";
    bool save_checkpoints = false;
    std::size_t ece_bins = 10;

    // Applies the epoch split and cross-key constraints; throws ConfigError.
    void finalize();

    // Canonical key=value dump; reruns compare equal iff these match.
    std::string resolved_text() const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Single key=value override (CLI flags); caller re-finalizes afterwards.
void apply_config_key(ExperimentConfig& config, const std::string& key,
                      const std::string& value, int line = 0);

} // namespace trire
