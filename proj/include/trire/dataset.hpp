#pragma once

#include <memory>
#include <string>
#include <vector>

#include "trire/matrix.hpp"
#include "trire/rng.hpp"

namespace trire {

struct Example {
    std::vector<double> features; // in [0,1]
    int label = 0;
};

using ExampleStore = std::shared_ptr<const std::vector<Example>>;

// Index view into a shared example store; splits never copy feature data.
struct Split {
    ExampleStore store;
    std::vector<std::uint32_t> indices;

    std::size_t size() const { return indices.size(); }
    const Example& at(std::size_t i) const { return (*store)[indices[i]]; }
};

struct TaskSpec {
    int task_id = 0;
    std::vector<int> classes; // ordered, disjoint across tasks
};

struct Task {
    TaskSpec spec;
    Split train;
    Split test;
};

struct TaskStream {
    std::vector<Task> tasks;
    std::size_t feature_dim = 0;
    std::size_t num_classes = 0; // across all tasks

    std::size_t num_tasks() const { return tasks.size(); }
    // Task index owning a global class id, or -1.
    int task_of_class(int cls) const;
};

struct LabeledDataset {
    std::vector<Example> train;
    std::vector<Example> test;
    std::size_t feature_dim = 0;
    std::size_t num_classes = 0;
};

// Pixel bytes scaled by 1/255; image and label counts must agree.
std::vector<Example> load_idx(const std::string& images_path, const std::string& labels_path);

enum class TaskOrder { Ascending, Shuffled };

// Splits a labeled dataset into T tasks of c classes each. Classes map to
// tasks in ascending label order by default; Shuffled draws a seeded random
// assignment instead. Within-task train order is a seeded shuffle.
TaskStream build_split_tasks(const LabeledDataset& dataset, std::size_t num_tasks,
                             std::size_t classes_per_task, std::uint64_t seed,
                             TaskOrder order = TaskOrder::Ascending);

// Gaussian class clouds clipped to [0,1]^dim around distinct centers.
// Larger separation tightens the clouds relative to center spacing.
LabeledDataset synthetic_blobs(std::size_t num_tasks, std::size_t classes_per_task,
                               std::size_t dim, std::size_t train_per_class,
                               std::size_t test_per_class, double separation,
                               std::uint64_t seed);

// Procedurally rendered 28x28 digit glyphs (classes 0..9) with random
// affine jitter, stroke-width variation and pixel noise. Deterministic per
// seed; intended as an offline stand-in for handwritten-digit corpora.
LabeledDataset synthetic_digits(std::size_t train_per_class, std::size_t test_per_class,
                                std::uint64_t seed);

// Moves the last `fraction` of each task's (already shuffled) train split
// into a validation split, seeded order preserved.
struct ValidationCarve {
    std::vector<Split> validation; // one per task
};
ValidationCarve carve_validation(TaskStream& stream, double fraction);

struct Batch {
    Matrix features; // one row per example
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
    bool empty() const { return labels.empty(); }
};

Batch make_batch(const Split& split, const std::vector<std::uint32_t>& which);

// One epoch of seeded-permutation minibatches; the final partial batch is kept.
class MinibatchIter {
public:
    MinibatchIter(const Split& split, std::size_t batch_size, RngState rng);
    bool next(Batch& out);

private:
    const Split* split_;
    std::size_t batch_size_;
    std::vector<std::uint32_t> order_;
    std::size_t pos_ = 0;
};

} // namespace trire
