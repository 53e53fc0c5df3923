#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trire/dataset.hpp"
#include "trire/matrix.hpp"
#include "trire/net.hpp"

namespace trire {

// A[i][j] = top-1 accuracy on task j's test split after finishing task i.
// Entries above the diagonal stay unset (NaN).
struct TaskAccuracyMatrix {
    std::size_t num_tasks = 0;
    std::vector<double> values;

    explicit TaskAccuracyMatrix(std::size_t t = 0);
    double& at(std::size_t after_task, std::size_t task);
    double at(std::size_t after_task, std::size_t task) const;
    bool is_set(std::size_t after_task, std::size_t task) const;
    // Mean of the last row (accuracy after the final task).
    double final_average() const;
};

enum class Protocol { ClassIL, TaskIL };

// Top-1 accuracy per task. Class-IL takes the argmax over all classes;
// Task-IL restricts the argmax to the task's own classes.
std::vector<double> evaluate(const MLPNet& model, const TaskStream& stream,
                             Protocol protocol, std::size_t upto_task);

// Argmax helpers shared by the protocols; exposed for direct testing.
int argmax_class_il(const double* logits, std::size_t num_classes);
int argmax_task_il(const double* logits, const std::vector<std::uint8_t>& task_mask);

struct StabilityPlasticity {
    double stability = 0.0;   // mean final-row accuracy over tasks before the last
    double plasticity = 0.0;  // mean diagonal accuracy
    double tradeoff = 0.0;    // harmonic mean; 0 when S+P == 0
};

StabilityPlasticity stability_plasticity(const TaskAccuracyMatrix& a);

// Expected calibration error over equal-width confidence bins.
double ece(const std::vector<double>& confidences, const std::vector<std::uint8_t>& correct,
           std::size_t bins);

// Row i: share of task-i test samples whose Class-IL prediction lands in
// each task's class set. Rows sum to 1.
Matrix task_confusion(const MLPNet& model, const TaskStream& stream);

struct EvalPass {
    std::vector<double> per_task_accuracy;
    std::vector<double> confidences;       // max softmax prob per sample
    std::vector<std::uint8_t> correct;     // aligned with confidences
};

// Single evaluation sweep gathering accuracy and calibration inputs.
EvalPass evaluate_detailed(const MLPNet& model, const TaskStream& stream,
                           Protocol protocol, std::size_t upto_task);

struct MetricsReport {
    double class_il_avg = 0.0;
    double task_il_avg = 0.0;
    std::optional<double> stability;
    std::optional<double> plasticity;
    std::optional<double> tradeoff;
    double ece_value = 0.0;
    Matrix confusion; // T x T prediction shares
    std::string evaluated_model; // "ema" or "working"
};

} // namespace trire
