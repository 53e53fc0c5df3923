#include "trire/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "trire/errors.hpp"
#include "trire/primitives.hpp"

namespace trire {

TaskAccuracyMatrix::TaskAccuracyMatrix(std::size_t t)
    : num_tasks(t), values(t * t, std::numeric_limits<double>::quiet_NaN()) {}

double& TaskAccuracyMatrix::at(std::size_t after_task, std::size_t task) {
    return values[after_task * num_tasks + task];
}

double TaskAccuracyMatrix::at(std::size_t after_task, std::size_t task) const {
    return values[after_task * num_tasks + task];
}

bool TaskAccuracyMatrix::is_set(std::size_t after_task, std::size_t task) const {
    return !std::isnan(values[after_task * num_tasks + task]);
}

double TaskAccuracyMatrix::final_average() const {
    double sum = 0.0;
    for (std::size_t j = 0; j < num_tasks; ++j) sum += at(num_tasks - 1, j);
    return sum / static_cast<double>(num_tasks);
}

int argmax_class_il(const double* logits, std::size_t num_classes) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < num_classes; ++j) {
        if (logits[j] > logits[best]) best = j;
    }
    return static_cast<int>(best);
}

int argmax_task_il(const double* logits, const std::vector<std::uint8_t>& task_mask) {
    int best = -1;
    for (std::size_t j = 0; j < task_mask.size(); ++j) {
        if (!task_mask[j]) continue;
        if (best < 0 || logits[j] > logits[static_cast<std::size_t>(best)]) {
            best = static_cast<int>(j);
        }
    }
    return best;
}

namespace {

constexpr std::size_t kEvalChunk = 512;

template <typename Fn>
void for_each_test_chunk(const Split& split, Fn&& fn) {
    std::vector<std::uint32_t> which;
    for (std::size_t start = 0; start < split.size(); start += kEvalChunk) {
        const std::size_t end = std::min(start + kEvalChunk, split.size());
        which.assign(split.indices.begin() + static_cast<std::ptrdiff_t>(start),
                     split.indices.begin() + static_cast<std::ptrdiff_t>(end));
        fn(make_batch(split, which));
    }
}

} // namespace

EvalPass evaluate_detailed(const MLPNet& model, const TaskStream& stream,
                           Protocol protocol, std::size_t upto_task) {
    if (upto_task >= stream.num_tasks()) {
        throw InputError("evaluate: task index out of range");
    }
    EvalPass pass;
    for (std::size_t t = 0; t <= upto_task; ++t) {
        const Task& task = stream.tasks[t];
        const std::vector<std::uint8_t> mask =
            task_logit_mask(task.spec.classes, model.num_classes());
        std::size_t hits = 0;
        for_each_test_chunk(task.test, [&](const Batch& batch) {
            Matrix logits = model.forward(batch.features);
            const std::vector<std::uint8_t>* softmax_mask =
                protocol == Protocol::TaskIL ? &mask : nullptr;
            Matrix probs = softmax(logits, softmax_mask);
            for (std::size_t r = 0; r < logits.rows; ++r) {
                const int pred = protocol == Protocol::TaskIL
                                     ? argmax_task_il(logits.row_ptr(r), mask)
                                     : argmax_class_il(logits.row_ptr(r), logits.cols);
                const bool ok = pred == batch.labels[r];
                hits += ok ? 1 : 0;
                const double* prow = probs.row_ptr(r);
                double conf = 0.0;
                for (std::size_t c = 0; c < probs.cols; ++c) conf = std::max(conf, prow[c]);
                pass.confidences.push_back(conf);
                pass.correct.push_back(ok ? 1 : 0);
            }
        });
        pass.per_task_accuracy.push_back(
            task.test.size() == 0
                ? 0.0
                : static_cast<double>(hits) / static_cast<double>(task.test.size()));
    }
    return pass;
}

std::vector<double> evaluate(const MLPNet& model, const TaskStream& stream,
                             Protocol protocol, std::size_t upto_task) {
    return evaluate_detailed(model, stream, protocol, upto_task).per_task_accuracy;
}

StabilityPlasticity stability_plasticity(const TaskAccuracyMatrix& a) {
    if (a.num_tasks < 2) {
        throw InputError("stability_plasticity: need at least 2 tasks");
    }
    StabilityPlasticity sp;
    const std::size_t last = a.num_tasks - 1;
    for (std::size_t j = 0; j < last; ++j) sp.stability += a.at(last, j);
    sp.stability /= static_cast<double>(last);
    for (std::size_t i = 0; i < a.num_tasks; ++i) sp.plasticity += a.at(i, i);
    sp.plasticity /= static_cast<double>(a.num_tasks);
    const double denom = sp.stability + sp.plasticity;
    sp.tradeoff = denom > 0.0 ? 2.0 * sp.stability * sp.plasticity / denom : 0.0;
    return sp;
}

double ece(const std::vector<double>& confidences, const std::vector<std::uint8_t>& correct,
           std::size_t bins) {
    if (confidences.size() != correct.size()) {
        throw ShapeError("ece: confidence/correctness length mismatch");
    }
    if (bins == 0) throw InputError("ece: bins must be >= 1");
    if (confidences.empty()) return 0.0;

    std::vector<double> conf_sum(bins, 0.0);
    std::vector<double> acc_sum(bins, 0.0);
    std::vector<std::size_t> count(bins, 0);
    for (std::size_t i = 0; i < confidences.size(); ++i) {
        const double c = confidences[i];
        std::size_t b = static_cast<std::size_t>(c * static_cast<double>(bins));
        b = std::min(b, bins - 1);
        conf_sum[b] += c;
        acc_sum[b] += correct[i] ? 1.0 : 0.0;
        count[b] += 1;
    }
    double total = 0.0;
    const double n = static_cast<double>(confidences.size());
    for (std::size_t b = 0; b < bins; ++b) {
        if (count[b] == 0) continue;
        const double w = static_cast<double>(count[b]) / n;
        const double acc = acc_sum[b] / static_cast<double>(count[b]);
        const double conf = conf_sum[b] / static_cast<double>(count[b]);
        total += w * std::abs(acc - conf);
    }
    return total;
}

Matrix task_confusion(const MLPNet& model, const TaskStream& stream) {
    const std::size_t t_count = stream.num_tasks();
    Matrix shares(t_count, t_count);
    std::vector<int> class_to_task(model.num_classes(), -1);
    for (const auto& task : stream.tasks) {
        for (int c : task.spec.classes) {
            class_to_task[static_cast<std::size_t>(c)] = task.spec.task_id;
        }
    }
    for (std::size_t i = 0; i < t_count; ++i) {
        const Split& test = stream.tasks[i].test;
        if (test.size() == 0) continue;
        for_each_test_chunk(test, [&](const Batch& batch) {
            Matrix logits = model.forward(batch.features);
            for (std::size_t r = 0; r < logits.rows; ++r) {
                const int pred = argmax_class_il(logits.row_ptr(r), logits.cols);
                const int pred_task = class_to_task[static_cast<std::size_t>(pred)];
                if (pred_task >= 0) {
                    shares(i, static_cast<std::size_t>(pred_task)) += 1.0;
                }
            }
        });
        for (std::size_t j = 0; j < t_count; ++j) {
            shares(i, j) /= static_cast<double>(test.size());
        }
    }
    return shares;
}

} // namespace trire
