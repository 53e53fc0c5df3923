#include "trire/buffer.hpp"

#include <algorithm>

#include "trire/errors.hpp"
#include "trire/primitives.hpp"

namespace trire {

void MemoryBuffer::offer(const Example& example, int task_id, double loss, RngState& rng) {
    seen_ += 1;
    if (capacity_ == 0) return;
    if (slots_.size() < capacity_) {
        slots_.push_back({example, task_id, loss});
        class_counts_[example.label] += 1;
        return;
    }
    const double accept = static_cast<double>(capacity_) / static_cast<double>(seen_);
    if (rng.uniform01() >= accept) return;

    // Balance first, counting the candidate into its own class: the victim
    // comes from the class that would be largest with the candidate held,
    // so a balanced buffer stays balanced. Ties go to a seeded uniform pick.
    auto effective_count = [&](int cls) {
        const auto it = class_counts_.find(cls);
        const std::size_t stored = it == class_counts_.end() ? 0 : it->second;
        return cls == example.label ? stored + 1 : stored;
    };
    std::size_t max_count = effective_count(example.label);
    for (const auto& [cls, count] : class_counts_) {
        max_count = std::max(max_count, effective_count(cls));
    }
    std::vector<int> tied;
    if (!class_counts_.count(example.label) &&
        effective_count(example.label) == max_count) {
        tied.push_back(example.label);
    }
    for (const auto& [cls, count] : class_counts_) {
        if (effective_count(cls) == max_count) tied.push_back(cls);
    }
    const int victim_class =
        tied.size() == 1 ? tied[0]
                         : tied[static_cast<std::size_t>(rng.uniform_below(tied.size()))];

    // Redundancy second: the lowest stored loss within the victim class —
    // possibly the candidate itself, which is then simply not kept.
    std::size_t victim = slots_.size();
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        if (slots_[i].example.label != victim_class) continue;
        if (victim == slots_.size() || slots_[i].stored_loss < slots_[victim].stored_loss) {
            victim = i;
        }
    }
    if (victim_class == example.label && victim != slots_.size() &&
        loss < slots_[victim].stored_loss) {
        return; // the candidate is the most redundant member of its class
    }
    if (victim == slots_.size()) {
        return; // victim class has no stored slots (candidate-only class)
    }
    class_counts_[slots_[victim].example.label] -= 1;
    if (class_counts_[slots_[victim].example.label] == 0) {
        class_counts_.erase(slots_[victim].example.label);
    }
    slots_[victim] = {example, task_id, loss};
    class_counts_[example.label] += 1;
}

void MemoryBuffer::update_from_task(const Split& split, const std::vector<double>& losses,
                                    int task_id, RngState& rng) {
    if (losses.size() != split.size()) {
        throw ShapeError("update_from_task: " + std::to_string(losses.size()) +
                         " losses for " + std::to_string(split.size()) + " examples");
    }
    for (std::size_t i = 0; i < split.size(); ++i) {
        offer(split.at(i), task_id, losses[i], rng);
    }
}

MemoryBuffer::Sampled MemoryBuffer::sample_batch(std::size_t batch_size, RngState& rng) const {
    Sampled out;
    if (slots_.empty() || batch_size == 0) return out;

    std::vector<std::size_t> picks;
    if (batch_size <= slots_.size()) {
        // Partial Fisher-Yates: first batch_size entries of a seeded permutation.
        std::vector<std::size_t> idx(slots_.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        for (std::size_t i = 0; i < batch_size; ++i) {
            const std::size_t j = i + rng.uniform_below(idx.size() - i);
            std::swap(idx[i], idx[j]);
            picks.push_back(idx[i]);
        }
    } else {
        for (std::size_t i = 0; i < batch_size; ++i) {
            picks.push_back(rng.uniform_below(slots_.size()));
        }
    }

    const std::size_t dim = slots_[0].example.features.size();
    out.batch.features = Matrix(picks.size(), dim);
    out.batch.labels.resize(picks.size());
    out.task_ids.resize(picks.size());
    for (std::size_t i = 0; i < picks.size(); ++i) {
        const BufferSlot& s = slots_[picks[i]];
        std::copy(s.example.features.begin(), s.example.features.end(),
                  out.batch.features.row_ptr(i));
        out.batch.labels[i] = s.example.label;
        out.task_ids[i] = s.task_id;
    }
    return out;
}

void MemoryBuffer::refresh_losses(const MLPNet& net) {
    if (slots_.empty()) return;
    const std::size_t dim = slots_[0].example.features.size();
    constexpr std::size_t kChunk = 512;
    for (std::size_t start = 0; start < slots_.size(); start += kChunk) {
        const std::size_t end = std::min(start + kChunk, slots_.size());
        Matrix x(end - start, dim);
        std::vector<int> labels(end - start);
        for (std::size_t i = start; i < end; ++i) {
            std::copy(slots_[i].example.features.begin(), slots_[i].example.features.end(),
                      x.row_ptr(i - start));
            labels[i - start] = slots_[i].example.label;
        }
        Matrix logits = net.forward(x);
        CeResult ce = softmax_ce(logits, labels);
        for (std::size_t i = start; i < end; ++i) {
            slots_[i].stored_loss = ce.row_loss[i - start];
        }
    }
}

} // namespace trire
