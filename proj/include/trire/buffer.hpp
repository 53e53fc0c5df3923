#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "trire/dataset.hpp"
#include "trire/net.hpp"
#include "trire/rng.hpp"

namespace trire {

struct BufferSlot {
    Example example;
    int task_id = 0;
    double stored_loss = 0.0; // last observed per-sample cross-entropy
};

// Fixed-capacity rehearsal store maintained by loss-aware balanced
// reservoir sampling: an accepted candidate counts toward its own class,
// the most-populated class is chosen as the victim (seeded uniform among
// ties), and the lowest-loss member of that class is dropped, which may be
// the candidate itself.
class MemoryBuffer {
public:
    explicit MemoryBuffer(std::size_t capacity) : capacity_(capacity) {}

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return slots_.size(); }
    bool empty() const { return slots_.empty(); }
    std::uint64_t seen() const { return seen_; }
    const std::vector<BufferSlot>& slots() const { return slots_; }
    const std::map<int, std::size_t>& class_counts() const { return class_counts_; }

    // Streams a finished task's train split once. While underfull every
    // candidate is inserted; at capacity a candidate replaces a victim with
    // probability capacity/seen.
    void update_from_task(const Split& split, const std::vector<double>& losses,
                          int task_id, RngState& rng);

    // Uniform without replacement when batch_size <= size, with replacement
    // otherwise. Empty buffer yields an empty batch.
    struct Sampled {
        Batch batch;
        std::vector<int> task_ids;
    };
    Sampled sample_batch(std::size_t batch_size, RngState& rng) const;

    // Recomputes stored_loss as the current per-sample cross-entropy.
    void refresh_losses(const MLPNet& net);

    void offer(const Example& example, int task_id, double loss, RngState& rng);

private:
    std::size_t capacity_;
    std::vector<BufferSlot> slots_;
    std::uint64_t seen_ = 0;
    std::map<int, std::size_t> class_counts_;
};

} // namespace trire
