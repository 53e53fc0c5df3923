#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "trire/adam.hpp"
#include "trire/matrix.hpp"
#include "trire/rng.hpp"

namespace trire {

// Flat copy of all parameters; indexing follows ParamLayout and is stable
// for the lifetime of a run. Flatten/unflatten round-trips are bit-exact.
using ParamVector = std::vector<double>;

// Block order: for each feature layer its weight matrix (row-major,
// [in x out]) then its bias, followed by the classifier weight and bias.
struct ParamLayout {
    struct Block {
        std::string name;
        std::size_t offset;
        std::size_t count;
        std::size_t in_dim;  // 0 for bias blocks
        std::size_t out_dim;
    };
    std::vector<Block> blocks;
    std::size_t total = 0;
    std::size_t feature_total = 0; // parameters of the extractor only

    // Flat index of weight (in_idx -> out_idx) in feature layer `layer`.
    std::size_t weight_index(std::size_t layer, std::size_t in_idx, std::size_t out_idx) const;
    std::size_t bias_index(std::size_t layer, std::size_t out_idx) const;
};

// One monotone counter per hidden neuron, reset at the start of each
// task's first phase.
struct ActivationCounters {
    std::vector<std::vector<std::uint64_t>> layers;

    void reset() {
        for (auto& l : layers) l.assign(l.size(), 0);
    }
    bool all_zero() const;
};

struct ForwardTrace {
    Matrix input;
    std::vector<Matrix> hidden;                       // post-activation per layer
    std::vector<std::vector<std::uint8_t>> relu_mask; // pre-activation > 0
    std::uint64_t net_version = 0;
};

// Working model: fully-connected feature extractor with ReLU activations
// plus a single linear head over all classes of all tasks.
class MLPNet {
public:
    struct Layer {
        Matrix w; // [in x out]
        std::vector<double> b;
    };

    MLPNet(std::size_t input_dim, const std::vector<std::size_t>& hidden,
           std::size_t num_classes, RngState& init_rng);

    std::size_t input_dim() const { return input_dim_; }
    std::size_t num_classes() const { return num_classes_; }
    std::size_t num_hidden_layers() const { return layers_.size(); }
    const std::vector<Layer>& feature_layers() const { return layers_; }
    const Layer& head() const { return head_; }
    const ParamLayout& layout() const { return layout_; }
    std::uint64_t version() const { return version_; }

    // Logits for a batch (rows = samples). When kappa > 0 and counters are
    // supplied, each sample's top-ceil(kappa*width) post-activation values
    // per hidden layer increment the counters (ties break toward the lower
    // neuron index). Counting observes only; outputs are unchanged by it.
    Matrix forward(const Matrix& batch, ForwardTrace* trace = nullptr,
                   double kappa = 0.0, ActivationCounters* counters = nullptr) const;

    // Exact gradients of the scalar loss whose logit gradient is grad_logits.
    // The trace must come from a forward on the current parameters.
    ParamVector backward(const ForwardTrace& trace, const Matrix& grad_logits) const;

    ParamVector snapshot() const;
    // Writes values where subset is 1 (null subset = everything), bit-exact.
    void restore(const ParamVector& params, const std::vector<std::uint8_t>* subset = nullptr);

    ActivationCounters make_counters() const;

    // Mutable views over the parameter blocks in layout order.
    std::vector<std::span<double>> param_blocks();
    void bump_version() { ++version_; }

private:
    std::size_t input_dim_;
    std::size_t num_classes_;
    std::vector<Layer> layers_;
    Layer head_;
    ParamLayout layout_;
    std::uint64_t version_ = 0;
};

// Convenience wrapper: masked Adam over the net's parameters.
void adam_step(MLPNet& net, const ParamVector& grads, AdamState& state, double lr,
               const std::vector<std::uint8_t>* update_mask = nullptr);

// Boolean vector over all classes, true exactly on the given ones.
std::vector<std::uint8_t> task_logit_mask(const std::vector<int>& task_classes,
                                          std::size_t num_classes);

} // namespace trire
