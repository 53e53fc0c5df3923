#pragma once

#include <cstdint>
#include <vector>

#include "trire/dataset.hpp"
#include "trire/net.hpp"
#include "trire/rng.hpp"

namespace trire {

// Retained hidden neurons, one boolean vector per hidden layer.
struct NeuronMask {
    std::vector<std::vector<std::uint8_t>> layers;
};

// Neuron mask plus an aligned boolean set over all extractor parameters
// (classifier parameters are never masked). A retained weight always has a
// retained output neuron; a bias follows its neuron.
struct SubnetworkMask {
    NeuronMask neurons;
    std::vector<std::uint8_t> weights; // length == layout.feature_total

    bool empty_shape() const { return weights.empty(); }
};

SubnetworkMask empty_mask(const MLPNet& net);

SubnetworkMask union_masks(const SubnetworkMask& a, const SubnetworkMask& b);
SubnetworkMask intersect_masks(const SubnetworkMask& a, const SubnetworkMask& b);
// Elementwise NOT; the result is routing algebra and need not satisfy the
// neuron/weight consistency of extracted masks.
SubnetworkMask complement_mask(const SubnetworkMask& a);

// Retained extractor parameters / total extractor parameters.
double density(const SubnetworkMask& a);

bool masks_equal(const SubnetworkMask& a, const SubnetworkMask& b);

// True when every retained weight's output neuron is retained and every
// bias agrees with its neuron.
bool neuron_weight_consistent(const SubnetworkMask& m, const ParamLayout& layout);

enum class DropoutMode { Deterministic, Bernoulli };

// Heterogeneous dropout over activation counters. Deterministic mode keeps
// the ceil(kappa*width) highest-count neurons per layer (ties toward the
// lower index). Bernoulli mode keeps neuron i with probability
// count_i / max_count, then tops up from the highest counts until at least
// ceil(kappa*width) are retained. All-zero counters are a degenerate input.
NeuronMask extract_neuron_mask(const ActivationCounters& counters, double kappa,
                               DropoutMode mode, RngState& rng);

struct CWIConfig {
    double alpha = 1.0;           // current-task gradient coefficient
    double beta = 1.0;            // buffer gradient coefficient
    double gamma = 0.2;           // fraction of candidate weights retained
    double kappa = 0.5;           // fraction of neurons retained per layer
    std::size_t score_sample_cap = 2048;
};

// Per-parameter importance over the extractor:
//   |w| + alpha*|d mean masked-CE(current)/dw| + beta*|d mean CE(buffer)/dw|.
// The current-task term masks classifier logits to the task's classes; the
// buffer term is dropped when the buffer sample is empty.
std::vector<double> cwi_scores(const MLPNet& net, const Batch& current,
                               const Batch& buffer, double alpha, double beta,
                               const std::vector<std::uint8_t>& task_class_mask);

// Mean squared per-sample gradient of the task loss, per extractor parameter.
std::vector<double> fisher_scores(const MLPNet& net, const Batch& sample);

// |w| per extractor parameter.
std::vector<double> magnitude_scores(const MLPNet& net);

enum class PruneCriterion { CWI, Magnitude, Fisher };

// Neuron extraction followed by per-layer weight pruning: among weights
// whose output neuron is retained, the top ceil(gamma*candidates) by score
// survive (ties toward the lower flat index). Biases follow their neuron.
SubnetworkMask extract_subnetwork(const MLPNet& net, const ActivationCounters& counters,
                                  const CWIConfig& config, const Batch& current,
                                  const Batch& buffer,
                                  const std::vector<std::uint8_t>& task_class_mask,
                                  DropoutMode mode, RngState& rng,
                                  PruneCriterion criterion = PruneCriterion::CWI);

// Builds a subnetwork mask from an explicit neuron mask and per-parameter
// scores; extract_subnetwork delegates here after scoring.
SubnetworkMask prune_weights(const MLPNet& net, const NeuronMask& neurons,
                             const std::vector<double>& scores, double gamma);

} // namespace trire
