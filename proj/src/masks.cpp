#include "trire/masks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "trire/errors.hpp"
#include "trire/primitives.hpp"

namespace trire {

namespace {

void check_aligned(const SubnetworkMask& a, const SubnetworkMask& b) {
    if (a.weights.size() != b.weights.size() ||
        a.neurons.layers.size() != b.neurons.layers.size()) {
        throw ShapeError("mask algebra: operand shapes differ");
    }
    for (std::size_t l = 0; l < a.neurons.layers.size(); ++l) {
        if (a.neurons.layers[l].size() != b.neurons.layers[l].size()) {
            throw ShapeError("mask algebra: neuron layer widths differ");
        }
    }
}

template <typename Op>
SubnetworkMask combine(const SubnetworkMask& a, const SubnetworkMask& b, Op op) {
    check_aligned(a, b);
    SubnetworkMask out = a;
    for (std::size_t i = 0; i < out.weights.size(); ++i) {
        out.weights[i] = op(a.weights[i], b.weights[i]);
    }
    for (std::size_t l = 0; l < out.neurons.layers.size(); ++l) {
        for (std::size_t i = 0; i < out.neurons.layers[l].size(); ++i) {
            out.neurons.layers[l][i] = op(a.neurons.layers[l][i], b.neurons.layers[l][i]);
        }
    }
    return out;
}

} // namespace

SubnetworkMask empty_mask(const MLPNet& net) {
    SubnetworkMask m;
    for (const auto& l : net.feature_layers()) {
        m.neurons.layers.emplace_back(l.w.cols, 0);
    }
    m.weights.assign(net.layout().feature_total, 0);
    return m;
}

SubnetworkMask union_masks(const SubnetworkMask& a, const SubnetworkMask& b) {
    return combine(a, b, [](std::uint8_t x, std::uint8_t y) -> std::uint8_t { return x | y; });
}

SubnetworkMask intersect_masks(const SubnetworkMask& a, const SubnetworkMask& b) {
    return combine(a, b, [](std::uint8_t x, std::uint8_t y) -> std::uint8_t { return x & y; });
}

SubnetworkMask complement_mask(const SubnetworkMask& a) {
    SubnetworkMask out = a;
    for (auto& v : out.weights) v = v ? 0 : 1;
    for (auto& l : out.neurons.layers) {
        for (auto& v : l) v = v ? 0 : 1;
    }
    return out;
}

double density(const SubnetworkMask& a) {
    if (a.weights.empty()) return 0.0;
    std::size_t kept = 0;
    for (auto v : a.weights) kept += v ? 1 : 0;
    return static_cast<double>(kept) / static_cast<double>(a.weights.size());
}

bool masks_equal(const SubnetworkMask& a, const SubnetworkMask& b) {
    if (a.weights != b.weights) return false;
    return a.neurons.layers == b.neurons.layers;
}

bool neuron_weight_consistent(const SubnetworkMask& m, const ParamLayout& layout) {
    const std::size_t num_layers = m.neurons.layers.size();
    for (std::size_t l = 0; l < num_layers; ++l) {
        const auto& wb = layout.blocks[2 * l];
        const auto& nm = m.neurons.layers[l];
        for (std::size_t in = 0; in < wb.in_dim; ++in) {
            for (std::size_t out = 0; out < wb.out_dim; ++out) {
                if (m.weights[wb.offset + in * wb.out_dim + out] && !nm[out]) return false;
            }
        }
        const auto& bb = layout.blocks[2 * l + 1];
        for (std::size_t out = 0; out < bb.out_dim; ++out) {
            if ((m.weights[bb.offset + out] != 0) != (nm[out] != 0)) return false;
        }
    }
    return true;
}

NeuronMask extract_neuron_mask(const ActivationCounters& counters, double kappa,
                               DropoutMode mode, RngState& rng) {
    if (counters.layers.empty()) {
        throw InputError("extract_neuron_mask: no counters");
    }
    if (counters.all_zero()) {
        throw InputError("extract_neuron_mask: all counters zero (no forward passes recorded)");
    }
    if (kappa <= 0.0 || kappa > 1.0) {
        throw InputError("extract_neuron_mask: kappa must lie in (0,1]");
    }
    NeuronMask mask;
    for (const auto& counts : counters.layers) {
        const std::size_t width = counts.size();
        const std::size_t keep = std::min<std::size_t>(
            width, static_cast<std::size_t>(std::ceil(kappa * static_cast<double>(width))));
        std::vector<std::uint8_t> retained(width, 0);

        std::vector<std::uint32_t> order(width);
        std::iota(order.begin(), order.end(), 0u);
        std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
            if (counts[a] != counts[b]) return counts[a] > counts[b];
            return a < b;
        });

        if (mode == DropoutMode::Deterministic) {
            for (std::size_t i = 0; i < keep; ++i) retained[order[i]] = 1;
        } else {
            const double max_count = static_cast<double>(counts[order[0]]);
            for (std::size_t i = 0; i < width; ++i) {
                const double p = static_cast<double>(counts[i]) / max_count;
                if (rng.uniform01() < p) retained[i] = 1;
            }
            std::size_t have = 0;
            for (auto v : retained) have += v;
            for (std::size_t i = 0; i < width && have < keep; ++i) {
                if (!retained[order[i]]) {
                    retained[order[i]] = 1;
                    ++have;
                }
            }
        }
        mask.layers.push_back(std::move(retained));
    }
    return mask;
}

namespace {

std::vector<double> feature_abs_grad(const MLPNet& net, const Batch& batch,
                                     const std::vector<std::uint8_t>* class_mask) {
    ForwardTrace trace;
    Matrix logits = net.forward(batch.features, &trace);
    CeResult ce = softmax_ce(logits, batch.labels, class_mask);
    ParamVector grads = net.backward(trace, ce.grad_logits);
    std::vector<double> out(net.layout().feature_total);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(grads[i]);
    return out;
}

} // namespace

std::vector<double> cwi_scores(const MLPNet& net, const Batch& current,
                               const Batch& buffer, double alpha, double beta,
                               const std::vector<std::uint8_t>& task_class_mask) {
    if (current.empty()) {
        throw InputError("cwi_scores: current sample set is empty");
    }
    const std::size_t n = net.layout().feature_total;
    std::vector<double> scores = magnitude_scores(net);
    if (alpha != 0.0) {
        std::vector<double> g = feature_abs_grad(net, current, &task_class_mask);
        for (std::size_t i = 0; i < n; ++i) scores[i] += alpha * g[i];
    }
    if (beta != 0.0 && !buffer.empty()) {
        std::vector<double> g = feature_abs_grad(net, buffer, nullptr);
        for (std::size_t i = 0; i < n; ++i) scores[i] += beta * g[i];
    }
    return scores;
}

std::vector<double> fisher_scores(const MLPNet& net, const Batch& sample) {
    if (sample.empty()) {
        throw InputError("fisher_scores: sample set is empty");
    }
    ForwardTrace trace;
    Matrix logits = net.forward(sample.features, &trace);
    const std::size_t n = sample.size();

    // Per-sample gradient of the per-sample loss: p - onehot (no 1/n).
    Matrix dz = softmax(logits);
    for (std::size_t i = 0; i < n; ++i) {
        dz(i, static_cast<std::size_t>(sample.labels[i])) -= 1.0;
    }

    // Per-sample weight gradients are rank-one (input x dz), so their mean
    // square is (input.^2)^T (dz.^2) / n per layer; dz itself propagates
    // unsquared, row-wise, exactly as in the batched backward.
    const auto& layout = net.layout();
    std::vector<double> scores(layout.feature_total, 0.0);
    auto squared = [](const Matrix& m) {
        Matrix s(m.rows, m.cols);
        for (std::size_t i = 0; i < m.size(); ++i) s.data[i] = m.data[i] * m.data[i];
        return s;
    };
    auto write_feature_block = [&](std::size_t layer, const Matrix& gw_sq,
                                   const std::vector<double>& gb_sq) {
        const auto& wb = layout.blocks[2 * layer];
        for (std::size_t i = 0; i < gw_sq.size(); ++i) {
            scores[wb.offset + i] = gw_sq.data[i] / static_cast<double>(n);
        }
        const auto& bb = layout.blocks[2 * layer + 1];
        for (std::size_t i = 0; i < gb_sq.size(); ++i) {
            scores[bb.offset + i] = gb_sq[i] / static_cast<double>(n);
        }
    };

    const auto& layers = net.feature_layers();
    Matrix dh = matmul_nt(dz, net.head().w);
    for (std::size_t l = layers.size(); l-- > 0;) {
        Matrix dzl = relu_backward(dh, trace.relu_mask[l]);
        const Matrix& input = (l == 0) ? trace.input : trace.hidden[l - 1];
        Matrix gw_sq = matmul_tn(squared(input), squared(dzl));
        std::vector<double> gb_sq = col_sum(squared(dzl));
        write_feature_block(l, gw_sq, gb_sq);
        if (l > 0) dh = matmul_nt(dzl, layers[l].w);
    }
    return scores;
}

std::vector<double> magnitude_scores(const MLPNet& net) {
    const auto& layout = net.layout();
    std::vector<double> scores(layout.feature_total);
    std::size_t off = 0;
    for (const auto& l : net.feature_layers()) {
        for (double v : l.w.data) scores[off++] = std::abs(v);
        for (double v : l.b) scores[off++] = std::abs(v);
    }
    return scores;
}

SubnetworkMask prune_weights(const MLPNet& net, const NeuronMask& neurons,
                             const std::vector<double>& scores, double gamma) {
    const auto& layout = net.layout();
    if (scores.size() != layout.feature_total) {
        throw ShapeError("prune_weights: score vector length mismatch");
    }
    if (gamma <= 0.0 || gamma > 1.0) {
        throw InputError("prune_weights: gamma must lie in (0,1]");
    }
    SubnetworkMask mask = empty_mask(net);
    mask.neurons = neurons;

    const std::size_t num_layers = net.feature_layers().size();
    for (std::size_t l = 0; l < num_layers; ++l) {
        const auto& wb = layout.blocks[2 * l];
        const auto& nm = neurons.layers[l];
        std::vector<std::size_t> candidates;
        candidates.reserve(wb.count);
        for (std::size_t in = 0; in < wb.in_dim; ++in) {
            for (std::size_t out = 0; out < wb.out_dim; ++out) {
                if (nm[out]) candidates.push_back(wb.offset + in * wb.out_dim + out);
            }
        }
        if (!candidates.empty()) {
            const std::size_t keep = std::min<std::size_t>(
                candidates.size(),
                static_cast<std::size_t>(
                    std::ceil(gamma * static_cast<double>(candidates.size()))));
            std::sort(candidates.begin(), candidates.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (scores[a] != scores[b]) return scores[a] > scores[b];
                          return a < b;
                      });
            for (std::size_t i = 0; i < keep; ++i) mask.weights[candidates[i]] = 1;
        }
        const auto& bb = layout.blocks[2 * l + 1];
        for (std::size_t out = 0; out < bb.out_dim; ++out) {
            mask.weights[bb.offset + out] = nm[out] ? 1 : 0;
        }
    }
    return mask;
}

SubnetworkMask extract_subnetwork(const MLPNet& net, const ActivationCounters& counters,
                                  const CWIConfig& config, const Batch& current,
                                  const Batch& buffer,
                                  const std::vector<std::uint8_t>& task_class_mask,
                                  DropoutMode mode, RngState& rng,
                                  PruneCriterion criterion) {
    NeuronMask neurons = extract_neuron_mask(counters, config.kappa, mode, rng);
    std::vector<double> scores;
    switch (criterion) {
        case PruneCriterion::CWI:
            scores = cwi_scores(net, current, buffer, config.alpha, config.beta,
                                task_class_mask);
            break;
        case PruneCriterion::Magnitude:
            scores = magnitude_scores(net);
            break;
        case PruneCriterion::Fisher:
            scores = fisher_scores(net, current);
            break;
    }
    return prune_weights(net, neurons, scores, config.gamma);
}

} // namespace trire
