#include "trire/net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "trire/errors.hpp"
#include "trire/primitives.hpp"

namespace trire {

std::size_t ParamLayout::weight_index(std::size_t layer, std::size_t in_idx,
                                      std::size_t out_idx) const {
    const Block& b = blocks[2 * layer];
    return b.offset + in_idx * b.out_dim + out_idx;
}

std::size_t ParamLayout::bias_index(std::size_t layer, std::size_t out_idx) const {
    const Block& b = blocks[2 * layer + 1];
    return b.offset + out_idx;
}

bool ActivationCounters::all_zero() const {
    for (const auto& l : layers) {
        for (auto c : l) {
            if (c != 0) return false;
        }
    }
    return true;
}

MLPNet::MLPNet(std::size_t input_dim, const std::vector<std::size_t>& hidden,
               std::size_t num_classes, RngState& init_rng)
    : input_dim_(input_dim), num_classes_(num_classes) {
    if (input_dim == 0 || num_classes == 0 || hidden.empty()) {
        throw InputError("MLPNet: zero-sized architecture");
    }
    std::size_t in = input_dim;
    auto make_layer = [&](std::size_t out) {
        Layer l;
        l.w = Matrix(in, out);
        l.b.assign(out, 0.0);
        const double scale = std::sqrt(2.0 / static_cast<double>(in));
        for (double& v : l.w.data) v = scale * init_rng.normal();
        in = out;
        return l;
    };
    for (std::size_t width : hidden) layers_.push_back(make_layer(width));
    head_ = make_layer(num_classes);

    std::size_t off = 0;
    auto add_block = [&](const std::string& name, std::size_t count, std::size_t in_dim,
                         std::size_t out_dim) {
        layout_.blocks.push_back({name, off, count, in_dim, out_dim});
        off += count;
    };
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        add_block("layer" + std::to_string(i) + ".w", layers_[i].w.size(),
                  layers_[i].w.rows, layers_[i].w.cols);
        add_block("layer" + std::to_string(i) + ".b", layers_[i].b.size(), 0,
                  layers_[i].b.size());
    }
    layout_.feature_total = off;
    add_block("head.w", head_.w.size(), head_.w.rows, head_.w.cols);
    add_block("head.b", head_.b.size(), 0, head_.b.size());
    layout_.total = off;
}

namespace {

void add_bias(Matrix& m, const std::vector<double>& b) {
    for (std::size_t r = 0; r < m.rows; ++r) {
        double* row = m.row_ptr(r);
        for (std::size_t c = 0; c < m.cols; ++c) row[c] += b[c];
    }
}

// Per-sample top-k over post-activation values; ties go to the lower index.
void count_top_k(const Matrix& acts, double kappa, std::vector<std::uint64_t>& counters) {
    const std::size_t width = acts.cols;
    const std::size_t k = std::min<std::size_t>(
        width, static_cast<std::size_t>(std::ceil(kappa * static_cast<double>(width))));
    if (k == 0) return;
    std::vector<std::uint32_t> idx(width);
    for (std::size_t r = 0; r < acts.rows; ++r) {
        const double* row = acts.row_ptr(r);
        std::iota(idx.begin(), idx.end(), 0u);
        std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k),
                          idx.end(), [&](std::uint32_t a, std::uint32_t b) {
                              if (row[a] != row[b]) return row[a] > row[b];
                              return a < b;
                          });
        for (std::size_t j = 0; j < k; ++j) counters[idx[j]] += 1;
    }
}

} // namespace

Matrix MLPNet::forward(const Matrix& batch, ForwardTrace* trace, double kappa,
                       ActivationCounters* counters) const {
    if (batch.cols != input_dim_) {
        throw ShapeError("forward: input width " + std::to_string(batch.cols) +
                         " vs net input " + std::to_string(input_dim_));
    }
    if (counters && kappa > 0.0 && counters->layers.size() != layers_.size()) {
        throw ShapeError("forward: counters do not match hidden layers");
    }
    if (trace) {
        trace->input = batch;
        trace->hidden.clear();
        trace->relu_mask.clear();
        trace->net_version = version_;
    }
    Matrix h = batch;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        Matrix z = matmul(h, layers_[i].w);
        add_bias(z, layers_[i].b);
        ReluResult r = relu_forward(z);
        if (counters && kappa > 0.0) {
            count_top_k(r.value, kappa, counters->layers[i]);
        }
        if (trace) {
            trace->hidden.push_back(r.value);
            trace->relu_mask.push_back(std::move(r.active));
        }
        h = std::move(r.value);
    }
    Matrix logits = matmul(h, head_.w);
    add_bias(logits, head_.b);
    return logits;
}

ParamVector MLPNet::backward(const ForwardTrace& trace, const Matrix& grad_logits) const {
    if (trace.net_version != version_) {
        throw StateError("backward: trace is stale (parameters changed since forward)");
    }
    if (trace.hidden.size() != layers_.size()) {
        throw StateError("backward: trace does not match network depth");
    }
    ParamVector grads(layout_.total, 0.0);
    auto write_block = [&](std::size_t block_idx, const Matrix& gw,
                           const std::vector<double>& gb) {
        const auto& wb = layout_.blocks[2 * block_idx];
        std::copy(gw.data.begin(), gw.data.end(), grads.begin() + static_cast<std::ptrdiff_t>(wb.offset));
        const auto& bb = layout_.blocks[2 * block_idx + 1];
        std::copy(gb.begin(), gb.end(), grads.begin() + static_cast<std::ptrdiff_t>(bb.offset));
    };

    const Matrix& last_h = trace.hidden.back();
    Matrix gw_head = matmul_tn(last_h, grad_logits);
    std::vector<double> gb_head = col_sum(grad_logits);
    write_block(layers_.size(), gw_head, gb_head);

    Matrix dh = matmul_nt(grad_logits, head_.w);
    for (std::size_t i = layers_.size(); i-- > 0;) {
        Matrix dz = relu_backward(dh, trace.relu_mask[i]);
        const Matrix& input = (i == 0) ? trace.input : trace.hidden[i - 1];
        Matrix gw = matmul_tn(input, dz);
        std::vector<double> gb = col_sum(dz);
        write_block(i, gw, gb);
        if (i > 0) dh = matmul_nt(dz, layers_[i].w);
    }
    return grads;
}

ParamVector MLPNet::snapshot() const {
    ParamVector out;
    out.reserve(layout_.total);
    for (const auto& l : layers_) {
        out.insert(out.end(), l.w.data.begin(), l.w.data.end());
        out.insert(out.end(), l.b.begin(), l.b.end());
    }
    out.insert(out.end(), head_.w.data.begin(), head_.w.data.end());
    out.insert(out.end(), head_.b.begin(), head_.b.end());
    return out;
}

void MLPNet::restore(const ParamVector& params, const std::vector<std::uint8_t>* subset) {
    if (params.size() != layout_.total) {
        throw ShapeError("restore: " + std::to_string(params.size()) + " values for " +
                         std::to_string(layout_.total) + " parameters");
    }
    if (subset && subset->size() != layout_.total) {
        throw ShapeError("restore: subset length mismatch");
    }
    std::size_t off = 0;
    auto write = [&](double* dst, std::size_t n) {
        if (subset) {
            for (std::size_t i = 0; i < n; ++i) {
                if ((*subset)[off + i]) dst[i] = params[off + i];
            }
        } else {
            std::copy(params.begin() + static_cast<std::ptrdiff_t>(off),
                      params.begin() + static_cast<std::ptrdiff_t>(off + n), dst);
        }
        off += n;
    };
    for (auto& l : layers_) {
        write(l.w.data.data(), l.w.size());
        write(l.b.data(), l.b.size());
    }
    write(head_.w.data.data(), head_.w.size());
    write(head_.b.data(), head_.b.size());
    ++version_;
}

ActivationCounters MLPNet::make_counters() const {
    ActivationCounters c;
    for (const auto& l : layers_) c.layers.emplace_back(l.w.cols, 0);
    return c;
}

std::vector<std::span<double>> MLPNet::param_blocks() {
    std::vector<std::span<double>> blocks;
    for (auto& l : layers_) {
        blocks.emplace_back(l.w.data);
        blocks.emplace_back(l.b);
    }
    blocks.emplace_back(head_.w.data);
    blocks.emplace_back(head_.b);
    return blocks;
}

void adam_step(MLPNet& net, const ParamVector& grads, AdamState& state, double lr,
               const std::vector<std::uint8_t>* update_mask) {
    auto blocks = net.param_blocks();
    adam_step(std::span<std::span<double>>(blocks), grads, state, lr, update_mask);
    net.bump_version();
}

std::vector<std::uint8_t> task_logit_mask(const std::vector<int>& task_classes,
                                          std::size_t num_classes) {
    std::vector<std::uint8_t> mask(num_classes, 0);
    for (int c : task_classes) {
        if (c < 0 || static_cast<std::size_t>(c) >= num_classes) {
            throw InputError("task_logit_mask: class " + std::to_string(c) +
                             " outside [0," + std::to_string(num_classes) + ")");
        }
        mask[static_cast<std::size_t>(c)] = 1;
    }
    return mask;
}

} // namespace trire
