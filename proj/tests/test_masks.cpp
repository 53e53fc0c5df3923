#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "trire/errors.hpp"
#include "trire/masks.hpp"
#include "trire/primitives.hpp"
#include "trire/net.hpp"
#include "trire/rng.hpp"

using namespace trire;

namespace {

SubnetworkMask random_mask(const MLPNet& net, RngState& rng) {
    SubnetworkMask m = empty_mask(net);
    for (auto& layer : m.neurons.layers) {
        for (auto& v : layer) v = rng.uniform_below(2) ? 1 : 0;
    }
    for (auto& v : m.weights) v = rng.uniform_below(2) ? 1 : 0;
    return m;
}

// A structurally valid mask: weights gated by their output neuron, biases
// equal to their neuron bit.
SubnetworkMask random_consistent_mask(const MLPNet& net, RngState& rng) {
    SubnetworkMask m = empty_mask(net);
    const ParamLayout& layout = net.layout();
    for (std::size_t l = 0; l < m.neurons.layers.size(); ++l) {
        auto& nm = m.neurons.layers[l];
        for (auto& v : nm) v = rng.uniform_below(2) ? 1 : 0;
        const auto& wb = layout.blocks[2 * l];
        for (std::size_t in = 0; in < wb.in_dim; ++in) {
            for (std::size_t out = 0; out < wb.out_dim; ++out) {
                m.weights[wb.offset + in * wb.out_dim + out] =
                    nm[out] && rng.uniform_below(2) ? 1 : 0;
            }
        }
        const auto& bb = layout.blocks[2 * l + 1];
        for (std::size_t out = 0; out < bb.out_dim; ++out) {
            m.weights[bb.offset + out] = nm[out];
        }
    }
    return m;
}

ActivationCounters counters_from(const MLPNet& net,
                                 const std::vector<std::vector<std::uint64_t>>& values) {
    ActivationCounters c = net.make_counters();
    c.layers = values;
    return c;
}

} // namespace

TEST_CASE("deterministic neuron extraction keeps the top counts") {
    RngState rng(1);
    MLPNet net(4, {4}, 2, rng);
    ActivationCounters c = counters_from(net, {{5, 1, 3, 2}});
    RngState draw(0);
    NeuronMask m = extract_neuron_mask(c, 0.5, DropoutMode::Deterministic, draw);
    CHECK(m.layers[0] == std::vector<std::uint8_t>{1, 0, 1, 0});
}

TEST_CASE("kappa=1 retains everything in both modes") {
    RngState rng(2);
    MLPNet net(4, {5}, 2, rng);
    ActivationCounters c = counters_from(net, {{3, 0, 7, 1, 2}});
    for (auto mode : {DropoutMode::Deterministic, DropoutMode::Bernoulli}) {
        RngState draw(4);
        NeuronMask m = extract_neuron_mask(c, 1.0, mode, draw);
        for (auto v : m.layers[0]) CHECK(v == 1);
    }
}

TEST_CASE("ties break toward the lower neuron index") {
    RngState rng(3);
    MLPNet net(4, {3}, 2, rng);
    ActivationCounters c = counters_from(net, {{9, 9, 1}});
    RngState draw(0);
    NeuronMask m = extract_neuron_mask(c, 1.0 / 3.0, DropoutMode::Deterministic, draw);
    CHECK(m.layers[0] == std::vector<std::uint8_t>{1, 0, 0});
}

TEST_CASE("all-zero counters are a degenerate input") {
    RngState rng(4);
    MLPNet net(4, {3}, 2, rng);
    ActivationCounters c = net.make_counters();
    RngState draw(0);
    CHECK_THROWS_AS(extract_neuron_mask(c, 0.5, DropoutMode::Deterministic, draw),
                    InputError);
}

TEST_CASE("bernoulli mode is seeded and tops up to the minimum") {
    RngState rng(5);
    MLPNet net(4, {8}, 2, rng);
    ActivationCounters c = counters_from(net, {{8, 7, 6, 5, 1, 1, 0, 0}});
    RngState d1(9), d2(9);
    NeuronMask a = extract_neuron_mask(c, 0.5, DropoutMode::Bernoulli, d1);
    NeuronMask b = extract_neuron_mask(c, 0.5, DropoutMode::Bernoulli, d2);
    CHECK(a.layers[0] == b.layers[0]);
    std::size_t kept = 0;
    for (auto v : a.layers[0]) kept += v;
    CHECK(kept >= 4); // at least ceil(0.5 * 8)
    CHECK(a.layers[0][6] + a.layers[0][7] <= 1); // zero-count neurons only via top-up
}

TEST_CASE("cwi score arithmetic") {
    // |w|=0.5, current-grad 0.2, buffer-grad 0.1 with alpha=beta=1 -> 0.8.
    // Exercised through the public scorer on a crafted single-weight view is
    // awkward; check the composition rule on vectors instead.
    RngState rng(6);
    MLPNet net(2, {2}, 2, rng);
    Batch current;
    current.features = Matrix(2, 2);
    current.features(0, 0) = 0.3;
    current.features(0, 1) = 0.9;
    current.features(1, 0) = 0.8;
    current.features(1, 1) = 0.1;
    current.labels = {0, 1};
    const auto task_mask = task_logit_mask({0, 1}, 2);

    Batch empty_buffer;
    const auto base = cwi_scores(net, current, empty_buffer, 0.0, 0.0, task_mask);
    const auto mag = magnitude_scores(net);
    CHECK(base == mag); // alpha=beta=0 is pure magnitude

    const auto with_current = cwi_scores(net, current, empty_buffer, 1.0, 0.0, task_mask);
    for (std::size_t i = 0; i < base.size(); ++i) {
        CHECK(with_current[i] >= base[i]);
    }

    // Empty buffer with beta=1 must match beta=0 exactly.
    const auto beta_dropped = cwi_scores(net, current, empty_buffer, 1.0, 1.0, task_mask);
    CHECK(beta_dropped == with_current);
}

TEST_CASE("cwi requires a current sample") {
    RngState rng(7);
    MLPNet net(2, {2}, 2, rng);
    Batch none;
    CHECK_THROWS_AS(cwi_scores(net, none, none, 1.0, 1.0, task_logit_mask({0}, 2)),
                    InputError);
}

TEST_CASE("fisher: zero gradients give zero scores") {
    RngState rng(8);
    MLPNet net(3, {4}, 2, rng);
    // Saturate: a single example classified with absolute confidence has
    // p ~ onehot and per-sample gradients ~ 0. Instead use the exact case:
    // zero input zeroes first-layer weight scores.
    Batch sample;
    sample.features = Matrix(1, 3, 0.0);
    sample.labels = {0};
    const auto scores = fisher_scores(net, sample);
    const auto& w0 = net.layout().blocks[0];
    for (std::size_t i = 0; i < w0.count; ++i) {
        CHECK(scores[w0.offset + i] == 0.0);
    }
}

TEST_CASE("fisher equals the mean squared per-sample gradient") {
    // Two samples; compare against per-sample backward passes done by hand.
    RngState rng(9);
    MLPNet net(3, {4}, 3, rng);
    Batch sample;
    sample.features = Matrix(2, 3);
    RngState fill(10);
    for (double& v : sample.features.data) v = fill.uniform01();
    sample.labels = {0, 2};

    const auto scores = fisher_scores(net, sample);

    ParamVector sum_sq(net.layout().total, 0.0);
    for (std::size_t s = 0; s < 2; ++s) {
        Batch one;
        one.features = Matrix(1, 3);
        for (std::size_t j = 0; j < 3; ++j) one.features(0, j) = sample.features(s, j);
        one.labels = {sample.labels[s]};
        ForwardTrace trace;
        Matrix logits = net.forward(one.features, &trace);
        CeResult ce = softmax_ce(logits, one.labels);
        ParamVector g = net.backward(trace, ce.grad_logits); // n=1: per-sample grad
        for (std::size_t i = 0; i < g.size(); ++i) sum_sq[i] += g[i] * g[i];
    }
    for (std::size_t i = 0; i < net.layout().feature_total; ++i) {
        CHECK(scores[i] == doctest::Approx(sum_sq[i] / 2.0).epsilon(1e-9));
    }
}

TEST_CASE("fisher and magnitude can rank a pair of weights oppositely") {
    // Construct a 1-input net with one large zero-gradient weight and one
    // small high-gradient weight.
    RngState rng(11);
    MLPNet net(2, {2}, 2, rng);
    ParamVector params(net.layout().total, 0.0);
    const ParamLayout& layout = net.layout();
    // Weight A: input 0 -> neuron 0, large. Weight B: input 1 -> neuron 1, small.
    params[layout.weight_index(0, 0, 0)] = 5.0;
    params[layout.weight_index(0, 1, 1)] = 0.01;
    // Head: neuron 1 drives the logits strongly, neuron 0 not at all.
    const auto& head_w = layout.blocks[2];
    params[head_w.offset + 0 * 2 + 0] = 0.0; // neuron0 -> class0
    params[head_w.offset + 1 * 2 + 0] = 3.0; // neuron1 -> class0
    params[head_w.offset + 1 * 2 + 1] = -3.0;
    net.restore(params);

    Batch sample;
    sample.features = Matrix(1, 2);
    sample.features(0, 0) = 0.0; // weight A sees zero input -> zero gradient
    sample.features(0, 1) = 1.0;
    sample.labels = {1};

    const auto fisher = fisher_scores(net, sample);
    const auto mag = magnitude_scores(net);
    const std::size_t a = layout.weight_index(0, 0, 0);
    const std::size_t b = layout.weight_index(0, 1, 1);
    CHECK(mag[a] > mag[b]);      // magnitude prefers the big weight
    CHECK(fisher[b] > fisher[a]); // fisher prefers the useful weight
}

TEST_CASE("prune_weights keeps the top-gamma incoming weights of retained neurons") {
    RngState rng(12);
    MLPNet net(4, {2}, 2, rng);
    const ParamLayout& layout = net.layout();
    NeuronMask neurons;
    neurons.layers = {{1, 0}};
    std::vector<double> scores(layout.feature_total, 0.0);
    scores[layout.weight_index(0, 0, 0)] = 0.9;
    scores[layout.weight_index(0, 1, 0)] = 0.1;
    scores[layout.weight_index(0, 2, 0)] = 0.8;
    scores[layout.weight_index(0, 3, 0)] = 0.2;
    SubnetworkMask m = prune_weights(net, neurons, scores, 0.5);
    CHECK(m.weights[layout.weight_index(0, 0, 0)] == 1);
    CHECK(m.weights[layout.weight_index(0, 2, 0)] == 1);
    CHECK(m.weights[layout.weight_index(0, 1, 0)] == 0);
    CHECK(m.weights[layout.weight_index(0, 3, 0)] == 0);
    // Dropped neuron keeps nothing, bias follows its neuron.
    CHECK(m.weights[layout.weight_index(0, 0, 1)] == 0);
    CHECK(m.weights[layout.bias_index(0, 0)] == 1);
    CHECK(m.weights[layout.bias_index(0, 1)] == 0);
    CHECK(neuron_weight_consistent(m, layout));
}

TEST_CASE("gamma=kappa=1 covers every extractor parameter") {
    RngState rng(13);
    MLPNet net(4, {4, 3}, 2, rng);
    ActivationCounters c = counters_from(net, {{1, 2, 3, 4}, {5, 6, 7}});
    CWIConfig cfg;
    cfg.gamma = 1.0;
    cfg.kappa = 1.0;
    Batch current;
    current.features = Matrix(2, 4, 0.5);
    current.labels = {0, 1};
    Batch no_buffer;
    RngState draw(1);
    SubnetworkMask m = extract_subnetwork(net, c, cfg, current, no_buffer,
                                          task_logit_mask({0, 1}, 2),
                                          DropoutMode::Deterministic, draw);
    CHECK(density(m) == 1.0);
}

TEST_CASE("extraction is deterministic for a fixed seed and config") {
    RngState rng(14);
    MLPNet net(6, {8, 6}, 4, rng);
    ActivationCounters c = net.make_counters();
    RngState fill(3);
    for (auto& layer : c.layers) {
        for (auto& v : layer) v = fill.uniform_below(100);
    }
    CWIConfig cfg;
    cfg.gamma = 0.4;
    cfg.kappa = 0.5;
    Batch current;
    current.features = Matrix(5, 6);
    for (double& v : current.features.data) v = fill.uniform01();
    current.labels = {0, 1, 2, 3, 0};
    Batch no_buffer;
    RngState d1(7), d2(7);
    SubnetworkMask a = extract_subnetwork(net, c, cfg, current, no_buffer,
                                          task_logit_mask({0, 1, 2, 3}, 4),
                                          DropoutMode::Bernoulli, d1);
    SubnetworkMask b = extract_subnetwork(net, c, cfg, current, no_buffer,
                                          task_logit_mask({0, 1, 2, 3}, 4),
                                          DropoutMode::Bernoulli, d2);
    CHECK(masks_equal(a, b));
    CHECK(neuron_weight_consistent(a, net.layout()));
}

TEST_CASE("mask algebra identities") {
    RngState rng(15);
    MLPNet net(4, {4, 3}, 2, rng);
    const SubnetworkMask empty = empty_mask(net);
    SubnetworkMask a = random_mask(net, rng);
    CHECK(masks_equal(union_masks(a, empty), a));
    CHECK(masks_equal(intersect_masks(a, complement_mask(a)), empty));
}

TEST_CASE("mask algebra property suite") {
    RngState rng(16);
    MLPNet net(5, {6, 4}, 3, rng);
    for (int iter = 0; iter < 300; ++iter) {
        SubnetworkMask a = random_mask(net, rng);
        SubnetworkMask b = random_mask(net, rng);
        SubnetworkMask c = random_mask(net, rng);
        CHECK(masks_equal(union_masks(a, b), union_masks(b, a)));
        CHECK(masks_equal(intersect_masks(a, b), intersect_masks(b, a)));
        CHECK(masks_equal(union_masks(a, union_masks(b, c)),
                          union_masks(union_masks(a, b), c)));
        CHECK(masks_equal(union_masks(a, a), a));
        CHECK(masks_equal(intersect_masks(a, a), a));
        // De Morgan.
        CHECK(masks_equal(complement_mask(union_masks(a, b)),
                          intersect_masks(complement_mask(a), complement_mask(b))));
        CHECK(masks_equal(complement_mask(intersect_masks(a, b)),
                          union_masks(complement_mask(a), complement_mask(b))));
    }
}

TEST_CASE("union and intersection preserve neuron-weight consistency") {
    RngState rng(17);
    MLPNet net(5, {6, 4}, 3, rng);
    for (int iter = 0; iter < 200; ++iter) {
        SubnetworkMask a = random_consistent_mask(net, rng);
        SubnetworkMask b = random_consistent_mask(net, rng);
        REQUIRE(neuron_weight_consistent(a, net.layout()));
        CHECK(neuron_weight_consistent(union_masks(a, b), net.layout()));
        CHECK(neuron_weight_consistent(intersect_masks(a, b), net.layout()));
    }
}

TEST_CASE("cumulative union density is monotone over a simulated stream") {
    RngState rng(18);
    MLPNet net(5, {6, 4}, 3, rng);
    SubnetworkMask s = empty_mask(net);
    double last = 0.0;
    for (int t = 0; t < 3; ++t) {
        SubnetworkMask st = random_consistent_mask(net, rng);
        s = union_masks(s, st);
        const double d = density(s);
        CHECK(d >= last);
        last = d;
        // Once true, stays true.
        for (std::size_t i = 0; i < st.weights.size(); ++i) {
            if (st.weights[i]) CHECK(s.weights[i] == 1);
        }
    }
}

TEST_CASE("mask algebra rejects misaligned shapes") {
    RngState rng(19);
    MLPNet a_net(4, {4}, 2, rng);
    MLPNet b_net(4, {5}, 2, rng);
    SubnetworkMask a = empty_mask(a_net);
    SubnetworkMask b = empty_mask(b_net);
    CHECK_THROWS_AS(union_masks(a, b), ShapeError);
}
