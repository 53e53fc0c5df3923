#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace trire {

// Bias-corrected adaptive-moment state over a flat parameter set.
// One instance per training phase: moments are discarded whenever the
// learning rate changes between phases.
struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t step = 0;
    std::vector<double> m;
    std::vector<double> v;

    explicit AdamState(std::size_t n, double b1 = 0.9, double b2 = 0.999,
                       double epsilon = 1e-8)
        : beta1(b1), beta2(b2), eps(epsilon), m(n, 0.0), v(n, 0.0) {}
};

// Applies one Adam update to the concatenation of the parameter blocks.
// Where update_mask is 0 the parameter, its moments, and everything else
// stay bit-identical; only the step counter advances. A null mask updates
// every parameter.
void adam_step(std::span<std::span<double>> param_blocks,
               const std::vector<double>& grads, AdamState& state, double lr,
               const std::vector<std::uint8_t>* update_mask = nullptr);

} // namespace trire
