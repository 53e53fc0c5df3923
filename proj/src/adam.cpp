#include "trire/adam.hpp"

#include <cmath>
#include <string>

#include "trire/errors.hpp"

namespace trire {

void adam_step(std::span<std::span<double>> param_blocks,
               const std::vector<double>& grads, AdamState& state, double lr,
               const std::vector<std::uint8_t>* update_mask) {
    std::size_t total = 0;
    for (const auto& b : param_blocks) total += b.size();
    if (total != grads.size() || total != state.m.size()) {
        throw ShapeError("adam_step: " + std::to_string(total) + " params vs " +
                         std::to_string(grads.size()) + " grads vs " +
                         std::to_string(state.m.size()) + " moments");
    }
    if (update_mask && update_mask->size() != total) {
        throw ShapeError("adam_step: update mask length mismatch");
    }

    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

    std::size_t off = 0;
    for (auto& block : param_blocks) {
        double* p = block.data();
        const std::size_t n = block.size();
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t k = off + i;
            if (update_mask && !(*update_mask)[k]) continue;
            const double g = grads[k];
            const double m = state.beta1 * state.m[k] + (1.0 - state.beta1) * g;
            const double v = state.beta2 * state.v[k] + (1.0 - state.beta2) * g * g;
            state.m[k] = m;
            state.v[k] = v;
            p[i] -= lr * (m / bc1) / (std::sqrt(v / bc2) + state.eps);
        }
        off += n;
    }
}

} // namespace trire
