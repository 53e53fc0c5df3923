#pragma once

#include <cstdint>
#include <vector>

#include "trire/matrix.hpp"
#include "trire/net.hpp"
#include "trire/rng.hpp"

namespace trire {

// Exponential-moving-average mirror of the full working model (extractor
// and classifier), updated stochastically and used for inference.
class EMAModel {
public:
    EMAModel(const MLPNet& source, double mu, double zeta);

    // With probability zeta (one uniform draw per call, always consumed):
    // mirror <- mu*mirror + (1-mu)*working. Returns whether it fired.
    bool maybe_update(const MLPNet& working, RngState& rng);

    const MLPNet& net() const { return mirror_; }
    double mu() const { return mu_; }
    double zeta() const { return zeta_; }

    // Forward pass through the mirror; with a task mask, out-of-task logits
    // are forced to -inf so downstream argmax stays in-task.
    Matrix predict(const Matrix& batch,
                   const std::vector<std::uint8_t>* task_mask = nullptr) const;

private:
    MLPNet mirror_;
    double mu_;
    double zeta_;
};

struct ConsistencyResult {
    double loss = 0.0;   // mean squared logit distance over the batch
    Matrix grad_logits;  // gradient w.r.t. the working logits only
};

// Mean over the batch of the squared Frobenius distance between the two
// logit rows; the EMA side is treated as a constant.
ConsistencyResult consistency_from_logits(const Matrix& working_logits,
                                          const Matrix& ema_logits);

// Convenience wrapper that runs both forward passes itself.
ConsistencyResult consistency_loss(const MLPNet& working, const EMAModel& ema,
                                   const Matrix& batch);

} // namespace trire
