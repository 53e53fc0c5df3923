#pragma once

#include <cstdint>
#include <vector>

#include "trire/matrix.hpp"

namespace trire {

struct ReluResult {
    Matrix value;
    // 1 where the input was strictly positive; the sub-gradient at exactly 0 is 0.
    std::vector<std::uint8_t> active;
};

ReluResult relu_forward(const Matrix& x);

// Propagates grad_out through the activation pattern recorded by relu_forward.
Matrix relu_backward(const Matrix& grad_out, const std::vector<std::uint8_t>& active);

struct CeResult {
    double loss = 0.0;             // mean cross-entropy over rows
    Matrix grad_logits;            // gradient of the mean loss
    std::vector<double> row_loss;  // per-row cross-entropy
};

// Softmax cross-entropy with one label per row. When class_mask is non-null,
// masked classes are excluded from the log-sum-exp entirely, so their logits
// receive exactly zero gradient. A label whose own class is masked, or a label
// outside [0, cols), is an InputError.
CeResult softmax_ce(const Matrix& logits, const std::vector<int>& labels,
                    const std::vector<std::uint8_t>* class_mask = nullptr);

// Row-wise softmax probabilities (optionally over unmasked classes only);
// masked entries are 0.
Matrix softmax(const Matrix& logits, const std::vector<std::uint8_t>* class_mask = nullptr);

} // namespace trire
