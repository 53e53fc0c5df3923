#include "trire/ema.hpp"

#include <cmath>

#include "trire/errors.hpp"

namespace trire {

EMAModel::EMAModel(const MLPNet& source, double mu, double zeta)
    : mirror_(source), mu_(mu), zeta_(zeta) {
    if (mu <= 0.0 || mu >= 1.0) throw InputError("EMAModel: mu must lie in (0,1)");
    if (zeta < 0.0 || zeta > 1.0) throw InputError("EMAModel: zeta must lie in [0,1]");
}

bool EMAModel::maybe_update(const MLPNet& working, RngState& rng) {
    // uniform_pos draws from (0,1], so zeta=0 never fires and zeta=1 always does.
    const double u = rng.uniform_pos();
    if (zeta_ < u) return false;
    ParamVector mixed = mirror_.snapshot();
    const ParamVector current = working.snapshot();
    if (mixed.size() != current.size()) {
        throw ShapeError("EMA update: mirror and working model shapes differ");
    }
    for (std::size_t i = 0; i < mixed.size(); ++i) {
        mixed[i] = mu_ * mixed[i] + (1.0 - mu_) * current[i];
    }
    mirror_.restore(mixed);
    return true;
}

Matrix EMAModel::predict(const Matrix& batch,
                         const std::vector<std::uint8_t>* task_mask) const {
    Matrix logits = mirror_.forward(batch);
    if (task_mask) {
        if (task_mask->size() != logits.cols) {
            throw ShapeError("predict: task mask length mismatch");
        }
        for (std::size_t r = 0; r < logits.rows; ++r) {
            double* row = logits.row_ptr(r);
            for (std::size_t c = 0; c < logits.cols; ++c) {
                if (!(*task_mask)[c]) row[c] = -HUGE_VAL;
            }
        }
    }
    return logits;
}

ConsistencyResult consistency_from_logits(const Matrix& working_logits,
                                          const Matrix& ema_logits) {
    if (!working_logits.same_shape(ema_logits)) {
        throw ShapeError("consistency loss: logit shapes differ");
    }
    if (working_logits.rows == 0) {
        throw InputError("consistency loss: empty batch");
    }
    ConsistencyResult r;
    r.grad_logits = Matrix(working_logits.rows, working_logits.cols);
    const double inv_n = 1.0 / static_cast<double>(working_logits.rows);
    for (std::size_t i = 0; i < working_logits.size(); ++i) {
        const double diff = working_logits.data[i] - ema_logits.data[i];
        r.loss += diff * diff * inv_n;
        r.grad_logits.data[i] = 2.0 * diff * inv_n;
    }
    return r;
}

ConsistencyResult consistency_loss(const MLPNet& working, const EMAModel& ema,
                                   const Matrix& batch) {
    Matrix w = working.forward(batch);
    Matrix e = ema.net().forward(batch);
    return consistency_from_logits(w, e);
}

} // namespace trire
