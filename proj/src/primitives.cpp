#include "trire/primitives.hpp"

#include <cmath>
#include <string>

#include "trire/errors.hpp"

namespace trire {

ReluResult relu_forward(const Matrix& x) {
    ReluResult r;
    r.value = Matrix(x.rows, x.cols);
    r.active.assign(x.size(), 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        double v = x.data[i];
        if (v > 0.0) {
            r.value.data[i] = v;
            r.active[i] = 1;
        }
    }
    return r;
}

Matrix relu_backward(const Matrix& grad_out, const std::vector<std::uint8_t>& active) {
    if (grad_out.size() != active.size()) {
        throw ShapeError("relu_backward: trace size " + std::to_string(active.size()) +
                         " vs grad " + std::to_string(grad_out.size()));
    }
    Matrix g(grad_out.rows, grad_out.cols);
    for (std::size_t i = 0; i < grad_out.size(); ++i) {
        g.data[i] = active[i] ? grad_out.data[i] : 0.0;
    }
    return g;
}

CeResult softmax_ce(const Matrix& logits, const std::vector<int>& labels,
                    const std::vector<std::uint8_t>* class_mask) {
    const std::size_t n = logits.rows;
    const std::size_t c = logits.cols;
    if (labels.size() != n) {
        throw ShapeError("softmax_ce: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(n) + " rows");
    }
    if (class_mask && class_mask->size() != c) {
        throw ShapeError("softmax_ce: class mask length mismatch");
    }
    if (n == 0) {
        throw InputError("softmax_ce: empty batch");
    }

    auto allowed = [&](std::size_t j) { return !class_mask || (*class_mask)[j] != 0; };

    CeResult r;
    r.grad_logits = Matrix(n, c);
    r.row_loss.resize(n);
    const double inv_n = 1.0 / static_cast<double>(n);

    for (std::size_t i = 0; i < n; ++i) {
        const int label = labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= c) {
            throw InputError("softmax_ce: label " + std::to_string(label) +
                             " outside [0," + std::to_string(c) + ") at row " +
                             std::to_string(i));
        }
        if (!allowed(static_cast<std::size_t>(label))) {
            throw InputError("softmax_ce: label class " + std::to_string(label) +
                             " is masked at row " + std::to_string(i));
        }
        const double* z = logits.row_ptr(i);
        double m = -HUGE_VAL;
        for (std::size_t j = 0; j < c; ++j) {
            if (allowed(j) && z[j] > m) m = z[j];
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            if (allowed(j)) sum += std::exp(z[j] - m);
        }
        const double lse = m + std::log(sum);
        r.row_loss[i] = lse - z[label];
        double* g = r.grad_logits.row_ptr(i);
        for (std::size_t j = 0; j < c; ++j) {
            if (allowed(j)) {
                g[j] = std::exp(z[j] - lse) * inv_n;
            }
        }
        g[label] -= inv_n;
        r.loss += r.row_loss[i];
    }
    r.loss *= inv_n;
    check_finite(r.grad_logits, "softmax_ce grad");
    return r;
}

Matrix softmax(const Matrix& logits, const std::vector<std::uint8_t>* class_mask) {
    const std::size_t n = logits.rows;
    const std::size_t c = logits.cols;
    if (class_mask && class_mask->size() != c) {
        throw ShapeError("softmax: class mask length mismatch");
    }
    auto allowed = [&](std::size_t j) { return !class_mask || (*class_mask)[j] != 0; };
    Matrix p(n, c);
    for (std::size_t i = 0; i < n; ++i) {
        const double* z = logits.row_ptr(i);
        double m = -HUGE_VAL;
        for (std::size_t j = 0; j < c; ++j) {
            if (allowed(j) && z[j] > m) m = z[j];
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            if (allowed(j)) sum += std::exp(z[j] - m);
        }
        double* row = p.row_ptr(i);
        for (std::size_t j = 0; j < c; ++j) {
            if (allowed(j)) row[j] = std::exp(z[j] - m) / sum;
        }
    }
    return p;
}

} // namespace trire
