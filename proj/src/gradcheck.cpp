#include "trire/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "trire/errors.hpp"

namespace trire {

GradCheckReport gradient_check(MLPNet& net, const std::function<double()>& loss_fn,
                               const ParamVector& analytic_grad, double h) {
    const ParamLayout& layout = net.layout();
    if (analytic_grad.size() != layout.total) {
        throw ShapeError("gradient_check: analytic gradient length mismatch");
    }
    GradCheckReport report;
    auto blocks = net.param_blocks();

    std::size_t off = 0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        GradCheckBlock block_report;
        block_report.name = layout.blocks[b].name;
        double scale = 0.0;
        std::vector<double> numeric(blocks[b].size());
        for (std::size_t i = 0; i < blocks[b].size(); ++i) {
            double& p = blocks[b][i];
            const double saved = p;
            p = saved + h;
            net.bump_version();
            const double up = loss_fn();
            p = saved - h;
            net.bump_version();
            const double down = loss_fn();
            p = saved;
            net.bump_version();
            numeric[i] = (up - down) / (2.0 * h);
            const double a = analytic_grad[off + i];
            block_report.max_abs_err = std::max(block_report.max_abs_err,
                                                std::abs(a - numeric[i]));
            scale = std::max({scale, std::abs(a), std::abs(numeric[i])});
        }
        block_report.max_rel_err = block_report.max_abs_err / std::max(scale, 1e-12);
        report.max_rel_err = std::max(report.max_rel_err, block_report.max_rel_err);
        report.blocks.push_back(std::move(block_report));
        off += blocks[b].size();
    }
    return report;
}

} // namespace trire
