#pragma once

#include <functional>
#include <string>
#include <vector>

#include "trire/net.hpp"

namespace trire {

struct GradCheckBlock {
    std::string name;
    double max_rel_err = 0.0;
    double max_abs_err = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckBlock> blocks;
    double max_rel_err = 0.0;

    bool within(double tolerance) const { return max_rel_err < tolerance; }
};

// Central finite differences of loss_fn over every parameter of the net,
// compared against the supplied analytic gradient. The relative error of a
// block is its worst absolute error divided by the block's gradient scale
// (the largest analytic or numeric magnitude in the block, floored at 1e-12).
// Intended for small nets; cost is two loss evaluations per parameter.
GradCheckReport gradient_check(MLPNet& net, const std::function<double()>& loss_fn,
                               const ParamVector& analytic_grad, double h = 1e-5);

} // namespace trire
