#pragma once

#include <functional>
#include <string>
#include <vector>

#include "axdg/graph.hpp"

namespace axdg {

struct GradCheckReport {
    struct PerParam {
        std::string name;
        double max_rel_err = 0.0;
    };
    std::vector<PerParam> per_param;
    double worst = 0.0;
    bool deterministic = true;

    bool pass(double tol) const { return deterministic && worst <= tol; }
};

/// Central-finite-difference check of reverse-mode gradients for every
/// trainable parameter in the store. `build` must construct the scalar
/// objective from the current parameter values and be deterministic given
/// its captured inputs (noise tensors included); non-determinism is detected
/// by a repeated base evaluation and reported instead of a bogus result.
GradCheckReport grad_check(ParamStore& store, const std::function<Value(Graph&)>& build,
                           double step = 1e-5, double tol = 1e-4);

}  // namespace axdg
