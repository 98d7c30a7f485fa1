#include "axdg/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace axdg {

namespace {

double evaluate(ParamStore& store, const std::function<Value(Graph&)>& build) {
    Graph g(&store);
    return g.scalar(build(g));
}

}  // namespace

GradCheckReport grad_check(ParamStore& store, const std::function<Value(Graph&)>& build,
                           double step, double tol) {
    (void)tol;
    GradCheckReport report;

    const double base1 = evaluate(store, build);
    const double base2 = evaluate(store, build);
    if (std::memcmp(&base1, &base2, sizeof(double)) != 0) {
        report.deterministic = false;
        report.worst = std::numeric_limits<double>::infinity();
        return report;
    }

    store.zero_grads();
    {
        Graph g(&store);
        g.backward(build(g));
    }
    std::vector<Tensor> ad_grads;
    ad_grads.reserve(store.size());
    for (std::size_t s = 0; s < store.size(); ++s) ad_grads.push_back(store.grad((int)s));

    for (std::size_t s = 0; s < store.size(); ++s) {
        auto& entry = store.entry((int)s);
        if (!entry.trainable) continue;
        GradCheckReport::PerParam pp;
        pp.name = entry.name;
        for (std::size_t i = 0; i < entry.value.numel(); ++i) {
            const double saved = entry.value.at(i);
            entry.value.at(i) = saved + step;
            const double fp = evaluate(store, build);
            entry.value.at(i) = saved - step;
            const double fm = evaluate(store, build);
            entry.value.at(i) = saved;
            const double fd = (fp - fm) / (2.0 * step);
            const double ad = ad_grads[s].at(i);
            const double denom = std::max({1e-6, std::abs(ad), std::abs(fd)});
            pp.max_rel_err = std::max(pp.max_rel_err, std::abs(ad - fd) / denom);
        }
        report.worst = std::max(report.worst, pp.max_rel_err);
        report.per_param.push_back(std::move(pp));
    }
    return report;
}

}  // namespace axdg
