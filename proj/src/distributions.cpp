#include "axdg/distributions.hpp"

#include <cmath>

namespace axdg {

GaussianParamsV make_gaussian_params(Graph& g, Value mu, Value log_var_raw) {
    if (!g.value(mu).same_shape(g.value(log_var_raw)))
        throw std::invalid_argument("gaussian params: mu/log_var shape mismatch");
    return {mu, g.clamp(log_var_raw, -kLogVarClamp, kLogVarClamp)};
}

GaussianParamsV standard_normal(Graph& g, std::vector<std::size_t> shape) {
    Value mu = g.constant_full(shape, 0.0);
    Value lv = g.constant_full(std::move(shape), 0.0);
    return {mu, lv};
}

Value gaussian_log_density_per_dim(Graph& g, Value x, const GaussianParamsV& p) {
    if (!g.value(x).same_shape(g.value(p.mu)))
        throw std::invalid_argument("gaussian log density: shape mismatch");
    Value diff = g.sub(x, p.mu);
    Value maha = g.mul(g.square(diff), g.exp(g.neg(p.log_var)));
    return g.scale(g.add_scalar(g.add(p.log_var, maha), kLog2Pi), -0.5);
}

Value gaussian_log_density(Graph& g, Value x, const GaussianParamsV& p) {
    Value per = gaussian_log_density_per_dim(g, x, p);
    return g.value(per).rank() == 2 ? g.sum(per, 1) : g.sum(per, 0);
}

Value gaussian_rsample(Graph& g, const GaussianParamsV& p, const Tensor& eps) {
    if (!g.value(p.mu).same_shape(eps))
        throw std::invalid_argument("rsample: eps shape mismatch");
    Value sigma = g.exp(g.scale(p.log_var, 0.5));
    return g.add(p.mu, g.mul(sigma, g.leaf(eps)));
}

CategoricalParamsV make_categorical_params(Graph& g, Value logits) {
    const Tensor& t = g.value(logits);
    if (t.rank() != 2) throw std::invalid_argument("categorical: [batch x C] logits required");
    Value lse = g.log_sum_exp(logits, 1);
    Value log_probs = g.sub(logits, g.expand_cols(lse, t.dim(1)));
    return {logits, log_probs};
}

Value categorical_log_prob(Graph& g, const Tensor& y_onehot, const CategoricalParamsV& p) {
    check_one_hot(y_onehot);
    if (!g.value(p.log_probs).same_shape(y_onehot))
        throw std::invalid_argument("categorical log prob: one-hot shape mismatch");
    return g.sum(g.mul(p.log_probs, g.leaf(y_onehot)), 1);
}

Value categorical_entropy(Graph& g, const CategoricalParamsV& p) {
    Value probs = g.exp(p.log_probs);
    return g.neg(g.sum(g.mul(probs, p.log_probs), 1));
}

Value categorical_probs(Graph& g, const CategoricalParamsV& p) { return g.exp(p.log_probs); }

BernoulliParamsV make_bernoulli_params(Graph& g, Value logits_raw) {
    return {g.clamp(logits_raw, -kLogitClamp, kLogitClamp)};
}

Value bernoulli_log_likelihood(Graph& g, const Tensor& x, const BernoulliParamsV& p) {
    check_binary(x);
    if (!g.value(p.logits).same_shape(x))
        throw std::invalid_argument("bernoulli log likelihood: shape mismatch");
    // x log p + (1-x) log(1-p) = -[x softplus(-l) + (1-x) softplus(l)]
    Tensor one_minus_x(x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) one_minus_x.at(i) = 1.0 - x.at(i);
    Value on = g.mul(g.leaf(x), g.softplus(g.neg(p.logits)));
    Value off = g.mul(g.leaf(std::move(one_minus_x)), g.softplus(p.logits));
    Value per = g.neg(g.add(on, off));
    return g.value(per).rank() == 2 ? g.sum(per, 1) : g.sum(per, 0);
}

Tensor gaussian_kl_to_standard(const Tensor& mu, const Tensor& log_var) {
    if (!mu.same_shape(log_var))
        throw std::invalid_argument("kl_to_standard: shape mismatch");
    Tensor out(mu.shape());
    for (std::size_t i = 0; i < mu.numel(); ++i) {
        const double m = mu.at(i), lv = log_var.at(i);
        out.at(i) = 0.5 * (m * m + std::exp(lv) - lv - 1.0);
    }
    return out;
}

double gaussian_log_density_plain(const double* x, const double* mu, const double* log_var,
                                  std::size_t d) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double diff = x[i] - mu[i];
        s += -0.5 * (kLog2Pi + log_var[i] + diff * diff * std::exp(-log_var[i]));
    }
    return s;
}

double sigmoid_scalar(double logit) {
    return logit >= 0.0 ? 1.0 / (1.0 + std::exp(-logit))
                        : std::exp(logit) / (1.0 + std::exp(logit));
}

void check_one_hot(const Tensor& y) {
    if (y.rank() != 2) throw std::invalid_argument("one-hot: rank-2 tensor required");
    for (std::size_t i = 0; i < y.dim(0); ++i) {
        int ones = 0;
        for (std::size_t j = 0; j < y.dim(1); ++j) {
            const double v = y.at(i, j);
            if (v == 1.0)
                ++ones;
            else if (v != 0.0)
                throw std::invalid_argument("one-hot: entries must be 0 or 1");
        }
        if (ones != 1) throw std::invalid_argument("one-hot: each row needs exactly one 1");
    }
}

void check_binary(const Tensor& x) {
    for (std::size_t i = 0; i < x.numel(); ++i)
        if (x.at(i) != 0.0 && x.at(i) != 1.0)
            throw std::invalid_argument("bernoulli: observations must be 0/1");
}

}  // namespace axdg
