#include "axdg/network.hpp"

#include <cmath>

namespace axdg {

namespace {

std::string key(const Network& net, const std::string& layer, const char* what) {
    return net.name + "/" + layer + "/" + what;
}

void register_linear(ParamStore& store, const Network& net, const std::string& layer,
                     int fan_in, int fan_out, RngStream& rng) {
    store.add(key(net, layer, "W"), glorot_init(fan_in, fan_out, rng));
    store.add(key(net, layer, "b"), Tensor::zeros({(std::size_t)fan_out}));
}

Value linear(Graph& g, const Network& net, const std::string& layer, Value x) {
    Value w = g.param(key(net, layer, "W"));
    Value b = g.param(key(net, layer, "b"));
    return g.add(g.matmul(x, w), b);
}

}  // namespace

Tensor glorot_init(int fan_in, int fan_out, RngStream& rng) {
    if (fan_in < 1 || fan_out < 1) throw std::invalid_argument("glorot: fans must be >= 1");
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    return rng.uniform_tensor({(std::size_t)fan_in, (std::size_t)fan_out}, -limit, limit);
}

void register_network(ParamStore& store, const Network& net, RngStream& rng) {
    if (net.mlp.input_dim < 1 || net.mlp.hidden.empty())
        throw std::invalid_argument("network " + net.name + ": bad spec");
    int in = net.mlp.input_dim;
    for (std::size_t l = 0; l < net.mlp.hidden.size(); ++l) {
        const int out = net.mlp.hidden[l];
        const std::string layer = "h" + std::to_string(l);
        register_linear(store, net, layer, in, out, rng);
        if (net.mlp.batch_norm) {
            store.add(key(net, layer, "gamma"), Tensor::full({(std::size_t)out}, 1.0));
            store.add(key(net, layer, "beta"), Tensor::zeros({(std::size_t)out}));
            store.add(key(net, layer, "run_mean"), Tensor::zeros({(std::size_t)out}), false);
            store.add(key(net, layer, "run_var"), Tensor::full({(std::size_t)out}, 1.0), false);
        }
        in = out;
    }
    if (net.head.kind == HeadKind::kGaussian) {
        register_linear(store, net, "mu", in, net.head.output_dim, rng);
        register_linear(store, net, "log_var", in, net.head.output_dim, rng);
    } else {
        register_linear(store, net, "logits", in, net.head.output_dim, rng);
    }
}

Value mlp_forward(Graph& g, const Network& net, std::span<const Value> inputs, RunMode mode) {
    if (inputs.empty()) throw std::invalid_argument("mlp_forward: no inputs");
    Value h = inputs.size() == 1 ? inputs[0] : g.concat_cols(inputs);
    if ((int)g.value(h).dim(1) != net.mlp.input_dim)
        throw std::invalid_argument("network " + net.name + ": input dim " +
                                    g.value(h).shape_str() + " != " +
                                    std::to_string(net.mlp.input_dim));
    ParamStore& store = *g.params();
    for (std::size_t l = 0; l < net.mlp.hidden.size(); ++l) {
        const std::string layer = "h" + std::to_string(l);
        Value a = linear(g, net, layer, h);
        if (net.mlp.batch_norm) {
            Value gamma = g.param(key(net, layer, "gamma"));
            Value beta = g.param(key(net, layer, "beta"));
            if (mode == RunMode::kTrain) {
                Tensor batch_mean, batch_var;
                a = g.batch_norm(a, gamma, beta, net.mlp.bn_eps, &batch_mean, &batch_var);
                Tensor& rm = store.value(store.require(key(net, layer, "run_mean")));
                Tensor& rv = store.value(store.require(key(net, layer, "run_var")));
                const double m = net.mlp.bn_momentum;
                for (std::size_t j = 0; j < rm.numel(); ++j) {
                    rm.at(j) = m * rm.at(j) + (1.0 - m) * batch_mean.at(j);
                    rv.at(j) = m * rv.at(j) + (1.0 - m) * batch_var.at(j);
                }
            } else {
                const Tensor& rm = store.value(store.require(key(net, layer, "run_mean")));
                const Tensor& rv = store.value(store.require(key(net, layer, "run_var")));
                Tensor invstd({rv.numel()});
                for (std::size_t j = 0; j < rv.numel(); ++j)
                    invstd.at(j) = 1.0 / std::sqrt(rv.at(j) + net.mlp.bn_eps);
                Value centered = g.add(a, g.leaf([&] {
                    Tensor neg_rm({rm.numel()});
                    for (std::size_t j = 0; j < rm.numel(); ++j) neg_rm.at(j) = -rm.at(j);
                    return neg_rm;
                }()));
                Value xhat = g.mul(centered, g.leaf(std::move(invstd)));
                a = g.add(g.mul(xhat, gamma), beta);
            }
        }
        h = g.relu(a);
    }
    return h;
}

GaussianParamsV gaussian_head(Graph& g, const Network& net, Value h) {
    if (net.head.kind != HeadKind::kGaussian)
        throw std::invalid_argument("network " + net.name + ": not a Gaussian head");
    return make_gaussian_params(g, linear(g, net, "mu", h), linear(g, net, "log_var", h));
}

CategoricalParamsV categorical_head(Graph& g, const Network& net, Value h) {
    if (net.head.kind != HeadKind::kCategorical)
        throw std::invalid_argument("network " + net.name + ": not a categorical head");
    return make_categorical_params(g, linear(g, net, "logits", h));
}

BernoulliParamsV bernoulli_head(Graph& g, const Network& net, Value h) {
    if (net.head.kind != HeadKind::kBernoulli)
        throw std::invalid_argument("network " + net.name + ": not a Bernoulli head");
    return make_bernoulli_params(g, linear(g, net, "logits", h));
}

HeadOutput head_forward(Graph& g, const Network& net, Value h) {
    switch (net.head.kind) {
        case HeadKind::kGaussian: return gaussian_head(g, net, h);
        case HeadKind::kCategorical: return categorical_head(g, net, h);
        case HeadKind::kBernoulli: return bernoulli_head(g, net, h);
    }
    throw std::logic_error("unreachable");
}

HeadOutput network_forward(Graph& g, const Network& net, std::span<const Value> inputs,
                           RunMode mode) {
    return head_forward(g, net, mlp_forward(g, net, inputs, mode));
}

GaussianParamsV network_gaussian(Graph& g, const Network& net, std::span<const Value> inputs,
                                 RunMode mode) {
    return gaussian_head(g, net, mlp_forward(g, net, inputs, mode));
}

CategoricalParamsV network_categorical(Graph& g, const Network& net,
                                       std::span<const Value> inputs, RunMode mode) {
    return categorical_head(g, net, mlp_forward(g, net, inputs, mode));
}

BernoulliParamsV network_bernoulli(Graph& g, const Network& net,
                                   std::span<const Value> inputs, RunMode mode) {
    return bernoulli_head(g, net, mlp_forward(g, net, inputs, mode));
}

}  // namespace axdg
