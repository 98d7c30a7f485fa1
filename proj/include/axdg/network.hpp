#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "axdg/distributions.hpp"
#include "axdg/graph.hpp"
#include "axdg/rng.hpp"

namespace axdg {

struct MLPSpec {
    int input_dim = 0;
    std::vector<int> hidden;  // one entry per hidden layer, all ReLU
    bool batch_norm = false;
    double bn_momentum = 0.9;
    double bn_eps = 1e-5;
};

enum class HeadKind { kGaussian, kCategorical, kBernoulli };

struct HeadSpec {
    HeadKind kind = HeadKind::kGaussian;
    int output_dim = 0;
};

/// A fully connected trunk plus one stochastic head. The Gaussian head owns
/// two independent linear maps (mu and log sigma^2); the other heads one.
/// Parameters live in a ParamStore under "<name>/<layer>/{W,b,...}".
struct Network {
    std::string name;
    MLPSpec mlp;
    HeadSpec head;
};

enum class RunMode { kTrain, kEval };

/// Uniform in [-L, L] with L = sqrt(6 / (fan_in + fan_out)).
Tensor glorot_init(int fan_in, int fan_out, RngStream& rng);

/// Allocates and initializes every parameter of the network in the store.
void register_network(ParamStore& store, const Network& net, RngStream& rng);

/// Trunk forward pass; inputs are concatenated along the feature axis in the
/// order given. In train mode batch-norm layers normalize by batch
/// statistics and update the running stats in the store (single writer).
Value mlp_forward(Graph& g, const Network& net, std::span<const Value> inputs, RunMode mode);

GaussianParamsV gaussian_head(Graph& g, const Network& net, Value h);
CategoricalParamsV categorical_head(Graph& g, const Network& net, Value h);
BernoulliParamsV bernoulli_head(Graph& g, const Network& net, Value h);

using HeadOutput = std::variant<GaussianParamsV, CategoricalParamsV, BernoulliParamsV>;
HeadOutput head_forward(Graph& g, const Network& net, Value h);

/// Full pass: trunk then head.
HeadOutput network_forward(Graph& g, const Network& net, std::span<const Value> inputs,
                           RunMode mode);
GaussianParamsV network_gaussian(Graph& g, const Network& net, std::span<const Value> inputs,
                                 RunMode mode);
CategoricalParamsV network_categorical(Graph& g, const Network& net,
                                       std::span<const Value> inputs, RunMode mode);
BernoulliParamsV network_bernoulli(Graph& g, const Network& net,
                                   std::span<const Value> inputs, RunMode mode);

}  // namespace axdg
