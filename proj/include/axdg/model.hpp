#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "axdg/network.hpp"
#include "axdg/params.hpp"

namespace axdg {

enum class ModelVariant {
    kVae,
    kAvae,
    kAdgm,
    kSdgm,
    kM2,
    kAdgmDetAux,
    kAdgmUninformedAux,
    kPotentialFit,
};

std::string variant_name(ModelVariant v);
ModelVariant variant_from_name(const std::string& name);

enum class ObsKind { kBernoulli, kGaussian };

struct ModelSpec {
    ModelVariant variant = ModelVariant::kVae;
    int dim_x = 0;
    int n_classes = 0;  // C; 0 for unsupervised variants
    int dim_a = 0;
    int dim_z = 0;
    std::vector<int> hidden;
    ObsKind observation = ObsKind::kBernoulli;
    /// ADGM only: condition the generative auxiliary net on x as well
    /// (the graphical-model form); the benchmark form drops x.
    bool aux_gen_conditions_on_x = false;
    bool batch_norm = false;  // hidden layers of every network
    int avae_layers = 1;      // AVAE stochastic depth L, 1 or 2

    bool semi_supervised() const;
    bool has_aux() const;
    void validate() const;
};

/// A model variant plus its parameter store and the networks that
/// parameterize it. Inputs to each network are concatenated in the fixed
/// order [a; z; y; x] (each net using its subset), so checkpoints are
/// well-defined.
struct Model {
    ModelSpec spec;
    ParamStore params;
    std::vector<Network> nets;

    bool has_net(std::string_view role) const;
    const Network& net(std::string_view role) const;
};

/// Builds and Glorot-initializes all networks for the variant.
Model make_model(const ModelSpec& spec, std::uint64_t seed);

}  // namespace axdg
