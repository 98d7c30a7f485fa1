#include "axdg/model.hpp"

#include <stdexcept>

namespace axdg {

std::string variant_name(ModelVariant v) {
    switch (v) {
        case ModelVariant::kVae: return "vae";
        case ModelVariant::kAvae: return "avae";
        case ModelVariant::kAdgm: return "adgm";
        case ModelVariant::kSdgm: return "sdgm";
        case ModelVariant::kM2: return "m2";
        case ModelVariant::kAdgmDetAux: return "adgm-det-aux";
        case ModelVariant::kAdgmUninformedAux: return "adgm-uninformed-aux";
        case ModelVariant::kPotentialFit: return "potential-fit";
    }
    throw std::logic_error("unreachable");
}

ModelVariant variant_from_name(const std::string& name) {
    if (name == "vae") return ModelVariant::kVae;
    if (name == "avae") return ModelVariant::kAvae;
    if (name == "adgm") return ModelVariant::kAdgm;
    if (name == "sdgm") return ModelVariant::kSdgm;
    if (name == "m2") return ModelVariant::kM2;
    if (name == "adgm-det-aux") return ModelVariant::kAdgmDetAux;
    if (name == "adgm-uninformed-aux") return ModelVariant::kAdgmUninformedAux;
    if (name == "potential-fit") return ModelVariant::kPotentialFit;
    throw std::invalid_argument("unknown model variant: " + name);
}

bool ModelSpec::semi_supervised() const {
    switch (variant) {
        case ModelVariant::kAdgm:
        case ModelVariant::kSdgm:
        case ModelVariant::kM2:
        case ModelVariant::kAdgmDetAux:
        case ModelVariant::kAdgmUninformedAux: return true;
        default: return false;
    }
}

bool ModelSpec::has_aux() const {
    return variant != ModelVariant::kVae && variant != ModelVariant::kM2;
}

void ModelSpec::validate() const {
    if (variant != ModelVariant::kPotentialFit && dim_x < 1)
        throw std::invalid_argument("model: dim_x must be >= 1");
    if (hidden.empty() && variant != ModelVariant::kPotentialFit)
        throw std::invalid_argument("model: at least one hidden layer");
    if (semi_supervised() && n_classes < 2)
        throw std::invalid_argument("model: semi-supervised variants need n_classes >= 2");
    if (has_aux() && dim_a < 1) throw std::invalid_argument("model: dim_a must be >= 1");
    if (dim_z < 1) throw std::invalid_argument("model: dim_z must be >= 1");
    if (variant == ModelVariant::kAvae && avae_layers != 1 && avae_layers != 2)
        throw std::invalid_argument("model: AVAE supports L in {1, 2}");
    if (variant == ModelVariant::kPotentialFit && dim_z != 2)
        throw std::invalid_argument("model: the potential target is 2-D");
}

bool Model::has_net(std::string_view role) const {
    for (const Network& n : nets)
        if (n.name == role) return true;
    return false;
}

const Network& Model::net(std::string_view role) const {
    for (const Network& n : nets)
        if (n.name == role) return n;
    throw std::invalid_argument("model has no network '" + std::string(role) + "'");
}

Model make_model(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    Model m;
    m.spec = spec;

    const int x = spec.dim_x, c = spec.n_classes, a = spec.dim_a, z = spec.dim_z;
    auto net = [&](std::string name, int in, HeadKind kind, int out) {
        Network n;
        n.name = std::move(name);
        n.mlp = {in, spec.hidden, spec.batch_norm};
        n.head = {kind, out};
        m.nets.push_back(std::move(n));
    };
    const HeadKind obs =
        spec.observation == ObsKind::kBernoulli ? HeadKind::kBernoulli : HeadKind::kGaussian;

    switch (spec.variant) {
        case ModelVariant::kVae:
            net("q_z", x, HeadKind::kGaussian, z);
            net("p_x", z, obs, x);
            break;
        case ModelVariant::kAvae:
            if (spec.avae_layers == 1) {
                net("q_a", x, HeadKind::kGaussian, a);
                net("q_z", a + x, HeadKind::kGaussian, z);
                net("p_a", z + x, HeadKind::kGaussian, a);
                net("p_x", z, obs, x);
            } else {
                net("q_a1", x, HeadKind::kGaussian, a);
                net("q_z1", a + x, HeadKind::kGaussian, z);
                net("q_a2", a + x, HeadKind::kGaussian, a);
                net("q_z2", a + z, HeadKind::kGaussian, z);
                net("p_x", z, obs, x);
                net("p_z1", z, HeadKind::kGaussian, z);
                net("p_a2", z, HeadKind::kGaussian, a);
                net("p_a1", z + z, HeadKind::kGaussian, a);
            }
            break;
        case ModelVariant::kAdgm:
            net("q_a", x, HeadKind::kGaussian, a);
            net("q_y", a + x, HeadKind::kCategorical, c);
            net("q_z", a + c + x, HeadKind::kGaussian, z);
            net("p_a", z + c + (spec.aux_gen_conditions_on_x ? x : 0), HeadKind::kGaussian, a);
            net("p_x", z + c, obs, x);
            break;
        case ModelVariant::kSdgm:
            net("q_a", x, HeadKind::kGaussian, a);
            net("q_y", a + x, HeadKind::kCategorical, c);
            net("q_z", a + c + x, HeadKind::kGaussian, z);
            net("p_a", z + c, HeadKind::kGaussian, a);
            net("p_x", a + z + c, obs, x);
            break;
        case ModelVariant::kAdgmDetAux:
        case ModelVariant::kAdgmUninformedAux:
            net("q_a", x, HeadKind::kGaussian, a);
            net("q_y", a + x, HeadKind::kCategorical, c);
            net("q_z", a + c + x, HeadKind::kGaussian, z);
            net("p_x", z + c, obs, x);
            break;
        case ModelVariant::kM2:
            net("q_z", c + x, HeadKind::kGaussian, z);
            net("q_y", x, HeadKind::kCategorical, c);
            net("p_x", z + c, obs, x);
            break;
        case ModelVariant::kPotentialFit:
            net("q_z", a, HeadKind::kGaussian, z);
            net("p_a", z, HeadKind::kGaussian, a);
            break;
    }

    RngStream rng = RngStream(seed).child(rng_tag::kInit);
    if (spec.variant == ModelVariant::kPotentialFit) {
        m.params.add("q_a/mu", Tensor::zeros({1, (std::size_t)a}));
        m.params.add("q_a/log_var", Tensor::zeros({1, (std::size_t)a}));
    }
    for (std::size_t i = 0; i < m.nets.size(); ++i) {
        RngStream net_rng = rng.child(i);
        register_network(m.params, m.nets[i], net_rng);
    }
    return m;
}

}  // namespace axdg
