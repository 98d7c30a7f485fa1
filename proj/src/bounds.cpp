#include "axdg/bounds.hpp"

#include <cmath>

#include "axdg/distributions.hpp"

namespace axdg {

namespace {

Value std_normal_logp(Graph& g, Value v) {
    return gaussian_log_density(g, v, standard_normal(g, g.value(v).shape()));
}

Value obs_log_likelihood(Graph& g, const Model& m, std::span<const Value> inputs,
                         const Tensor& x, RunMode mode) {
    const Network& px = m.net("p_x");
    if (m.spec.observation == ObsKind::kBernoulli)
        return bernoulli_log_likelihood(g, x, network_bernoulli(g, px, inputs, mode));
    GaussianParamsV p = network_gaussian(g, px, inputs, mode);
    return gaussian_log_density(g, g.leaf(x), p);
}

/// Shared inference-side state: data leaf, q(a|x) and the a draw.
struct AuxState {
    Value x_leaf;
    GaussianParamsV qa;  // invalid for M2
    Value a;             // invalid for M2
};

AuxState infer_a(Graph& g, const Model& m, const Tensor& x, const Tensor* eps_a,
                 RunMode mode) {
    AuxState s;
    s.x_leaf = g.leaf(x);
    if (m.spec.variant == ModelVariant::kM2) return s;
    const Value in[] = {s.x_leaf};
    s.qa = network_gaussian(g, m.net("q_a"), in, mode);
    if (m.spec.variant == ModelVariant::kAdgmDetAux) {
        s.a = s.qa.mu;  // a := mu_phi(x), no noise
    } else {
        if (!eps_a) throw std::invalid_argument("bound: eps_a required");
        s.a = gaussian_rsample(g, s.qa, *eps_a);
    }
    return s;
}

CategoricalParamsV classifier(Graph& g, const Model& m, const AuxState& s, RunMode mode) {
    if (m.spec.variant == ModelVariant::kM2) {
        const Value in[] = {s.x_leaf};
        return network_categorical(g, m.net("q_y"), in, mode);
    }
    const Value in[] = {s.a, s.x_leaf};
    return network_categorical(g, m.net("q_y"), in, mode);
}

/// Terms of the joint/inference log-densities for one fixed label.
struct YTerms {
    Value recon;        // log p(x|.)
    Value kl_core;      // (log p(y) + log p(z)) - log q(z|.)
    Value aux_pair;     // log p(a|.) - log q(a|x); invalid if no aux densities
    Value non_recon;    // kl_core (+ aux_pair), grouped
};

YTerms labeled_terms(Graph& g, const Model& m, const AuxState& s, const Tensor& x,
                     const Tensor& y_onehot, const Tensor& eps_z, RunMode mode) {
    const ModelSpec& spec = m.spec;
    const std::size_t batch = x.dim(0);
    Value y_leaf = g.leaf(y_onehot);

    GaussianParamsV qz;
    if (spec.variant == ModelVariant::kM2) {
        const Value in[] = {y_leaf, s.x_leaf};
        qz = network_gaussian(g, m.net("q_z"), in, mode);
    } else {
        const Value in[] = {s.a, y_leaf, s.x_leaf};
        qz = network_gaussian(g, m.net("q_z"), in, mode);
    }
    Value z = gaussian_rsample(g, qz, eps_z);

    YTerms t;
    if (spec.variant == ModelVariant::kSdgm) {
        const Value in[] = {s.a, z, y_leaf};
        t.recon = obs_log_likelihood(g, m, in, x, mode);
    } else {
        const Value in[] = {z, y_leaf};
        t.recon = obs_log_likelihood(g, m, in, x, mode);
    }

    Value log_py =
        g.constant_full({batch}, -std::log(static_cast<double>(spec.n_classes)));
    Value log_pz = std_normal_logp(g, z);
    Value log_qz = gaussian_log_density(g, z, qz);
    t.kl_core = g.add(g.add(log_py, log_pz), g.neg(log_qz));

    switch (spec.variant) {
        case ModelVariant::kAdgm:
        case ModelVariant::kSdgm: {
            std::vector<Value> pa_in = {z, y_leaf};
            if (spec.variant == ModelVariant::kAdgm && spec.aux_gen_conditions_on_x)
                pa_in.push_back(s.x_leaf);
            GaussianParamsV pa = network_gaussian(g, m.net("p_a"), pa_in, mode);
            t.aux_pair = g.sub(gaussian_log_density(g, s.a, pa),
                               gaussian_log_density(g, s.a, s.qa));
            break;
        }
        case ModelVariant::kAdgmUninformedAux:
            t.aux_pair =
                g.sub(std_normal_logp(g, s.a), gaussian_log_density(g, s.a, s.qa));
            break;
        default:
            break;  // M2 and det-aux carry no a-density terms
    }
    t.non_recon = t.aux_pair.valid() ? g.add(t.kl_core, t.aux_pair) : t.kl_core;
    return t;
}

Tensor class_rows(std::size_t batch, int n_classes, int c) {
    Tensor y({batch, (std::size_t)n_classes});
    for (std::size_t i = 0; i < batch; ++i) y.at(i, (std::size_t)c) = 1.0;
    return y;
}

void require_semi_supervised(const Model& m, const char* what) {
    if (!m.spec.semi_supervised())
        throw std::invalid_argument(std::string(what) + ": variant " +
                                    variant_name(m.spec.variant) + " has no classifier");
}

}  // namespace

BoundParts vae_elbo(Graph& g, const Model& m, const Tensor& x, const Tensor& eps_z,
                    RunMode mode) {
    if (m.spec.variant != ModelVariant::kVae)
        throw std::invalid_argument("vae_elbo: variant is " + variant_name(m.spec.variant));
    Value x_leaf = g.leaf(x);
    const Value in[] = {x_leaf};
    GaussianParamsV qz = network_gaussian(g, m.net("q_z"), in, mode);
    Value z = gaussian_rsample(g, qz, eps_z);

    BoundParts bp;
    const Value px_in[] = {z};
    bp.recon = obs_log_likelihood(g, m, px_in, x, mode);
    bp.kl_core = g.add(std_normal_logp(g, z), g.neg(gaussian_log_density(g, z, qz)));
    bp.kl = bp.kl_core;
    bp.total = g.add(bp.recon, bp.kl);
    return bp;
}

BoundParts avae_elbo(Graph& g, const Model& m, const Tensor& x, std::span<const Tensor> eps_a,
                     std::span<const Tensor> eps_z, RunMode mode) {
    if (m.spec.variant != ModelVariant::kAvae)
        throw std::invalid_argument("avae_elbo: variant is " + variant_name(m.spec.variant));
    const int layers = m.spec.avae_layers;
    if ((int)eps_a.size() != layers || (int)eps_z.size() != layers)
        throw std::invalid_argument("avae_elbo: need one eps per stochastic layer");

    Value x_leaf = g.leaf(x);
    BoundParts bp;

    if (layers == 1) {
        const Value qa_in[] = {x_leaf};
        GaussianParamsV qa = network_gaussian(g, m.net("q_a"), qa_in, mode);
        Value a = gaussian_rsample(g, qa, eps_a[0]);
        const Value qz_in[] = {a, x_leaf};
        GaussianParamsV qz = network_gaussian(g, m.net("q_z"), qz_in, mode);
        Value z = gaussian_rsample(g, qz, eps_z[0]);

        const Value px_in[] = {z};
        bp.recon = obs_log_likelihood(g, m, px_in, x, mode);
        bp.kl_core = g.add(std_normal_logp(g, z), g.neg(gaussian_log_density(g, z, qz)));
        const Value pa_in[] = {z, x_leaf};
        GaussianParamsV pa = network_gaussian(g, m.net("p_a"), pa_in, mode);
        bp.aux_pair =
            g.sub(gaussian_log_density(g, a, pa), gaussian_log_density(g, a, qa));
        bp.kl = g.add(bp.kl_core, bp.aux_pair);
        bp.total = g.add(bp.recon, bp.kl);
        return bp;
    }

    // L = 2: q(a1|x) q(z1|a1,x) q(a2|a1,x) q(z2|a2,z1)
    //        p(x|z1) p(z1|z2) p(z2) p(a2|z2) p(a1|z1,z2)
    const Value qa1_in[] = {x_leaf};
    GaussianParamsV qa1 = network_gaussian(g, m.net("q_a1"), qa1_in, mode);
    Value a1 = gaussian_rsample(g, qa1, eps_a[0]);
    const Value qz1_in[] = {a1, x_leaf};
    GaussianParamsV qz1 = network_gaussian(g, m.net("q_z1"), qz1_in, mode);
    Value z1 = gaussian_rsample(g, qz1, eps_z[0]);
    const Value qa2_in[] = {a1, x_leaf};
    GaussianParamsV qa2 = network_gaussian(g, m.net("q_a2"), qa2_in, mode);
    Value a2 = gaussian_rsample(g, qa2, eps_a[1]);
    const Value qz2_in[] = {a2, z1};
    GaussianParamsV qz2 = network_gaussian(g, m.net("q_z2"), qz2_in, mode);
    Value z2 = gaussian_rsample(g, qz2, eps_z[1]);

    const Value px_in[] = {z1};
    bp.recon = obs_log_likelihood(g, m, px_in, x, mode);

    const Value pz1_in[] = {z2};
    GaussianParamsV pz1 = network_gaussian(g, m.net("p_z1"), pz1_in, mode);
    Value log_pz = g.add(gaussian_log_density(g, z1, pz1), std_normal_logp(g, z2));
    Value log_qz =
        g.add(gaussian_log_density(g, z1, qz1), gaussian_log_density(g, z2, qz2));
    bp.kl_core = g.add(log_pz, g.neg(log_qz));

    const Value pa2_in[] = {z2};
    GaussianParamsV pa2 = network_gaussian(g, m.net("p_a2"), pa2_in, mode);
    const Value pa1_in[] = {z1, z2};
    GaussianParamsV pa1 = network_gaussian(g, m.net("p_a1"), pa1_in, mode);
    Value pair1 = g.sub(gaussian_log_density(g, a1, pa1), gaussian_log_density(g, a1, qa1));
    Value pair2 = g.sub(gaussian_log_density(g, a2, pa2), gaussian_log_density(g, a2, qa2));
    bp.aux_pair = g.add(pair1, pair2);
    bp.kl = g.add(bp.kl_core, bp.aux_pair);
    bp.total = g.add(bp.recon, bp.kl);
    return bp;
}

BoundParts labeled_bound(Graph& g, const Model& m, const Tensor& x, const Tensor& y_onehot,
                         const Tensor& eps_a, const Tensor& eps_z, RunMode mode) {
    require_semi_supervised(m, "labeled_bound");
    check_one_hot(y_onehot);
    AuxState s = infer_a(g, m, x, &eps_a, mode);
    YTerms t = labeled_terms(g, m, s, x, y_onehot, eps_z, mode);
    BoundParts bp;
    bp.recon = t.recon;
    bp.kl_core = t.kl_core;
    bp.aux_pair = t.aux_pair;
    bp.kl = t.non_recon;
    bp.total = g.add(bp.recon, bp.kl);
    return bp;
}

BoundParts unlabeled_bound(Graph& g, const Model& m, const Tensor& x, const Tensor& eps_a,
                           std::span<const Tensor> eps_z_per_class, RunMode mode) {
    require_semi_supervised(m, "unlabeled_bound");
    const int c_total = m.spec.n_classes;
    if ((int)eps_z_per_class.size() != c_total)
        throw std::invalid_argument("unlabeled_bound: need one eps_z per class");
    const std::size_t batch = x.dim(0);

    AuxState s = infer_a(g, m, x, &eps_a, mode);
    CategoricalParamsV qy = classifier(g, m, s, mode);

    BoundParts bp;
    Value recon_w, non_recon_w;
    for (int c = 0; c < c_total; ++c) {
        Tensor yc = class_rows(batch, c_total, c);
        YTerms t = labeled_terms(g, m, s, x, yc, eps_z_per_class[c], mode);
        Value wc = g.exp(categorical_log_prob(g, yc, qy));
        Value rc = g.mul(wc, t.recon);
        Value nc = g.mul(wc, t.non_recon);
        recon_w = c == 0 ? rc : g.add(recon_w, rc);
        non_recon_w = c == 0 ? nc : g.add(non_recon_w, nc);
    }
    bp.entropy = categorical_entropy(g, qy);
    bp.recon = recon_w;
    bp.kl_core = non_recon_w;  // class-weighted, aux pairs folded in
    bp.kl = g.add(non_recon_w, bp.entropy);
    bp.total = g.add(bp.recon, bp.kl);
    return bp;
}

Value unlabeled_bound_direct_form(Graph& g, const Model& m, const Tensor& x,
                                  const Tensor& eps_a, std::span<const Tensor> eps_z_per_class,
                                  RunMode mode) {
    require_semi_supervised(m, "unlabeled_bound");
    const int c_total = m.spec.n_classes;
    if ((int)eps_z_per_class.size() != c_total)
        throw std::invalid_argument("unlabeled_bound: need one eps_z per class");
    const std::size_t batch = x.dim(0);

    AuxState s = infer_a(g, m, x, &eps_a, mode);
    CategoricalParamsV qy = classifier(g, m, s, mode);

    Value total;
    for (int c = 0; c < c_total; ++c) {
        Tensor yc = class_rows(batch, c_total, c);
        YTerms t = labeled_terms(g, m, s, x, yc, eps_z_per_class[c], mode);
        Value log_wc = categorical_log_prob(g, yc, qy);
        Value f = g.add(t.recon, t.non_recon);
        Value contrib = g.mul(g.exp(log_wc), g.sub(f, log_wc));
        total = c == 0 ? contrib : g.add(total, contrib);
    }
    return total;
}

Value classification_nll(Graph& g, const Model& m, const Tensor& x, const Tensor& y_onehot,
                         const Tensor& eps_a, RunMode mode) {
    require_semi_supervised(m, "classification_nll");
    check_one_hot(y_onehot);
    AuxState s = infer_a(g, m, x, &eps_a, mode);
    CategoricalParamsV qy = classifier(g, m, s, mode);
    return g.neg(categorical_log_prob(g, y_onehot, qy));
}

Value classifier_log_probs(Graph& g, const Model& m, const Tensor& x, const Tensor& eps_a,
                           RunMode mode) {
    require_semi_supervised(m, "classifier_log_probs");
    AuxState s = infer_a(g, m, x, &eps_a, mode);
    return classifier(g, m, s, mode).log_probs;
}

double alpha(double beta, long n_labeled, long n_unlabeled) {
    if (n_labeled < 1) throw std::invalid_argument("alpha: N_l must be >= 1");
    return beta * static_cast<double>(n_labeled + n_unlabeled) /
           static_cast<double>(n_labeled);
}

Value labeled_objective(Graph& g, const Model& m, const Tensor& x, const Tensor& y_onehot,
                        double alpha_weight, const Tensor& eps_a, const Tensor& eps_z,
                        double tau, RunMode mode) {
    require_semi_supervised(m, "labeled_objective");
    check_one_hot(y_onehot);
    if (alpha_weight < 0.0) throw std::invalid_argument("labeled_objective: alpha < 0");
    AuxState s = infer_a(g, m, x, &eps_a, mode);
    YTerms t = labeled_terms(g, m, s, x, y_onehot, eps_z, mode);
    Value tempered = g.add(t.recon, g.scale(t.non_recon, tau));
    Value loss = g.neg(tempered);
    if (alpha_weight != 0.0) {
        CategoricalParamsV qy = classifier(g, m, s, mode);
        Value ce = g.neg(categorical_log_prob(g, y_onehot, qy));
        loss = g.add(loss, g.scale(ce, alpha_weight));
    }
    return g.mean(loss, 0);
}

BoundParts potential_fit_bound(Graph& g, const Model& m, const PotentialFn& log_potential,
                               const Tensor& eps_a, const Tensor& eps_z) {
    if (m.spec.variant != ModelVariant::kPotentialFit)
        throw std::invalid_argument("potential_fit_bound: variant is " +
                                    variant_name(m.spec.variant));
    const std::size_t batch = eps_a.dim(0);
    const std::size_t da = (std::size_t)m.spec.dim_a;
    if (eps_a.rank() != 2 || eps_a.dim(1) != da)
        throw std::invalid_argument("potential_fit_bound: eps_a shape");

    // q(a): learned unconditional diagonal Gaussian, broadcast over the batch
    Value mu = g.add(g.constant_full({batch, da}, 0.0), g.param("q_a/mu"));
    Value lv = g.add(g.constant_full({batch, da}, 0.0), g.param("q_a/log_var"));
    GaussianParamsV qa = make_gaussian_params(g, mu, lv);
    Value a = gaussian_rsample(g, qa, eps_a);

    const Value qz_in[] = {a};
    GaussianParamsV qz = network_gaussian(g, m.net("q_z"), qz_in, RunMode::kEval);
    Value z = gaussian_rsample(g, qz, eps_z);

    BoundParts bp;
    bp.recon = log_potential(g, z);  // U(z) plays the data-fit role
    bp.kl_core = g.neg(gaussian_log_density(g, z, qz));
    const Value pa_in[] = {z};
    GaussianParamsV pa = network_gaussian(g, m.net("p_a"), pa_in, RunMode::kEval);
    bp.aux_pair = g.sub(gaussian_log_density(g, a, pa), gaussian_log_density(g, a, qa));
    bp.kl = g.add(bp.kl_core, bp.aux_pair);
    bp.total = g.add(bp.recon, bp.kl);
    return bp;
}

Objective total_objective(Graph& g, const Model& m, const Batch& batch, double alpha_weight,
                          double tau, int n_mc, RngStream noise, RunMode mode) {
    const std::size_t n_l = batch.n_labeled(), n_u = batch.n_unlabeled();
    if (n_l == 0 && n_u == 0) throw std::invalid_argument("total_objective: empty batch");
    if (n_mc < 1) throw std::invalid_argument("total_objective: n_mc must be >= 1");
    const ModelSpec& spec = m.spec;
    const std::size_t da = (std::size_t)spec.dim_a, dz = (std::size_t)spec.dim_z;

    auto averaged = [&](std::vector<Value> v) {
        Value acc = v[0];
        for (std::size_t i = 1; i < v.size(); ++i) acc = g.add(acc, v[i]);
        return n_mc == 1 ? acc : g.scale(acc, 1.0 / n_mc);
    };

    Objective obj;
    Value loss_sum;  // scalar accumulator over both parts

    if (n_l > 0) {
        RngStream part = noise.child(1);
        std::vector<Value> elbos, ces;
        for (int s = 0; s < n_mc; ++s) {
            Tensor eps_a;
            if (spec.has_aux())
                eps_a = part.child(rng_tag::kEpsA).child(s).normal_tensor({n_l, da});
            Tensor eps_z = part.child(rng_tag::kEpsZ).child(s).normal_tensor({n_l, dz});
            AuxState st = infer_a(g, m, batch.x_labeled, &eps_a, mode);
            YTerms t = labeled_terms(g, m, st, batch.x_labeled, batch.y_labeled, eps_z, mode);
            elbos.push_back(g.add(t.recon, g.scale(t.non_recon, tau)));
            CategoricalParamsV qy = classifier(g, m, st, mode);
            ces.push_back(g.neg(categorical_log_prob(g, batch.y_labeled, qy)));
        }
        Value elbo = averaged(std::move(elbos));
        Value ce = averaged(std::move(ces));
        Value l_items = g.add(g.neg(elbo), g.scale(ce, alpha_weight));
        obj.labeled_loss_mean = g.mean(g.neg(elbo), 0);
        obj.class_nll_mean = g.mean(ce, 0);
        loss_sum = g.sum(l_items, 0);
    }

    if (n_u > 0) {
        RngStream part = noise.child(2);
        std::vector<Value> elbos;
        for (int s = 0; s < n_mc; ++s) {
            Value tempered;
            if (spec.variant == ModelVariant::kVae) {
                Tensor eps_z = part.child(rng_tag::kEpsZ).child(s).normal_tensor({n_u, dz});
                BoundParts bp = vae_elbo(g, m, batch.x_unlabeled, eps_z, mode);
                tempered = g.add(bp.recon, g.scale(bp.kl, tau));
            } else if (spec.variant == ModelVariant::kAvae) {
                std::vector<Tensor> eps_a, eps_z;
                for (int l = 0; l < spec.avae_layers; ++l) {
                    eps_a.push_back(
                        part.child(rng_tag::kEpsA).child(s).child(l).normal_tensor({n_u, da}));
                    eps_z.push_back(
                        part.child(rng_tag::kEpsZ).child(s).child(l).normal_tensor({n_u, dz}));
                }
                BoundParts bp = avae_elbo(g, m, batch.x_unlabeled, eps_a, eps_z, mode);
                tempered = g.add(bp.recon, g.scale(bp.kl, tau));
            } else {
                Tensor eps_a;
                if (spec.has_aux())
                    eps_a = part.child(rng_tag::kEpsA).child(s).normal_tensor({n_u, da});
                std::vector<Tensor> eps_z;
                for (int c = 0; c < spec.n_classes; ++c)
                    eps_z.push_back(
                        part.child(rng_tag::kEpsZ).child(s).child(c).normal_tensor({n_u, dz}));
                BoundParts bp = unlabeled_bound(g, m, batch.x_unlabeled, eps_a, eps_z, mode);
                tempered = g.add(bp.recon, g.scale(bp.kl, tau));
            }
            elbos.push_back(tempered);
        }
        Value u_items = g.neg(averaged(std::move(elbos)));
        obj.unlabeled_loss_mean = g.mean(u_items, 0);
        Value u_sum = g.sum(u_items, 0);
        loss_sum = loss_sum.valid() ? g.add(loss_sum, u_sum) : u_sum;
    }

    obj.loss = g.scale(loss_sum, 1.0 / static_cast<double>(n_l + n_u));
    return obj;
}

Tensor one_hot(std::span<const int> labels, int n_classes) {
    Tensor y({labels.size(), (std::size_t)n_classes});
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= n_classes)
            throw std::invalid_argument("one_hot: label out of range");
        y.at(i, (std::size_t)labels[i]) = 1.0;
    }
    return y;
}

}  // namespace axdg
