#pragma once

#include <functional>
#include <span>

#include "axdg/model.hpp"
#include "axdg/rng.hpp"

namespace axdg {

/// Single-sample bound estimate, one entry per batch item. The total is
/// assembled as recon + kl, with kl = kl_core (+ aux_pair) (+ entropy), so
/// the components sum to the total exactly and warm-up can temper the
/// non-reconstruction part alone.
struct BoundParts {
    Value total;     // [B]
    Value recon;     // [B] log p(x|.) (class-weighted for unlabeled)
    Value kl;        // [B] everything else
    Value kl_core;   // [B] prior log-densities minus variational ones, aux excluded
    Value aux_pair;  // [B] log p(a|.) - log q(a|.), grouped; invalid when no aux density
    Value entropy;   // [B] H(q(y|a,x)); unlabeled bounds only
};

BoundParts vae_elbo(Graph& g, const Model& m, const Tensor& x, const Tensor& eps_z,
                    RunMode mode = RunMode::kEval);

/// eps_a / eps_z carry one tensor per stochastic layer (L = 1 or 2).
BoundParts avae_elbo(Graph& g, const Model& m, const Tensor& x, std::span<const Tensor> eps_a,
                     std::span<const Tensor> eps_z, RunMode mode = RunMode::kEval);

/// -L(x, y): the labeled bound for ADGM, SDGM, M2 and the ablations.
BoundParts labeled_bound(Graph& g, const Model& m, const Tensor& x, const Tensor& y_onehot,
                         const Tensor& eps_a, const Tensor& eps_z,
                         RunMode mode = RunMode::kEval);

/// -U(x): entropy-form unlabeled bound with exact enumeration over y;
/// eps_z_per_class holds one z-noise tensor per class.
BoundParts unlabeled_bound(Graph& g, const Model& m, const Tensor& x, const Tensor& eps_a,
                           std::span<const Tensor> eps_z_per_class,
                           RunMode mode = RunMode::kEval);

/// Direct form E[f - log q(y|a,x)] by explicit enumeration with the same
/// eps; equal to the entropy form up to round-off (the identity the paper
/// derives). Kept separate so the equivalence is testable.
Value unlabeled_bound_direct_form(Graph& g, const Model& m, const Tensor& x,
                                  const Tensor& eps_a, std::span<const Tensor> eps_z_per_class,
                                  RunMode mode = RunMode::kEval);

/// -log q(y|a, x) per item, with a drawn from the same eps as the bound.
Value classification_nll(Graph& g, const Model& m, const Tensor& x, const Tensor& y_onehot,
                         const Tensor& eps_a, RunMode mode = RunMode::kEval);

/// log q(y|a,x) for one a-draw (log q(y|x) for M2); [B x C]. Evaluation-side
/// entry point for the classifier head.
Value classifier_log_probs(Graph& g, const Model& m, const Tensor& x, const Tensor& eps_a,
                           RunMode mode = RunMode::kEval);

/// Weight on the explicit classification loss: beta * (N_l + N_u) / N_l.
double alpha(double beta, long n_labeled, long n_unlabeled);

/// L_l of the classification-weighted labeled objective (a loss; batch mean).
Value labeled_objective(Graph& g, const Model& m, const Tensor& x, const Tensor& y_onehot,
                        double alpha_weight, const Tensor& eps_a, const Tensor& eps_z,
                        double tau = 1.0, RunMode mode = RunMode::kEval);

/// Unnormalized log-density builder for the 2-D potential target.
using PotentialFn = std::function<Value(Graph&, Value z)>;

BoundParts potential_fit_bound(Graph& g, const Model& m, const PotentialFn& log_potential,
                               const Tensor& eps_a, const Tensor& eps_z);

/// Labeled part (x, one-hot y) plus unlabeled part (x); either may be empty.
struct Batch {
    Tensor x_labeled;   // [N_l x d] (numel 0 when absent)
    Tensor y_labeled;   // [N_l x C] one-hot
    Tensor x_unlabeled; // [N_u x d]

    std::size_t n_labeled() const { return x_labeled.empty() ? 0 : x_labeled.dim(0); }
    std::size_t n_unlabeled() const { return x_unlabeled.empty() ? 0 : x_unlabeled.dim(0); }
};

/// J: mean per batch item of the labeled objectives and unlabeled bounds
/// (loss convention), with temperature tau on the non-reconstruction
/// components and n_mc-sample averaging. Noise is drawn from `noise`
/// children, so identical streams give identical values.
struct Objective {
    Value loss;  // scalar
    // batch-mean diagnostics; invalid when the corresponding part is absent
    Value labeled_loss_mean;
    Value unlabeled_loss_mean;
    Value class_nll_mean;
};

Objective total_objective(Graph& g, const Model& m, const Batch& batch, double alpha_weight,
                          double tau, int n_mc, RngStream noise,
                          RunMode mode = RunMode::kTrain);

/// One-hot encode class indices.
Tensor one_hot(std::span<const int> labels, int n_classes);

}  // namespace axdg
