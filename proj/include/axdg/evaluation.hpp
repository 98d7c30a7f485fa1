#pragma once

#include <vector>

#include "axdg/bounds.hpp"
#include "axdg/model.hpp"
#include "axdg/rng.hpp"

namespace axdg {

struct IwEstimate {
    double value = 0.0;  // dataset mean, nats per datapoint
    int k = 0;
    std::vector<double> per_datapoint;
};

/// Importance-weighted log-likelihood estimate for VAE/AVAE: per datapoint
/// log (1/K) sum_k p/q at sampled latents, accumulated with a streaming
/// log-sum-exp. Sample i draws its noise from rng.child(i), so a single
/// sample reproduces the plain ELBO under a shared stream.
IwEstimate iw_log_likelihood(const Model& m, const Tensor& x, int k, RngStream rng);

/// argmax_y of the a-averaged classifier; ties break to the lowest class.
std::vector<int> classify(const Model& m, const Tensor& x, int n_mc, RngStream rng);

/// Mean of (pred != truth).
double classification_error(const std::vector<int>& preds, const std::vector<int>& truth);

/// Per-dimension mean divergence from the prior over a dataset: analytic
/// for z against N(0,1), Monte Carlo (log q - log p, n_mc draws per point)
/// for a against its generative conditional.
struct UnitActivity {
    std::vector<double> a_units;
    std::vector<double> z_units;
};

UnitActivity kl_per_unit(const Model& m, const Tensor& x, int n_mc, RngStream rng);

/// Fix a data point, infer (a, z per class), decode the observation mean for
/// every class label; [C x d].
Tensor analogies(const Model& m, const Tensor& x_row, RngStream rng);

/// Decode from prior noise; semi-supervised variants produce one row per
/// (sample, class) pair, [n*C x d]; unsupervised ones [n x d].
Tensor sample_prior(const Model& m, int n, RngStream rng);

struct PcaResult {
    Tensor projections;          // [N x 2]
    Tensor components;           // [2 x d]
    double explained_ratio_pc1 = 0.0;  // lambda_1 / trace(cov)
    bool rank_deficient = false;
};

/// Top-2 principal components by power iteration with deflation
/// (tol 1e-9, max 1e4 sweeps); the largest-magnitude entry of each
/// component is made positive.
PcaResult pca_2d(const Tensor& points);

}  // namespace axdg
