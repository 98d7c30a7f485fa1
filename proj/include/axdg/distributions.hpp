#pragma once

#include "axdg/graph.hpp"
#include "axdg/tensor.hpp"

namespace axdg {

inline constexpr double kLogVarClamp = 15.0;
inline constexpr double kLogitClamp = 15.0;
inline constexpr double kLog2Pi = 1.8378770664093454836;  // ln(2*pi)

/// Diagonal Gaussian over a [batch x d] block, parameterized by mean and
/// log-variance nodes. log_var is clamped to +-15 at construction so every
/// downstream exp stays in range.
struct GaussianParamsV {
    Value mu;
    Value log_var;
};

GaussianParamsV make_gaussian_params(Graph& g, Value mu, Value log_var_raw);

/// Standard normal with the given shape (mu = 0, log_var = 0 constants).
GaussianParamsV standard_normal(Graph& g, std::vector<std::size_t> shape);

/// Sum over d of log N(x_i | mu_i, exp(log_var_i)); returns [batch].
Value gaussian_log_density(Graph& g, Value x, const GaussianParamsV& p);

/// Per-dimension log N; returns [batch x d]. Used by unit diagnostics.
Value gaussian_log_density_per_dim(Graph& g, Value x, const GaussianParamsV& p);

/// mu + exp(log_var / 2) * eps with eps a fixed noise tensor.
Value gaussian_rsample(Graph& g, const GaussianParamsV& p, const Tensor& eps);

/// Categorical over C classes from raw logits; log_probs is the row-wise
/// log-softmax, built once so every consumer shares it.
struct CategoricalParamsV {
    Value logits;
    Value log_probs;  // [batch x C]
};

CategoricalParamsV make_categorical_params(Graph& g, Value logits);
/// log q(y) for one-hot rows y; returns [batch].
Value categorical_log_prob(Graph& g, const Tensor& y_onehot, const CategoricalParamsV& p);
/// -sum_c p_c log p_c; returns [batch].
Value categorical_entropy(Graph& g, const CategoricalParamsV& p);
/// softmax probabilities, [batch x C].
Value categorical_probs(Graph& g, const CategoricalParamsV& p);

/// Bernoulli over d pixels from logits (clamped to +-15).
struct BernoulliParamsV {
    Value logits;
};

BernoulliParamsV make_bernoulli_params(Graph& g, Value logits_raw);
/// Sum over d of x log p + (1-x) log(1-p), computed from logits; [batch].
Value bernoulli_log_likelihood(Graph& g, const Tensor& x, const BernoulliParamsV& p);

// ---- plain-tensor helpers (no tape; diagnostics and oracles) ----

/// Per-dimension KL( N(mu, sigma^2) || N(0,1) ) = (mu^2 + sigma^2 - log_var - 1)/2.
Tensor gaussian_kl_to_standard(const Tensor& mu, const Tensor& log_var);

/// Scalar log N(x | mu, exp(log_var)) summed over a raw span.
double gaussian_log_density_plain(const double* x, const double* mu, const double* log_var,
                                  std::size_t d);

double sigmoid_scalar(double logit);

void check_one_hot(const Tensor& y);
void check_binary(const Tensor& x);

}  // namespace axdg
