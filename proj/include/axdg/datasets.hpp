#pragma once

#include <functional>
#include <string>
#include <vector>

#include "axdg/graph.hpp"
#include "axdg/rng.hpp"
#include "axdg/tensor.hpp"

namespace axdg {

/// Rows of features with class indices and a mask saying which rows count
/// as labeled for semi-supervised training.
struct LabeledDataset {
    Tensor x;                         // [N x d]
    std::vector<int> y;               // class index per row, [0, C)
    std::vector<std::uint8_t> labeled_mask;  // 1 = labeled; empty = none
    int n_classes = 0;
    bool binary_observations = false;  // re-binarize from x each epoch

    std::size_t size() const { return x.empty() ? 0 : x.dim(0); }
    std::size_t dim() const { return x.empty() ? 0 : x.dim(1); }
    std::size_t n_labeled() const;
};

/// Two interleaved half-moons: top (cos t, sin t), bottom
/// (1 - cos t, 1 - sin t - 1/2), t uniform on [0, pi], plus isotropic
/// Gaussian noise. Class 0 is the top moon. n must be even and positive.
LabeledDataset halfmoons(int n, double noise_sigma, RngStream rng);

/// Marks n_labels rows as labeled, exactly n_labels / C per class
/// (n_labels must divide evenly). Throws if a class has too few rows.
void label_subset(LabeledDataset& ds, int n_labels, RngStream rng);

/// 2-D unnormalized log-density with a quadrature box; `graph` builds U(z)
/// on a tape ([B x 2] -> [B]) and `log_u` evaluates it pointwise.
struct PotentialTarget {
    std::function<Value(Graph&, Value)> graph;
    std::function<double(double, double)> log_u;
    double box_lo = -8.0, box_hi = 8.0;
};

/// Equal-weight Gaussian mixture with unit variance at (-2, 0) and (2, 0);
/// normalized, so the true log Z is 0.
PotentialTarget bimodal_potential();

/// Trapezoid-free plain grid quadrature of log integral exp(U) over the box.
double quadrature_log_z(const PotentialTarget& target, double step);

/// IDX file parsing (big-endian header). Images scale to [0,1]; labels come
/// back as a [N] tensor of class indices.
Tensor load_idx(const std::string& path);

struct MnistData {
    LabeledDataset data;            // pruned columns, raw intensities in [0,1]
    std::vector<int> kept_columns;  // indices into the original 784
};

/// Applies the benchmark preprocessing: keeps the merged 60000-row training
/// tensor as-is and drops pixel columns whose std (over raw intensities)
/// falls below the threshold. The kept-column list makes the pruning
/// reproducible on test data.
MnistData preprocess_mnist(const Tensor& images, const Tensor& labels,
                           double pixel_std_threshold);

/// Applies a recorded kept-column list to another image tensor.
Tensor apply_columns(const Tensor& images, const std::vector<int>& kept_columns);

/// Independent Bernoulli draw per entry with mean = intensity.
Tensor binarize(const Tensor& x, RngStream rng);

/// (x + U[0,1)) / divisor for integer-valued pixels.
Tensor dequantize_and_normalize(const Tensor& x_int, RngStream rng, double divisor);

}  // namespace axdg
