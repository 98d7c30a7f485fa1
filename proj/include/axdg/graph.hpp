#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "axdg/params.hpp"
#include "axdg/tensor.hpp"

namespace axdg {

/// Thrown when an op produces a non-finite value on finite inputs.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Op : std::uint8_t {
    kLeaf,
    kMatmul,
    kAdd,        // equal shapes, or second operand a row vector broadcast over the batch dim
    kMul,        // same broadcast rule
    kNeg,
    kExp,
    kLog,
    kRelu,
    kSquare,
    kSoftplus,
    kSumAxis,
    kMeanAxis,
    kConcatCols,
    kLogSumExp,
    kExpandCols,  // [m] or [m x 1] -> [m x n], replicate along the feature axis
    kReshape,
    kBatchNorm,   // training-mode batch norm over the batch dim
};

struct Value {
    std::int32_t id = -1;
    bool valid() const { return id >= 0; }
};

/// Reverse-mode tape over Tensors. Eager: every op computes its output when
/// recorded, so a Graph holds the full forward state and can be walked
/// backward in reverse creation order (which is reverse topological order,
/// since ops only reference earlier nodes — cycles cannot be constructed).
/// One graph is confined to one thread; parallelism lives inside kernels.
class Graph {
  public:
    explicit Graph(ParamStore* params = nullptr) : params_(params) {}

    // ---- leaves ----
    Value leaf(Tensor t);                       // constant input, no gradient
    Value param(int slot);                      // copy of a store parameter, gradient flows back
    Value param(const std::string& name);
    Value constant_full(std::vector<std::size_t> shape, double v) {
        return leaf(Tensor::full(std::move(shape), v));
    }

    // ---- primitives ----
    Value matmul(Value a, Value b);
    Value add(Value a, Value b);
    Value mul(Value a, Value b);
    Value neg(Value a);
    Value exp(Value a);
    Value log(Value a);
    Value relu(Value a);
    Value square(Value a);
    Value softplus(Value a);
    Value sum(Value a, int axis);
    Value mean(Value a, int axis);
    Value concat_cols(std::span<const Value> parts);
    Value log_sum_exp(Value a, int axis);
    Value expand_cols(Value a, std::size_t n);
    Value reshape(Value a, std::vector<std::size_t> shape);
    /// Normalizes by batch statistics; saves them for the caller (running
    /// stat updates are the network layer's job). Requires batch >= 2.
    Value batch_norm(Value x, Value gamma, Value beta, double eps, Tensor* batch_mean_out,
                     Tensor* batch_var_out);

    // ---- conveniences built from primitives ----
    Value scale(Value a, double c);             // a * c via a constant leaf
    Value add_scalar(Value a, double c);
    Value sub(Value a, Value b) { return add(a, neg(b)); }
    Value clamp(Value a, double lo, double hi);  // lo + relu(a-lo) then hi - relu(hi-.)

    // ---- execution ----
    /// Reverse sweep from a scalar output. Gradients of parameter leaves are
    /// summed into the bound ParamStore.
    void backward(Value output);

    const Tensor& value(Value v) const { return nodes_.at(v.id).value; }
    /// Gradient d(output)/d(node); empty tensor if the node was not reached.
    const Tensor& grad(Value v) const { return nodes_.at(v.id).grad; }
    double scalar(Value v) const;
    std::size_t node_count() const { return nodes_.size(); }
    ParamStore* params() { return params_; }

  private:
    struct Node {
        Op op = Op::kLeaf;
        std::vector<std::int32_t> in;
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        int axis = -1;
        int param_slot = -1;
        // batch-norm scratch saved for the backward pass
        Tensor bn_xhat;
        Tensor bn_invstd;
    };

    Value push(Node n);
    Node& node(Value v) { return nodes_.at(v.id); }
    Tensor& grad_buf(std::int32_t id);
    void backward_node(std::int32_t id);

    std::vector<Node> nodes_;
    ParamStore* params_ = nullptr;
    // one leaf per parameter slot; reuse keeps tapes small and accumulation single-pass
    std::vector<std::pair<int, std::int32_t>> param_leaves_;
};

// Free-function spellings used throughout the model code.
inline Value matmul(Graph& g, Value a, Value b) { return g.matmul(a, b); }
inline Value add(Graph& g, Value a, Value b) { return g.add(a, b); }
inline Value mul(Graph& g, Value a, Value b) { return g.mul(a, b); }
inline Value relu(Graph& g, Value a) { return g.relu(a); }

}  // namespace axdg
