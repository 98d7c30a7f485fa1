#include "axdg/graph.hpp"

#include <cmath>
#include <cstring>

#include "axdg/kernels.hpp"

namespace axdg {

namespace {

void check_rank2(const Tensor& t, const char* what) {
    if (t.rank() != 2) throw std::invalid_argument(std::string(what) + ": rank-2 tensor required");
}

bool row_broadcastable(const Tensor& a, const Tensor& b) {
    // b is a row vector applied to every row of a
    if (a.rank() != 2) return false;
    if (b.rank() == 1) return b.dim(0) == a.dim(1);
    return b.rank() == 2 && b.dim(0) == 1 && b.dim(1) == a.dim(1);
}

double stable_softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace

Value Graph::push(Node n) {
    nodes_.push_back(std::move(n));
    return Value{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Value Graph::leaf(Tensor t) {
    Node n;
    n.op = Op::kLeaf;
    n.value = std::move(t);
    return push(std::move(n));
}

Value Graph::param(int slot) {
    if (!params_) throw std::logic_error("graph has no parameter store");
    for (const auto& [s, id] : param_leaves_)
        if (s == slot) return Value{id};
    Node n;
    n.op = Op::kLeaf;
    n.value = params_->value(slot);
    n.requires_grad = true;
    n.param_slot = slot;
    Value v = push(std::move(n));
    param_leaves_.push_back({slot, v.id});
    return v;
}

Value Graph::param(const std::string& name) {
    if (!params_) throw std::logic_error("graph has no parameter store");
    return param(params_->require(name));
}

Value Graph::matmul(Value a, Value b) {
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    check_rank2(ta, "matmul");
    check_rank2(tb, "matmul");
    if (ta.dim(1) != tb.dim(0))
        throw std::invalid_argument("matmul: inner dims " + ta.shape_str() + " x " +
                                    tb.shape_str());
    Node n;
    n.op = Op::kMatmul;
    n.in = {a.id, b.id};
    n.requires_grad = node(a).requires_grad || node(b).requires_grad;
    n.value = Tensor({ta.dim(0), tb.dim(1)});
    kernels::matmul(ta.data(), tb.data(), n.value.data(), ta.dim(0), ta.dim(1), tb.dim(1));
    return push(std::move(n));
}

Value Graph::add(Value a, Value b) {
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    Node n;
    n.op = Op::kAdd;
    n.in = {a.id, b.id};
    n.requires_grad = node(a).requires_grad || node(b).requires_grad;
    if (ta.same_shape(tb)) {
        n.value = Tensor(ta.shape());
        kernels::zip(ta.data(), tb.data(), n.value.data(), ta.numel(),
                     [](double x, double y) { return x + y; });
    } else if (row_broadcastable(ta, tb)) {
        n.value = Tensor(ta.shape());
        kernels::zip_rowbcast(ta.data(), tb.data(), n.value.data(), ta.dim(0), ta.dim(1),
                              [](double x, double y) { return x + y; });
    } else {
        throw std::invalid_argument("add: shapes " + ta.shape_str() + " vs " + tb.shape_str());
    }
    return push(std::move(n));
}

Value Graph::mul(Value a, Value b) {
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    Node n;
    n.op = Op::kMul;
    n.in = {a.id, b.id};
    n.requires_grad = node(a).requires_grad || node(b).requires_grad;
    if (ta.same_shape(tb)) {
        n.value = Tensor(ta.shape());
        kernels::zip(ta.data(), tb.data(), n.value.data(), ta.numel(),
                     [](double x, double y) { return x * y; });
    } else if (row_broadcastable(ta, tb)) {
        n.value = Tensor(ta.shape());
        kernels::zip_rowbcast(ta.data(), tb.data(), n.value.data(), ta.dim(0), ta.dim(1),
                              [](double x, double y) { return x * y; });
    } else {
        throw std::invalid_argument("mul: shapes " + ta.shape_str() + " vs " + tb.shape_str());
    }
    return push(std::move(n));
}

Value Graph::neg(Value a) {
    const Tensor& ta = node(a).value;
    Node n;
    n.op = Op::kNeg;
    n.in = {a.id};
    n.requires_grad = node(a).requires_grad;
    n.value = Tensor(ta.shape());
    kernels::map(ta.data(), n.value.data(), ta.numel(), [](double x) { return -x; });
    return push(std::move(n));
}

Value Graph::exp(Value a) {
    const Tensor& ta = node(a).value;
    Node n;
    n.op = Op::kExp;
    n.in = {a.id};
    n.requires_grad = node(a).requires_grad;
    n.value = Tensor(ta.shape());
    kernels::map(ta.data(), n.value.data(), ta.numel(), [](double x) { return std::exp(x); });
    if (!n.value.all_finite()) throw NumericalError("exp overflow");
    return push(std::move(n));
}

Value Graph::log(Value a) {
    const Tensor& ta = node(a).value;
    Node n;
    n.op = Op::kLog;
    n.in = {a.id};
    n.requires_grad = node(a).requires_grad;
    n.value = Tensor(ta.shape());
    kernels::map(ta.data(), n.value.data(), ta.numel(), [](double x) { return std::log(x); });
    if (!n.value.all_finite()) throw NumericalError("log of non-positive value");
    return push(std::move(n));
}

Value Graph::relu(Value a) {
    const Tensor& ta = node(a).value;
    Node n;
    n.op = Op::kRelu;
    n.in = {a.id};
    n.requires_grad = node(a).requires_grad;
    n.value = Tensor(ta.shape());
    kernels::map(ta.data(), n.value.data(), ta.numel(),
                 [](double x) { return x > 0.0 ? x : 0.0; });
    return push(std::move(n));
}

Value Graph::square(Value a) {
    const Tensor& ta = node(a).value;
    Node n;
    n.op = Op::kSquare;
    n.in = {a.id};
    n.requires_grad = node(a).requires_grad;
    n.value = Tensor(ta.shape());
    kernels::map(ta.data(), n.value.data(), ta.numel(), [](double x) { return x * x; });
    return push(std::move(n));
}

Value Graph::softplus(Value a) {
    const Tensor& ta = node(a).value;
    Node n;
    n.op = Op::kSoftplus;
    n.in = {a.id};
    n.requires_grad = node(a).requires_grad;
    n.value = Tensor(ta.shape());
    kernels::map(ta.data(), n.value.data(), ta.numel(), stable_softplus);
    return push(std::move(n));
}

Value Graph::sum(Value a, int axis) {
    const Tensor& ta = node(a).value;
    Node n;
    n.op = Op::kSumAxis;
    n.in = {a.id};
    n.axis = axis;
    n.requires_grad = node(a).requires_grad;
    if (ta.rank() == 1) {
        if (axis != 0) throw std::invalid_argument("sum: axis out of range");
        double s = 0.0;
        for (std::size_t i = 0; i < ta.numel(); ++i) s += ta.at(i);
        n.value = Tensor::scalar(s);
    } else if (axis == 1) {
        n.value = Tensor({ta.dim(0)});
        kernels::row_sum(ta.data(), n.value.data(), ta.dim(0), ta.dim(1));
    } else if (axis == 0) {
        n.value = Tensor({ta.dim(1)});
        kernels::col_sum(ta.data(), n.value.data(), ta.dim(0), ta.dim(1));
    } else {
        throw std::invalid_argument("sum: axis out of range");
    }
    return push(std::move(n));
}

Value Graph::mean(Value a, int axis) {
    const Tensor& ta = node(a).value;
    const std::size_t n_reduced =
        ta.rank() == 1 ? ta.dim(0) : (axis == 0 ? ta.dim(0) : ta.dim(1));
    Value s = sum(a, axis);
    nodes_.back().op = Op::kMeanAxis;  // same layout as sum, scaled
    Tensor& v = nodes_.back().value;
    const double inv = 1.0 / static_cast<double>(n_reduced);
    for (std::size_t i = 0; i < v.numel(); ++i) v.at(i) *= inv;
    return s;
}

Value Graph::concat_cols(std::span<const Value> parts) {
    if (parts.empty()) throw std::invalid_argument("concat: empty input list");
    std::size_t rows = 0, cols = 0;
    for (const Value& p : parts) {
        const Tensor& t = node(p).value;
        check_rank2(t, "concat");
        if (rows == 0)
            rows = t.dim(0);
        else if (t.dim(0) != rows)
            throw std::invalid_argument("concat: row mismatch");
        cols += t.dim(1);
    }
    Node n;
    n.op = Op::kConcatCols;
    for (const Value& p : parts) {
        n.in.push_back(p.id);
        n.requires_grad = n.requires_grad || node(p).requires_grad;
    }
    n.value = Tensor({rows, cols});
    std::size_t off = 0;
    for (const Value& p : parts) {
        const Tensor& t = node(p).value;
        const std::size_t w = t.dim(1);
        for (std::size_t i = 0; i < rows; ++i)
            std::memcpy(n.value.data() + i * cols + off, t.data() + i * w, w * sizeof(double));
        off += w;
    }
    return push(std::move(n));
}

Value Graph::log_sum_exp(Value a, int axis) {
    const Tensor& ta = node(a).value;
    Node n;
    n.op = Op::kLogSumExp;
    n.in = {a.id};
    n.axis = axis;
    n.requires_grad = node(a).requires_grad;
    if (ta.rank() == 1) {
        if (axis != 0) throw std::invalid_argument("log_sum_exp: axis out of range");
        n.value = Tensor({1});
        kernels::lse_rows(ta.data(), n.value.data(), 1, ta.dim(0));
    } else if (axis == 1) {
        n.value = Tensor({ta.dim(0)});
        kernels::lse_rows(ta.data(), n.value.data(), ta.dim(0), ta.dim(1));
    } else {
        throw std::invalid_argument("log_sum_exp: only the feature axis is supported on rank-2");
    }
    return push(std::move(n));
}

Value Graph::expand_cols(Value a, std::size_t ncols) {
    const Tensor& ta = node(a).value;
    const bool ok = ta.rank() == 1 || (ta.rank() == 2 && ta.dim(1) == 1);
    if (!ok) throw std::invalid_argument("expand_cols: need [m] or [m x 1]");
    const std::size_t m = ta.dim(0);
    Node n;
    n.op = Op::kExpandCols;
    n.in = {a.id};
    n.requires_grad = node(a).requires_grad;
    n.value = Tensor({m, ncols});
    for (std::size_t i = 0; i < m; ++i) {
        const double v = ta.at(i);
        double* row = n.value.data() + i * ncols;
        for (std::size_t j = 0; j < ncols; ++j) row[j] = v;
    }
    return push(std::move(n));
}

Value Graph::reshape(Value a, std::vector<std::size_t> shape) {
    const Tensor& ta = node(a).value;
    Node n;
    n.op = Op::kReshape;
    n.in = {a.id};
    n.requires_grad = node(a).requires_grad;
    n.value = Tensor(std::move(shape), ta.vec());
    return push(std::move(n));
}

Value Graph::batch_norm(Value x, Value gamma, Value beta, double eps, Tensor* batch_mean_out,
                        Tensor* batch_var_out) {
    const Tensor& tx = node(x).value;
    check_rank2(tx, "batch_norm");
    const std::size_t b = tx.dim(0), d = tx.dim(1);
    if (b < 2) throw std::invalid_argument("batch_norm: batch size must be >= 2 in train mode");
    const Tensor& tg = node(gamma).value;
    const Tensor& tb = node(beta).value;
    if (tg.numel() != d || tb.numel() != d)
        throw std::invalid_argument("batch_norm: scale/shift dims");

    Tensor mean({d}), var({d});
    kernels::col_sum(tx.data(), mean.data(), b, d);
    for (std::size_t j = 0; j < d; ++j) mean.at(j) /= static_cast<double>(b);
    for (std::size_t j = 0; j < d; ++j) var.at(j) = 0.0;
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double c = tx.at(i, j) - mean.at(j);
            var.at(j) += c * c;
        }
    for (std::size_t j = 0; j < d; ++j) var.at(j) /= static_cast<double>(b);

    Node n;
    n.op = Op::kBatchNorm;
    n.in = {x.id, gamma.id, beta.id};
    n.requires_grad =
        node(x).requires_grad || node(gamma).requires_grad || node(beta).requires_grad;
    n.bn_invstd = Tensor({d});
    for (std::size_t j = 0; j < d; ++j) n.bn_invstd.at(j) = 1.0 / std::sqrt(var.at(j) + eps);
    n.bn_xhat = Tensor({b, d});
    n.value = Tensor({b, d});
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double xh = (tx.at(i, j) - mean.at(j)) * n.bn_invstd.at(j);
            n.bn_xhat.at(i, j) = xh;
            n.value.at(i, j) = tg.at(j) * xh + tb.at(j);
        }
    if (batch_mean_out) *batch_mean_out = mean;
    if (batch_var_out) *batch_var_out = var;
    return push(std::move(n));
}

Value Graph::scale(Value a, double c) {
    return mul(a, constant_full(node(a).value.shape(), c));
}

Value Graph::add_scalar(Value a, double c) {
    return add(a, constant_full(node(a).value.shape(), c));
}

Value Graph::clamp(Value a, double lo, double hi) {
    Value lower = add_scalar(relu(add_scalar(a, -lo)), lo);          // max(a, lo)
    return add_scalar(neg(relu(add_scalar(neg(lower), hi))), hi);    // min(., hi)
}

double Graph::scalar(Value v) const {
    const Tensor& t = value(v);
    if (t.numel() != 1) throw std::invalid_argument("scalar: tensor has more than one element");
    return t.at(0);
}

Tensor& Graph::grad_buf(std::int32_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad = Tensor::zeros(n.value.shape());
    return n.grad;
}

void Graph::backward(Value output) {
    Node& out = node(output);
    if (out.value.numel() != 1)
        throw std::invalid_argument("backward: output must be scalar");
    grad_buf(output.id).at(0) = 1.0;
    for (std::int32_t id = output.id; id >= 0; --id) {
        Node& n = nodes_[id];
        if (!n.requires_grad || n.grad.empty()) continue;
        backward_node(id);
    }
    for (const auto& [slot, id] : param_leaves_) {
        const Node& n = nodes_[id];
        if (!n.grad.empty()) params_->accumulate_grad(slot, n.grad);
    }
}

void Graph::backward_node(std::int32_t id) {
    Node& n = nodes_[id];
    const Tensor& g = n.grad;
    auto wants = [&](int k) { return nodes_[n.in[k]].requires_grad; };

    switch (n.op) {
        case Op::kLeaf:
            break;
        case Op::kMatmul: {
            const Tensor& a = nodes_[n.in[0]].value;
            const Tensor& b = nodes_[n.in[1]].value;
            const std::size_t m = a.dim(0), k = a.dim(1), nc = b.dim(1);
            if (wants(0)) {
                Tensor da({m, k});
                kernels::matmul_nt(g.data(), b.data(), da.data(), m, nc, k);
                Tensor& acc = grad_buf(n.in[0]);
                kernels::zip(acc.data(), da.data(), acc.data(), acc.numel(),
                             [](double x, double y) { return x + y; });
            }
            if (wants(1)) {
                Tensor& acc = grad_buf(n.in[1]);
                kernels::matmul_tn_acc(a.data(), g.data(), acc.data(), m, k, nc);
            }
            break;
        }
        case Op::kAdd: {
            const Tensor& a = nodes_[n.in[0]].value;
            const Tensor& b = nodes_[n.in[1]].value;
            if (wants(0)) {
                Tensor& acc = grad_buf(n.in[0]);
                kernels::zip(acc.data(), g.data(), acc.data(), acc.numel(),
                             [](double x, double y) { return x + y; });
            }
            if (wants(1)) {
                Tensor& acc = grad_buf(n.in[1]);
                if (a.same_shape(b)) {
                    kernels::zip(acc.data(), g.data(), acc.data(), acc.numel(),
                                 [](double x, double y) { return x + y; });
                } else {
                    Tensor cs({a.dim(1)});
                    kernels::col_sum(g.data(), cs.data(), a.dim(0), a.dim(1));
                    for (std::size_t j = 0; j < cs.numel(); ++j) acc.at(j) += cs.at(j);
                }
            }
            break;
        }
        case Op::kMul: {
            const Tensor& a = nodes_[n.in[0]].value;
            const Tensor& b = nodes_[n.in[1]].value;
            const bool bcast = !a.same_shape(b);
            if (wants(0)) {
                Tensor& acc = grad_buf(n.in[0]);
                if (!bcast) {
                    for (std::size_t i = 0; i < acc.numel(); ++i)
                        acc.at(i) += g.at(i) * b.at(i);
                } else {
                    const std::size_t m = a.dim(0), d = a.dim(1);
                    for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t j = 0; j < d; ++j)
                            acc.at(i, j) += g.at(i, j) * b.at(j);
                }
            }
            if (wants(1)) {
                Tensor& acc = grad_buf(n.in[1]);
                if (!bcast) {
                    for (std::size_t i = 0; i < acc.numel(); ++i)
                        acc.at(i) += g.at(i) * a.at(i);
                } else {
                    const std::size_t m = a.dim(0), d = a.dim(1);
                    for (std::size_t j = 0; j < d; ++j) {
                        double s = 0.0;
                        for (std::size_t i = 0; i < m; ++i) s += g.at(i, j) * a.at(i, j);
                        acc.at(j) += s;
                    }
                }
            }
            break;
        }
        case Op::kNeg:
            if (wants(0)) {
                Tensor& acc = grad_buf(n.in[0]);
                for (std::size_t i = 0; i < acc.numel(); ++i) acc.at(i) -= g.at(i);
            }
            break;
        case Op::kExp:
            if (wants(0)) {
                Tensor& acc = grad_buf(n.in[0]);
                for (std::size_t i = 0; i < acc.numel(); ++i)
                    acc.at(i) += g.at(i) * n.value.at(i);
            }
            break;
        case Op::kLog:
            if (wants(0)) {
                const Tensor& x = nodes_[n.in[0]].value;
                Tensor& acc = grad_buf(n.in[0]);
                for (std::size_t i = 0; i < acc.numel(); ++i) acc.at(i) += g.at(i) / x.at(i);
            }
            break;
        case Op::kRelu:
            if (wants(0)) {
                const Tensor& x = nodes_[n.in[0]].value;
                Tensor& acc = grad_buf(n.in[0]);
                for (std::size_t i = 0; i < acc.numel(); ++i)
                    if (x.at(i) > 0.0) acc.at(i) += g.at(i);
            }
            break;
        case Op::kSquare:
            if (wants(0)) {
                const Tensor& x = nodes_[n.in[0]].value;
                Tensor& acc = grad_buf(n.in[0]);
                for (std::size_t i = 0; i < acc.numel(); ++i)
                    acc.at(i) += 2.0 * g.at(i) * x.at(i);
            }
            break;
        case Op::kSoftplus:
            if (wants(0)) {
                const Tensor& x = nodes_[n.in[0]].value;
                Tensor& acc = grad_buf(n.in[0]);
                for (std::size_t i = 0; i < acc.numel(); ++i)
                    acc.at(i) += g.at(i) * sigmoid(x.at(i));
            }
            break;
        case Op::kSumAxis:
        case Op::kMeanAxis: {
            const Tensor& x = nodes_[n.in[0]].value;
            if (!wants(0)) break;
            Tensor& acc = grad_buf(n.in[0]);
            const std::size_t n_reduced =
                x.rank() == 1 ? x.dim(0) : (n.axis == 0 ? x.dim(0) : x.dim(1));
            const double f =
                n.op == Op::kMeanAxis ? 1.0 / static_cast<double>(n_reduced) : 1.0;
            if (x.rank() == 1) {
                const double gv = g.at(0) * f;
                for (std::size_t i = 0; i < acc.numel(); ++i) acc.at(i) += gv;
            } else if (n.axis == 1) {
                for (std::size_t i = 0; i < x.dim(0); ++i) {
                    const double gv = g.at(i) * f;
                    for (std::size_t j = 0; j < x.dim(1); ++j) acc.at(i, j) += gv;
                }
            } else {
                for (std::size_t i = 0; i < x.dim(0); ++i)
                    for (std::size_t j = 0; j < x.dim(1); ++j) acc.at(i, j) += g.at(j) * f;
            }
            break;
        }
        case Op::kConcatCols: {
            const std::size_t rows = n.value.dim(0), cols = n.value.dim(1);
            std::size_t off = 0;
            for (std::size_t k = 0; k < n.in.size(); ++k) {
                const Tensor& part = nodes_[n.in[k]].value;
                const std::size_t w = part.dim(1);
                if (nodes_[n.in[k]].requires_grad) {
                    Tensor& acc = grad_buf(n.in[k]);
                    for (std::size_t i = 0; i < rows; ++i)
                        for (std::size_t j = 0; j < w; ++j)
                            acc.at(i, j) += g.at(i * cols + off + j);
                }
                off += w;
            }
            break;
        }
        case Op::kLogSumExp: {
            if (!wants(0)) break;
            const Tensor& x = nodes_[n.in[0]].value;
            Tensor& acc = grad_buf(n.in[0]);
            if (x.rank() == 1) {
                const double gv = g.at(0), out = n.value.at(0);
                for (std::size_t j = 0; j < x.dim(0); ++j)
                    acc.at(j) += gv * std::exp(x.at(j) - out);
            } else {
                for (std::size_t i = 0; i < x.dim(0); ++i) {
                    const double gv = g.at(i), out = n.value.at(i);
                    for (std::size_t j = 0; j < x.dim(1); ++j)
                        acc.at(i, j) += gv * std::exp(x.at(i, j) - out);
                }
            }
            break;
        }
        case Op::kExpandCols: {
            if (!wants(0)) break;
            Tensor& acc = grad_buf(n.in[0]);
            const std::size_t m = n.value.dim(0), w = n.value.dim(1);
            for (std::size_t i = 0; i < m; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < w; ++j) s += g.at(i * w + j);
                acc.at(i) += s;
            }
            break;
        }
        case Op::kReshape:
            if (wants(0)) {
                Tensor& acc = grad_buf(n.in[0]);
                for (std::size_t i = 0; i < acc.numel(); ++i) acc.at(i) += g.at(i);
            }
            break;
        case Op::kBatchNorm: {
            const Tensor& gamma = nodes_[n.in[1]].value;
            const std::size_t b = n.value.dim(0), d = n.value.dim(1);
            if (wants(2)) {
                Tensor& acc = grad_buf(n.in[2]);
                Tensor cs({d});
                kernels::col_sum(g.data(), cs.data(), b, d);
                for (std::size_t j = 0; j < d; ++j) acc.at(j) += cs.at(j);
            }
            if (wants(1)) {
                Tensor& acc = grad_buf(n.in[1]);
                for (std::size_t j = 0; j < d; ++j) {
                    double s = 0.0;
                    for (std::size_t i = 0; i < b; ++i) s += g.at(i, j) * n.bn_xhat.at(i, j);
                    acc.at(j) += s;
                }
            }
            if (wants(0)) {
                Tensor& acc = grad_buf(n.in[0]);
                // dxhat = g * gamma; dx via the batch-statistics chain rule
                for (std::size_t j = 0; j < d; ++j) {
                    double sum_dxh = 0.0, sum_dxh_xh = 0.0;
                    for (std::size_t i = 0; i < b; ++i) {
                        const double dxh = g.at(i, j) * gamma.at(j);
                        sum_dxh += dxh;
                        sum_dxh_xh += dxh * n.bn_xhat.at(i, j);
                    }
                    const double inv_b = 1.0 / static_cast<double>(b);
                    for (std::size_t i = 0; i < b; ++i) {
                        const double dxh = g.at(i, j) * gamma.at(j);
                        acc.at(i, j) += n.bn_invstd.at(j) *
                                        (dxh - inv_b * sum_dxh -
                                         n.bn_xhat.at(i, j) * inv_b * sum_dxh_xh);
                    }
                }
            }
            break;
        }
    }
}

}  // namespace axdg
