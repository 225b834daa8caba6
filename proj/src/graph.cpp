#include "safefl/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace safefl {
namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                                    shape_string(b.shape()));
    }
}

void require_matrix(const Tensor& a, const char* op) {
    if (a.rank() != 2) {
        throw std::invalid_argument(std::string(op) + ": expected a matrix, got " + shape_string(a.shape()));
    }
}

// Row-wise log-softmax of an m x n matrix.
std::vector<double> log_softmax_rows(const Tensor& z) {
    const std::size_t m = z.rows(), n = z.cols();
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = z.data().data() + i * n;
        const double mx = *std::max_element(row, row + n);
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) sum += std::exp(row[j] - mx);
        const double lse = mx + std::log(sum);
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = row[j] - lse;
    }
    return out;
}

}  // namespace

NodeId Graph::push(Op op, std::vector<std::size_t> parents, Tensor value, double factor, std::size_t offset) {
    Node n{op, std::move(parents), std::move(value)};
    n.factor = factor;
    n.offset = offset;
    for (std::size_t p : n.parents) n.needs_grad = n.needs_grad || nodes_[p].needs_grad;
    nodes_.push_back(std::move(n));
    return NodeId{nodes_.size() - 1};
}

const Graph::Node& Graph::node(NodeId id) const {
    if (id.index >= nodes_.size()) throw std::out_of_range("node id " + std::to_string(id.index) + " not in graph");
    return nodes_[id.index];
}

const Tensor& Graph::value(NodeId id) const { return node(id).value; }

bool Graph::is_differentiable_leaf(NodeId id) const {
    const Node& n = node(id);
    return n.op == Op::leaf && n.differentiable;
}

NodeId Graph::leaf(Tensor value, bool differentiable) {
    Node n{Op::leaf, {}, std::move(value)};
    n.differentiable = differentiable;
    n.needs_grad = differentiable;
    nodes_.push_back(std::move(n));
    return NodeId{nodes_.size() - 1};
}

NodeId Graph::add(NodeId a, NodeId b) {
    const Tensor& x = value(a);
    const Tensor& y = value(b);
    require_same_shape(x, y, "add");
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
    return push(Op::add, {a.index, b.index}, Tensor(x.shape(), std::move(out)));
}

NodeId Graph::subtract(NodeId a, NodeId b) {
    const Tensor& x = value(a);
    const Tensor& y = value(b);
    require_same_shape(x, y, "subtract");
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
    return push(Op::subtract, {a.index, b.index}, Tensor(x.shape(), std::move(out)));
}

NodeId Graph::scale(NodeId a, double factor) {
    const Tensor& x = value(a);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = factor * x[i];
    return push(Op::scale, {a.index}, Tensor(x.shape(), std::move(out)), factor);
}

NodeId Graph::multiply(NodeId a, NodeId b) {
    const Tensor& x = value(a);
    const Tensor& y = value(b);
    require_same_shape(x, y, "multiply");
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
    return push(Op::multiply, {a.index, b.index}, Tensor(x.shape(), std::move(out)));
}

NodeId Graph::matmul(NodeId a, NodeId b) {
    const Tensor& x = value(a);
    const Tensor& y = value(b);
    require_matrix(x, "matmul");
    require_matrix(y, "matmul");
    const std::size_t m = x.rows(), k = x.cols(), n = y.cols();
    if (y.rows() != k) {
        throw std::invalid_argument("matmul: inner dimensions differ " + shape_string(x.shape()) + " x " +
                                    shape_string(y.shape()));
    }
    std::vector<double> out(m * n, 0.0);
    const double* xd = x.data().data();
    const double* yd = y.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double xv = xd[i * k + p];
            for (std::size_t j = 0; j < n; ++j) out[i * n + j] += xv * yd[p * n + j];
        }
    }
    return push(Op::matmul, {a.index, b.index}, Tensor({m, n}, std::move(out)));
}

NodeId Graph::transpose(NodeId a) {
    const Tensor& x = value(a);
    require_matrix(x, "transpose");
    const std::size_t m = x.rows(), n = x.cols();
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j * m + i] = x[i * n + j];
    return push(Op::transpose, {a.index}, Tensor({n, m}, std::move(out)));
}

NodeId Graph::tanh(NodeId a) {
    const Tensor& x = value(a);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(x[i]);
    return push(Op::tanh, {a.index}, Tensor(x.shape(), std::move(out)));
}

NodeId Graph::softmax_rows(NodeId a) {
    const Tensor& x = value(a);
    require_matrix(x, "softmax_rows");
    std::vector<double> out = log_softmax_rows(x);
    for (double& v : out) v = std::exp(v);
    return push(Op::softmax_rows, {a.index}, Tensor(x.shape(), std::move(out)));
}

NodeId Graph::soft_cross_entropy(NodeId logits, NodeId soft_targets) {
    const Tensor& z = value(logits);
    const Tensor& t = value(soft_targets);
    require_matrix(z, "soft_cross_entropy");
    require_same_shape(z, t, "soft_cross_entropy");
    const std::vector<double> logp = log_softmax_rows(z);
    double total = 0.0;
    for (std::size_t i = 0; i < logp.size(); ++i) total -= t[i] * logp[i];
    return push(Op::soft_cross_entropy, {logits.index, soft_targets.index},
                Tensor::scalar(total / static_cast<double>(z.rows())));
}

NodeId Graph::squared_l2_norm(NodeId a) {
    const Tensor& x = value(a);
    double total = 0.0;
    for (double v : x.data()) total += v * v;
    return push(Op::squared_l2_norm, {a.index}, Tensor::scalar(total));
}

NodeId Graph::mean(NodeId a) {
    const Tensor& x = value(a);
    double total = 0.0;
    for (double v : x.data()) total += v;
    return push(Op::mean, {a.index}, Tensor::scalar(total / static_cast<double>(x.size())));
}

NodeId Graph::add_row_vector(NodeId matrix, NodeId row) {
    const Tensor& x = value(matrix);
    const Tensor& r = value(row);
    require_matrix(x, "add_row_vector");
    if (r.rank() != 1 || r.size() != x.cols()) {
        throw std::invalid_argument("add_row_vector: row " + shape_string(r.shape()) + " does not fit " +
                                    shape_string(x.shape()));
    }
    const std::size_t m = x.rows(), n = x.cols();
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x[i * n + j] + r[j];
    return push(Op::add_row_vector, {matrix.index, row.index}, Tensor(x.shape(), std::move(out)));
}

NodeId Graph::column_sum(NodeId matrix) {
    const Tensor& x = value(matrix);
    require_matrix(x, "column_sum");
    const std::size_t m = x.rows(), n = x.cols();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j] += x[i * n + j];
    return push(Op::column_sum, {matrix.index}, Tensor::vector(std::move(out)));
}

NodeId Graph::slice(NodeId a, std::size_t offset, Shape shape) {
    const Tensor& x = value(a);
    const std::size_t n = shape_size(shape);
    if (offset + n > x.size()) {
        throw std::invalid_argument("slice: window [" + std::to_string(offset) + ", " + std::to_string(offset + n) +
                                    ") exceeds " + std::to_string(x.size()) + " values");
    }
    std::vector<double> out(x.data().begin() + static_cast<std::ptrdiff_t>(offset),
                            x.data().begin() + static_cast<std::ptrdiff_t>(offset + n));
    return push(Op::slice, {a.index}, Tensor(std::move(shape), std::move(out)), 0.0, offset);
}

NodeId Graph::concat(std::span<const NodeId> parts) {
    if (parts.empty()) throw std::invalid_argument("concat: no inputs");
    std::vector<double> out;
    std::vector<std::size_t> parents;
    for (NodeId p : parts) {
        const Tensor& x = value(p);
        out.insert(out.end(), x.data().begin(), x.data().end());
        parents.push_back(p.index);
    }
    return push(Op::concat, std::move(parents), Tensor::vector(std::move(out)));
}

Gradients Graph::backward(NodeId output) const {
    const Node& out = node(output);
    if (out.value.rank() != 0) {
        throw std::invalid_argument("backward: output must be a scalar, got " + shape_string(out.value.shape()));
    }

    std::vector<std::vector<double>> adj(output.index + 1);
    auto grad_of = [&](std::size_t i) -> std::vector<double>& {
        if (adj[i].empty()) adj[i].assign(nodes_[i].value.size(), 0.0);
        return adj[i];
    };
    if (out.needs_grad) adj[output.index] = {1.0};

    for (std::size_t idx = output.index + 1; idx-- > 0;) {
        const Node& n = nodes_[idx];
        if (!n.needs_grad || adj[idx].empty() || n.op == Op::leaf) continue;
        const std::vector<double>& g = adj[idx];
        const auto& par = n.parents;
        auto wants = [&](std::size_t k) { return nodes_[par[k]].needs_grad; };

        switch (n.op) {
            case Op::leaf:
                break;
            case Op::add:
            case Op::subtract: {
                const double sign = n.op == Op::add ? 1.0 : -1.0;
                if (wants(0)) {
                    auto& ga = grad_of(par[0]);
                    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                }
                if (wants(1)) {
                    auto& gb = grad_of(par[1]);
                    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += sign * g[i];
                }
                break;
            }
            case Op::scale: {
                auto& ga = grad_of(par[0]);
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += n.factor * g[i];
                break;
            }
            case Op::multiply: {
                const Tensor& a = nodes_[par[0]].value;
                const Tensor& b = nodes_[par[1]].value;
                if (wants(0)) {
                    auto& ga = grad_of(par[0]);
                    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b[i];
                }
                if (wants(1)) {
                    auto& gb = grad_of(par[1]);
                    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a[i];
                }
                break;
            }
            case Op::matmul: {
                const Tensor& a = nodes_[par[0]].value;
                const Tensor& b = nodes_[par[1]].value;
                const std::size_t m = a.rows(), k = a.cols(), cols = b.cols();
                if (wants(0)) {
                    auto& ga = grad_of(par[0]);
                    for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t p = 0; p < k; ++p) {
                            double s = 0.0;
                            for (std::size_t j = 0; j < cols; ++j) s += g[i * cols + j] * b[p * cols + j];
                            ga[i * k + p] += s;
                        }
                }
                if (wants(1)) {
                    auto& gb = grad_of(par[1]);
                    for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t p = 0; p < k; ++p) {
                            const double av = a[i * k + p];
                            for (std::size_t j = 0; j < cols; ++j) gb[p * cols + j] += av * g[i * cols + j];
                        }
                }
                break;
            }
            case Op::transpose: {
                const Tensor& a = nodes_[par[0]].value;
                const std::size_t m = a.rows(), cols = a.cols();
                auto& ga = grad_of(par[0]);
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < cols; ++j) ga[i * cols + j] += g[j * m + i];
                break;
            }
            case Op::tanh: {
                auto& ga = grad_of(par[0]);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    const double y = n.value[i];
                    ga[i] += g[i] * (1.0 - y * y);
                }
                break;
            }
            case Op::softmax_rows: {
                const std::size_t m = n.value.rows(), cols = n.value.cols();
                auto& ga = grad_of(par[0]);
                for (std::size_t i = 0; i < m; ++i) {
                    double dot = 0.0;
                    for (std::size_t j = 0; j < cols; ++j) dot += g[i * cols + j] * n.value[i * cols + j];
                    for (std::size_t j = 0; j < cols; ++j)
                        ga[i * cols + j] += n.value[i * cols + j] * (g[i * cols + j] - dot);
                }
                break;
            }
            case Op::soft_cross_entropy: {
                const Tensor& z = nodes_[par[0]].value;
                const Tensor& t = nodes_[par[1]].value;
                const std::size_t m = z.rows(), cols = z.cols();
                const double coef = g[0] / static_cast<double>(m);
                const std::vector<double> logp = log_softmax_rows(z);
                if (wants(0)) {
                    auto& gz = grad_of(par[0]);
                    for (std::size_t i = 0; i < m; ++i) {
                        double row_mass = 0.0;
                        for (std::size_t j = 0; j < cols; ++j) row_mass += t[i * cols + j];
                        for (std::size_t j = 0; j < cols; ++j) {
                            const std::size_t q = i * cols + j;
                            gz[q] += coef * (std::exp(logp[q]) * row_mass - t[q]);
                        }
                    }
                }
                if (wants(1)) {
                    auto& gt = grad_of(par[1]);
                    for (std::size_t q = 0; q < logp.size(); ++q) gt[q] -= coef * logp[q];
                }
                break;
            }
            case Op::squared_l2_norm: {
                const Tensor& a = nodes_[par[0]].value;
                auto& ga = grad_of(par[0]);
                for (std::size_t i = 0; i < a.size(); ++i) ga[i] += 2.0 * g[0] * a[i];
                break;
            }
            case Op::mean: {
                auto& ga = grad_of(par[0]);
                const double share = g[0] / static_cast<double>(ga.size());
                for (double& v : ga) v += share;
                break;
            }
            case Op::add_row_vector: {
                const std::size_t cols = n.value.cols();
                if (wants(0)) {
                    auto& ga = grad_of(par[0]);
                    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                }
                if (wants(1)) {
                    auto& gr = grad_of(par[1]);
                    for (std::size_t i = 0; i < g.size(); ++i) gr[i % cols] += g[i];
                }
                break;
            }
            case Op::column_sum: {
                const std::size_t cols = g.size();
                auto& ga = grad_of(par[0]);
                for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i % cols];
                break;
            }
            case Op::slice: {
                auto& ga = grad_of(par[0]);
                for (std::size_t i = 0; i < g.size(); ++i) ga[n.offset + i] += g[i];
                break;
            }
            case Op::concat: {
                std::size_t off = 0;
                for (std::size_t k = 0; k < par.size(); ++k) {
                    const std::size_t len = nodes_[par[k]].value.size();
                    if (wants(k)) {
                        auto& gp = grad_of(par[k]);
                        for (std::size_t i = 0; i < len; ++i) gp[i] += g[off + i];
                    }
                    off += len;
                }
                break;
            }
        }
    }

    Gradients result;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& n = nodes_[i];
        if (n.op != Op::leaf || !n.differentiable) continue;
        if (i < adj.size() && !adj[i].empty()) {
            result.grads_.emplace(i, Tensor(n.value.shape(), std::move(adj[i])));
        } else {
            result.grads_.emplace(i, Tensor::zeros(n.value.shape()));
        }
    }
    return result;
}

const Tensor& Gradients::operator[](NodeId leaf) const {
    auto it = grads_.find(leaf.index);
    if (it == grads_.end()) {
        throw std::invalid_argument("no gradient for node " + std::to_string(leaf.index) +
                                    " (not a differentiable leaf)");
    }
    return it->second;
}

}  // namespace safefl
