#pragma once

#include <cstddef>
#include <span>
#include <unordered_map>
#include <vector>

#include "safefl/tensor.hpp"

namespace safefl {

struct NodeId {
    std::size_t index = 0;
    bool operator==(const NodeId&) const = default;
};

class Gradients;

/// Append-only computation graph with eager forward evaluation.
///
/// Every primitive computes its value immediately and records itself with
/// its parent indices, so parents always precede children and the node list
/// is a topological order. `backward` runs one reverse sweep from a scalar
/// output and returns the adjoint of every differentiable leaf.
///
/// Scalars are rank-0 tensors. Shape errors throw std::invalid_argument at
/// construction time.
class Graph {
public:
    NodeId leaf(Tensor value, bool differentiable = true);
    NodeId constant(Tensor value) { return leaf(std::move(value), false); }

    NodeId add(NodeId a, NodeId b);
    NodeId subtract(NodeId a, NodeId b);
    NodeId scale(NodeId a, double factor);
    NodeId multiply(NodeId a, NodeId b);  // elementwise
    NodeId matmul(NodeId a, NodeId b);
    NodeId transpose(NodeId a);
    NodeId tanh(NodeId a);
    NodeId softmax_rows(NodeId a);
    // Mean over rows of -sum_j targets_ij * log softmax(logits)_ij.
    NodeId soft_cross_entropy(NodeId logits, NodeId soft_targets);
    NodeId squared_l2_norm(NodeId a);
    NodeId mean(NodeId a);

    // (m x n) + (n) broadcast over rows, and its adjoint (m x n) -> (n).
    NodeId add_row_vector(NodeId matrix, NodeId row);
    NodeId column_sum(NodeId matrix);

    // Contiguous window of the flattened input, given a new shape.
    NodeId slice(NodeId a, std::size_t offset, Shape shape);
    // Flattened concatenation into a rank-1 tensor.
    NodeId concat(std::span<const NodeId> parts);

    const Tensor& value(NodeId id) const;
    std::size_t size() const { return nodes_.size(); }
    bool is_differentiable_leaf(NodeId id) const;

    Gradients backward(NodeId output) const;

private:
    enum class Op {
        leaf,
        add,
        subtract,
        scale,
        multiply,
        matmul,
        transpose,
        tanh,
        softmax_rows,
        soft_cross_entropy,
        squared_l2_norm,
        mean,
        add_row_vector,
        column_sum,
        slice,
        concat,
    };

    struct Node {
        Op op;
        std::vector<std::size_t> parents;
        Tensor value;
        bool differentiable = false;  // leaf flag
        bool needs_grad = false;      // some differentiable leaf is upstream
        double factor = 0.0;          // scale
        std::size_t offset = 0;       // slice
    };

    NodeId push(Op op, std::vector<std::size_t> parents, Tensor value, double factor = 0.0,
                std::size_t offset = 0);
    const Node& node(NodeId id) const;

    std::vector<Node> nodes_;
};

/// Adjoints of the differentiable leaves of one backward pass.
class Gradients {
public:
    /// Gradient for a differentiable leaf; zero if the leaf does not reach the output.
    const Tensor& operator[](NodeId leaf) const;
    bool contains(NodeId leaf) const { return grads_.count(leaf.index) != 0; }

private:
    friend class Graph;
    std::unordered_map<std::size_t, Tensor> grads_;
};

}  // namespace safefl
