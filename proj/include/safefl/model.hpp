#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "safefl/graph.hpp"
#include "safefl/tensor.hpp"

namespace safefl {

/// The two model families whose loss gradient has a closed form built from
/// graph primitives. Both are trained with soft-label cross-entropy.
enum class ModelFamily {
    softmax_regression,  // logits = X W + b
    tanh_mlp,            // logits = tanh(X W1 + b1) W2 + b2
};

std::string to_string(ModelFamily family);
ModelFamily parse_model_family(const std::string& name);

/// Architecture of the shared model.
///
/// Flat parameter layout, row-major blocks in this order:
///   softmax_regression: W (F x M), b (M)
///   tanh_mlp:           W1 (F x H), b1 (H), W2 (H x M), b2 (M)
struct ModelSpec {
    ModelFamily family = ModelFamily::softmax_regression;
    std::size_t n_features = 0;
    std::size_t n_classes = 0;
    std::size_t hidden = 0;  // tanh_mlp only

    std::size_t parameter_count() const;
    void validate() const;
};

// Plain (non-graph) evaluation, used for client training and loss scoring.

Tensor model_logits(const ModelSpec& spec, std::span<const double> params, const Tensor& features);
double model_loss(const ModelSpec& spec, std::span<const double> params, const Tensor& features,
                  const Tensor& soft_targets);
std::vector<double> model_loss_gradient(const ModelSpec& spec, std::span<const double> params,
                                        const Tensor& features, const Tensor& soft_targets);
std::vector<std::size_t> model_predict(const ModelSpec& spec, std::span<const double> params,
                                       const Tensor& features);

Tensor softmax_rows(const Tensor& logits);
Tensor one_hot(std::span<const std::size_t> labels, std::size_t n_classes);

// Graph construction.

/// Gradient of the mean soft cross-entropy with respect to the flat
/// parameters, written out with primitives so it stays differentiable in
/// the features and targets.
NodeId graph_loss_gradient(Graph& graph, const ModelSpec& spec, NodeId params, NodeId features,
                           NodeId soft_targets);

/// Builds w_{k+1} = w_k - lr * grad L(X, softmax(Y), w_k) for `steps` steps
/// and returns the node of the final weights. Y holds raw label logits.
NodeId unroll_inner_sgd(Graph& graph, const ModelSpec& spec, NodeId initial_params, NodeId features,
                        NodeId label_logits, std::size_t steps, double lr);

}  // namespace safefl
