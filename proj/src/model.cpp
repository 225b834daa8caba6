#include "safefl/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace safefl {
namespace {

struct Blocks {
    std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;  // offsets; w2/b2 unused for softmax regression
};

Blocks layout(const ModelSpec& spec) {
    const std::size_t f = spec.n_features, m = spec.n_classes, h = spec.hidden;
    switch (spec.family) {
        case ModelFamily::softmax_regression:
            return {0, f * m, 0, 0};
        case ModelFamily::tanh_mlp:
            return {0, f * h, f * h + h, f * h + h + h * m};
    }
    throw std::invalid_argument("unsupported model family");
}

void check_inputs(const ModelSpec& spec, std::span<const double> params, const Tensor& features) {
    spec.validate();
    if (params.size() != spec.parameter_count()) {
        throw std::invalid_argument("model expects " + std::to_string(spec.parameter_count()) + " parameters, got " +
                                    std::to_string(params.size()));
    }
    if (features.rank() != 2 || features.cols() != spec.n_features) {
        throw std::invalid_argument("features " + shape_string(features.shape()) + " do not match model with " +
                                    std::to_string(spec.n_features) + " inputs");
    }
}

// out (m x n) = a (m x k) * b (k x n) + bias (n)
std::vector<double> affine(const double* a, const double* b, const double* bias, std::size_t m, std::size_t k,
                           std::size_t n) {
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = bias[j];
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[i * k + p];
            for (std::size_t j = 0; j < n; ++j) out[i * n + j] += av * b[p * n + j];
        }
    }
    return out;
}

void softmax_in_place(std::vector<double>& z, std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* row = z.data() + i * n;
        const double mx = *std::max_element(row, row + n);
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        for (std::size_t j = 0; j < n; ++j) row[j] /= sum;
    }
}

struct Forward {
    std::vector<double> hidden;  // tanh activations, mlp only
    std::vector<double> logits;
};

Forward forward(const ModelSpec& spec, std::span<const double> params, const Tensor& features) {
    const Blocks o = layout(spec);
    const std::size_t s = features.rows(), f = spec.n_features, m = spec.n_classes, h = spec.hidden;
    const double* p = params.data();
    Forward out;
    if (spec.family == ModelFamily::softmax_regression) {
        out.logits = affine(features.data().data(), p + o.w1, p + o.b1, s, f, m);
    } else {
        out.hidden = affine(features.data().data(), p + o.w1, p + o.b1, s, f, h);
        for (double& v : out.hidden) v = std::tanh(v);
        out.logits = affine(out.hidden.data(), p + o.w2, p + o.b2, s, h, m);
    }
    return out;
}

}  // namespace

std::string to_string(ModelFamily family) {
    switch (family) {
        case ModelFamily::softmax_regression:
            return "softmax";
        case ModelFamily::tanh_mlp:
            return "mlp";
    }
    return "unknown";
}

ModelFamily parse_model_family(const std::string& name) {
    if (name == "softmax" || name == "softmax_regression") return ModelFamily::softmax_regression;
    if (name == "mlp" || name == "tanh_mlp") return ModelFamily::tanh_mlp;
    throw std::invalid_argument("unknown model family '" + name + "' (expected softmax or mlp)");
}

std::size_t ModelSpec::parameter_count() const {
    switch (family) {
        case ModelFamily::softmax_regression:
            return n_features * n_classes + n_classes;
        case ModelFamily::tanh_mlp:
            return n_features * hidden + hidden + hidden * n_classes + n_classes;
    }
    throw std::invalid_argument("unsupported model family");
}

void ModelSpec::validate() const {
    if (family != ModelFamily::softmax_regression && family != ModelFamily::tanh_mlp) {
        throw std::invalid_argument("unsupported model family");
    }
    if (n_features == 0 || n_classes < 2) throw std::invalid_argument("model needs >= 1 feature and >= 2 classes");
    if (family == ModelFamily::tanh_mlp && hidden == 0) throw std::invalid_argument("tanh_mlp needs hidden > 0");
}

Tensor model_logits(const ModelSpec& spec, std::span<const double> params, const Tensor& features) {
    check_inputs(spec, params, features);
    return Tensor::matrix(features.rows(), spec.n_classes, forward(spec, params, features).logits);
}

double model_loss(const ModelSpec& spec, std::span<const double> params, const Tensor& features,
                  const Tensor& soft_targets) {
    check_inputs(spec, params, features);
    const std::size_t s = features.rows(), m = spec.n_classes;
    if (soft_targets.shape() != Shape{s, m}) throw std::invalid_argument("targets do not match logits");
    const std::vector<double> z = forward(spec, params, features).logits;
    double total = 0.0;
    for (std::size_t i = 0; i < s; ++i) {
        const double* row = z.data() + i * m;
        const double mx = *std::max_element(row, row + m);
        double sum = 0.0;
        for (std::size_t j = 0; j < m; ++j) sum += std::exp(row[j] - mx);
        const double lse = mx + std::log(sum);
        for (std::size_t j = 0; j < m; ++j) total -= soft_targets[i * m + j] * (row[j] - lse);
    }
    return total / static_cast<double>(s);
}

std::vector<double> model_loss_gradient(const ModelSpec& spec, std::span<const double> params,
                                        const Tensor& features, const Tensor& soft_targets) {
    check_inputs(spec, params, features);
    const std::size_t s = features.rows(), f = spec.n_features, m = spec.n_classes, h = spec.hidden;
    if (soft_targets.shape() != Shape{s, m}) throw std::invalid_argument("targets do not match logits");
    Forward fw = forward(spec, params, features);

    // dZ = (softmax(Z) * rowmass(T) - T) / S
    std::vector<double> dz = fw.logits;
    softmax_in_place(dz, s, m);
    for (std::size_t i = 0; i < s; ++i) {
        double mass = 0.0;
        for (std::size_t j = 0; j < m; ++j) mass += soft_targets[i * m + j];
        for (std::size_t j = 0; j < m; ++j) {
            dz[i * m + j] = (dz[i * m + j] * mass - soft_targets[i * m + j]) / static_cast<double>(s);
        }
    }

    const Blocks o = layout(spec);
    std::vector<double> grad(params.size(), 0.0);
    // Accumulates input^T * delta into the weight block and colsum(delta) into the bias block.
    auto accumulate = [&](const double* input, std::size_t in_dim, const std::vector<double>& delta,
                          std::size_t out_dim, std::size_t w_off, std::size_t b_off) {
        for (std::size_t i = 0; i < s; ++i) {
            for (std::size_t p = 0; p < in_dim; ++p) {
                const double x = input[i * in_dim + p];
                for (std::size_t j = 0; j < out_dim; ++j) grad[w_off + p * out_dim + j] += x * delta[i * out_dim + j];
            }
            for (std::size_t j = 0; j < out_dim; ++j) grad[b_off + j] += delta[i * out_dim + j];
        }
    };

    if (spec.family == ModelFamily::softmax_regression) {
        accumulate(features.data().data(), f, dz, m, o.w1, o.b1);
        return grad;
    }

    accumulate(fw.hidden.data(), h, dz, m, o.w2, o.b2);
    std::vector<double> da(s * h, 0.0);
    const double* w2 = params.data() + o.w2;
    for (std::size_t i = 0; i < s; ++i) {
        for (std::size_t p = 0; p < h; ++p) {
            double back = 0.0;
            for (std::size_t j = 0; j < m; ++j) back += dz[i * m + j] * w2[p * m + j];
            const double act = fw.hidden[i * h + p];
            da[i * h + p] = back * (1.0 - act * act);
        }
    }
    accumulate(features.data().data(), f, da, h, o.w1, o.b1);
    return grad;
}

std::vector<std::size_t> model_predict(const ModelSpec& spec, std::span<const double> params,
                                       const Tensor& features) {
    check_inputs(spec, params, features);
    const std::size_t s = features.rows(), m = spec.n_classes;
    const std::vector<double> z = forward(spec, params, features).logits;
    std::vector<std::size_t> out(s);
    for (std::size_t i = 0; i < s; ++i) {
        const double* row = z.data() + i * m;
        out[i] = static_cast<std::size_t>(std::max_element(row, row + m) - row);
    }
    return out;
}

Tensor softmax_rows(const Tensor& logits) {
    std::vector<double> z = logits.values();
    softmax_in_place(z, logits.rows(), logits.cols());
    return Tensor(logits.shape(), std::move(z));
}

Tensor one_hot(std::span<const std::size_t> labels, std::size_t n_classes) {
    std::vector<double> out(labels.size() * n_classes, 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= n_classes) throw std::invalid_argument("label out of range");
        out[i * n_classes + labels[i]] = 1.0;
    }
    return Tensor::matrix(labels.size(), n_classes, std::move(out));
}

NodeId graph_loss_gradient(Graph& graph, const ModelSpec& spec, NodeId params, NodeId features,
                           NodeId soft_targets) {
    spec.validate();
    const Tensor& w = graph.value(params);
    const Tensor& x = graph.value(features);
    if (w.rank() != 1 || w.size() != spec.parameter_count()) {
        throw std::invalid_argument("parameter node has shape " + shape_string(w.shape()) + ", model expects [" +
                                    std::to_string(spec.parameter_count()) + "]");
    }
    if (x.rank() != 2 || x.cols() != spec.n_features) {
        throw std::invalid_argument("feature node has shape " + shape_string(x.shape()));
    }
    const std::size_t s = x.rows(), f = spec.n_features, m = spec.n_classes, h = spec.hidden;
    const Blocks o = layout(spec);
    const double inv_rows = 1.0 / static_cast<double>(s);
    const NodeId xt = graph.transpose(features);

    // Targets are assumed row-normalized (they come from softmax_rows), so dZ = (P - T) / S.
    auto output_delta = [&](NodeId logits) {
        return graph.scale(graph.subtract(graph.softmax_rows(logits), soft_targets), inv_rows);
    };

    if (spec.family == ModelFamily::softmax_regression) {
        const NodeId wmat = graph.slice(params, o.w1, {f, m});
        const NodeId bias = graph.slice(params, o.b1, {m});
        const NodeId dz = output_delta(graph.add_row_vector(graph.matmul(features, wmat), bias));
        const NodeId parts[] = {graph.matmul(xt, dz), graph.column_sum(dz)};
        return graph.concat(parts);
    }

    const NodeId w1 = graph.slice(params, o.w1, {f, h});
    const NodeId b1 = graph.slice(params, o.b1, {h});
    const NodeId w2 = graph.slice(params, o.w2, {h, m});
    const NodeId b2 = graph.slice(params, o.b2, {m});
    const NodeId act = graph.tanh(graph.add_row_vector(graph.matmul(features, w1), b1));
    const NodeId dz = output_delta(graph.add_row_vector(graph.matmul(act, w2), b2));
    const NodeId dh = graph.matmul(dz, graph.transpose(w2));
    const NodeId ones = graph.constant(Tensor::filled({s, h}, 1.0));
    const NodeId da = graph.multiply(dh, graph.subtract(ones, graph.multiply(act, act)));
    const NodeId parts[] = {graph.matmul(xt, da), graph.column_sum(da), graph.matmul(graph.transpose(act), dz),
                            graph.column_sum(dz)};
    return graph.concat(parts);
}

NodeId unroll_inner_sgd(Graph& graph, const ModelSpec& spec, NodeId initial_params, NodeId features,
                        NodeId label_logits, std::size_t steps, double lr) {
    spec.validate();
    if (steps == 0) throw std::invalid_argument("unroll_inner_sgd needs at least one step");
    const NodeId targets = graph.softmax_rows(label_logits);
    NodeId w = initial_params;
    for (std::size_t k = 0; k < steps; ++k) {
        const NodeId g = graph_loss_gradient(graph, spec, w, features, targets);
        w = graph.subtract(w, graph.scale(g, lr));
    }
    return w;
}

}  // namespace safefl
