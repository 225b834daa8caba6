#include "safefl/detection.hpp"

#include <algorithm>
#include <stdexcept>

#include "safefl/clustering.hpp"

namespace safefl {

char verdict_code(Verdict v) {
    switch (v) {
        case Verdict::benign:
            return 'B';
        case Verdict::malicious:
            return 'M';
        case Verdict::not_evaluated:
            return '-';
    }
    return '?';
}

std::vector<double> eval_losses(const ModelSpec& spec, std::span<const ModelVector> models,
                                const SyntheticDataset& synthetic) {
    const Tensor targets = synthetic.soft_labels();
    std::vector<double> out;
    out.reserve(models.size());
    for (const ModelVector& w : models) out.push_back(model_loss(spec, w.params(), synthetic.features, targets));
    return out;
}

std::string to_string(WeightMode mode) { return mode == WeightMode::literal ? "literal" : "renormalized"; }

WeightMode parse_weight_mode(const std::string& name) {
    if (name == "renormalized") return WeightMode::renormalized;
    if (name == "literal") return WeightMode::literal;
    throw std::invalid_argument("unknown weight mode '" + name + "' (expected renormalized or literal)");
}

MedianLossResult safefl_ml(std::span<const ModelVector> updates, std::span<const double> losses, WeightMode mode) {
    if (updates.size() != losses.size()) throw std::invalid_argument("one loss per update required");
    common_dim(updates);
    const std::size_t n = losses.size();

    MedianLossResult out;
    out.median_loss = median_value(std::vector<double>(losses.begin(), losses.end()));
    out.verdicts.assign(n, Verdict::malicious);
    out.weights.assign(n, 0.0);

    double accepted_mass = 0.0, total_mass = 0.0;
    std::vector<double> inverse(n);
    for (std::size_t i = 0; i < n; ++i) {
        inverse[i] = 1.0 / std::max(losses[i], 1e-12);
        total_mass += inverse[i];
        if (losses[i] <= out.median_loss) {
            out.verdicts[i] = Verdict::benign;
            accepted_mass += inverse[i];
        }
    }
    const double denom = mode == WeightMode::renormalized ? accepted_mass : total_mass;
    for (std::size_t i = 0; i < n; ++i) {
        if (out.verdicts[i] == Verdict::benign) out.weights[i] = inverse[i] / denom;
    }
    out.aggregate = weighted_average(updates, out.weights);
    return out;
}

std::string to_string(LossClusterer c) { return c == LossClusterer::dbscan ? "dbscan" : "meanshift"; }

LossClusterer parse_loss_clusterer(const std::string& name) {
    if (name == "meanshift") return LossClusterer::meanshift;
    if (name == "dbscan") return LossClusterer::dbscan;
    throw std::invalid_argument("unknown loss clusterer '" + name + "' (expected meanshift or dbscan)");
}

std::vector<bool> largest_loss_cluster(std::span<const double> losses, const LossClusterConfig& config) {
    if (config.method == LossClusterer::dbscan) {
        const double eps = config.eps > 0.0 ? config.eps : config.heuristic_scale * pairwise_median_bandwidth(losses);
        return dbscan(losses, eps, config.min_pts).in_largest();
    }
    const double h = config.bandwidth > 0.0 ? config.bandwidth : config.heuristic_scale * pairwise_median_bandwidth(losses);
    return meanshift(losses, h).in_largest();
}

ClusterLossResult safefl_cl(std::span<const ModelVector> updates, std::span<const double> losses,
                            const Aggregator& rule, const LossClusterConfig& config) {
    if (updates.size() != losses.size()) throw std::invalid_argument("one loss per update required");
    common_dim(updates);
    const std::vector<bool> accepted = largest_loss_cluster(losses, config);

    ClusterLossResult out;
    std::vector<ModelVector> kept;
    for (std::size_t i = 0; i < updates.size(); ++i) {
        out.verdicts.push_back(accepted[i] ? Verdict::benign : Verdict::malicious);
        if (accepted[i]) kept.push_back(updates[i]);
    }
    if (kept.empty()) throw std::runtime_error("loss clustering accepted no client");
    out.aggregate = rule(kept);
    return out;
}

}  // namespace safefl
