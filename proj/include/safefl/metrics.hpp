#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "safefl/dataset.hpp"
#include "safefl/detection.hpp"
#include "safefl/model.hpp"
#include "safefl/model_vector.hpp"

namespace safefl {

/// Confusion-matrix metrics with "malicious" as the positive class. Clients
/// marked not_evaluated are skipped. Rates whose denominator is zero are empty.
struct DetectionMetrics {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::optional<double> dacc;
    std::optional<double> fpr;
    std::optional<double> fnr;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
};

DetectionMetrics detection_metrics(std::span<const Verdict> verdicts, const std::vector<bool>& malicious);

/// Fraction of test rows whose argmax prediction equals the label.
double test_accuracy(const ModelSpec& spec, const ModelVector& model, const Dataset& test);

/// Fraction of triggered non-target test rows predicted as the target label.
/// Empty when every test row already carries the target label.
std::optional<double> attack_success_rate(const ModelSpec& spec, const ModelVector& model, const Dataset& test,
                                          const TriggerSpec& trigger);

}  // namespace safefl
