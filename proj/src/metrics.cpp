#include "safefl/metrics.hpp"

#include <stdexcept>

namespace safefl {
namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

DetectionMetrics detection_metrics(std::span<const Verdict> verdicts, const std::vector<bool>& malicious) {
    if (verdicts.size() != malicious.size()) throw std::invalid_argument("one ground-truth flag per verdict required");
    DetectionMetrics m;
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        if (verdicts[i] == Verdict::not_evaluated) continue;
        const bool flagged = verdicts[i] == Verdict::malicious;
        if (malicious[i]) {
            ++(flagged ? m.tp : m.fn);
        } else {
            ++(flagged ? m.fp : m.tn);
        }
    }
    m.dacc = ratio(m.tp + m.tn, m.tp + m.tn + m.fp + m.fn);
    m.fpr = ratio(m.fp, m.fp + m.tn);
    m.fnr = ratio(m.fn, m.fn + m.tp);
    m.precision = ratio(m.tp, m.tp + m.fp);
    m.recall = ratio(m.tp, m.tp + m.fn);
    m.f1 = ratio(2 * m.tp, 2 * m.tp + m.fp + m.fn);
    return m;
}

double test_accuracy(const ModelSpec& spec, const ModelVector& model, const Dataset& test) {
    const std::vector<std::size_t> predicted = model_predict(spec, model.params(), test.features());
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == test.labels()[i];
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

std::optional<double> attack_success_rate(const ModelSpec& spec, const ModelVector& model, const Dataset& test,
                                          const TriggerSpec& trigger) {
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < test.size(); ++i)
        if (test.labels()[i] != trigger.target_label) eligible.push_back(i);
    if (eligible.empty()) return std::nullopt;
    const Dataset stamped = stamp_trigger(test.subset(eligible), trigger);
    const std::vector<std::size_t> predicted = model_predict(spec, model.params(), stamped.features());
    std::size_t hits = 0;
    for (std::size_t p : predicted) hits += p == trigger.target_label;
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

}  // namespace safefl
