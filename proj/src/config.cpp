#include "safefl/config.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "safefl/random.hpp"

namespace safefl {
namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

std::size_t to_size(const std::string& s) {
    std::size_t v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size()) {
        throw std::invalid_argument("expected a non-negative integer, got '" + s + "'");
    }
    return v;
}

std::uint64_t to_u64(const std::string& s) {
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size()) {
        throw std::invalid_argument("expected an unsigned 64-bit integer, got '" + s + "'");
    }
    return v;
}

double to_double(const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("expected a number, got '" + s + "'");
    }
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument("expected a finite number, got '" + s + "'");
    return v;
}

std::vector<std::size_t> to_index_list(const std::string& s) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(to_size(item));
    }
    return out;
}

std::string scheme_name(PartitionScheme s) {
    return s == PartitionScheme::probabilistic_q ? "probabilistic_q" : "label_restricted";
}

PartitionScheme parse_scheme(const std::string& s) {
    if (s == "probabilistic_q") return PartitionScheme::probabilistic_q;
    if (s == "label_restricted") return PartitionScheme::label_restricted;
    throw std::invalid_argument("expected probabilistic_q or label_restricted, got '" + s + "'");
}

struct Field {
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

template <class T>
std::string show(const T& v) {
    return fmt::format("{}", v);
}

template <class T>
std::string show(const std::optional<T>& v) {
    return v ? fmt::format("{}", *v) : std::string("auto");
}

const std::map<std::string, Field>& fields() {
    using C = ExperimentConfig;
    using S = const std::string&;
#define SAFEFL_FIELD(key, member, parse) \
    { key, Field{[](C& c, S v) { c.member = parse(v); }, [](const C& c) { return show(c.member); }} }
    static const std::map<std::string, Field> table = {
        SAFEFL_FIELD("seed", seed, to_u64),
        SAFEFL_FIELD("rounds", rounds, to_size),
        SAFEFL_FIELD("clients.n", n_clients, to_size),
        SAFEFL_FIELD("clients.malicious_fraction", malicious_fraction, to_double),
        SAFEFL_FIELD("selection_rate", selection_rate, to_double),
        SAFEFL_FIELD("dp.noise", dp_noise, to_double),
        SAFEFL_FIELD("data.classes", data.n_classes, to_size),
        SAFEFL_FIELD("data.features", data.n_features, to_size),
        SAFEFL_FIELD("data.train_per_class", data.train_per_class, to_size),
        SAFEFL_FIELD("data.test_per_class", data.test_per_class, to_size),
        SAFEFL_FIELD("data.separation", data.separation, to_double),
        {"data.partition", Field{[](C& c, S v) { c.data.scheme = parse_scheme(v); },
                                 [](const C& c) { return scheme_name(c.data.scheme); }}},
        SAFEFL_FIELD("data.q", data.q, to_double),
        SAFEFL_FIELD("data.classes_per_client", data.classes_per_client, to_size),
        {"model.family", Field{[](C& c, S v) { c.family = parse_model_family(v); },
                               [](const C& c) { return to_string(c.family); }}},
        SAFEFL_FIELD("model.hidden", hidden, to_size),
        SAFEFL_FIELD("train.lr", train.lr, to_double),
        SAFEFL_FIELD("train.local_steps", train.local_steps, to_size),
        SAFEFL_FIELD("train.batch_size", train.batch_size, to_size),
        SAFEFL_FIELD("trajectory.epsilon", epsilon, to_size),
        SAFEFL_FIELD("trajectory.k", trajectory_k, to_size),
        SAFEFL_FIELD("syngen.iterations", syngen.iterations, to_size),
        SAFEFL_FIELD("syngen.lr", syngen.lr, to_double),
        SAFEFL_FIELD("syngen.inner_steps", syngen.inner_steps, to_size),
        SAFEFL_FIELD("syngen.inner_lr", syngen_inner_lr, to_double),
        SAFEFL_FIELD("syngen.size", syngen.size, to_size),
        {"detector.kind", Field{[](C& c, S v) { c.detector = parse_detector_kind(v); },
                                [](const C& c) { return to_string(c.detector); }}},
        {"detector.weights", Field{[](C& c, S v) { c.weight_mode = parse_weight_mode(v); },
                                   [](const C& c) { return to_string(c.weight_mode); }}},
        {"detector.clusterer", Field{[](C& c, S v) { c.loss_cluster.method = parse_loss_clusterer(v); },
                                     [](const C& c) { return to_string(c.loss_cluster.method); }}},
        SAFEFL_FIELD("detector.bandwidth", loss_cluster.bandwidth, to_double),
        SAFEFL_FIELD("detector.eps", loss_cluster.eps, to_double),
        SAFEFL_FIELD("detector.bandwidth_scale", loss_cluster.heuristic_scale, to_double),
        SAFEFL_FIELD("detector.min_pts", loss_cluster.min_pts, to_size),
        {"aggregation.rule", Field{[](C& c, S v) { c.rule = parse_aggregation_rule(v); },
                                   [](const C& c) { return to_string(c.rule); }}},
        SAFEFL_FIELD("aggregation.k", aggregation_k, to_size),
        {"attack.kind", Field{[](C& c, S v) { c.attack.kind = parse_attack_kind(v); },
                              [](const C& c) { return to_string(c.attack.kind); }}},
        SAFEFL_FIELD("attack.lambda", attack.lambda, to_double),
        SAFEFL_FIELD("attack.z", attack.lie_z, to_double),
        SAFEFL_FIELD("attack.trim_z_min", attack.trim_z_min, to_double),
        SAFEFL_FIELD("attack.trim_z_max", attack.trim_z_max, to_double),
        SAFEFL_FIELD("attack.poison_fraction", attack.poison_fraction, to_double),
        SAFEFL_FIELD("attack.adaptive_iterations", attack.adaptive_iterations, to_size),
        SAFEFL_FIELD("attack.adaptive_gamma_factor", attack.adaptive_gamma_factor, to_double),
        {"attack.trigger.features",
         Field{[](C& c, S v) { c.trigger_features = to_index_list(v); },
               [](const C& c) { return c.trigger_features.empty() ? std::string("auto")
                                                                  : fmt::format("{}", fmt::join(c.trigger_features, ",")); }}},
        SAFEFL_FIELD("attack.trigger.value", trigger_value, to_double),
        SAFEFL_FIELD("attack.trigger.target", trigger_target, to_size),
        SAFEFL_FIELD("attack.trigger.segments", trigger_segments, to_size),
    };
#undef SAFEFL_FIELD
    return table;
}

void check(std::vector<std::string>& out, bool ok, const std::string& key, const std::string& message) {
    if (!ok) out.push_back(key + ": " + message);
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error([&] {
          std::string msg = "invalid configuration";
          for (const std::string& p : problems) msg += "\n  " + p;
          return msg;
      }()),
      problems_(std::move(problems)) {}

std::size_t ExperimentConfig::n_malicious() const {
    return static_cast<std::size_t>(std::floor(malicious_fraction * static_cast<double>(n_clients) + 1e-9));
}

ModelSpec ExperimentConfig::model_spec() const {
    ModelSpec spec;
    spec.family = family;
    spec.n_features = data.n_features;
    spec.n_classes = data.n_classes;
    spec.hidden = family == ModelFamily::tanh_mlp ? hidden : 0;
    return spec;
}

TriggerSpec ExperimentConfig::trigger() const {
    TriggerSpec t;
    t.feature_indices = trigger_features;
    if (t.feature_indices.empty()) {
        const std::size_t width = std::min<std::size_t>(4, data.n_features);
        for (std::size_t j = data.n_features - width; j < data.n_features; ++j) t.feature_indices.push_back(j);
    }
    t.trigger_value = trigger_value;
    t.target_label = trigger_target;
    t.n_segments = std::min(trigger_segments, t.feature_indices.size());
    return t;
}

FederatedConfig ExperimentConfig::federated() const {
    FederatedConfig f;
    f.model = model_spec();
    f.train = train;
    f.epsilon = epsilon;
    f.syngen = syngen;
    f.syngen.inner_lr = syngen_inner_lr.value_or(train.lr);
    f.syngen.seed = derive_seed(seed, {0x5a});
    f.detector = detector;
    f.weight_mode = weight_mode;
    f.loss_cluster = loss_cluster;
    f.trajectory_k = trajectory_k;
    f.aggregator = Aggregator{rule, aggregation_k.value_or(n_malicious())};
    f.attack = attack;
    f.attack.trigger = trigger();
    f.selection_rate = selection_rate;
    f.dp_noise = dp_noise;
    f.seed = derive_seed(seed, {0xf1});
    return f;
}

std::vector<std::string> ExperimentConfig::validate() const {
    std::vector<std::string> e;
    check(e, n_clients >= 1, "clients.n", "must be at least 1");
    check(e, malicious_fraction >= 0.0 && malicious_fraction < 0.5, "clients.malicious_fraction",
          "must lie in [0, 0.5)");
    check(e, rounds >= 1, "rounds", "must be at least 1");
    check(e, selection_rate > 0.0 && selection_rate <= 1.0, "selection_rate", "must lie in (0, 1]");
    check(e, dp_noise >= 0.0, "dp.noise", "must be non-negative");

    const std::size_t m = data.n_classes;
    check(e, m >= 2, "data.classes", "must be at least 2");
    check(e, data.n_features >= m, "data.features", "must be at least data.classes");
    check(e, data.train_per_class >= 1, "data.train_per_class", "must be at least 1");
    check(e, data.test_per_class >= 1, "data.test_per_class", "must be at least 1");
    check(e, data.separation > 0.0, "data.separation", "must be positive");
    if (m >= 2) {
        if (data.scheme == PartitionScheme::probabilistic_q) {
            check(e, data.q >= 1.0 / static_cast<double>(m) - 1e-12 && data.q <= 1.0, "data.q",
                  "must lie in [1/classes, 1]");
            check(e, n_clients >= m, "clients.n", "probabilistic_q partition needs at least data.classes clients");
        } else {
            check(e, data.classes_per_client >= 1 && data.classes_per_client <= m, "data.classes_per_client",
                  "must lie in [1, data.classes]");
        }
        check(e, n_clients <= data.train_per_class * m, "clients.n", "more clients than training samples");
    }
    check(e, family != ModelFamily::tanh_mlp || hidden >= 1, "model.hidden", "must be at least 1");
    check(e, train.lr > 0.0, "train.lr", "must be positive");

    if (detector != DetectorKind::none) {
        check(e, epsilon >= 2, "trajectory.epsilon", "must be at least 2");
        check(e, epsilon < rounds, "trajectory.epsilon", "must be smaller than rounds");
        check(e, trajectory_k >= 1, "trajectory.k", "must be at least 1");
        check(e, syngen.iterations >= 1, "syngen.iterations", "must be at least 1");
        check(e, syngen.lr > 0.0, "syngen.lr", "must be positive");
        check(e, syngen.inner_steps >= 1 && syngen.inner_steps + 1 <= epsilon, "syngen.inner_steps",
              "must lie in [1, trajectory.epsilon - 1]");
        check(e, syngen.size >= 1, "syngen.size", "must be at least 1");
        check(e, !syngen_inner_lr || *syngen_inner_lr > 0.0, "syngen.inner_lr", "must be positive");
        check(e, loss_cluster.heuristic_scale > 0.0, "detector.bandwidth_scale", "must be positive");
        check(e, loss_cluster.min_pts >= 1, "detector.min_pts", "must be at least 1");
    }

    check(e, attack.trim_z_min <= attack.trim_z_max, "attack.trim_z_min", "must not exceed attack.trim_z_max");
    check(e, attack.poison_fraction > 0.0 && attack.poison_fraction <= 1.0, "attack.poison_fraction",
          "must lie in (0, 1]");
    check(e, !attack.lambda || *attack.lambda > 0.0, "attack.lambda", "must be positive");
    check(e, attack.adaptive_iterations >= 1, "attack.adaptive_iterations", "must be at least 1");
    check(e, attack.adaptive_gamma_factor > 0.0, "attack.adaptive_gamma_factor", "must be positive");
    check(e, trigger_segments >= 1, "attack.trigger.segments", "must be at least 1");
    if (m >= 2 && data.n_features >= 1) {
        try {
            TriggerSpec t = trigger();
            t.n_segments = trigger_segments;
            t.validate(data.n_features, m);
        } catch (const std::exception& ex) {
            e.push_back(std::string("attack.trigger: ") + ex.what());
        }
    }
    return e;
}

ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig config;
    std::vector<std::string> problems;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            problems.push_back(fmt::format("line {}: expected 'key = value'", line_no));
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = unquote(trim(line.substr(eq + 1)));
        const auto it = fields().find(key);
        if (it == fields().end()) {
            problems.push_back(key + ": unknown key");
            continue;
        }
        try {
            it->second.set(config, value);
        } catch (const std::exception& ex) {
            problems.push_back(key + ": " + ex.what());
        }
    }
    for (std::string& p : config.validate()) problems.push_back(std::move(p));
    if (!problems.empty()) throw ConfigError(std::move(problems));
    return config;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({path + ": cannot open configuration file"});
    return parse_config(in);
}

void write_config(std::ostream& out, const ExperimentConfig& config) {
    for (const auto& [key, field] : fields()) {
        const std::string value = field.get(config);
        if (value == "auto") continue;
        out << key << " = " << value << '\n';
    }
}

}  // namespace safefl
