#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "safefl/client.hpp"
#include "safefl/dataset.hpp"
#include "safefl/model.hpp"
#include "safefl/model_vector.hpp"

namespace safefl {

enum class AttackKind { none, trim, scaling, dba, label_flip, lie, adaptive, trim_dba, scaling_dba };

std::string to_string(AttackKind kind);
AttackKind parse_attack_kind(const std::string& name);
/// Attacks that need a trigger (scaling, dba and their hybrids).
bool uses_trigger(AttackKind kind);

struct AttackSpec {
    AttackKind kind = AttackKind::none;
    std::optional<double> lambda;  // scaling/dba amplification; default n / m
    double lie_z = 0.74;
    double trim_z_min = 3.0;
    double trim_z_max = 4.0;
    double poison_fraction = 1.0;
    TriggerSpec trigger;
    std::size_t adaptive_iterations = 20;
    double adaptive_gamma_factor = 100.0;  // gamma_max = factor * mean benign delta norm
};

/// Attacker's simulation of the server's filter: given every submitted
/// update (participant order), returns which ones the server would accept.
using DefenderReplica = std::function<std::vector<bool>(std::span<const ModelVector>)>;

/// Everything a full-knowledge attacker sees in one round. All per-participant
/// vectors are indexed by participant position, not client id.
struct AttackContext {
    std::size_t round = 0;
    ModelVector global;
    std::vector<ModelVector> updates;   // honest update of every participant
    std::vector<std::size_t> client_ids;
    std::vector<bool> malicious;
    std::span<const ClientState> clients;  // indexed by client id
    ModelSpec model;
    LocalTrainConfig train;
    std::uint64_t seed = 0;
    DefenderReplica defender;

    std::vector<std::size_t> malicious_positions() const;
    std::vector<ModelVector> benign_updates() const;
};

/// Crafted updates for `targets` (participant positions of malicious
/// clients), in the same order as `targets`.
std::vector<ModelVector> trim_attack(const AttackContext& ctx, const AttackSpec& spec,
                                     std::span<const std::size_t> targets);
std::vector<ModelVector> scaling_attack(const AttackContext& ctx, const AttackSpec& spec,
                                        std::span<const std::size_t> targets);
std::vector<ModelVector> dba_attack(const AttackContext& ctx, const AttackSpec& spec,
                                    std::span<const std::size_t> targets);
std::vector<ModelVector> label_flip_attack(const AttackContext& ctx, const AttackSpec& spec,
                                           std::span<const std::size_t> targets);
std::vector<ModelVector> lie_attack(const AttackContext& ctx, const AttackSpec& spec,
                                    std::span<const std::size_t> targets);
std::vector<ModelVector> adaptive_attack(const AttackContext& ctx, const AttackSpec& spec,
                                         std::span<const std::size_t> targets);

/// First ceil(m/2) malicious participants use `first`, the rest `second`.
std::vector<ModelVector> hybrid_attack(const AttackContext& ctx, const AttackSpec& spec, AttackKind first,
                                       AttackKind second);

/// Dispatches on spec.kind; returns one update per malicious participant in
/// participant order (empty for AttackKind::none).
std::vector<ModelVector> craft_malicious(const AttackContext& ctx, const AttackSpec& spec);

/// Amplification applied by scaling and dba: explicit lambda, else n / m.
double amplification(const AttackContext& ctx, const AttackSpec& spec);

}  // namespace safefl
