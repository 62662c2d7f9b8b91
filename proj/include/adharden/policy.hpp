#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "adharden/mlp.hpp"

namespace adharden {

struct NoLegalAction : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Actor (|NSP| -> hidden -> |NSP| logits) and critic (|NSP| -> hidden -> 1)
// sharing a per-input-dimension multiplier. dim_scale is the NN-pruning
// handle: observations are multiplied by it before either first layer, which
// for a linear first layer is equivalent to scaling that dimension's weights.
struct PolicyParams {
    MlpParams actor;
    MlpParams critic;
    std::vector<double> dim_scale;

    std::size_t nsp_count() const { return dim_scale.size(); }
};

PolicyParams init_policy(std::size_t nsp_count, std::size_t hidden, Rng& rng);

// Masked distribution over NSP actions: illegal entries are exactly zero,
// legal entries softmax to one. Throws NoLegalAction on an empty mask.
void actor_forward(const PolicyParams& p, std::span<const double> obs,
                   std::span<const std::uint8_t> mask, std::span<double> probs);

// Estimated success probability from this state (unclamped regression head).
double critic_forward(const PolicyParams& p, std::span<const double> obs);

// Draws an action index from the distribution; probs must sum to one.
std::size_t sample_from_probs(std::span<const double> probs, Rng& rng);
std::size_t argmax_action(std::span<const double> probs);

// Checkpoint document for PolicyParams plus, when present, optimizer state
// so training can warm-start exactly.
struct Checkpoint {
    PolicyParams params;
    AdamState adam_actor;
    AdamState adam_critic;
    bool has_adam = false;
};

std::string serialize_checkpoint(const Checkpoint& ck);
Checkpoint deserialize_checkpoint(const std::string& text);
void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace adharden
