#pragma once

#include <functional>
#include <span>
#include <vector>

#include "adharden/env.hpp"
#include "adharden/policy.hpp"

namespace adharden {

struct NumericalDivergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PpoConfig {
    double lr = 5e-4;
    double gamma = 1.0;    // episodes are bounded; value = success probability
    double gae_lambda = 0.95;
    double clip = 0.2;
    double entropy_coef = 0.01;
    double value_coef = 0.5;
    int update_epochs = 4;
};

// Flattened rollout data; sample i owns obs[i*obs_dim .. ) and
// masks[i*obs_dim .. ). Advantages are GAE, normalized batch-wide.
//
// Samples also carry an episode-structured encoding: a base observation
// (the state at episode start, or at batch start for a carried-over
// episode) plus a prefix of the episode's outcome marks. Consecutive
// states differ in one coordinate, which is what keeps the update cheap
// on large graphs.
struct RolloutBatch {
    std::size_t obs_dim = 0;
    std::size_t count = 0;
    std::vector<double> obs;
    std::vector<std::uint8_t> masks;
    std::vector<std::uint32_t> actions;
    std::vector<double> logp;
    std::vector<double> rewards;
    std::vector<std::uint8_t> dones;
    std::vector<double> values;
    std::vector<double> advantages;
    std::vector<double> returns;

    std::vector<double> base_obs;            // n_bases x obs_dim
    std::vector<std::uint32_t> sample_base;  // per sample: base row
    std::vector<std::uint32_t> delta_begin;  // per sample: episode delta run
    std::vector<std::uint32_t> delta_count;  // per sample: applied prefix length
    std::vector<std::uint32_t> delta_dim;    // flattened outcome marks
    std::vector<double> delta_val;           // new observation value at that dim
};

// Fired once per finished episode during collection (terminal-at-reset
// episodes included, with zero steps).
using EpisodeCallback = std::function<void(
    std::size_t env_index, const std::vector<std::uint8_t>& legal_any,
    const std::vector<std::uint8_t>& chosen, bool reached_da,
    std::uint32_t steps)>;

struct RolloutStats {
    std::vector<std::uint32_t> episodes;  // per env
    std::vector<std::uint32_t> wins;      // per env
};

// Gathers steps_per_env decision steps per environment under a fixed
// parameter snapshot; snapshots rotate between episodes. A reset that is
// already terminal consumes one tick and contributes no sample.
RolloutBatch collect_rollouts(const PolicyParams& params,
                              std::vector<Environment>& envs,
                              std::size_t steps_per_env, const PpoConfig& cfg,
                              RolloutStats* stats = nullptr,
                              const EpisodeCallback& on_episode = nullptr);

struct PpoLossGrads {
    MlpGrads actor;
    MlpGrads critic;
};

// Clipped-surrogate policy loss + value regression + entropy bonus, averaged
// over the batch. Fills grads when non-null; pure in params so the gradient
// can be checked by finite differences.
double ppo_loss(const PolicyParams& params, const RolloutBatch& batch,
                const PpoConfig& cfg, PpoLossGrads* grads);

struct UpdateStats {
    double loss = 0.0;
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
};

class PpoTrainer {
public:
    PpoTrainer(PolicyParams params, PpoConfig cfg);

    const PolicyParams& params() const { return params_; }
    PolicyParams& params() { return params_; }
    const PpoConfig& config() const { return cfg_; }
    AdamState& adam_actor() { return adam_actor_; }
    AdamState& adam_critic() { return adam_critic_; }
    void restore_adam(const AdamState& actor, const AdamState& critic);

    // update_epochs full-batch passes; throws NumericalDivergence on a
    // non-finite loss.
    UpdateStats update(const RolloutBatch& batch);

private:
    PolicyParams params_;
    PpoConfig cfg_;
    AdamState adam_actor_, adam_critic_;
};

}  // namespace adharden
