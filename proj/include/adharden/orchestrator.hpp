#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "adharden/condense.hpp"
#include "adharden/edo.hpp"
#include "adharden/facilitator.hpp"
#include "adharden/oracle.hpp"
#include "adharden/ppo.hpp"
#include "adharden/synth.hpp"

namespace adharden {

enum class FitnessMode : std::uint8_t { Critic, MonteCarlo };

struct RunConfig {
    std::uint64_t seed = 0;
    std::uint32_t epochs = 1200;
    std::uint32_t defender_cycle = 50;
    std::uint32_t envs = 20;
    std::uint32_t snapshots_per_env = 50;
    int budget_k = 5;
    std::uint32_t population_mu = 20;
    std::uint32_t edo_total_iterations = 20000;
    std::vector<std::uint32_t> prune_epochs_in_cycle = {30, 40};
    std::uint32_t reintroduce_epoch_in_cycle = 45;
    double pruned_env_fraction = 0.5;
    double nn_prune_ratio = 0.02;
    double session_p = 0.5;
    ProbDistribution distribution = ProbDistribution::Ind;

    // Training internals (defaults from the module design decisions).
    std::uint32_t batch_states = 800;
    std::uint32_t hidden = 128;
    double lr = 5e-4;
    double gamma = 1.0;
    double gae_lambda = 0.95;
    double clip = 0.2;
    double entropy_coef = 0.01;
    double value_coef = 0.5;
    std::uint32_t ppo_update_epochs = 4;

    bool facilitator = true;
    std::uint32_t nn_prune_interval = 50;  // PPO updates per NN prune step
    double nn_prune_wallclock_minutes = 0;  // > 0 switches to wall-clock cadence
    std::uint32_t usage_window = 200;       // episodes per environment
    double env_prune_tolerance = 0.02;
    double nn_prune_tolerance = 0.02;
    std::uint32_t probe_capacity = 256;
    std::uint32_t min_probe_states = 64;

    FitnessMode fitness_mode = FitnessMode::Critic;
    std::uint32_t fitness_snapshot_sample = 50;
    std::uint32_t mc_episodes_per_snapshot = 20;

    std::uint32_t eval_epochs = 200;
    std::uint32_t eval_episodes = 5000;

    std::uint32_t steps_per_env() const {
        return std::max<std::uint32_t>(1, batch_states / std::max<std::uint32_t>(1, envs));
    }
    // Throws std::invalid_argument on a violated invariant.
    void check() const;
    // Shrunk layout that runs the full pipeline in minutes on small graphs.
    static RunConfig desk_preset();
};

std::string serialize_config(const RunConfig& cfg);
RunConfig config_from_json_text(const std::string& text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

struct TrainArtifacts {
    AttackGraph preprocessed;
    CondensedGraph cg;
    DefensePlan best_defense;
    double best_fitness = 0.0;
    Checkpoint checkpoint;
    std::string metrics_csv;
    std::vector<PruneRecord> prune_records;
    std::vector<ScoredPlan> final_population;
};

// The co-training loop: PPO attacker across `envs` environments, each
// holding one defense plan and a snapshot pool; facilitator pruning at the
// configured in-cycle epochs; EDO defender phase every defender_cycle
// epochs. With fixed_plan set, the defender never acts and every
// environment plays the given plan (used by run_evaluate).
TrainArtifacts run_training(const AttackGraph& raw, const RunConfig& cfg,
                            const std::optional<DefensePlan>& fixed_plan = std::nullopt,
                            std::ostream* log = nullptr,
                            const Checkpoint* resume = nullptr);

struct EvalReport {
    double mc_success = 0.0;
    std::uint32_t episodes = 0;
    std::vector<double> per_snapshot_success;
    std::vector<std::uint32_t> per_snapshot_episodes;
    std::optional<double> oracle_pool_mean;  // mean optimal value over the pool
    std::optional<double> oracle_expected;   // expectation over all snapshots
    Checkpoint trained;
};

// Trains a fresh policy against the fixed defense on fresh snapshots, then
// reports greedy Monte-Carlo success over cfg.eval_episodes plus the oracle
// values when the instance is small enough.
EvalReport run_evaluate(const AttackGraph& raw, const DefensePlan& plan,
                        const RunConfig& cfg, std::ostream* log = nullptr);

}  // namespace adharden
