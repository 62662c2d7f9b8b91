#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "adharden/env.hpp"
#include "adharden/policy.hpp"
#include "adharden/snapshots.hpp"

namespace adharden {

struct BudgetInfeasible : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ScoredPlan {
    DefensePlan plan;
    double fitness = 0.0;  // attacker success estimate; lower is better
};

struct Population {
    std::vector<ScoredPlan> members;
    std::uint32_t capacity = 0;  // mu
    int budget = 0;              // k
};

// Fitness of a candidate plan: the attacker's estimated success rate.
using FitnessFn = std::function<double(const DefensePlan&)>;

// mu members, each a uniformly random k-subset of the block-worthy edges.
// Throws BudgetInfeasible when fewer than k such edges exist.
Population init_population(const CondensedGraph& cg, int k, std::uint32_t mu,
                           const FitnessFn& fitness, Rng& rng);

// Swap x ~ Poisson(1) blocked coordinates with x unblocked ones (budget
// preserved; x clamps to what is feasible).
DefensePlan mutate(const DefensePlan& plan, Rng& rng);
DefensePlan mutate_with_swaps(const DefensePlan& plan, int swaps, Rng& rng);

// Exchanges x ~ Poisson(1) coordinates of type (N,B) and x of type (B,N)
// between the parents; both budgets preserved.
std::pair<DefensePlan, DefensePlan> crossover(const DefensePlan& p1,
                                              const DefensePlan& p2, Rng& rng);
std::pair<DefensePlan, DefensePlan> crossover_with_swaps(const DefensePlan& p1,
                                                         const DefensePlan& p2,
                                                         int swaps, Rng& rng);

// Mean critic value of the initial state over the snapshot sample, clamped
// to [0, 1].
double fitness_critic(const DefensePlan& plan, const PolicyParams& params,
                      std::span<const Snapshot> snapshots,
                      const CondensedGraph& cg);

// Empirical success of the sampled policy over episodes_per_snapshot
// episodes on each snapshot.
double fitness_monte_carlo(const DefensePlan& plan, const PolicyParams& params,
                           std::span<const Snapshot> snapshots,
                           const CondensedGraph& cg,
                           std::size_t episodes_per_snapshot, Rng& rng);

// Per-edge blocked counts C(bw) across the population.
std::vector<std::uint32_t> diversity_counts(const Population& pop);

// Member whose removal leaves the evenest blocked-edge distribution: the
// lexicographically smallest descending-sorted C - p_i. Ties fall to the
// worst fitness, then the lowest index. Requires mu + 1 members.
std::size_t diversity_removal_choice(const Population& pop);

struct EdoStepResult {
    bool accepted = false;
    bool best_override = false;  // offspring beat BEST: worst member evicted
    double offspring_fitness = 0.0;
};

// One EDO iteration: mutate or crossover (p = 0.5), evaluate the offspring,
// insert when the fitness lands in [BEST, BEST + window] (improvements always
// enter and evict the worst member; in-window offspring evict by diversity).
EdoStepResult edo_step(Population& pop, const FitnessFn& fitness, Rng& rng,
                       double window = 0.1);

// Shannon entropy of the normalized blocked-count vector (history metric).
double diversity_entropy(const Population& pop);

}  // namespace adharden
