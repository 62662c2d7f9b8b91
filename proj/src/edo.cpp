#include "adharden/edo.hpp"

#include <algorithm>
#include <cmath>

namespace adharden {

Population init_population(const CondensedGraph& cg, int k, std::uint32_t mu,
                           const FitnessFn& fitness, Rng& rng) {
    const std::size_t n = cg.bw_edges.size();
    if (k < 0 || static_cast<std::size_t>(k) > n) {
        throw BudgetInfeasible("budget " + std::to_string(k) + " exceeds " +
                               std::to_string(n) + " block-worthy edges");
    }
    Population pop;
    pop.capacity = mu;
    pop.budget = k;
    pop.members.reserve(mu);
    for (std::uint32_t i = 0; i < mu; ++i) {
        DefensePlan plan;
        plan.blocked.assign(n, 0);
        for (std::uint32_t idx : rng.sample_without_replacement(
                 static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(k))) {
            plan.blocked[idx] = 1;
        }
        const double f = fitness(plan);
        pop.members.push_back({std::move(plan), f});
    }
    return pop;
}

namespace {

std::vector<std::uint32_t> indices_where(const DefensePlan& plan, std::uint8_t want) {
    std::vector<std::uint32_t> out;
    for (std::uint32_t i = 0; i < plan.blocked.size(); ++i) {
        if (plan.blocked[i] == want) out.push_back(i);
    }
    return out;
}

}  // namespace

DefensePlan mutate_with_swaps(const DefensePlan& plan, int swaps, Rng& rng) {
    DefensePlan out = plan;
    auto blocked = indices_where(plan, 1);
    auto open = indices_where(plan, 0);
    const int x = std::min<int>(swaps, static_cast<int>(
                                           std::min(blocked.size(), open.size())));
    if (x <= 0) return out;
    auto drop = rng.sample_without_replacement(
        static_cast<std::uint32_t>(blocked.size()), static_cast<std::uint32_t>(x));
    auto add = rng.sample_without_replacement(
        static_cast<std::uint32_t>(open.size()), static_cast<std::uint32_t>(x));
    for (int i = 0; i < x; ++i) {
        out.blocked[blocked[drop[static_cast<std::size_t>(i)]]] = 0;
        out.blocked[open[add[static_cast<std::size_t>(i)]]] = 1;
    }
    return out;
}

DefensePlan mutate(const DefensePlan& plan, Rng& rng) {
    return mutate_with_swaps(plan, rng.poisson(1.0), rng);
}

std::pair<DefensePlan, DefensePlan> crossover_with_swaps(const DefensePlan& p1,
                                                         const DefensePlan& p2,
                                                         int swaps, Rng& rng) {
    DefensePlan c1 = p1, c2 = p2;
    // Coordinates where (p1, p2) disagree, split by direction.
    std::vector<std::uint32_t> n_b, b_n;  // (N in p1, B in p2), (B in p1, N in p2)
    for (std::uint32_t i = 0; i < p1.blocked.size(); ++i) {
        if (!p1.blocked[i] && p2.blocked[i]) n_b.push_back(i);
        if (p1.blocked[i] && !p2.blocked[i]) b_n.push_back(i);
    }
    const int x = std::min<int>(swaps,
                                static_cast<int>(std::min(n_b.size(), b_n.size())));
    if (x <= 0) return {c1, c2};
    auto take_nb = rng.sample_without_replacement(
        static_cast<std::uint32_t>(n_b.size()), static_cast<std::uint32_t>(x));
    auto take_bn = rng.sample_without_replacement(
        static_cast<std::uint32_t>(b_n.size()), static_cast<std::uint32_t>(x));
    for (int i = 0; i < x; ++i) {
        const std::uint32_t a = n_b[take_nb[static_cast<std::size_t>(i)]];
        const std::uint32_t b = b_n[take_bn[static_cast<std::size_t>(i)]];
        // p1 gains a block at a, loses at b; p2 mirrors.
        c1.blocked[a] = 1;
        c2.blocked[a] = 0;
        c1.blocked[b] = 0;
        c2.blocked[b] = 1;
    }
    return {c1, c2};
}

std::pair<DefensePlan, DefensePlan> crossover(const DefensePlan& p1,
                                              const DefensePlan& p2, Rng& rng) {
    return crossover_with_swaps(p1, p2, rng.poisson(1.0), rng);
}

double fitness_critic(const DefensePlan& plan, const PolicyParams& params,
                      std::span<const Snapshot> snapshots,
                      const CondensedGraph& cg) {
    if (snapshots.empty()) throw std::invalid_argument("empty snapshot sample");
    std::vector<double> obs(cg.nsps.size());
    double total = 0.0;
    for (const Snapshot& snap : snapshots) {
        const AttackerState s = init_state(cg, snap, plan);
        encode_state(s, obs);
        total += critic_forward(params, obs);
    }
    return std::clamp(total / static_cast<double>(snapshots.size()), 0.0, 1.0);
}

double fitness_monte_carlo(const DefensePlan& plan, const PolicyParams& params,
                           std::span<const Snapshot> snapshots,
                           const CondensedGraph& cg,
                           std::size_t episodes_per_snapshot, Rng& rng) {
    if (snapshots.empty()) throw std::invalid_argument("empty snapshot sample");
    std::vector<double> obs(cg.nsps.size());
    std::vector<double> probs(cg.nsps.size());
    std::vector<std::uint8_t> mask(cg.nsps.size());
    std::size_t wins = 0, episodes = 0;
    for (const Snapshot& snap : snapshots) {
        for (std::size_t ep = 0; ep < episodes_per_snapshot; ++ep) {
            AttackerState s = init_state(cg, snap, plan);
            ++episodes;
            for (;;) {
                const auto legal = legal_actions(s, cg);
                if (legal.empty()) break;
                encode_state(s, obs);
                std::fill(mask.begin(), mask.end(), 0);
                for (NspId a : legal) mask[a] = 1;
                actor_forward(params, obs, mask, probs);
                const auto action = static_cast<NspId>(sample_from_probs(probs, rng));
                const StepResult r = step(s, action, cg, rng);
                if (r.reward > 0.5) {
                    ++wins;
                    break;
                }
                if (r.done) break;
            }
        }
    }
    return static_cast<double>(wins) / static_cast<double>(episodes);
}

std::vector<std::uint32_t> diversity_counts(const Population& pop) {
    if (pop.members.empty()) return {};
    std::vector<std::uint32_t> counts(pop.members.front().plan.blocked.size(), 0);
    for (const ScoredPlan& m : pop.members) {
        for (std::size_t i = 0; i < counts.size(); ++i) {
            counts[i] += m.plan.blocked[i] ? 1 : 0;
        }
    }
    return counts;
}

std::size_t diversity_removal_choice(const Population& pop) {
    const std::vector<std::uint32_t> counts = diversity_counts(pop);
    std::size_t best_idx = 0;
    std::vector<std::uint32_t> best_sorted;
    for (std::size_t i = 0; i < pop.members.size(); ++i) {
        std::vector<std::uint32_t> d(counts.size());
        const ScoredPlan& m = pop.members[i];
        for (std::size_t j = 0; j < counts.size(); ++j) {
            d[j] = counts[j] - (m.plan.blocked[j] ? 1 : 0);
        }
        std::sort(d.begin(), d.end(), std::greater<>());
        if (i == 0) {
            best_sorted = std::move(d);
            continue;
        }
        if (d < best_sorted ||
            (d == best_sorted &&
             pop.members[i].fitness > pop.members[best_idx].fitness)) {
            best_sorted = std::move(d);
            best_idx = i;
        }
    }
    return best_idx;
}

EdoStepResult edo_step(Population& pop, const FitnessFn& fitness, Rng& rng,
                       double window) {
    EdoStepResult result;
    if (pop.members.empty()) throw std::logic_error("population not initialized");

    double best = pop.members.front().fitness;
    std::size_t worst_idx = 0;
    for (std::size_t i = 0; i < pop.members.size(); ++i) {
        best = std::min(best, pop.members[i].fitness);
        if (pop.members[i].fitness > pop.members[worst_idx].fitness) worst_idx = i;
    }

    DefensePlan offspring;
    if (rng.bernoulli(0.5)) {
        const std::size_t pick = rng.below(pop.members.size());
        offspring = mutate(pop.members[pick].plan, rng);
    } else if (pop.members.size() < 2) {
        offspring = mutate(pop.members.front().plan, rng);
    } else {
        const std::size_t a = rng.below(pop.members.size());
        std::size_t b = rng.below(pop.members.size() - 1);
        if (b >= a) ++b;
        auto [c1, c2] = crossover(pop.members[a].plan, pop.members[b].plan, rng);
        offspring = rng.bernoulli(0.5) ? c1 : c2;
    }

    const double f = fitness(offspring);
    result.offspring_fitness = f;
    if (f < best) {
        // Improvements always enter; the worst member leaves.
        pop.members[worst_idx] = {std::move(offspring), f};
        result.accepted = true;
        result.best_override = true;
    } else if (f <= best + window) {
        pop.members.push_back({std::move(offspring), f});
        const std::size_t evict = diversity_removal_choice(pop);
        pop.members.erase(pop.members.begin() +
                          static_cast<std::ptrdiff_t>(evict));
        result.accepted = true;
    }
    return result;
}

double diversity_entropy(const Population& pop) {
    const std::vector<std::uint32_t> counts = diversity_counts(pop);
    double total = 0.0;
    for (std::uint32_t c : counts) total += c;
    if (total == 0.0) return 0.0;
    double h = 0.0;
    for (std::uint32_t c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / total;
        h -= p * std::log(p);
    }
    return h;
}

}  // namespace adharden
