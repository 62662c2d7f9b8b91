#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "adharden/env.hpp"

namespace adharden {

struct TooLarge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OracleLimits {
    std::size_t max_nsps = 20;
    std::size_t max_session_groups = 16;
    std::size_t max_defense_combinations = 1'000'000;
};

// Optimal attacker success probability from the initial state of
// (snapshot, plan): V(s) = max over legal a of
//   p_s(a) * V(s[a<-S]) + p_f(a) * V(s[a<-F]),
// with V = 1 as soon as a DA-terminating NSP is marked S and V = 0 when no
// action remains. Memoized over reachable mark vectors.
double optimal_value(const CondensedGraph& cg, const Snapshot& snapshot,
                     const DefensePlan& plan, const OracleLimits& limits = {},
                     const std::vector<std::uint8_t>* forced_f = nullptr);

// Expectation of optimal_value over the snapshot distribution. Session
// edges sharing an identical NSP-membership signature collapse into one
// all-or-nothing group, which keeps the enumeration within
// 2^max_session_groups.
double expected_value(const CondensedGraph& cg, const DefensePlan& plan,
                      double session_p, const OracleLimits& limits = {});

// An action policy: given the state and its legal actions, pick one.
using ActionPolicy =
    std::function<NspId(const AttackerState&, const std::vector<NspId>&)>;

// Empirical success frequency of the policy, rotating over the snapshot
// list between episodes.
double evaluate_policy(const CondensedGraph& cg, const DefensePlan& plan,
                       const ActionPolicy& policy,
                       const std::vector<Snapshot>& snapshots,
                       std::size_t episodes, Rng& rng);

// Greedy policy that replays the oracle's argmax at every state; shares one
// memo across calls (per snapshot/plan pair).
class OracleGreedyPolicy {
public:
    OracleGreedyPolicy(const CondensedGraph& cg, OracleLimits limits = {});
    NspId operator()(const AttackerState& state, const std::vector<NspId>& legal);

private:
    const CondensedGraph* cg_;
    OracleLimits limits_;
    struct Impl;
    std::shared_ptr<Impl> impl_;
};

// Argmin of expected_value over all k-subsets of block-worthy edges,
// enumerated in lexicographic edge-id order (first minimum wins, which
// makes the tie-break deterministic).
std::pair<DefensePlan, double> exhaustive_best_defense(
    const CondensedGraph& cg, int k, double session_p,
    const OracleLimits& limits = {});

}  // namespace adharden
