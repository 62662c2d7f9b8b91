#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "adharden/condense.hpp"
#include "adharden/snapshots.hpp"

namespace adharden {

enum class Mark : std::int8_t { Unknown = 0, Success = 1, Failed = 2 };

// The attacker's knowledge base: one mark per NSP.
struct AttackerState {
    std::vector<Mark> marks;
};

// Defense plan over the block-worthy edge list; exactly k coordinates set.
struct DefensePlan {
    std::vector<std::uint8_t> blocked;  // parallel to CondensedGraph::bw_edges

    int budget() const {
        int k = 0;
        for (auto b : blocked) k += b ? 1 : 0;
        return k;
    }
    bool operator==(const DefensePlan&) const = default;
};

DefensePlan empty_plan(const CondensedGraph& cg);
// Builds a plan from blocked edge ids; unknown ids throw.
DefensePlan plan_from_edges(const CondensedGraph& cg, std::span<const EdgeId> blocked_edges);
std::vector<EdgeId> plan_to_edges(const CondensedGraph& cg, const DefensePlan& plan);

// Defense plan document: { "blocked_edges": [edge ids] }
std::string serialize_plan(const CondensedGraph& cg, const DefensePlan& plan);
DefensePlan deserialize_plan(const CondensedGraph& cg, const std::string& text);
void save_plan(const CondensedGraph& cg, const DefensePlan& plan,
               const std::filesystem::path& path);
DefensePlan load_plan(const CondensedGraph& cg, const std::filesystem::path& path);

struct IllegalAction : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// NSPs killed by the snapshot (inactive session edge), the plan (blocked
// bw edge), or an explicit forcing mask start as F; everything else starts
// unknown. The defender commits first, so the attacker sees all of it.
AttackerState init_state(const CondensedGraph& cg, const Snapshot& snapshot,
                         const DefensePlan& plan,
                         const std::vector<std::uint8_t>* forced_f = nullptr);

// NSPs still unknown whose source is an entry or the destination of a
// successful NSP.
std::vector<NspId> legal_actions(const AttackerState& state, const CondensedGraph& cg);

// ? -> 0, S -> +1, F -> -1
void encode_state(const AttackerState& state, std::span<double> out);

struct StepResult {
    double reward = 0.0;
    bool done = false;
    Mark outcome = Mark::Unknown;  // Success / Failed; Unknown means detected
};

// Draws the NSP outcome: success marks S (terminal with reward 1 when the
// NSP ends at the DA), failure marks F, detection ends the episode.
StepResult step(AttackerState& state, NspId action, const CondensedGraph& cg, Rng& rng);

struct EpisodeOutcome {
    bool reached_da = false;
    std::uint32_t steps = 0;
};

// One attacker MDP instance: owns its snapshot pool, defense plan, rng and
// episode state; shares the immutable condensed graph.
class Environment {
public:
    Environment(const CondensedGraph& cg, SnapshotPool pool, DefensePlan plan, Rng rng);

    // Starts a new episode on the next snapshot; returns false when the
    // initial state is already terminal (episode counts as a failure).
    bool reset();
    bool episode_active() const { return active_; }

    const AttackerState& state() const { return state_; }
    const CondensedGraph& condensed() const { return *cg_; }
    const DefensePlan& plan() const { return plan_; }
    std::size_t nsp_count() const { return cg_->nsps.size(); }

    // Legal-action mask for the current state; count returned.
    std::size_t legal_mask(std::vector<std::uint8_t>& mask) const;
    StepResult step_action(NspId action);
    void encode(std::span<double> out) const { encode_state(state_, out); }

    // Episode bookkeeping for the facilitator: which NSPs were ever legal /
    // chosen during the running episode.
    const std::vector<std::uint8_t>& episode_legal() const { return ep_legal_; }
    const std::vector<std::uint8_t>& episode_chosen() const { return ep_chosen_; }
    std::uint32_t episode_steps() const { return ep_steps_; }

    // Facilitator forcing: NSPs held at F from the start of every episode.
    void force_f(const std::vector<NspId>& nsps, bool on);
    const std::vector<std::uint8_t>& forced_mask() const { return forced_f_; }

    void set_plan(DefensePlan plan) { plan_ = std::move(plan); }
    void set_pool(SnapshotPool pool);
    const SnapshotPool& pool() const { return pool_; }

    Rng& rng() { return rng_; }

private:
    const CondensedGraph* cg_;
    SnapshotPool pool_;
    DefensePlan plan_;
    Rng rng_;
    AttackerState state_;
    bool active_ = false;
    std::vector<std::uint8_t> forced_f_;
    std::vector<std::uint8_t> ep_legal_, ep_chosen_;
    std::uint32_t ep_steps_ = 0;

    void mark_legal_now();
};

}  // namespace adharden
