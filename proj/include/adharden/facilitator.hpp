#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "adharden/env.hpp"
#include "adharden/policy.hpp"

namespace adharden {

// Sliding per-environment window of episode usage: which NSPs were ever
// legal and which were chosen, plus all-time chosen counters for the
// reintroduction check.
class UsageStats {
public:
    UsageStats() = default;
    UsageStats(std::size_t n_envs, std::size_t n_nsps, std::size_t window);

    void record_episode(std::size_t env, const std::vector<std::uint8_t>& legal,
                        const std::vector<std::uint8_t>& chosen);

    std::size_t n_envs() const { return per_env_.size(); }
    std::size_t n_nsps() const { return n_nsps_; }
    std::size_t window() const { return window_; }
    bool window_full() const;
    std::size_t episodes_in_window(std::size_t env) const;

    std::uint64_t window_legal(std::size_t env, NspId n) const;
    std::uint64_t window_chosen(std::size_t env, NspId n) const;
    std::uint64_t cumulative_chosen(NspId n) const;  // across envs, all time

private:
    struct EnvWindow {
        std::deque<std::pair<std::vector<std::uint64_t>, std::vector<std::uint64_t>>> ring;
        std::vector<std::uint32_t> legal_count, chosen_count;
    };
    std::vector<EnvWindow> per_env_;
    std::vector<std::uint64_t> cumulative_chosen_;
    std::size_t n_nsps_ = 0;
    std::size_t window_ = 0;
    std::size_t words_ = 0;
};

// Fixed batch of observation vectors the critic is probed on.
struct ProbeSet {
    std::size_t dim = 0;
    std::size_t count = 0;
    std::vector<double> obs;  // count x dim

    std::span<const double> at(std::size_t i) const {
        return {obs.data() + i * dim, dim};
    }
};

// NSPs never chosen in any environment over the full window, but legal at
// least once somewhere (never-legal NSPs are snapshot artifacts, not policy
// signals). Excluded ids are skipped outright.
std::vector<NspId> find_candidates(const UsageStats& stats,
                                   const std::vector<std::uint8_t>* exclude = nullptr);

// Greedy subset search over the candidates: force a random subset to F on
// the probe states; accept it when the critic moves less than tol, bisect
// and retry otherwise. The accepted union is always within tol of baseline.
struct VerifyResult {
    std::vector<NspId> accepted;
    std::vector<double> probe_deltas;  // per probe, for the accepted union
};
VerifyResult verify_irrelevant(const std::vector<NspId>& candidates,
                               const PolicyParams& params, const ProbeSet& probes,
                               double tolerance, Rng& rng);

enum class PruneStatus : std::uint8_t {
    Candidate,
    Removed,
    Reintroduced,
    ConfirmedIrrelevant,
    Restored,
};
const char* to_string(PruneStatus s);

struct PruneRecord {
    std::uint64_t epoch_removed = 0;
    std::uint64_t epoch_reintroduced = 0;
    std::uint64_t epoch_confirmed = 0;
    std::vector<NspId> removed_nsps;
    std::vector<std::size_t> env_ids;
    std::vector<double> critic_delta;  // per-probe differences at removal
    PruneStatus status = PruneStatus::Candidate;
    std::vector<NspId> confirmed;  // filled by the confirmation pass
    std::vector<NspId> restored;
    std::vector<std::uint64_t> chosen_marker;  // cumulative counts at reintroduction
};

// Forces the verified NSPs to initial F in ceil(fraction * |envs|)
// environments (the lowest-indexed ones).
PruneRecord apply_env_pruning(std::vector<Environment>& envs,
                              const VerifyResult& verified, double fraction,
                              std::uint64_t epoch);

// Lifts the forcing everywhere and snapshots the chosen counters.
void reintroduce(std::vector<Environment>& envs, PruneRecord& record,
                 const UsageStats& stats, std::uint64_t epoch);

// NSPs still untouched since reintroduction are confirmed irrelevant and
// re-forced in the affected environments; the others are restored for good.
void confirm_irrelevance(std::vector<Environment>& envs, PruneRecord& record,
                         const UsageStats& stats, std::uint64_t epoch);

struct NnPruneReport {
    std::vector<double> probe_delta;  // per input dimension
    std::uint32_t reduced = 0;
    std::uint32_t restored = 0;
};

// Zeroes each input dimension on the probe states; a dimension the critic
// does not react to gets its dim_scale multiplied by (1 - ratio), one it
// does react to is scaled back up toward 1 (self-correction).
NnPruneReport nn_prune_step(PolicyParams& params, const ProbeSet& probes,
                            double ratio, double tolerance);

// Prune history document for the prune-report subcommand.
std::string serialize_prune_records(const std::vector<PruneRecord>& records);
std::vector<PruneRecord> deserialize_prune_records(const std::string& text);
std::string format_prune_report(const std::vector<PruneRecord>& records);

}  // namespace adharden
