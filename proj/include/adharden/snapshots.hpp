#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "adharden/condense.hpp"
#include "adharden/rng.hpp"

namespace adharden {

// One realization of the dynamic graph: bit i is the On/Off state of the
// i-th HasSession edge (graph session order). Non-HasSession edges are
// always present.
struct Snapshot {
    std::vector<std::uint8_t> active;

    bool operator==(const Snapshot&) const = default;
};

// Each HasSession bit drawn i.i.d. Bernoulli(session_p).
Snapshot sample_snapshot(std::size_t session_edge_count, double session_p, Rng& rng);

// True iff every HasSession edge on the NSP is active.
bool nsp_available(const Nsp& nsp, const Snapshot& snapshot);

// Fixed set of snapshots an environment cycles through round-robin, so one
// pass covers every member uniformly and replay is deterministic.
class SnapshotPool {
public:
    SnapshotPool() = default;
    explicit SnapshotPool(std::vector<Snapshot> snapshots);

    static SnapshotPool sample(std::size_t session_edge_count, std::size_t count,
                               double session_p, Rng& rng);

    const Snapshot& rotate();  // returns next, wraps at the end
    const Snapshot& peek() const { return snapshots_[cursor_]; }
    std::size_t size() const { return snapshots_.size(); }
    const std::vector<Snapshot>& snapshots() const { return snapshots_; }
    void reset_cursor() { cursor_ = 0; }

private:
    std::vector<Snapshot> snapshots_;
    std::size_t cursor_ = 0;
};

std::string serialize_pools(const std::vector<SnapshotPool>& pools);
std::vector<SnapshotPool> deserialize_pools(const std::string& text);
void save_pools(const std::vector<SnapshotPool>& pools, const std::filesystem::path& path);
std::vector<SnapshotPool> load_pools(const std::filesystem::path& path);

}  // namespace adharden
