#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "adharden/graph.hpp"

namespace adharden {

using NspId = std::uint32_t;
inline constexpr NspId kNoNsp = 0xffffffffu;

// Non-splitting path: a unique-successor walk from an entry/split node to
// the next split node or the DA, treated as a single macro-edge with
// sequentially composed outcome probabilities.
struct Nsp {
    NspId id = kNoNsp;
    NodeId src = kNoNode;
    NodeId dst = kNoNode;
    std::vector<EdgeId> edge_path;
    double p_d = 0.0;
    double p_f = 0.0;
    double p_s = 0.0;
    std::vector<EdgeId> hassession_edges;   // ascending
    std::vector<std::uint32_t> session_bits;  // indices into graph session list
    EdgeId bw_edge = kNoEdge;  // blockable edge farthest from src, if any
};

struct CondensedGraph {
    std::vector<NodeId> entries;  // ascending
    // Splitting nodes (out-degree >= 2) that are not entries; an entry that
    // also splits keeps its entry role only, so the two sets stay disjoint
    // and node_count() matches |Entry| + |Split| + 1.
    std::vector<NodeId> splits;   // ascending
    NodeId da = kNoNode;
    std::vector<Nsp> nsps;
    std::vector<EdgeId> bw_edges;  // ascending, deduplicated
    std::vector<std::vector<NspId>> nsps_by_bw;  // parallel to bw_edges
    std::vector<std::uint32_t> bw_index_of_nsp;  // per nsp; kNoBw if none
    std::vector<std::vector<NspId>> out_nsps;    // indexed by source NodeId
    std::vector<NspId> entry_nsps;               // nsps sourced at entries
    std::vector<EdgeId> session_edges;           // copy of graph order

    std::size_t node_count() const { return entries.size() + splits.size() + 1; }
    std::size_t edge_count() const { return nsps.size(); }
    bool nsp_reaches_da(NspId n) const { return nsps[n].dst == da; }
};

inline constexpr std::uint32_t kNoBw = 0xffffffffu;

struct CycleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Definition: nodes with more than one outgoing edge.
std::vector<NodeId> find_splitting_nodes(const AttackGraph& g);

struct ProbTriple {
    double p_d, p_f, p_s;
};

// Sequential composition along the path: the walk survives edge i with
// p_s(i); detection/failure at edge i requires surviving all earlier edges.
ProbTriple compose_nsp_probs(std::span<const EdgeId> path, const AttackGraph& g);

// Blockable edge with the greatest path index, or kNoEdge.
EdgeId find_block_worthy(const Nsp& nsp, const AttackGraph& g);

// Walks unique successors from every entry/split source; paths that dead-end
// before a split or the DA are discarded. Throws CycleError when a walk
// revisits a node.
std::vector<Nsp> extract_nsps(const AttackGraph& g);

CondensedGraph condense(const AttackGraph& g);

// Condensed document: the graph schema plus an "nsps" array.
std::string serialize_condensed(const AttackGraph& g, const CondensedGraph& cg);
void save_condensed(const AttackGraph& g, const CondensedGraph& cg,
                    const std::filesystem::path& path);

}  // namespace adharden
