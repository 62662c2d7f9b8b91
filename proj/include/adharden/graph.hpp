#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace adharden {

using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;

inline constexpr NodeId kNoNode = 0xffffffffu;
inline constexpr EdgeId kNoEdge = 0xffffffffu;
inline constexpr std::uint32_t kUnreachable = 0xffffffffu;

enum class NodeKind : std::uint8_t { Computer, User, Group };
enum class EdgeKind : std::uint8_t { AdminTo, HasSession, MemberOf };

const char* to_string(NodeKind k);
const char* to_string(EdgeKind k);
NodeKind node_kind_from_string(const std::string& s);
EdgeKind edge_kind_from_string(const std::string& s);

struct Node {
    NodeId id = kNoNode;
    NodeKind kind = NodeKind::Computer;
    bool is_da = false;
    bool is_entry = false;

    bool operator==(const Node&) const = default;
};

// Probabilities: p_d (detected, attack ends), p_f (failed, edge dead),
// derived p_s = 1 - p_d - p_f (traversal succeeds).
struct Edge {
    EdgeId id = kNoEdge;
    NodeId src = kNoNode;
    NodeId dst = kNoNode;
    EdgeKind kind = EdgeKind::AdminTo;
    bool blockable = false;
    double p_d = 0.0;
    double p_f = 0.0;

    double p_s() const { return 1.0 - p_d - p_f; }
    bool operator==(const Edge&) const = default;
};

// Immutable after construction; node/edge ids are dense and equal to the
// element's position, so hot paths index arrays directly.
class AttackGraph {
public:
    AttackGraph() = default;
    AttackGraph(std::vector<Node> nodes, std::vector<Edge> edges);

    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const Node& node(NodeId id) const { return nodes_[id]; }
    const Edge& edge(EdgeId id) const { return edges_[id]; }

    std::span<const EdgeId> out_edges(NodeId id) const;
    std::span<const EdgeId> in_edges(NodeId id) const;
    std::size_t out_degree(NodeId id) const { return out_edges(id).size(); }

    // Unique DA node; throws std::logic_error unless exactly one exists.
    NodeId da() const;
    std::size_t da_count() const;
    std::vector<NodeId> entry_nodes() const;
    // HasSession edge ids in ascending order; snapshot bit i maps to the
    // i-th element of this list.
    const std::vector<EdgeId>& session_edges() const { return session_edges_; }

    bool operator==(const AttackGraph& o) const {
        return nodes_ == o.nodes_ && edges_ == o.edges_;
    }

private:
    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    // CSR-style adjacency
    std::vector<EdgeId> out_flat_, in_flat_;
    std::vector<std::uint32_t> out_offsets_, in_offsets_;
    std::vector<EdgeId> session_edges_;
};

// Report-style validation: returns one message per violated invariant,
// empty when the graph is well-formed (preprocessed form).
std::vector<std::string> validate(const AttackGraph& g);

struct PreprocessError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Consolidates DA nodes into one, strips entry in-edges and DA out-edges,
// and drops nodes that lie on no entry->DA path (all HasSession assumed
// present). Throws PreprocessError("NoDomainAdmin") / ("NoEntryNodes").
AttackGraph preprocess(const AttackGraph& g);

// Min-hop distance from each node to the DA over directed edges, all
// HasSession present; kUnreachable when no path exists. Requires exactly
// one DA.
std::vector<std::uint32_t> min_hops_to_da(const AttackGraph& g);

}  // namespace adharden
