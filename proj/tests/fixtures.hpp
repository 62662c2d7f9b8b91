#pragma once

// Shared test fixtures: tiny hand-built graphs plus a randomized
// tree-shaped fixture family small enough for the exact oracle.

#include <optional>
#include <stdexcept>
#include <vector>

#include "adharden/condense.hpp"
#include "adharden/graph.hpp"
#include "adharden/rng.hpp"

namespace adharden::testing {

class GraphBuilder {
public:
    NodeId add_node(NodeKind kind, bool is_da = false, bool is_entry = false) {
        Node v;
        v.id = static_cast<NodeId>(nodes_.size());
        v.kind = kind;
        v.is_da = is_da;
        v.is_entry = is_entry;
        nodes_.push_back(v);
        return v.id;
    }

    EdgeId add_edge(NodeId src, NodeId dst, double p_d = 0.1, double p_f = 0.1,
                    bool blockable = false, EdgeKind kind = EdgeKind::AdminTo) {
        Edge e;
        e.id = static_cast<EdgeId>(edges_.size());
        e.src = src;
        e.dst = dst;
        e.kind = kind;
        e.blockable = blockable;
        e.p_d = p_d;
        e.p_f = p_f;
        edges_.push_back(e);
        return e.id;
    }

    AttackGraph build() const { return AttackGraph(nodes_, edges_); }

private:
    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
};

// entry -> n1 -> ... -> DA with the given per-edge (p_d, p_f).
inline AttackGraph chain_graph(const std::vector<std::pair<double, double>>& probs,
                               const std::vector<bool>& blockable = {}) {
    GraphBuilder b;
    NodeId prev = b.add_node(NodeKind::Computer, false, true);
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
        NodeId mid = b.add_node(NodeKind::Computer);
        b.add_edge(prev, mid, probs[i].first, probs[i].second,
                   i < blockable.size() && blockable[i]);
        prev = mid;
    }
    NodeId da = b.add_node(NodeKind::Group, true, false);
    const std::size_t last = probs.size() - 1;
    b.add_edge(prev, da, probs[last].first, probs[last].second,
               last < blockable.size() && blockable[last]);
    return b.build();
}

// Two disjoint entry->DA routes through interior nodes; the first hop is
// deterministic so each NSP composes to exactly (p_d, p_f, p_s).
inline AttackGraph parallel2_graph(double p_d = 0.1, double p_f = 0.1) {
    GraphBuilder b;
    NodeId entry = b.add_node(NodeKind::Computer, false, true);
    NodeId a = b.add_node(NodeKind::Computer);
    NodeId c = b.add_node(NodeKind::Computer);
    NodeId da = b.add_node(NodeKind::Group, true, false);
    b.add_edge(entry, a, 0.0, 0.0);
    b.add_edge(entry, c, 0.0, 0.0);
    b.add_edge(a, da, p_d, p_f, true);
    b.add_edge(c, da, p_d, p_f, true);
    return b.build();
}

struct FixtureOptions {
    std::size_t max_nsps = 10;
    std::size_t min_nsps = 2;
    std::size_t max_raw_edges = 14;
    double session_edge_prob = 0.25;
    double blockable_prob = 0.5;
    double branch_prob = 0.45;
};

// Random tree fixture: branches grow from 1-2 entries toward the DA, so
// every merge point is the DA itself and no two NSPs share raw edges (the
// regime where condensed and raw game values provably coincide).
inline std::optional<AttackGraph> try_tree_fixture(std::uint64_t seed,
                                                   const FixtureOptions& opt) {
    Rng rng(seed);
    GraphBuilder b;
    NodeId da_placeholder = b.add_node(NodeKind::Group, true, false);  // id 0
    const std::size_t n_entries = 1 + rng.below(2);
    std::vector<NodeId> frontier;
    for (std::size_t i = 0; i < n_entries; ++i) {
        frontier.push_back(b.add_node(NodeKind::Computer, false, true));
    }
    std::size_t edges = 0;
    std::size_t depth = 0;
    std::vector<NodeId> next;
    while (!frontier.empty()) {
        ++depth;
        next.clear();
        for (NodeId v : frontier) {
            const bool last = depth >= 4 || edges + 4 > opt.max_raw_edges;
            std::size_t children = 1;
            if (!last && rng.bernoulli(opt.branch_prob)) {
                children = 2 + rng.below(2);
            }
            for (std::size_t c = 0; c < children; ++c) {
                const bool to_da = last || rng.bernoulli(0.4);
                const NodeId dst = to_da ? da_placeholder
                                         : b.add_node(NodeKind::Computer);
                const EdgeKind kind = rng.bernoulli(opt.session_edge_prob)
                                          ? EdgeKind::HasSession
                                          : EdgeKind::AdminTo;
                b.add_edge(v, dst, rng.uniform_range(0.0, 0.2),
                           rng.uniform_range(0.0, 0.2),
                           rng.bernoulli(opt.blockable_prob), kind);
                ++edges;
                if (!to_da) next.push_back(dst);
            }
            if (edges >= opt.max_raw_edges) {
                // Close every open branch straight to the DA.
                for (NodeId w : next) {
                    b.add_edge(w, da_placeholder, rng.uniform_range(0.0, 0.2),
                               rng.uniform_range(0.0, 0.2),
                               rng.bernoulli(opt.blockable_prob));
                    ++edges;
                }
                next.clear();
                break;
            }
        }
        frontier = next;
    }

    try {
        AttackGraph g = preprocess(b.build());
        const CondensedGraph cg = condense(g);
        if (cg.nsps.size() < opt.min_nsps || cg.nsps.size() > opt.max_nsps) {
            return std::nullopt;
        }
        if (g.edges().size() > opt.max_raw_edges + 2) return std::nullopt;
        return g;
    } catch (const PreprocessError&) {
        return std::nullopt;
    }
}

// Deterministic search for a valid fixture near the requested seed.
inline AttackGraph tree_fixture(std::uint64_t seed, FixtureOptions opt = {}) {
    for (std::uint64_t i = 0; i < 200; ++i) {
        if (auto g = try_tree_fixture(seed * 1000 + i, opt)) return *g;
    }
    throw std::runtime_error("no tree fixture found for seed " +
                             std::to_string(seed));
}

}  // namespace adharden::testing
