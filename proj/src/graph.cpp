#include "adharden/graph.hpp"

#include <algorithm>
#include <deque>
#include <map>

namespace adharden {

const char* to_string(NodeKind k) {
    switch (k) {
        case NodeKind::Computer: return "Computer";
        case NodeKind::User: return "User";
        case NodeKind::Group: return "Group";
    }
    return "?";
}

const char* to_string(EdgeKind k) {
    switch (k) {
        case EdgeKind::AdminTo: return "AdminTo";
        case EdgeKind::HasSession: return "HasSession";
        case EdgeKind::MemberOf: return "MemberOf";
    }
    return "?";
}

NodeKind node_kind_from_string(const std::string& s) {
    if (s == "Computer") return NodeKind::Computer;
    if (s == "User") return NodeKind::User;
    if (s == "Group") return NodeKind::Group;
    throw std::invalid_argument("unknown node kind: " + s);
}

EdgeKind edge_kind_from_string(const std::string& s) {
    if (s == "AdminTo") return EdgeKind::AdminTo;
    if (s == "HasSession") return EdgeKind::HasSession;
    if (s == "MemberOf") return EdgeKind::MemberOf;
    throw std::invalid_argument("unknown edge kind: " + s);
}

AttackGraph::AttackGraph(std::vector<Node> nodes, std::vector<Edge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].id != static_cast<NodeId>(i)) {
            throw std::invalid_argument("node ids must be dense positions");
        }
    }
    for (std::size_t i = 0; i < edges_.size(); ++i) {
        if (edges_[i].id != static_cast<EdgeId>(i)) {
            throw std::invalid_argument("edge ids must be dense positions");
        }
    }
    const std::size_t n = nodes_.size();
    out_offsets_.assign(n + 1, 0);
    in_offsets_.assign(n + 1, 0);
    for (const Edge& e : edges_) {
        if (e.src < n) ++out_offsets_[e.src + 1];
        if (e.dst < n) ++in_offsets_[e.dst + 1];
    }
    for (std::size_t i = 0; i < n; ++i) {
        out_offsets_[i + 1] += out_offsets_[i];
        in_offsets_[i + 1] += in_offsets_[i];
    }
    out_flat_.resize(edges_.size());
    in_flat_.resize(edges_.size());
    std::vector<std::uint32_t> ocur(out_offsets_.begin(), out_offsets_.end() - 1);
    std::vector<std::uint32_t> icur(in_offsets_.begin(), in_offsets_.end() - 1);
    // Edge ids ascend within each adjacency list (iteration order contract).
    for (const Edge& e : edges_) {
        if (e.src < n) out_flat_[ocur[e.src]++] = e.id;
        if (e.dst < n) in_flat_[icur[e.dst]++] = e.id;
    }
    for (const Edge& e : edges_) {
        if (e.kind == EdgeKind::HasSession) session_edges_.push_back(e.id);
    }
}

std::span<const EdgeId> AttackGraph::out_edges(NodeId id) const {
    return {out_flat_.data() + out_offsets_[id],
            out_flat_.data() + out_offsets_[id + 1]};
}

std::span<const EdgeId> AttackGraph::in_edges(NodeId id) const {
    return {in_flat_.data() + in_offsets_[id],
            in_flat_.data() + in_offsets_[id + 1]};
}

std::size_t AttackGraph::da_count() const {
    std::size_t c = 0;
    for (const Node& v : nodes_) c += v.is_da ? 1 : 0;
    return c;
}

NodeId AttackGraph::da() const {
    NodeId found = kNoNode;
    for (const Node& v : nodes_) {
        if (!v.is_da) continue;
        if (found != kNoNode) throw std::logic_error("multiple DA nodes");
        found = v.id;
    }
    if (found == kNoNode) throw std::logic_error("no DA node");
    return found;
}

std::vector<NodeId> AttackGraph::entry_nodes() const {
    std::vector<NodeId> out;
    for (const Node& v : nodes_) {
        if (v.is_entry) out.push_back(v.id);
    }
    return out;
}

std::vector<std::string> validate(const AttackGraph& g) {
    std::vector<std::string> report;
    const std::size_t n = g.nodes().size();

    std::size_t das = 0;
    for (const Node& v : g.nodes()) {
        if (v.is_da) ++das;
        if (v.is_da && v.is_entry) {
            report.push_back("node " + std::to_string(v.id) +
                             ": is_da and is_entry are mutually exclusive");
        }
    }
    if (das != 1) {
        report.push_back("graph has " + std::to_string(das) +
                         " DA nodes, expected exactly 1");
    }

    for (const Edge& e : g.edges()) {
        const std::string tag = "edge " + std::to_string(e.id);
        if (e.src >= n || e.dst >= n) {
            report.push_back(tag + ": dangling endpoint");
            continue;
        }
        if (e.src == e.dst) report.push_back(tag + ": self-loop");
        if (e.p_d < 0.0 || e.p_f < 0.0) {
            report.push_back(tag + ": negative probability");
        }
        if (e.p_d + e.p_f > 1.0) {
            report.push_back(tag + ": p_d+p_f>1");
        }
    }

    // Structural postconditions of preprocess.
    if (das == 1) {
        NodeId da = kNoNode;
        for (const Node& v : g.nodes()) {
            if (v.is_da) da = v.id;
        }
        if (!g.out_edges(da).empty()) {
            report.push_back("DA node has outgoing edges");
        }
        for (const Node& v : g.nodes()) {
            if (v.is_entry && !g.in_edges(v.id).empty()) {
                report.push_back("entry node " + std::to_string(v.id) +
                                 " has incoming edges");
            }
        }
        // Every node must sit on some entry->DA path.
        std::vector<char> from_entry(n, 0), to_da(n, 0);
        std::deque<NodeId> q;
        for (const Node& v : g.nodes()) {
            if (v.is_entry) {
                from_entry[v.id] = 1;
                q.push_back(v.id);
            }
        }
        while (!q.empty()) {
            NodeId u = q.front();
            q.pop_front();
            for (EdgeId eid : g.out_edges(u)) {
                NodeId w = g.edge(eid).dst;
                if (w < n && !from_entry[w]) {
                    from_entry[w] = 1;
                    q.push_back(w);
                }
            }
        }
        to_da[da] = 1;
        q.push_back(da);
        while (!q.empty()) {
            NodeId u = q.front();
            q.pop_front();
            for (EdgeId eid : g.in_edges(u)) {
                NodeId w = g.edge(eid).src;
                if (w < n && !to_da[w]) {
                    to_da[w] = 1;
                    q.push_back(w);
                }
            }
        }
        for (const Node& v : g.nodes()) {
            if (!(from_entry[v.id] && to_da[v.id])) {
                report.push_back("node " + std::to_string(v.id) +
                                 " lies on no entry->DA path");
            }
        }
    }
    return report;
}

namespace {

// Rebuilds a graph keeping the flagged nodes/edges, re-assigning dense ids.
AttackGraph compact(const AttackGraph& g, const std::vector<char>& keep_node,
                    const std::vector<char>& keep_edge) {
    std::vector<NodeId> node_map(g.nodes().size(), kNoNode);
    std::vector<Node> nodes;
    for (const Node& v : g.nodes()) {
        if (!keep_node[v.id]) continue;
        Node nv = v;
        nv.id = static_cast<NodeId>(nodes.size());
        node_map[v.id] = nv.id;
        nodes.push_back(nv);
    }
    std::vector<Edge> edges;
    for (const Edge& e : g.edges()) {
        if (!keep_edge[e.id]) continue;
        if (!keep_node[e.src] || !keep_node[e.dst]) continue;
        Edge ne = e;
        ne.id = static_cast<EdgeId>(edges.size());
        ne.src = node_map[e.src];
        ne.dst = node_map[e.dst];
        edges.push_back(ne);
    }
    return AttackGraph(std::move(nodes), std::move(edges));
}

}  // namespace

AttackGraph preprocess(const AttackGraph& g) {
    const std::size_t n = g.nodes().size();

    std::vector<NodeId> da_nodes;
    for (const Node& v : g.nodes()) {
        if (v.is_da) da_nodes.push_back(v.id);
    }
    if (da_nodes.empty()) throw PreprocessError("NoDomainAdmin");
    const NodeId da = da_nodes.front();

    // Merge every DA node into the first: redirect incoming edges, drop
    // duplicates of (src, kind) pairs already pointing at the survivor.
    std::vector<Node> nodes = g.nodes();
    std::vector<Edge> edges = g.edges();
    std::vector<char> drop_node(n, 0);
    for (std::size_t i = 1; i < da_nodes.size(); ++i) drop_node[da_nodes[i]] = 1;
    std::vector<char> is_da_node(n, 0);
    for (NodeId v : da_nodes) is_da_node[v] = 1;

    std::map<std::pair<NodeId, int>, bool> seen_into_da;
    std::vector<char> keep_edge(edges.size(), 1);
    for (Edge& e : edges) {
        if (is_da_node[e.dst]) e.dst = da;
        if (is_da_node[e.src]) e.src = da;
        if (e.src == e.dst) {
            keep_edge[e.id] = 0;  // DA-to-DA relations collapse to self-loops
            continue;
        }
        if (e.dst == da) {
            auto key = std::make_pair(e.src, static_cast<int>(e.kind));
            if (seen_into_da.count(key)) {
                keep_edge[e.id] = 0;
            } else {
                seen_into_da[key] = true;
            }
        }
    }

    // Entry in-edges and DA out-edges go away.
    for (const Edge& e : edges) {
        if (!keep_edge[e.id]) continue;
        if (e.src == da) keep_edge[e.id] = 0;
        if (nodes[e.dst].is_entry) keep_edge[e.id] = 0;
    }

    // First compaction with merged DA and stripped edges.
    std::vector<char> keep_node(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        if (drop_node[i]) keep_node[i] = 0;
    }
    AttackGraph merged = compact(AttackGraph(std::move(nodes), std::move(edges)),
                                 keep_node, keep_edge);

    // Drop nodes that are off every entry->DA path, then drop entries that
    // can no longer reach DA, repeating until stable (removing a node can
    // orphan another).
    AttackGraph cur = std::move(merged);
    for (;;) {
        const std::size_t cn = cur.nodes().size();
        NodeId cda = kNoNode;
        for (const Node& v : cur.nodes()) {
            if (v.is_da) cda = v.id;
        }
        std::vector<char> from_entry(cn, 0), to_da(cn, 0);
        std::deque<NodeId> q;
        for (const Node& v : cur.nodes()) {
            if (v.is_entry) {
                from_entry[v.id] = 1;
                q.push_back(v.id);
            }
        }
        while (!q.empty()) {
            NodeId u = q.front();
            q.pop_front();
            for (EdgeId eid : cur.out_edges(u)) {
                NodeId w = cur.edge(eid).dst;
                if (!from_entry[w]) {
                    from_entry[w] = 1;
                    q.push_back(w);
                }
            }
        }
        to_da[cda] = 1;
        q.push_back(cda);
        while (!q.empty()) {
            NodeId u = q.front();
            q.pop_front();
            for (EdgeId eid : cur.in_edges(u)) {
                NodeId w = cur.edge(eid).src;
                if (!to_da[w]) {
                    to_da[w] = 1;
                    q.push_back(w);
                }
            }
        }
        std::vector<char> keep(cn, 0);
        bool changed = false;
        for (const Node& v : cur.nodes()) {
            keep[v.id] = (from_entry[v.id] && to_da[v.id]) ? 1 : 0;
            if (!keep[v.id]) changed = true;
        }
        if (!changed) break;
        std::vector<char> keep_e(cur.edges().size(), 1);
        cur = compact(cur, keep, keep_e);
        bool any_entry = false;
        for (const Node& v : cur.nodes()) any_entry |= v.is_entry;
        if (!any_entry) throw PreprocessError("NoEntryNodes");
    }
    bool any_entry = false;
    for (const Node& v : cur.nodes()) any_entry |= v.is_entry;
    if (!any_entry) throw PreprocessError("NoEntryNodes");
    return cur;
}

std::vector<std::uint32_t> min_hops_to_da(const AttackGraph& g) {
    const NodeId da = g.da();
    std::vector<std::uint32_t> dist(g.nodes().size(), kUnreachable);
    std::deque<NodeId> q;
    dist[da] = 0;
    q.push_back(da);
    while (!q.empty()) {
        NodeId u = q.front();
        q.pop_front();
        for (EdgeId eid : g.in_edges(u)) {
            NodeId w = g.edge(eid).src;
            if (dist[w] == kUnreachable) {
                dist[w] = dist[u] + 1;
                q.push_back(w);
            }
        }
    }
    return dist;
}

}  // namespace adharden
