#include "adharden/condense.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "adharden/graph_io.hpp"

namespace adharden {

std::vector<NodeId> find_splitting_nodes(const AttackGraph& g) {
    std::vector<NodeId> out;
    for (const Node& v : g.nodes()) {
        if (g.out_degree(v.id) >= 2) out.push_back(v.id);
    }
    return out;
}

ProbTriple compose_nsp_probs(std::span<const EdgeId> path, const AttackGraph& g) {
    double survive = 1.0;  // probability all earlier edges succeeded
    double p_d = 0.0, p_f = 0.0;
    for (EdgeId eid : path) {
        const Edge& e = g.edge(eid);
        p_d += survive * e.p_d;
        p_f += survive * e.p_f;
        survive *= e.p_s();
    }
    return {p_d, p_f, survive};
}

EdgeId find_block_worthy(const Nsp& nsp, const AttackGraph& g) {
    EdgeId found = kNoEdge;
    for (EdgeId eid : nsp.edge_path) {
        if (g.edge(eid).blockable) found = eid;
    }
    return found;
}

std::vector<Nsp> extract_nsps(const AttackGraph& g) {
    const NodeId da = g.da();
    std::vector<char> is_split(g.nodes().size(), 0);
    for (NodeId v : find_splitting_nodes(g)) is_split[v] = 1;
    std::vector<char> is_source(g.nodes().size(), 0);
    for (const Node& v : g.nodes()) {
        if (v.is_entry || is_split[v.id]) is_source[v.id] = 1;
    }

    std::vector<Nsp> out;
    std::vector<char> on_walk(g.nodes().size(), 0);
    for (const Node& v : g.nodes()) {
        if (!is_source[v.id] || v.id == da) continue;
        for (EdgeId first : g.out_edges(v.id)) {
            Nsp nsp;
            nsp.src = v.id;
            nsp.edge_path.push_back(first);
            NodeId cur = g.edge(first).dst;
            std::vector<NodeId> walked{v.id};
            on_walk[v.id] = 1;
            bool keep = true;
            while (cur != da && !is_split[cur]) {
                auto succ = g.out_edges(cur);
                if (succ.empty()) {
                    keep = false;  // dead end: cannot contribute to reaching DA
                    break;
                }
                if (on_walk[cur]) {
                    for (NodeId w : walked) on_walk[w] = 0;
                    throw CycleError("NSP walk revisits node " + std::to_string(cur));
                }
                on_walk[cur] = 1;
                walked.push_back(cur);
                nsp.edge_path.push_back(succ[0]);
                cur = g.edge(succ[0]).dst;
            }
            for (NodeId w : walked) on_walk[w] = 0;
            if (!keep) continue;
            nsp.dst = cur;
            auto probs = compose_nsp_probs(nsp.edge_path, g);
            nsp.p_d = probs.p_d;
            nsp.p_f = probs.p_f;
            nsp.p_s = probs.p_s;
            for (EdgeId eid : nsp.edge_path) {
                if (g.edge(eid).kind == EdgeKind::HasSession) {
                    nsp.hassession_edges.push_back(eid);
                }
            }
            std::sort(nsp.hassession_edges.begin(), nsp.hassession_edges.end());
            nsp.bw_edge = find_block_worthy(nsp, g);
            nsp.id = static_cast<NspId>(out.size());
            out.push_back(std::move(nsp));
        }
    }
    return out;
}

CondensedGraph condense(const AttackGraph& g) {
    CondensedGraph cg;
    cg.da = g.da();
    cg.entries = g.entry_nodes();
    std::sort(cg.entries.begin(), cg.entries.end());
    std::vector<char> is_entry(g.nodes().size(), 0);
    for (NodeId v : cg.entries) is_entry[v] = 1;
    for (NodeId v : find_splitting_nodes(g)) {
        if (!is_entry[v] && v != cg.da) cg.splits.push_back(v);
    }
    cg.nsps = extract_nsps(g);
    cg.session_edges = g.session_edges();

    cg.out_nsps.assign(g.nodes().size(), {});
    cg.bw_index_of_nsp.assign(cg.nsps.size(), kNoBw);
    for (Nsp& nsp : cg.nsps) {
        cg.out_nsps[nsp.src].push_back(nsp.id);
        if (is_entry[nsp.src]) cg.entry_nsps.push_back(nsp.id);
        nsp.session_bits.clear();
        for (EdgeId eid : nsp.hassession_edges) {
            auto it = std::lower_bound(cg.session_edges.begin(),
                                       cg.session_edges.end(), eid);
            nsp.session_bits.push_back(
                static_cast<std::uint32_t>(it - cg.session_edges.begin()));
        }
    }

    for (const Nsp& nsp : cg.nsps) {
        if (nsp.bw_edge != kNoEdge) cg.bw_edges.push_back(nsp.bw_edge);
    }
    std::sort(cg.bw_edges.begin(), cg.bw_edges.end());
    cg.bw_edges.erase(std::unique(cg.bw_edges.begin(), cg.bw_edges.end()),
                      cg.bw_edges.end());
    cg.nsps_by_bw.assign(cg.bw_edges.size(), {});
    for (const Nsp& nsp : cg.nsps) {
        if (nsp.bw_edge == kNoEdge) continue;
        auto it = std::lower_bound(cg.bw_edges.begin(), cg.bw_edges.end(),
                                   nsp.bw_edge);
        const auto idx = static_cast<std::uint32_t>(it - cg.bw_edges.begin());
        cg.bw_index_of_nsp[nsp.id] = idx;
        cg.nsps_by_bw[idx].push_back(nsp.id);
    }
    return cg;
}

std::string serialize_condensed(const AttackGraph& g, const CondensedGraph& cg) {
    nlohmann::json doc = nlohmann::json::parse(serialize_graph(g));
    doc["nsps"] = nlohmann::json::array();
    for (const Nsp& n : cg.nsps) {
        nlohmann::json jn = {{"id", n.id},
                             {"src", n.src},
                             {"dst", n.dst},
                             {"edge_path", n.edge_path},
                             {"p_d", format_double(n.p_d)},
                             {"p_f", format_double(n.p_f)},
                             {"p_s", format_double(n.p_s)},
                             {"hassession_edges", n.hassession_edges}};
        if (n.bw_edge != kNoEdge) {
            jn["bw_edge"] = n.bw_edge;
        } else {
            jn["bw_edge"] = nullptr;
        }
        doc["nsps"].push_back(jn);
    }
    return doc.dump(1);
}

void save_condensed(const AttackGraph& g, const CondensedGraph& cg,
                    const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << serialize_condensed(g, cg) << '\n';
}

}  // namespace adharden
