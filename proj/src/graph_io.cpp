#include "adharden/graph_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace adharden {

using nlohmann::json;

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("format_double failed");
    return std::string(buf, ptr);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ParseError("bad decimal value: '" + s + "'");
    }
    return v;
}

std::string serialize_graph(const AttackGraph& g) {
    json doc;
    doc["nodes"] = json::array();
    for (const Node& v : g.nodes()) {
        doc["nodes"].push_back({{"id", v.id},
                                {"kind", to_string(v.kind)},
                                {"is_da", v.is_da},
                                {"is_entry", v.is_entry}});
    }
    doc["edges"] = json::array();
    for (const Edge& e : g.edges()) {
        doc["edges"].push_back({{"id", e.id},
                                {"src", e.src},
                                {"dst", e.dst},
                                {"kind", to_string(e.kind)},
                                {"blockable", e.blockable},
                                {"p_d", format_double(e.p_d)},
                                {"p_f", format_double(e.p_f)}});
    }
    return doc.dump(1);
}

namespace {

template <typename T>
T require(const json& j, const char* key, const char* ctx) {
    if (!j.contains(key)) {
        throw ParseError(std::string(ctx) + ": missing \"" + key + "\" key");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ParseError(std::string(ctx) + ": field \"" + key +
                         "\": " + e.what());
    }
}

}  // namespace

AttackGraph deserialize_graph(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("graph document: ") + e.what());
    }
    if (!doc.contains("nodes")) throw ParseError("graph document: missing \"nodes\" key");
    if (!doc.contains("edges")) throw ParseError("graph document: missing \"edges\" key");

    // Ids in the file may be sparse; order by file id and assign dense ids.
    struct RawNode {
        std::uint64_t file_id;
        Node node;
    };
    struct RawEdge {
        std::uint64_t file_id, src, dst;
        Edge edge;
    };
    std::vector<RawNode> rnodes;
    std::vector<RawEdge> redges;

    std::size_t i = 0;
    for (const json& jn : doc.at("nodes")) {
        const std::string ctx = "nodes[" + std::to_string(i++) + "]";
        RawNode rn;
        rn.file_id = require<std::uint64_t>(jn, "id", ctx.c_str());
        rn.node.kind = node_kind_from_string(require<std::string>(jn, "kind", ctx.c_str()));
        rn.node.is_da = require<bool>(jn, "is_da", ctx.c_str());
        rn.node.is_entry = require<bool>(jn, "is_entry", ctx.c_str());
        rnodes.push_back(rn);
    }
    i = 0;
    for (const json& je : doc.at("edges")) {
        const std::string ctx = "edges[" + std::to_string(i++) + "]";
        RawEdge re;
        re.file_id = require<std::uint64_t>(je, "id", ctx.c_str());
        re.src = require<std::uint64_t>(je, "src", ctx.c_str());
        re.dst = require<std::uint64_t>(je, "dst", ctx.c_str());
        re.edge.kind = edge_kind_from_string(require<std::string>(je, "kind", ctx.c_str()));
        re.edge.blockable = require<bool>(je, "blockable", ctx.c_str());
        re.edge.p_d = parse_double(require<std::string>(je, "p_d", ctx.c_str()));
        re.edge.p_f = parse_double(require<std::string>(je, "p_f", ctx.c_str()));
        redges.push_back(re);
    }

    std::stable_sort(rnodes.begin(), rnodes.end(),
                     [](const RawNode& a, const RawNode& b) { return a.file_id < b.file_id; });
    std::stable_sort(redges.begin(), redges.end(),
                     [](const RawEdge& a, const RawEdge& b) { return a.file_id < b.file_id; });

    std::unordered_map<std::uint64_t, NodeId> node_map;
    std::vector<Node> nodes;
    for (RawNode& rn : rnodes) {
        if (node_map.count(rn.file_id)) {
            throw ParseError("duplicate node id " + std::to_string(rn.file_id));
        }
        rn.node.id = static_cast<NodeId>(nodes.size());
        node_map[rn.file_id] = rn.node.id;
        nodes.push_back(rn.node);
    }
    std::vector<Edge> edges;
    for (RawEdge& re : redges) {
        re.edge.id = static_cast<EdgeId>(edges.size());
        auto s = node_map.find(re.src);
        auto d = node_map.find(re.dst);
        // Dangling endpoints are representable so validate() can report
        // them; map them to an out-of-range sentinel.
        re.edge.src = s == node_map.end() ? static_cast<NodeId>(nodes.size()) : s->second;
        re.edge.dst = d == node_map.end() ? static_cast<NodeId>(nodes.size()) : d->second;
        edges.push_back(re.edge);
    }
    return AttackGraph(std::move(nodes), std::move(edges));
}

void save_graph(const AttackGraph& g, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << serialize_graph(g);
    out << '\n';
}

AttackGraph load_graph(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize_graph(ss.str());
}

}  // namespace adharden
