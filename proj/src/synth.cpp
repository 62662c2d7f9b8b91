#include "adharden/synth.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace adharden {

const char* to_string(ProbDistribution d) {
    switch (d) {
        case ProbDistribution::Ind: return "ind";
        case ProbDistribution::Pos: return "pos";
        case ProbDistribution::Neg: return "neg";
    }
    return "?";
}

ProbDistribution distribution_from_string(const std::string& s) {
    if (s == "ind" || s == "Ind") return ProbDistribution::Ind;
    if (s == "pos" || s == "Pos") return ProbDistribution::Pos;
    if (s == "neg" || s == "Neg") return ProbDistribution::Neg;
    throw std::invalid_argument("unknown distribution: " + s);
}

namespace {

// AdminTo fan-out per computer beyond the Domain Admins group, linear in
// the computer count; calibrated against the r1000/r2000/r4000 reference
// graph sizes together with the fixed per-user session/membership rates.
double admin_fanout(std::uint32_t n_computers) {
    return 3.287 + 0.000877 * static_cast<double>(n_computers);
}

std::uint64_t edge_key(NodeId src, NodeId dst, EdgeKind kind) {
    return (static_cast<std::uint64_t>(src) << 34) |
           (static_cast<std::uint64_t>(dst) << 2) |
           static_cast<std::uint64_t>(kind);
}

}  // namespace

AttackGraph generate_topology(const GenSpec& spec) {
    if (spec.n_computers < 1) throw std::invalid_argument("n_computers >= 1 required");
    const std::uint32_t n = spec.n_computers;
    Rng rng = Rng::stream(spec.seed, "topology");

    // Node layout: computers [0,n), users [n,2n), groups [2n,3n).
    std::vector<Node> nodes;
    nodes.reserve(std::size_t{3} * n);
    for (std::uint32_t i = 0; i < n; ++i) {
        nodes.push_back({i, NodeKind::Computer, false, false});
    }
    for (std::uint32_t i = 0; i < n; ++i) {
        nodes.push_back({n + i, NodeKind::User, false, false});
    }
    for (std::uint32_t i = 0; i < n; ++i) {
        nodes.push_back({2 * n + i, NodeKind::Group, false, false});
    }
    const NodeId da_group = 2 * n;  // "Domain Admins"
    nodes[da_group].is_da = true;

    std::vector<Edge> edges;
    std::unordered_set<std::uint64_t> seen;
    auto add_edge = [&](NodeId src, NodeId dst, EdgeKind kind) {
        if (src == dst) return;
        if (!seen.insert(edge_key(src, dst, kind)).second) return;
        Edge e;
        e.id = static_cast<EdgeId>(edges.size());
        e.src = src;
        e.dst = dst;
        e.kind = kind;
        edges.push_back(e);
    };

    auto computer_at = [&](std::uint32_t i) { return static_cast<NodeId>(i); };
    auto user_at = [&](std::uint32_t i) { return static_cast<NodeId>(n + i); };
    auto group_at = [&](std::uint32_t i) { return static_cast<NodeId>(2 * n + i); };

    // Domain admin accounts.
    const std::uint32_t admin_count = std::min<std::uint32_t>(3, n);
    std::vector<std::uint32_t> admin_users =
        rng.sample_without_replacement(n, admin_count);
    std::sort(admin_users.begin(), admin_users.end());
    for (std::uint32_t u : admin_users) {
        add_edge(user_at(u), da_group, EdgeKind::MemberOf);
    }

    // Regular group memberships (never into Domain Admins).
    for (std::uint32_t u = 0; u < n; ++u) {
        if (n < 2) break;
        const std::uint32_t memberships =
            1 + static_cast<std::uint32_t>(rng.below(3));  // 1..3
        auto picks = rng.sample_without_replacement(
            n - 1, std::min(memberships, n - 1));
        for (std::uint32_t p : picks) {
            add_edge(user_at(u), group_at(1 + p), EdgeKind::MemberOf);
        }
    }

    // Sparse group nesting, always toward lower indices (no cycles).
    for (std::uint32_t gi = 2; gi < n; ++gi) {
        if (rng.bernoulli(0.15)) {
            const std::uint32_t gj =
                1 + static_cast<std::uint32_t>(rng.below(gi - 1));
            add_edge(group_at(gi), group_at(gj), EdgeKind::MemberOf);
        }
    }

    // Sessions: each user logged in on 1-2 computers.
    for (std::uint32_t u = 0; u < n; ++u) {
        const std::uint32_t sessions =
            1 + static_cast<std::uint32_t>(rng.below(2));  // 1..2
        auto picks = rng.sample_without_replacement(n, std::min(sessions, n));
        for (std::uint32_t c : picks) {
            add_edge(computer_at(c), user_at(u), EdgeKind::HasSession);
        }
    }

    // Domain Admins control every machine.
    for (std::uint32_t c = 0; c < n; ++c) {
        add_edge(da_group, computer_at(c), EdgeKind::AdminTo);
    }

    // Delegated admin rights: mostly groups, some direct user grants.
    const double fanout = admin_fanout(n);
    for (std::uint32_t c = 0; c < n; ++c) {
        const int extra = rng.poisson(fanout);
        for (int i = 0; i < extra; ++i) {
            if (n >= 2 && rng.bernoulli(0.6)) {
                const std::uint32_t gi =
                    1 + static_cast<std::uint32_t>(rng.below(n - 1));
                add_edge(group_at(gi), computer_at(c), EdgeKind::AdminTo);
            } else {
                const std::uint32_t u = static_cast<std::uint32_t>(rng.below(n));
                add_edge(user_at(u), computer_at(c), EdgeKind::AdminTo);
            }
        }
    }

    return AttackGraph(std::move(nodes), std::move(edges));
}

AttackGraph select_entries(const AttackGraph& g, Rng& rng,
                           std::uint32_t n_entry_pool, std::uint32_t n_entries) {
    const NodeId da = g.da();
    const std::vector<std::uint32_t> dist = min_hops_to_da(g);

    std::vector<NodeId> candidates;
    for (const Node& v : g.nodes()) {
        if (v.id == da) continue;
        if (dist[v.id] == kUnreachable) continue;
        candidates.push_back(v.id);
    }
    if (candidates.size() < n_entry_pool) {
        throw InsufficientNodes("entry pool needs " + std::to_string(n_entry_pool) +
                                " reachable nodes, have " +
                                std::to_string(candidates.size()));
    }
    std::sort(candidates.begin(), candidates.end(), [&](NodeId a, NodeId b) {
        if (dist[a] != dist[b]) return dist[a] > dist[b];
        return a < b;
    });
    candidates.resize(n_entry_pool);

    auto picks = rng.sample_without_replacement(
        n_entry_pool, std::min(n_entries, n_entry_pool));
    std::vector<Node> nodes = g.nodes();
    for (std::uint32_t p : picks) nodes[candidates[p]].is_entry = true;
    return AttackGraph(std::move(nodes), g.edges());
}

AttackGraph assign_blockable(const AttackGraph& g, Rng& rng) {
    const std::vector<std::uint32_t> dist = min_hops_to_da(g);
    std::uint32_t max_hops = 0;
    for (const Edge& e : g.edges()) {
        if (dist[e.dst] == kUnreachable) continue;
        max_hops = std::max(max_hops, dist[e.dst]);
    }
    std::vector<Edge> edges = g.edges();
    for (Edge& e : edges) {
        const std::uint32_t d = dist[e.dst];
        if (d == kUnreachable || d == 0 || max_hops == 0) {
            e.blockable = false;
            continue;
        }
        const double ratio = static_cast<double>(d) / static_cast<double>(max_hops);
        e.blockable = rng.bernoulli(ratio);
    }
    return AttackGraph(g.nodes(), std::move(edges));
}

std::pair<double, double> sample_prob_pair_raw(ProbDistribution dist, Rng& rng) {
    if (dist == ProbDistribution::Ind) {
        return {rng.uniform_range(0.0, 0.2), rng.uniform_range(0.0, 0.2)};
    }
    const double mean = 0.1;
    const double sd = 0.05;
    const double rho = dist == ProbDistribution::Pos ? 0.5 : -0.5;
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    const double x = mean + sd * z1;
    const double y = mean + sd * (rho * z1 + std::sqrt(1.0 - rho * rho) * z2);
    return {x, y};
}

AttackGraph assign_probabilities(const AttackGraph& g, ProbDistribution dist, Rng& rng) {
    std::vector<Edge> edges = g.edges();
    for (Edge& e : edges) {
        auto [pd, pf] = sample_prob_pair_raw(dist, rng);
        e.p_d = std::clamp(pd, 0.0, 0.2);
        e.p_f = std::clamp(pf, 0.0, 0.2);
    }
    return AttackGraph(g.nodes(), std::move(edges));
}

AttackGraph generate(const GenSpec& spec) {
    AttackGraph g = generate_topology(spec);
    Rng entry_rng = Rng::stream(spec.seed, "entries");
    g = select_entries(g, entry_rng, spec.n_entry_pool, spec.n_entries);
    Rng block_rng = Rng::stream(spec.seed, "blockable");
    g = assign_blockable(g, block_rng);
    Rng prob_rng = Rng::stream(spec.seed, "probabilities");
    g = assign_probabilities(g, spec.distribution, prob_rng);
    return g;
}

}  // namespace adharden
