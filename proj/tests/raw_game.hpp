#pragma once

// Independent raw-graph oracle for the NSP-composition check: the attacker
// walks individual edges of the preprocessed graph, keeping per-edge
// {untried, succeeded, failed} knowledge. Deliberately shares no code with
// the condensed-graph oracle it validates.

#include <algorithm>
#include <string>
#include <unordered_map>
#include <vector>

#include "adharden/graph.hpp"
#include "adharden/rng.hpp"

namespace adharden::testing {

class RawGame {
public:
    // removed: edges absent in this instance (inactive sessions, blocked).
    RawGame(const AttackGraph& g, std::vector<char> removed)
        : g_(g), removed_(std::move(removed)), da_(g.da()) {}

    static std::vector<char> removal_mask(const AttackGraph& g,
                                          const std::vector<std::uint8_t>& session_active,
                                          const std::vector<EdgeId>& blocked) {
        std::vector<char> removed(g.edges().size(), 0);
        std::size_t bit = 0;
        for (EdgeId eid : g.session_edges()) {
            if (!session_active[bit++]) removed[eid] = 1;
        }
        for (EdgeId eid : blocked) removed[eid] = 1;
        return removed;
    }

    double optimal_value() {
        std::vector<char> marks(g_.edges().size(), '?');
        return value(marks);
    }

    // Monte-Carlo success of the DP-greedy policy.
    double simulate_optimal(std::size_t episodes, Rng& rng) {
        std::size_t wins = 0;
        for (std::size_t ep = 0; ep < episodes; ++ep) {
            std::vector<char> marks(g_.edges().size(), '?');
            for (;;) {
                if (controls_da(marks)) {
                    ++wins;
                    break;
                }
                EdgeId a = best_action(marks);
                if (a == kNoEdge) break;
                const Edge& e = g_.edge(a);
                const double u = rng.uniform();
                if (u < e.p_s()) {
                    marks[a] = 'S';
                } else if (u < e.p_s() + e.p_f) {
                    marks[a] = 'F';
                } else {
                    break;  // detected
                }
            }
        }
        return static_cast<double>(wins) / static_cast<double>(episodes);
    }

private:
    const AttackGraph& g_;
    std::vector<char> removed_;
    NodeId da_;
    std::unordered_map<std::string, double> memo_;

    std::vector<char> controlled(const std::vector<char>& marks) const {
        std::vector<char> ctrl(g_.nodes().size(), 0);
        for (const Node& v : g_.nodes()) {
            if (v.is_entry) ctrl[v.id] = 1;
        }
        bool changed = true;
        while (changed) {
            changed = false;
            for (const Edge& e : g_.edges()) {
                if (marks[e.id] == 'S' && ctrl[e.src] && !ctrl[e.dst]) {
                    ctrl[e.dst] = 1;
                    changed = true;
                }
            }
        }
        return ctrl;
    }

    bool controls_da(const std::vector<char>& marks) const {
        return controlled(marks)[da_] != 0;
    }

    std::vector<EdgeId> legal(const std::vector<char>& marks) const {
        const std::vector<char> ctrl = controlled(marks);
        std::vector<EdgeId> out;
        for (const Edge& e : g_.edges()) {
            if (marks[e.id] == '?' && !removed_[e.id] && ctrl[e.src]) {
                out.push_back(e.id);
            }
        }
        return out;
    }

    double value(std::vector<char>& marks) {
        if (controls_da(marks)) return 1.0;
        const std::string key(marks.begin(), marks.end());
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;
        double best = 0.0;
        for (EdgeId a : legal(marks)) {
            best = std::max(best, action_value(marks, a));
        }
        memo_.emplace(key, best);
        return best;
    }

    double action_value(std::vector<char>& marks, EdgeId a) {
        const Edge& e = g_.edge(a);
        double v = 0.0;
        if (e.p_s() > 0.0) {
            marks[a] = 'S';
            v += e.p_s() * value(marks);
        }
        if (e.p_f > 0.0) {
            marks[a] = 'F';
            v += e.p_f * value(marks);
        }
        marks[a] = '?';
        return v;
    }

    EdgeId best_action(std::vector<char>& marks) {
        EdgeId best = kNoEdge;
        double best_v = -1.0;
        for (EdgeId a : legal(marks)) {
            const double v = action_value(marks, a);
            if (v > best_v) {
                best_v = v;
                best = a;
            }
        }
        return best;
    }
};

}  // namespace adharden::testing
