#include "adharden/oracle.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <unordered_map>

namespace adharden {

namespace {

// Mark vectors pack into 2 bits per NSP; with the <=20 NSP guard the state
// key fits one 64-bit word.
std::uint64_t pack_marks(const std::vector<Mark>& marks) {
    std::uint64_t key = 0;
    for (std::size_t i = 0; i < marks.size(); ++i) {
        key |= static_cast<std::uint64_t>(marks[i]) << (2 * i);
    }
    return key;
}

struct Dp {
    const CondensedGraph& cg;
    std::unordered_map<std::uint64_t, double> memo;

    explicit Dp(const CondensedGraph& g) : cg(g) {}

    double value(std::vector<Mark>& marks) {
        for (const Nsp& nsp : cg.nsps) {
            if (nsp.dst == cg.da && marks[nsp.id] == Mark::Success) return 1.0;
        }
        const std::uint64_t key = pack_marks(marks);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;

        AttackerState s{marks};
        const std::vector<NspId> legal = legal_actions(s, cg);
        double best = 0.0;
        for (NspId a : legal) {
            const Nsp& nsp = cg.nsps[a];
            double v = 0.0;
            if (nsp.p_s > 0.0) {
                if (nsp.dst == cg.da) {
                    v += nsp.p_s;
                } else {
                    marks[a] = Mark::Success;
                    v += nsp.p_s * value(marks);
                    marks[a] = Mark::Unknown;
                }
            }
            if (nsp.p_f > 0.0) {
                marks[a] = Mark::Failed;
                v += nsp.p_f * value(marks);
                marks[a] = Mark::Unknown;
            }
            best = std::max(best, v);
        }
        memo.emplace(key, best);
        return best;
    }
};

void check_size(const CondensedGraph& cg, const OracleLimits& limits) {
    if (cg.nsps.size() > limits.max_nsps) {
        throw TooLarge("oracle limit: " + std::to_string(cg.nsps.size()) +
                       " NSPs exceeds " + std::to_string(limits.max_nsps));
    }
}

}  // namespace

double optimal_value(const CondensedGraph& cg, const Snapshot& snapshot,
                     const DefensePlan& plan, const OracleLimits& limits,
                     const std::vector<std::uint8_t>* forced_f) {
    check_size(cg, limits);
    Dp dp(cg);
    AttackerState init = init_state(cg, snapshot, plan, forced_f);
    return dp.value(init.marks);
}

double expected_value(const CondensedGraph& cg, const DefensePlan& plan,
                      double session_p, const OracleLimits& limits) {
    check_size(cg, limits);

    // Group session edges by the set of NSPs they gate. An NSP is available
    // iff all bits of all its groups are on, so only the all-on event of
    // each group matters: P(group on) = session_p^|group|.
    std::map<std::vector<NspId>, std::vector<std::uint32_t>> groups;
    const std::size_t bit_count = cg.session_edges.size();
    std::vector<std::vector<NspId>> nsps_of_bit(bit_count);
    for (const Nsp& nsp : cg.nsps) {
        for (std::uint32_t bit : nsp.session_bits) {
            nsps_of_bit[bit].push_back(nsp.id);
        }
    }
    for (std::uint32_t bit = 0; bit < bit_count; ++bit) {
        if (nsps_of_bit[bit].empty()) continue;  // gates nothing
        groups[nsps_of_bit[bit]].push_back(bit);
    }
    const std::size_t g = groups.size();
    if (g > limits.max_session_groups) {
        throw TooLarge("oracle limit: " + std::to_string(g) +
                       " session groups exceeds " +
                       std::to_string(limits.max_session_groups));
    }

    std::vector<double> p_on;
    std::vector<std::vector<std::uint32_t>> group_bits;
    for (const auto& [sig, bits] : groups) {
        double p = 1.0;
        for (std::size_t i = 0; i < bits.size(); ++i) p *= session_p;
        p_on.push_back(p);
        group_bits.push_back(bits);
    }

    double total = 0.0;
    Snapshot snap;
    snap.active.assign(bit_count, 1);
    for (std::uint64_t pattern = 0; pattern < (std::uint64_t{1} << g); ++pattern) {
        double prob = 1.0;
        for (std::size_t i = 0; i < g; ++i) {
            const bool on = (pattern >> i) & 1;
            prob *= on ? p_on[i] : (1.0 - p_on[i]);
            for (std::uint32_t bit : group_bits[i]) snap.active[bit] = on ? 1 : 0;
        }
        if (prob == 0.0) continue;
        total += prob * optimal_value(cg, snap, plan, limits);
    }
    return total;
}

double evaluate_policy(const CondensedGraph& cg, const DefensePlan& plan,
                       const ActionPolicy& policy,
                       const std::vector<Snapshot>& snapshots,
                       std::size_t episodes, Rng& rng) {
    if (episodes == 0) throw std::invalid_argument("episodes must be >= 1");
    std::size_t cursor = 0;
    std::size_t wins = 0;
    for (std::size_t ep = 0; ep < episodes; ++ep) {
        const Snapshot& snap = snapshots[cursor];
        cursor = (cursor + 1) % snapshots.size();
        AttackerState s = init_state(cg, snap, plan);
        for (;;) {
            std::vector<NspId> legal = legal_actions(s, cg);
            if (legal.empty()) break;
            NspId a = policy(s, legal);
            StepResult r = step(s, a, cg, rng);
            if (r.reward > 0.5) {
                ++wins;
                break;
            }
            if (r.done) break;
        }
    }
    return static_cast<double>(wins) / static_cast<double>(episodes);
}

struct OracleGreedyPolicy::Impl {
    Dp dp;
    explicit Impl(const CondensedGraph& cg) : dp(cg) {}
};

OracleGreedyPolicy::OracleGreedyPolicy(const CondensedGraph& cg, OracleLimits limits)
    : cg_(&cg), limits_(limits), impl_(std::make_shared<Impl>(cg)) {
    check_size(cg, limits_);
}

NspId OracleGreedyPolicy::operator()(const AttackerState& state,
                                     const std::vector<NspId>& legal) {
    std::vector<Mark> marks = state.marks;
    NspId best_a = legal.front();
    double best_v = -1.0;
    for (NspId a : legal) {
        const Nsp& nsp = cg_->nsps[a];
        double v = 0.0;
        if (nsp.p_s > 0.0) {
            if (nsp.dst == cg_->da) {
                v += nsp.p_s;
            } else {
                marks[a] = Mark::Success;
                v += nsp.p_s * impl_->dp.value(marks);
                marks[a] = Mark::Unknown;
            }
        }
        if (nsp.p_f > 0.0) {
            marks[a] = Mark::Failed;
            v += nsp.p_f * impl_->dp.value(marks);
            marks[a] = Mark::Unknown;
        }
        if (v > best_v) {
            best_v = v;
            best_a = a;
        }
    }
    return best_a;
}

std::pair<DefensePlan, double> exhaustive_best_defense(
    const CondensedGraph& cg, int k, double session_p,
    const OracleLimits& limits) {
    const std::size_t n = cg.bw_edges.size();
    if (k < 0 || static_cast<std::size_t>(k) > n) {
        throw std::invalid_argument("budget k out of range");
    }
    // C(n, k) overflow-safe enough at the enforced limit.
    double combos = 1.0;
    for (int i = 0; i < k; ++i) {
        combos *= static_cast<double>(n - i) / static_cast<double>(i + 1);
    }
    if (combos > static_cast<double>(limits.max_defense_combinations)) {
        throw TooLarge("defense enumeration too large");
    }

    DefensePlan best = empty_plan(cg);
    double best_value = 0.0;
    bool first = true;

    std::vector<std::size_t> idx(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (;;) {
        DefensePlan plan = empty_plan(cg);
        for (std::size_t i : idx) plan.blocked[i] = 1;
        const double v = expected_value(cg, plan, session_p, limits);
        if (first || v < best_value) {
            first = false;
            best_value = v;
            best = plan;
        }
        if (k == 0) break;
        // next k-combination in lexicographic order
        int pos = k - 1;
        while (pos >= 0 && idx[static_cast<std::size_t>(pos)] ==
                               n - static_cast<std::size_t>(k - pos)) {
            --pos;
        }
        if (pos < 0) break;
        ++idx[static_cast<std::size_t>(pos)];
        for (std::size_t i = static_cast<std::size_t>(pos) + 1;
             i < static_cast<std::size_t>(k); ++i) {
            idx[i] = idx[i - 1] + 1;
        }
    }
    return {best, best_value};
}

}  // namespace adharden
