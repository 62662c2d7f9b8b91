#include <doctest.h>

#include <cmath>

#include "adharden/oracle.hpp"
#include "fixtures.hpp"
#include "raw_game.hpp"

using namespace adharden;
using adharden::testing::FixtureOptions;

TEST_SUITE_BEGIN("oracle");

namespace {

Snapshot all_active(const CondensedGraph& cg) {
    Snapshot s;
    s.active.assign(cg.session_edges.size(), 1);
    return s;
}

}  // namespace

TEST_CASE("chain value is p_s") {
    AttackGraph g = testing::chain_graph({{0.1, 0.1}});
    CondensedGraph cg = condense(g);
    CHECK(optimal_value(cg, all_active(cg), empty_plan(cg)) ==
          doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("two parallel NSPs compose to 0.88") {
    AttackGraph g = testing::parallel2_graph(0.1, 0.1);
    CondensedGraph cg = condense(g);
    CHECK(optimal_value(cg, all_active(cg), empty_plan(cg)) ==
          doctest::Approx(0.88).epsilon(1e-12));
}

TEST_CASE("blocking all entry NSPs yields 0") {
    AttackGraph g = testing::parallel2_graph(0.1, 0.1);
    CondensedGraph cg = condense(g);
    REQUIRE(cg.bw_edges.size() == 2);
    DefensePlan plan = empty_plan(cg);
    plan.blocked = {1, 1};
    CHECK(optimal_value(cg, all_active(cg), plan) == 0.0);
}

TEST_CASE("oracle rejects oversized instances") {
    AttackGraph g = testing::parallel2_graph();
    CondensedGraph cg = condense(g);
    OracleLimits limits;
    limits.max_nsps = 1;
    CHECK_THROWS_AS((void)optimal_value(cg, all_active(cg), empty_plan(cg), limits),
                    TooLarge);
}

TEST_CASE("memoized DP agrees with a fresh non-memoized recursion") {
    // Reference: plain recursion without a memo table.
    struct Plain {
        const CondensedGraph& cg;
        double value(AttackerState s) {
            for (const Nsp& n : cg.nsps) {
                if (n.dst == cg.da && s.marks[n.id] == Mark::Success) return 1.0;
            }
            double best = 0.0;
            for (NspId a : legal_actions(s, cg)) {
                const Nsp& n = cg.nsps[a];
                double v = 0.0;
                if (n.p_s > 0.0) {
                    AttackerState s2 = s;
                    s2.marks[a] = Mark::Success;
                    v += n.p_s * (n.dst == cg.da ? 1.0 : value(s2));
                }
                if (n.p_f > 0.0) {
                    AttackerState s2 = s;
                    s2.marks[a] = Mark::Failed;
                    v += n.p_f * value(s2);
                }
                best = std::max(best, v);
            }
            return best;
        }
    };
    for (std::uint64_t seed = 100; seed < 106; ++seed) {
        FixtureOptions opt;
        opt.max_nsps = 6;  // plain recursion blows up beyond this
        AttackGraph g = testing::tree_fixture(seed, opt);
        CondensedGraph cg = condense(g);
        Plain plain{cg};
        const Snapshot snap = all_active(cg);
        const double a = optimal_value(cg, snap, empty_plan(cg));
        const double b = plain.value(init_state(cg, snap, empty_plan(cg)));
        CHECK(a == doctest::Approx(b).epsilon(1e-12));
    }
}

TEST_CASE("condensed value equals the raw edge-walking game") {
    for (std::uint64_t seed = 200; seed < 212; ++seed) {
        AttackGraph g = testing::tree_fixture(seed);
        CondensedGraph cg = condense(g);
        const Snapshot snap = all_active(cg);
        std::vector<std::uint8_t> session_active(g.session_edges().size(), 1);

        const double condensed = optimal_value(cg, snap, empty_plan(cg));
        testing::RawGame raw(g, testing::RawGame::removal_mask(g, session_active, {}));
        CHECK(condensed == doctest::Approx(raw.optimal_value()).epsilon(1e-9));
    }
}

TEST_CASE("expected_value") {
    SUBCASE("no session edges: equals the single snapshot value") {
        AttackGraph g = testing::parallel2_graph();
        CondensedGraph cg = condense(g);
        CHECK(expected_value(cg, empty_plan(cg), 0.5) ==
              doctest::Approx(0.88).epsilon(1e-12));
    }
    SUBCASE("one gating session edge halves a sure thing") {
        testing::GraphBuilder b;
        NodeId entry = b.add_node(NodeKind::Computer, false, true);
        NodeId u = b.add_node(NodeKind::User);
        NodeId da = b.add_node(NodeKind::Group, true, false);
        b.add_edge(entry, u, 0.0, 0.0, false, EdgeKind::HasSession);
        b.add_edge(u, da, 0.0, 0.0);
        AttackGraph g = preprocess(b.build());
        CondensedGraph cg = condense(g);
        CHECK(expected_value(cg, empty_plan(cg), 0.5) ==
              doctest::Approx(0.5).epsilon(1e-12));
        CHECK(expected_value(cg, empty_plan(cg), 0.25) ==
              doctest::Approx(0.25).epsilon(1e-12));
    }
    SUBCASE("matches Monte-Carlo over sampled snapshots") {
        AttackGraph g = testing::tree_fixture(7);
        CondensedGraph cg = condense(g);
        const double exact = expected_value(cg, empty_plan(cg), 0.5);
        Rng rng(5);
        double total = 0.0;
        const int n = 100000;
        for (int i = 0; i < n; ++i) {
            Snapshot s = sample_snapshot(cg.session_edges.size(), 0.5, rng);
            total += optimal_value(cg, s, empty_plan(cg));
        }
        CHECK(std::abs(total / n - exact) < 0.01);
    }
}

TEST_CASE("evaluate_policy against the oracle-greedy policy") {
    AttackGraph g = testing::tree_fixture(9);
    CondensedGraph cg = condense(g);
    const Snapshot snap = all_active(cg);
    const double exact = optimal_value(cg, snap, empty_plan(cg));
    OracleGreedyPolicy greedy(cg);
    Rng rng(3);
    const double mc = evaluate_policy(cg, empty_plan(cg), greedy, {snap}, 5000, rng);
    // 2-sigma binomial interval around the DP value.
    const double sigma = std::sqrt(exact * (1.0 - exact) / 5000.0);
    CHECK(std::abs(mc - exact) < 2.5 * sigma + 1e-9);
}

TEST_CASE("evaluate_policy surfaces illegal-policy errors") {
    AttackGraph g = testing::chain_graph({{0.1, 0.1}});
    CondensedGraph cg = condense(g);
    ActionPolicy broken = [](const AttackerState&, const std::vector<NspId>&) {
        return NspId{999};
    };
    Rng rng(1);
    CHECK_THROWS_AS((void)evaluate_policy(cg, empty_plan(cg), broken,
                                          {all_active(cg)}, 10, rng),
                    IllegalAction);
}

TEST_CASE("exhaustive best defense") {
    SUBCASE("chain with one bw edge and k=1 kills the game") {
        AttackGraph g = testing::chain_graph({{0.1, 0.1}}, {true});
        CondensedGraph cg = condense(g);
        auto [plan, value] = exhaustive_best_defense(cg, 1, 0.5);
        CHECK(plan.budget() == 1);
        CHECK(value == 0.0);
    }
    SUBCASE("k=0 returns the undefended value") {
        AttackGraph g = testing::parallel2_graph();
        CondensedGraph cg = condense(g);
        auto [plan, value] = exhaustive_best_defense(cg, 0, 0.5);
        CHECK(plan.budget() == 0);
        CHECK(value == doctest::Approx(0.88).epsilon(1e-12));
    }
    SUBCASE("double-entry check by an independent enumeration pass") {
        for (std::uint64_t seed = 300; seed < 305; ++seed) {
            FixtureOptions opt;
            opt.blockable_prob = 0.7;
            AttackGraph g = testing::tree_fixture(seed, opt);
            CondensedGraph cg = condense(g);
            const int k = cg.bw_edges.size() >= 2 ? 2 : 1;
            if (cg.bw_edges.size() < static_cast<std::size_t>(k)) continue;
            auto [plan, value] = exhaustive_best_defense(cg, k, 0.5);

            // Second pass: recursive k-subset enumeration.
            double best = 2.0;
            std::vector<std::size_t> pick;
            std::function<void(std::size_t, int)> rec = [&](std::size_t start,
                                                            int left) {
                if (left == 0) {
                    DefensePlan p = empty_plan(cg);
                    for (std::size_t i : pick) p.blocked[i] = 1;
                    best = std::min(best, expected_value(cg, p, 0.5));
                    return;
                }
                for (std::size_t i = start; i < cg.bw_edges.size(); ++i) {
                    pick.push_back(i);
                    rec(i + 1, left - 1);
                    pick.pop_back();
                }
            };
            rec(0, k);
            CHECK(value == doctest::Approx(best).epsilon(1e-12));
        }
    }
    SUBCASE("guard rejects huge enumerations") {
        AttackGraph g = testing::parallel2_graph();
        CondensedGraph cg = condense(g);
        OracleLimits limits;
        limits.max_defense_combinations = 1;
        CHECK_THROWS_AS((void)exhaustive_best_defense(cg, 1, 0.5, limits), TooLarge);
    }
}

TEST_CASE("monotonicity: blocking more never helps the attacker") {
    for (std::uint64_t seed = 400; seed < 406; ++seed) {
        FixtureOptions opt;
        opt.blockable_prob = 0.7;
        AttackGraph g = testing::tree_fixture(seed, opt);
        CondensedGraph cg = condense(g);
        if (cg.bw_edges.empty()) continue;
        Rng rng(seed);
        DefensePlan small = empty_plan(cg);
        DefensePlan big = empty_plan(cg);
        for (std::size_t i = 0; i < cg.bw_edges.size(); ++i) {
            const bool in_small = rng.bernoulli(0.3);
            small.blocked[i] = in_small ? 1 : 0;
            big.blocked[i] = (in_small || rng.bernoulli(0.3)) ? 1 : 0;
        }
        CHECK(expected_value(cg, big, 0.5) <=
              expected_value(cg, small, 0.5) + 1e-12);
    }
}

TEST_SUITE_END();
