#include <doctest.h>

#include <cmath>

#include "adharden/oracle.hpp"
#include "adharden/ppo.hpp"
#include "fixtures.hpp"

using namespace adharden;
using adharden::testing::FixtureOptions;

TEST_SUITE_BEGIN("policy");

namespace {


std::vector<Environment> make_envs(const CondensedGraph& cg, std::size_t count,
                                   std::size_t pool_size, std::uint64_t seed,
                                   DefensePlan plan) {
    std::vector<Environment> envs;
    for (std::size_t i = 0; i < count; ++i) {
        Rng pr = Rng::stream(seed, "pool", i);
        envs.emplace_back(cg,
                          SnapshotPool::sample(cg.session_edges.size(), pool_size,
                                               0.5, pr),
                          plan, Rng::stream(seed, "env", i));
    }
    return envs;
}

// Dense reference implementation of the PPO loss and gradients, built on
// the generic mlp_forward/mlp_backward path; the production ppo_loss must
// match it on any batch.
double ppo_loss_dense(const PolicyParams& params, const RolloutBatch& batch,
                      const PpoConfig& cfg, PpoLossGrads* grads) {
    const std::size_t dim = batch.obs_dim;
    const std::size_t n = batch.count;
    if (grads != nullptr) {
        grads->actor.match(params.actor);
        grads->critic.match(params.critic);
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    double total = 0.0;
    std::vector<double> x(dim), h_a(params.actor.hidden), logits(dim);
    std::vector<double> h_c(params.critic.hidden), probs(dim), dlogits(dim);
    for (std::size_t s = 0; s < n; ++s) {
        const double* obs = batch.obs.data() + s * dim;
        const std::uint8_t* mask = batch.masks.data() + s * dim;
        for (std::size_t i = 0; i < dim; ++i) x[i] = obs[i] * params.dim_scale[i];
        mlp_forward(params.actor, x, h_a, logits);
        double max_logit = -1e300;
        for (std::size_t i = 0; i < dim; ++i) {
            if (mask[i] && logits[i] > max_logit) max_logit = logits[i];
        }
        double z = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            probs[i] = mask[i] ? std::exp(logits[i] - max_logit) : 0.0;
            z += probs[i];
        }
        for (std::size_t i = 0; i < dim; ++i) probs[i] /= z;
        const std::uint32_t a = batch.actions[s];
        const double logp_new = std::log(probs[a]);
        const double ratio = std::exp(logp_new - batch.logp[s]);
        const double adv = batch.advantages[s];
        double entropy = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            if (probs[i] > 0.0) entropy -= probs[i] * std::log(probs[i]);
        }
        const double unclipped = ratio * adv;
        const double clipped =
            std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip) * adv;
        double v = 0.0;
        mlp_forward(params.critic, x, h_c, std::span<double>(&v, 1));
        const double verr = v - batch.returns[s];
        total += (-std::min(unclipped, clipped) +
                  cfg.value_coef * 0.5 * verr * verr -
                  cfg.entropy_coef * entropy) *
                 inv_n;
        if (grads == nullptr) continue;
        const bool pass = unclipped <= clipped;
        const double pol_coef = pass ? -adv * ratio * inv_n : 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            double gr = 0.0;
            if (mask[i]) {
                const double dlogp = (i == a ? 1.0 : 0.0) - probs[i];
                gr += pol_coef * dlogp;
                const double pl = probs[i] > 0.0 ? std::log(probs[i]) : 0.0;
                gr += cfg.entropy_coef * probs[i] * (pl + entropy) * inv_n;
            }
            dlogits[i] = gr;
        }
        mlp_backward(params.actor, x, h_a, dlogits, grads->actor);
        const double dv = cfg.value_coef * verr * inv_n;
        mlp_backward(params.critic, x, h_c, std::span<const double>(&dv, 1),
                     grads->critic);
    }
    return total;
}

}  // namespace

TEST_CASE("masked softmax fundamentals") {
    Rng rng(1);
    PolicyParams p = init_policy(4, 16, rng);
    std::vector<double> obs{0, 0, 0, 0}, probs(4);

    SUBCASE("single legal action takes probability one") {
        std::vector<std::uint8_t> mask{0, 0, 1, 0};
        actor_forward(p, obs, mask, probs);
        CHECK(probs[2] == 1.0);
        CHECK(probs[0] == 0.0);
        CHECK(probs[1] == 0.0);
        CHECK(probs[3] == 0.0);
    }
    SUBCASE("zero weights give the uniform distribution") {
        PolicyParams zero = p;
        std::fill(zero.actor.w1.begin(), zero.actor.w1.end(), 0.0);
        std::fill(zero.actor.w2.begin(), zero.actor.w2.end(), 0.0);
        std::fill(zero.actor.b1.begin(), zero.actor.b1.end(), 0.0);
        std::fill(zero.actor.b2.begin(), zero.actor.b2.end(), 0.0);
        std::vector<std::uint8_t> mask{1, 1, 0, 1};
        actor_forward(zero, obs, mask, probs);
        CHECK(probs[0] == doctest::Approx(1.0 / 3));
        CHECK(probs[1] == doctest::Approx(1.0 / 3));
        CHECK(probs[3] == doctest::Approx(1.0 / 3));
        CHECK(probs[2] == 0.0);
    }
    SUBCASE("empty mask throws") {
        std::vector<std::uint8_t> mask{0, 0, 0, 0};
        CHECK_THROWS_AS(actor_forward(p, obs, mask, probs), NoLegalAction);
    }
    SUBCASE("all-ones dim_scale equals the unscaled network") {
        std::vector<std::uint8_t> mask{1, 1, 1, 1};
        obs = {1.0, -1.0, 0.0, 1.0};
        actor_forward(p, obs, mask, probs);
        std::vector<double> probs2(4);
        PolicyParams q = p;  // dim_scale already all ones from init
        for (double d : q.dim_scale) CHECK(d == 1.0);
        actor_forward(q, obs, mask, probs2);
        for (int i = 0; i < 4; ++i) CHECK(probs[i] == probs2[i]);
    }
}

TEST_CASE("checkpoint round-trip preserves parameters exactly") {
    Rng rng(7);
    Checkpoint ck;
    ck.params = init_policy(5, 8, rng);
    ck.adam_actor.match(ck.params.actor);
    ck.adam_critic.match(ck.params.critic);
    ck.adam_actor.t = 17;
    ck.has_adam = true;
    Checkpoint back = deserialize_checkpoint(serialize_checkpoint(ck));
    CHECK(back.params.actor.w1 == ck.params.actor.w1);
    CHECK(back.params.critic.w2 == ck.params.critic.w2);
    CHECK(back.params.dim_scale == ck.params.dim_scale);
    CHECK(back.has_adam);
    CHECK(back.adam_actor.t == 17);
}

TEST_CASE("20 envs x 40 steps fill a batch of 800 states") {
    // No session edges here, so no snapshot ever kills the initial state
    // and every tick yields one decision sample.
    AttackGraph g = testing::parallel2_graph();
    CondensedGraph cg = condense(g);
    Rng rng(2);
    PolicyParams params = init_policy(cg.nsps.size(), 16, rng);
    auto envs = make_envs(cg, 20, 4, 3, empty_plan(cg));
    PpoConfig cfg;
    RolloutStats stats;
    RolloutBatch batch = collect_rollouts(params, envs, 40, cfg, &stats);
    CHECK(batch.count == 800);
    CHECK(batch.obs.size() == batch.count * cg.nsps.size());
    for (double r : batch.rewards) CHECK((r == 0.0 || r == 1.0));
    CHECK(batch.advantages.size() == batch.count);
}

TEST_CASE("rollouts are deterministic under identical seeds") {
    AttackGraph g = testing::tree_fixture(12);
    CondensedGraph cg = condense(g);
    Rng rng(2);
    PolicyParams params = init_policy(cg.nsps.size(), 16, rng);
    PpoConfig cfg;
    auto envs = make_envs(cg, 4, 4, 3, empty_plan(cg));
    RolloutBatch batch = collect_rollouts(params, envs, 40, cfg, nullptr);
    CHECK(batch.count > 0);
    for (double r : batch.rewards) CHECK((r == 0.0 || r == 1.0));

    auto envs2 = make_envs(cg, 4, 4, 3, empty_plan(cg));
    RolloutBatch batch2 = collect_rollouts(params, envs2, 40, cfg, nullptr);
    CHECK(batch2.count == batch.count);
    CHECK(batch2.actions == batch.actions);
    CHECK(batch2.rewards == batch.rewards);
    CHECK(batch2.logp == batch.logp);
}

TEST_CASE("masked actions are never sampled") {
    AttackGraph g = testing::tree_fixture(14);
    CondensedGraph cg = condense(g);
    Rng rng(4);
    PolicyParams params = init_policy(cg.nsps.size(), 16, rng);
    auto envs = make_envs(cg, 2, 4, 9, empty_plan(cg));
    PpoConfig cfg;
    RolloutBatch batch = collect_rollouts(params, envs, 200, cfg, nullptr);
    for (std::size_t s = 0; s < batch.count; ++s) {
        CHECK(batch.masks[s * batch.obs_dim + batch.actions[s]] == 1);
    }
}

TEST_CASE("structured loss matches the dense reference") {
    AttackGraph g = testing::tree_fixture(16);
    CondensedGraph cg = condense(g);
    Rng rng(5);
    PolicyParams params = init_policy(cg.nsps.size(), 16, rng);
    // Push dim_scale off 1.0 to catch scaling bugs.
    for (std::size_t i = 0; i < params.dim_scale.size(); ++i) {
        params.dim_scale[i] = 0.5 + 0.1 * static_cast<double>(i % 5);
    }
    auto envs = make_envs(cg, 3, 4, 6, empty_plan(cg));
    PpoConfig cfg;
    RolloutBatch batch = collect_rollouts(params, envs, 50, cfg, nullptr);
    REQUIRE(batch.count > 0);

    PpoLossGrads fast, dense;
    const double l1 = ppo_loss(params, batch, cfg, &fast);
    const double l2 = ppo_loss_dense(params, batch, cfg, &dense);
    CHECK(l1 == doctest::Approx(l2).epsilon(1e-9));
    auto close_all = [](const std::vector<double>& a, const std::vector<double>& b) {
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-8));
        }
    };
    close_all(fast.actor.w1, dense.actor.w1);
    close_all(fast.actor.w2, dense.actor.w2);
    close_all(fast.actor.b1, dense.actor.b1);
    close_all(fast.actor.b2, dense.actor.b2);
    close_all(fast.critic.w1, dense.critic.w1);
    close_all(fast.critic.w2, dense.critic.w2);
    close_all(fast.critic.b1, dense.critic.b1);
    close_all(fast.critic.b2, dense.critic.b2);
}

TEST_CASE("surrogate gradient matches central finite differences") {
    AttackGraph g = testing::tree_fixture(18, [] {
        FixtureOptions o;
        o.min_nsps = 3;
        o.max_nsps = 3;
        return o;
    }());
    CondensedGraph cg = condense(g);
    REQUIRE(cg.nsps.size() == 3);
    Rng rng(6);
    PolicyParams params = init_policy(3, 8, rng);
    auto envs = make_envs(cg, 2, 2, 8, empty_plan(cg));
    PpoConfig cfg;
    RolloutBatch batch = collect_rollouts(params, envs, 32, cfg, nullptr);
    REQUIRE(batch.count > 0);

    PpoLossGrads grads;
    (void)ppo_loss(params, batch, cfg, &grads);

    const double h = 1e-6;
    double num2 = 0.0, den2 = 0.0;
    auto check_tensor = [&](std::vector<double>& tensor, const std::vector<double>& grad) {
        for (std::size_t i = 0; i < tensor.size(); ++i) {
            const double keep = tensor[i];
            tensor[i] = keep + h;
            const double up = ppo_loss(params, batch, cfg, nullptr);
            tensor[i] = keep - h;
            const double dn = ppo_loss(params, batch, cfg, nullptr);
            tensor[i] = keep;
            const double fd = (up - dn) / (2.0 * h);
            num2 += (fd - grad[i]) * (fd - grad[i]);
            den2 += fd * fd + grad[i] * grad[i];
        }
    };
    check_tensor(params.actor.w1, grads.actor.w1);
    check_tensor(params.actor.w2, grads.actor.w2);
    check_tensor(params.actor.b1, grads.actor.b1);
    check_tensor(params.actor.b2, grads.actor.b2);
    check_tensor(params.critic.w1, grads.critic.w1);
    check_tensor(params.critic.w2, grads.critic.w2);
    check_tensor(params.critic.b1, grads.critic.b1);
    check_tensor(params.critic.b2, grads.critic.b2);
    const double rel = std::sqrt(num2) / (std::sqrt(den2) + 1e-300);
    CHECK(rel < 1e-4);
}

TEST_CASE("zero-advantage batch leaves actor parameters untouched") {
    AttackGraph g = testing::tree_fixture(20);
    CondensedGraph cg = condense(g);
    Rng rng(9);
    PolicyParams params = init_policy(cg.nsps.size(), 16, rng);
    auto envs = make_envs(cg, 2, 2, 10, empty_plan(cg));
    PpoConfig cfg;
    cfg.entropy_coef = 0.0;
    RolloutBatch batch = collect_rollouts(params, envs, 30, cfg, nullptr);
    std::fill(batch.advantages.begin(), batch.advantages.end(), 0.0);

    PpoTrainer trainer(params, cfg);
    trainer.update(batch);
    CHECK(trainer.params().actor.w1 == params.actor.w1);
    CHECK(trainer.params().actor.w2 == params.actor.w2);
    CHECK(trainer.params().actor.b1 == params.actor.b1);
    CHECK(trainer.params().actor.b2 == params.actor.b2);
    // The critic still regresses toward returns.
    CHECK(trainer.params().critic.w2 != params.critic.w2);
}

TEST_CASE("critic learns the chain value and the greedy action is optimal") {
    // Chain entry->DA with one (0.1, 0.1) edge: value 0.8; plus a decoy
    // dead-end NSP the trained policy must learn to avoid.
    AttackGraph g = testing::chain_graph({{0.1, 0.1}});
    CondensedGraph cg = condense(g);
    Rng rng(10);
    PolicyParams params = init_policy(cg.nsps.size(), 32, rng);
    PpoConfig cfg;
    PpoTrainer trainer(std::move(params), cfg);
    auto envs = make_envs(cg, 4, 2, 11, empty_plan(cg));
    for (int epoch = 0; epoch < 60; ++epoch) {
        RolloutBatch batch = collect_rollouts(trainer.params(), envs, 50, cfg, nullptr);
        trainer.update(batch);
    }
    std::vector<double> obs(cg.nsps.size(), 0.0);
    const double v = critic_forward(trainer.params(), obs);
    CHECK(std::abs(v - 0.8) < 0.05);
}

TEST_SUITE_END();
