#include "adharden/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "adharden/simd/kernels.hpp"

namespace adharden {

namespace {

// Legal-only actor head on a ready hidden vector: logits for the legal
// actions, softmax'd in place. Returns the entropy.
struct CompactDist {
    std::vector<std::uint32_t> idx;
    std::vector<double> p;
};

double actor_head(const MlpParams& actor, std::span<const double> h,
                  const std::vector<std::uint32_t>& legal, CompactDist& dist) {
    const auto& k = simd::active_kernels();
    dist.idx = legal;
    dist.p.resize(legal.size());
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < legal.size(); ++i) {
        const double logit =
            k.dot(actor.w2.data() + legal[i] * actor.hidden, h.data(), actor.hidden) +
            actor.b2[legal[i]];
        dist.p[i] = logit;
        max_logit = std::max(max_logit, logit);
    }
    double z = 0.0;
    for (double& v : dist.p) {
        v = std::exp(v - max_logit);
        z += v;
    }
    double entropy = 0.0;
    for (double& v : dist.p) {
        v /= z;
        if (v > 0.0) entropy -= v * std::log(v);
    }
    return entropy;
}

double critic_head(const MlpParams& critic, std::span<const double> h) {
    const auto& k = simd::active_kernels();
    return k.dot(critic.w2.data(), h.data(), critic.hidden) + critic.b2[0];
}

void tanh_into(std::span<const double> z, std::span<double> h) {
    for (std::size_t i = 0; i < z.size(); ++i) h[i] = std::tanh(z[i]);
}

}  // namespace

RolloutBatch collect_rollouts(const PolicyParams& params,
                              std::vector<Environment>& envs,
                              std::size_t steps_per_env, const PpoConfig& cfg,
                              RolloutStats* stats,
                              const EpisodeCallback& on_episode) {
    const auto& kern = simd::active_kernels();
    const std::size_t dim = params.nsp_count();
    const std::size_t hidden = params.actor.hidden;
    RolloutBatch batch;
    batch.obs_dim = dim;
    if (stats != nullptr) {
        stats->episodes.assign(envs.size(), 0);
        stats->wins.assign(envs.size(), 0);
    }

    std::vector<double> obs(dim), scaled(dim);
    std::vector<double> z1a(hidden), z1c(params.critic.hidden);
    std::vector<double> h_a(hidden), h_c(params.critic.hidden);
    std::vector<std::uint8_t> mask(dim);
    std::vector<std::uint32_t> legal;
    CompactDist dist;

    for (std::size_t ei = 0; ei < envs.size(); ++ei) {
        Environment& env = envs[ei];
        const std::size_t seg_begin = batch.count;
        bool rails_ready = false;
        std::uint32_t base_idx = 0;
        std::uint32_t delta_begin = 0;
        std::uint32_t deltas_applied = 0;

        auto start_base = [&]() {
            env.encode(obs);
            for (std::size_t i = 0; i < dim; ++i) scaled[i] = obs[i] * params.dim_scale[i];
            base_idx = static_cast<std::uint32_t>(batch.base_obs.size() / dim);
            batch.base_obs.insert(batch.base_obs.end(), obs.begin(), obs.end());
            hidden_preactivation(params.actor, scaled, z1a);
            hidden_preactivation(params.critic, scaled, z1c);
            delta_begin = static_cast<std::uint32_t>(batch.delta_dim.size());
            deltas_applied = 0;
            rails_ready = true;
        };

        for (std::size_t t = 0; t < steps_per_env; ++t) {
            if (!env.episode_active()) {
                rails_ready = false;
                if (!env.reset()) {
                    // Dead from the first observation: a failed episode with
                    // no decision data.
                    if (stats != nullptr) ++stats->episodes[ei];
                    if (on_episode) {
                        on_episode(ei, env.episode_legal(), env.episode_chosen(),
                                   false, 0);
                    }
                    continue;
                }
            }
            if (!rails_ready) start_base();

            const std::size_t legal_count = env.legal_mask(mask);
            (void)legal_count;
            legal.clear();
            for (std::uint32_t i = 0; i < dim; ++i) {
                if (mask[i]) legal.push_back(i);
            }
            tanh_into(z1a, h_a);
            tanh_into(z1c, h_c);
            const double entropy = actor_head(params.actor, h_a, legal, dist);
            (void)entropy;
            const double value = critic_head(params.critic, h_c);

            // Sample from the compact distribution.
            const double u = env.rng().uniform();
            std::size_t pick = dist.p.size() - 1;
            double acc = 0.0;
            for (std::size_t i = 0; i < dist.p.size(); ++i) {
                acc += dist.p[i];
                if (u < acc) {
                    pick = i;
                    break;
                }
            }
            const NspId action = dist.idx[pick];
            const double logp = std::log(dist.p[pick]);

            batch.obs.insert(batch.obs.end(), obs.begin(), obs.end());
            batch.masks.insert(batch.masks.end(), mask.begin(), mask.end());
            batch.actions.push_back(action);
            batch.logp.push_back(logp);
            batch.values.push_back(value);
            batch.sample_base.push_back(base_idx);
            batch.delta_begin.push_back(delta_begin);
            batch.delta_count.push_back(deltas_applied);

            const StepResult r = env.step_action(action);
            batch.rewards.push_back(r.reward);
            batch.dones.push_back(r.done ? 1 : 0);
            ++batch.count;

            if (r.outcome != Mark::Unknown) {
                // Outcome marked one NSP; advance the observation and rails.
                const double val = r.outcome == Mark::Success ? 1.0 : -1.0;
                obs[action] = val;
                const double sv = val * params.dim_scale[action];
                kern.axpy(sv, params.actor.w1_row(action), z1a.data(), hidden);
                kern.axpy(sv, params.critic.w1_row(action), z1c.data(),
                          params.critic.hidden);
                batch.delta_dim.push_back(action);
                batch.delta_val.push_back(val);
                ++deltas_applied;
            }

            if (r.done) {
                rails_ready = false;
                if (stats != nullptr) {
                    ++stats->episodes[ei];
                    if (r.reward > 0.5) ++stats->wins[ei];
                }
                if (on_episode) {
                    on_episode(ei, env.episode_legal(), env.episode_chosen(),
                               r.reward > 0.5, env.episode_steps());
                }
            }
        }

        // GAE over this environment's segment.
        const std::size_t seg_len = batch.count - seg_begin;
        if (seg_len == 0) continue;
        double boot = 0.0;
        if (env.episode_active() && rails_ready) {
            tanh_into(z1c, h_c);
            boot = critic_head(params.critic, h_c);
        }
        batch.advantages.resize(batch.count);
        batch.returns.resize(batch.count);
        double gae = 0.0;
        for (std::size_t i = seg_len; i-- > 0;) {
            const std::size_t t = seg_begin + i;
            const double nonterminal = batch.dones[t] ? 0.0 : 1.0;
            const double next_value = (i + 1 == seg_len) ? boot : batch.values[t + 1];
            const double delta = batch.rewards[t] +
                                 cfg.gamma * next_value * nonterminal -
                                 batch.values[t];
            gae = delta + cfg.gamma * cfg.gae_lambda * nonterminal * gae;
            batch.advantages[t] = gae;
            batch.returns[t] = gae + batch.values[t];
        }
    }

    // Batch-wide advantage normalization.
    if (batch.count >= 2) {
        double mean = 0.0;
        for (std::size_t i = 0; i < batch.count; ++i) mean += batch.advantages[i];
        mean /= static_cast<double>(batch.count);
        double var = 0.0;
        for (std::size_t i = 0; i < batch.count; ++i) {
            const double d = batch.advantages[i] - mean;
            var += d * d;
        }
        const double sd = std::sqrt(var / static_cast<double>(batch.count));
        for (std::size_t i = 0; i < batch.count; ++i) {
            batch.advantages[i] = (batch.advantages[i] - mean) / (sd + 1e-8);
        }
    }
    return batch;
}

double ppo_loss(const PolicyParams& params, const RolloutBatch& batch,
                const PpoConfig& cfg, PpoLossGrads* grads) {
    const auto& kern = simd::active_kernels();
    const std::size_t dim = batch.obs_dim;
    const std::size_t n = batch.count;
    if (n == 0) return 0.0;
    if (grads != nullptr) {
        grads->actor.match(params.actor);
        grads->critic.match(params.critic);
    }

    const std::size_t ha = params.actor.hidden;
    const std::size_t hc = params.critic.hidden;
    const double inv_n = 1.0 / static_cast<double>(n);
    double total = 0.0;

    std::vector<double> base_scaled(dim);
    std::vector<double> z1a(ha), z1c(hc), h_a(ha), h_c(hc);
    std::vector<double> dz1a(ha), dz1c(hc), dh(ha);
    std::vector<double> sum_dz1a(ha, 0.0), sum_dz1c(hc, 0.0);
    std::vector<std::uint32_t> legal;
    CompactDist dist;
    std::vector<double> dlogit;

    std::uint32_t current_base = std::numeric_limits<std::uint32_t>::max();
    std::uint32_t deltas_applied = 0;

    auto flush_group = [&]() {
        if (grads == nullptr ||
            current_base == std::numeric_limits<std::uint32_t>::max()) {
            return;
        }
        // gW1 += x_base (x) sum_dz1, deltas were added per sample.
        kern.ger(grads->actor.w1.data(), dim, ha, 1.0, base_scaled.data(),
                 sum_dz1a.data());
        kern.ger(grads->critic.w1.data(), dim, hc, 1.0, base_scaled.data(),
                 sum_dz1c.data());
        std::fill(sum_dz1a.begin(), sum_dz1a.end(), 0.0);
        std::fill(sum_dz1c.begin(), sum_dz1c.end(), 0.0);
    };

    for (std::size_t s = 0; s < n; ++s) {
        if (batch.sample_base[s] != current_base) {
            flush_group();
            current_base = batch.sample_base[s];
            const double* base = batch.base_obs.data() + std::size_t{current_base} * dim;
            for (std::size_t i = 0; i < dim; ++i) {
                base_scaled[i] = base[i] * params.dim_scale[i];
            }
            hidden_preactivation(params.actor, base_scaled, z1a);
            hidden_preactivation(params.critic, base_scaled, z1c);
            deltas_applied = 0;
        }
        while (deltas_applied < batch.delta_count[s]) {
            const std::size_t j = batch.delta_begin[s] + deltas_applied;
            const std::uint32_t d = batch.delta_dim[j];
            const double sv = batch.delta_val[j] * params.dim_scale[d];
            kern.axpy(sv, params.actor.w1_row(d), z1a.data(), ha);
            kern.axpy(sv, params.critic.w1_row(d), z1c.data(), hc);
            ++deltas_applied;
        }

        const std::uint8_t* mask = batch.masks.data() + s * dim;
        legal.clear();
        for (std::uint32_t i = 0; i < dim; ++i) {
            if (mask[i]) legal.push_back(i);
        }
        tanh_into(z1a, h_a);
        tanh_into(z1c, h_c);
        const double entropy = actor_head(params.actor, h_a, legal, dist);
        const double v = critic_head(params.critic, h_c);

        const std::uint32_t a = batch.actions[s];
        double p_a = 0.0;
        std::size_t a_pos = 0;
        for (std::size_t i = 0; i < dist.idx.size(); ++i) {
            if (dist.idx[i] == a) {
                p_a = dist.p[i];
                a_pos = i;
                break;
            }
        }
        const double logp_new = std::log(p_a);
        const double ratio = std::exp(logp_new - batch.logp[s]);
        const double adv = batch.advantages[s];

        const double unclipped = ratio * adv;
        const double clipped = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip) * adv;
        const double policy_obj = std::min(unclipped, clipped);
        const double verr = v - batch.returns[s];

        total += (-policy_obj + cfg.value_coef * 0.5 * verr * verr -
                  cfg.entropy_coef * entropy) *
                 inv_n;

        if (grads == nullptr) continue;

        // Per-legal-action logit gradient: clipped surrogate plus entropy.
        const bool pass = unclipped <= clipped;
        const double pol_coef = pass ? -adv * ratio * inv_n : 0.0;
        dlogit.resize(dist.idx.size());
        for (std::size_t i = 0; i < dist.idx.size(); ++i) {
            const double p = dist.p[i];
            const double dlogp = (i == a_pos ? 1.0 : 0.0) - p;
            const double pl = p > 0.0 ? std::log(p) : 0.0;
            dlogit[i] = pol_coef * dlogp +
                        cfg.entropy_coef * p * (pl + entropy) * inv_n;
        }

        // Actor backward: only legal rows of w2 participate.
        std::fill(dh.begin(), dh.end(), 0.0);
        for (std::size_t i = 0; i < dist.idx.size(); ++i) {
            const double g = dlogit[i];
            if (g == 0.0) continue;
            const double* row = params.actor.w2.data() + dist.idx[i] * ha;
            kern.axpy(g, row, dh.data(), ha);
            kern.axpy(g, h_a.data(),
                      grads->actor.w2.data() + dist.idx[i] * ha, ha);
            grads->actor.b2[dist.idx[i]] += g;
        }
        for (std::size_t i = 0; i < ha; ++i) {
            dz1a[i] = dh[i] * (1.0 - h_a[i] * h_a[i]);
        }
        kern.axpy(1.0, dz1a.data(), sum_dz1a.data(), ha);
        kern.axpy(1.0, dz1a.data(), grads->actor.b1.data(), ha);

        // Critic backward.
        const double dv = cfg.value_coef * verr * inv_n;
        for (std::size_t i = 0; i < hc; ++i) {
            dz1c[i] = dv * params.critic.w2[i] * (1.0 - h_c[i] * h_c[i]);
        }
        kern.axpy(dv, h_c.data(), grads->critic.w2.data(), hc);
        grads->critic.b2[0] += dv;
        kern.axpy(1.0, dz1c.data(), sum_dz1c.data(), hc);
        kern.axpy(1.0, dz1c.data(), grads->critic.b1.data(), hc);

        // Delta coordinates differ from the base: rank-1 pieces per sample.
        for (std::uint32_t j = 0; j < batch.delta_count[s]; ++j) {
            const std::size_t idx = batch.delta_begin[s] + j;
            const std::uint32_t d = batch.delta_dim[idx];
            const double sv = batch.delta_val[idx] * params.dim_scale[d];
            kern.axpy(sv, dz1a.data(), grads->actor.w1.data() + d * ha, ha);
            kern.axpy(sv, dz1c.data(), grads->critic.w1.data() + d * hc, hc);
        }
    }
    flush_group();
    return total;
}

PpoTrainer::PpoTrainer(PolicyParams params, PpoConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
    adam_actor_.match(params_.actor);
    adam_critic_.match(params_.critic);
}

void PpoTrainer::restore_adam(const AdamState& actor, const AdamState& critic) {
    adam_actor_ = actor;
    adam_critic_ = critic;
}

UpdateStats PpoTrainer::update(const RolloutBatch& batch) {
    UpdateStats stats;
    if (batch.count == 0) return stats;
    AdamConfig adam;
    adam.lr = cfg_.lr;
    PpoLossGrads grads;
    for (int e = 0; e < cfg_.update_epochs; ++e) {
        const double loss = ppo_loss(params_, batch, cfg_, &grads);
        if (!std::isfinite(loss)) {
            throw NumericalDivergence("PPO loss is not finite");
        }
        stats.loss = loss;
        adam_update(params_.actor, adam_actor_, grads.actor, adam);
        adam_update(params_.critic, adam_critic_, grads.critic, adam);
    }
    return stats;
}

}  // namespace adharden
