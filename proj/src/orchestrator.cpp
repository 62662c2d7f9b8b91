#include "adharden/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "adharden/graph_io.hpp"

namespace adharden {

void RunConfig::check() const {
    if (envs < 1) throw std::invalid_argument("config: envs must be >= 1");
    if (epochs < 1) throw std::invalid_argument("config: epochs must be >= 1");
    if (defender_cycle < 1) {
        throw std::invalid_argument("config: defender_cycle must be >= 1");
    }
    if (snapshots_per_env < 1) {
        throw std::invalid_argument("config: snapshots_per_env must be >= 1");
    }
    if (budget_k < 0) throw std::invalid_argument("config: budget_k must be >= 0");
    if (population_mu < 1) {
        throw std::invalid_argument("config: population_mu must be >= 1");
    }
    if (session_p < 0.0 || session_p > 1.0) {
        throw std::invalid_argument("config: session_p must be in [0,1]");
    }
    if (pruned_env_fraction < 0.0 || pruned_env_fraction > 1.0) {
        throw std::invalid_argument("config: pruned_env_fraction must be in [0,1]");
    }
    if (nn_prune_ratio <= 0.0 || nn_prune_ratio >= 1.0) {
        throw std::invalid_argument("config: nn_prune_ratio must be in (0,1)");
    }
    std::uint32_t max_prune = 0;
    for (std::uint32_t e : prune_epochs_in_cycle) max_prune = std::max(max_prune, e);
    if (facilitator && !prune_epochs_in_cycle.empty()) {
        if (reintroduce_epoch_in_cycle <= max_prune) {
            throw std::invalid_argument(
                "config: reintroduce epoch must come after every prune epoch");
        }
        if (reintroduce_epoch_in_cycle >= defender_cycle) {
            throw std::invalid_argument(
                "config: reintroduce epoch must precede the defender cycle end");
        }
    }
    if (hidden < 1) throw std::invalid_argument("config: hidden must be >= 1");
    if (batch_states < envs) {
        throw std::invalid_argument("config: batch_states must be >= envs");
    }
}

RunConfig RunConfig::desk_preset() {
    RunConfig cfg;
    cfg.epochs = 120;
    cfg.defender_cycle = 10;
    cfg.envs = 4;
    cfg.snapshots_per_env = 8;
    cfg.edo_total_iterations = 500;
    // Prune cadence rescaled to the 10-epoch cycle.
    cfg.prune_epochs_in_cycle = {6, 8};
    cfg.reintroduce_epoch_in_cycle = 9;
    cfg.usage_window = 50;
    cfg.nn_prune_interval = 20;
    cfg.eval_epochs = 60;
    return cfg;
}

namespace {

using nlohmann::json;

const char* to_string(FitnessMode m) {
    return m == FitnessMode::Critic ? "critic" : "monte_carlo";
}

FitnessMode fitness_mode_from_string(const std::string& s) {
    if (s == "critic") return FitnessMode::Critic;
    if (s == "monte_carlo" || s == "mc") return FitnessMode::MonteCarlo;
    throw std::invalid_argument("unknown fitness mode: " + s);
}

}  // namespace

std::string serialize_config(const RunConfig& c) {
    json doc;
    doc["seed"] = c.seed;
    doc["epochs"] = c.epochs;
    doc["defender_cycle"] = c.defender_cycle;
    doc["envs"] = c.envs;
    doc["snapshots_per_env"] = c.snapshots_per_env;
    doc["budget_k"] = c.budget_k;
    doc["population_mu"] = c.population_mu;
    doc["edo_total_iterations"] = c.edo_total_iterations;
    doc["prune_epochs_in_cycle"] = c.prune_epochs_in_cycle;
    doc["reintroduce_epoch_in_cycle"] = c.reintroduce_epoch_in_cycle;
    doc["pruned_env_fraction"] = c.pruned_env_fraction;
    doc["nn_prune_ratio"] = c.nn_prune_ratio;
    doc["session_p"] = c.session_p;
    doc["distribution"] = to_string(c.distribution);
    doc["batch_states"] = c.batch_states;
    doc["hidden"] = c.hidden;
    doc["lr"] = c.lr;
    doc["gamma"] = c.gamma;
    doc["gae_lambda"] = c.gae_lambda;
    doc["clip"] = c.clip;
    doc["entropy_coef"] = c.entropy_coef;
    doc["value_coef"] = c.value_coef;
    doc["ppo_update_epochs"] = c.ppo_update_epochs;
    doc["facilitator"] = c.facilitator;
    doc["nn_prune_interval"] = c.nn_prune_interval;
    doc["nn_prune_wallclock_minutes"] = c.nn_prune_wallclock_minutes;
    doc["usage_window"] = c.usage_window;
    doc["env_prune_tolerance"] = c.env_prune_tolerance;
    doc["nn_prune_tolerance"] = c.nn_prune_tolerance;
    doc["probe_capacity"] = c.probe_capacity;
    doc["min_probe_states"] = c.min_probe_states;
    doc["fitness_mode"] = to_string(c.fitness_mode);
    doc["fitness_snapshot_sample"] = c.fitness_snapshot_sample;
    doc["mc_episodes_per_snapshot"] = c.mc_episodes_per_snapshot;
    doc["eval_epochs"] = c.eval_epochs;
    doc["eval_episodes"] = c.eval_episodes;
    return doc.dump(1);
}

RunConfig config_from_json_text(const std::string& text, RunConfig c) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    auto get = [&](const char* key, auto& field) {
        if (doc.contains(key)) {
            field = doc.at(key).get<std::decay_t<decltype(field)>>();
        }
    };
    get("seed", c.seed);
    get("epochs", c.epochs);
    get("defender_cycle", c.defender_cycle);
    get("envs", c.envs);
    get("snapshots_per_env", c.snapshots_per_env);
    get("budget_k", c.budget_k);
    get("population_mu", c.population_mu);
    get("edo_total_iterations", c.edo_total_iterations);
    get("prune_epochs_in_cycle", c.prune_epochs_in_cycle);
    get("reintroduce_epoch_in_cycle", c.reintroduce_epoch_in_cycle);
    get("pruned_env_fraction", c.pruned_env_fraction);
    get("nn_prune_ratio", c.nn_prune_ratio);
    get("session_p", c.session_p);
    if (doc.contains("distribution")) {
        c.distribution = distribution_from_string(doc.at("distribution").get<std::string>());
    }
    get("batch_states", c.batch_states);
    get("hidden", c.hidden);
    get("lr", c.lr);
    get("gamma", c.gamma);
    get("gae_lambda", c.gae_lambda);
    get("clip", c.clip);
    get("entropy_coef", c.entropy_coef);
    get("value_coef", c.value_coef);
    get("ppo_update_epochs", c.ppo_update_epochs);
    get("facilitator", c.facilitator);
    get("nn_prune_interval", c.nn_prune_interval);
    get("nn_prune_wallclock_minutes", c.nn_prune_wallclock_minutes);
    get("usage_window", c.usage_window);
    get("env_prune_tolerance", c.env_prune_tolerance);
    get("nn_prune_tolerance", c.nn_prune_tolerance);
    get("probe_capacity", c.probe_capacity);
    get("min_probe_states", c.min_probe_states);
    if (doc.contains("fitness_mode")) {
        c.fitness_mode = fitness_mode_from_string(doc.at("fitness_mode").get<std::string>());
    }
    get("fitness_snapshot_sample", c.fitness_snapshot_sample);
    get("mc_episodes_per_snapshot", c.mc_episodes_per_snapshot);
    get("eval_epochs", c.eval_epochs);
    get("eval_episodes", c.eval_episodes);
    return c;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return config_from_json_text(ss.str(), base);
}

namespace {

// Keeps the most recent observation vectors for critic probing.
class ProbeRing {
public:
    ProbeRing(std::size_t capacity, std::size_t dim) : capacity_(capacity), dim_(dim) {}

    void push(std::span<const double> obs) {
        if (store_.size() < capacity_) {
            store_.emplace_back(obs.begin(), obs.end());
        } else {
            std::copy(obs.begin(), obs.end(), store_[cursor_].begin());
            cursor_ = (cursor_ + 1) % capacity_;
        }
    }

    void push_from(const RolloutBatch& batch, std::size_t max_new) {
        if (batch.count == 0) return;
        const std::size_t stride = std::max<std::size_t>(1, batch.count / max_new);
        for (std::size_t i = 0; i < batch.count; i += stride) {
            push({batch.obs.data() + i * batch.obs_dim, batch.obs_dim});
        }
    }

    std::size_t size() const { return store_.size(); }

    ProbeSet snapshot() const {
        ProbeSet set;
        set.dim = dim_;
        set.count = store_.size();
        set.obs.reserve(set.count * dim_);
        for (const auto& v : store_) set.obs.insert(set.obs.end(), v.begin(), v.end());
        return set;
    }

private:
    std::size_t capacity_, dim_;
    std::size_t cursor_ = 0;
    std::vector<std::vector<double>> store_;
};

std::string csv_header() {
    return "epoch,env,episodes,mean_return,critic_initial_value,"
           "best_defense_fitness,population_mean_fitness,pruned_nsp_count,"
           "mean_dim_scale";
}

}  // namespace

TrainArtifacts run_training(const AttackGraph& raw, const RunConfig& cfg,
                            const std::optional<DefensePlan>& fixed_plan,
                            std::ostream* log, const Checkpoint* resume) {
    cfg.check();
    TrainArtifacts art;
    art.preprocessed = preprocess(raw);
    art.cg = condense(art.preprocessed);
    const CondensedGraph& cg = art.cg;
    const std::size_t nsp_count = cg.nsps.size();
    if (nsp_count == 0) {
        throw std::invalid_argument("graph condenses to zero NSPs");
    }
    if (log != nullptr) {
        *log << "condensed: " << cg.node_count() << " nodes, " << nsp_count
             << " NSPs, " << cg.bw_edges.size() << " block-worthy edges\n";
    }

    PpoConfig ppo;
    ppo.lr = cfg.lr;
    ppo.gamma = cfg.gamma;
    ppo.gae_lambda = cfg.gae_lambda;
    ppo.clip = cfg.clip;
    ppo.entropy_coef = cfg.entropy_coef;
    ppo.value_coef = cfg.value_coef;
    ppo.update_epochs = static_cast<int>(cfg.ppo_update_epochs);

    Rng rng_policy = Rng::stream(cfg.seed, "policy-init");
    PolicyParams init = resume != nullptr
                            ? resume->params
                            : init_policy(nsp_count, cfg.hidden, rng_policy);
    if (init.nsp_count() != nsp_count) {
        throw std::invalid_argument("resume checkpoint does not match this graph");
    }
    PpoTrainer trainer(std::move(init), ppo);
    if (resume != nullptr && resume->has_adam) {
        trainer.restore_adam(resume->adam_actor, resume->adam_critic);
    }

    Rng rng_edo = Rng::stream(cfg.seed, "edo");
    Rng rng_fit_snaps = Rng::stream(cfg.seed, "fitness-snapshots");
    Rng rng_fit_mc = Rng::stream(cfg.seed, "fitness-mc");
    Rng rng_verify = Rng::stream(cfg.seed, "verify");

    std::vector<Snapshot> fit_sample;
    auto refresh_fit_sample = [&]() {
        fit_sample.clear();
        for (std::uint32_t i = 0; i < cfg.fitness_snapshot_sample; ++i) {
            fit_sample.push_back(
                sample_snapshot(cg.session_edges.size(), cfg.session_p, rng_fit_snaps));
        }
    };
    refresh_fit_sample();

    FitnessFn fitness = [&](const DefensePlan& plan) {
        if (cfg.fitness_mode == FitnessMode::MonteCarlo) {
            return fitness_monte_carlo(plan, trainer.params(), fit_sample, cg,
                                       cfg.mc_episodes_per_snapshot, rng_fit_mc);
        }
        return fitness_critic(plan, trainer.params(), fit_sample, cg);
    };

    Population pop;
    if (fixed_plan.has_value()) {
        pop.capacity = 1;
        pop.budget = fixed_plan->budget();
        pop.members.push_back({*fixed_plan, fitness(*fixed_plan)});
    } else {
        pop = init_population(cg, cfg.budget_k, cfg.population_mu, fitness, rng_edo);
    }

    std::vector<Environment> envs;
    envs.reserve(cfg.envs);
    for (std::uint32_t i = 0; i < cfg.envs; ++i) {
        Rng pool_rng = Rng::stream(cfg.seed, "pool", i);
        SnapshotPool pool = SnapshotPool::sample(
            cg.session_edges.size(), cfg.snapshots_per_env, cfg.session_p, pool_rng);
        envs.emplace_back(cg, std::move(pool),
                          pop.members[i % pop.members.size()].plan,
                          Rng::stream(cfg.seed, "env", i));
    }

    UsageStats usage(cfg.envs, nsp_count, cfg.usage_window);
    ProbeRing probes(cfg.probe_capacity, nsp_count);
    std::vector<std::uint8_t> prune_exclude(nsp_count, 0);
    std::vector<PruneRecord>& records = art.prune_records;

    const std::uint32_t cycles = std::max<std::uint32_t>(1, cfg.epochs / cfg.defender_cycle);
    const std::uint32_t edo_iters_per_cycle = cfg.edo_total_iterations / cycles;

    std::ostringstream csv;
    csv << csv_header() << '\n';

    EpisodeCallback on_episode = [&](std::size_t env_idx,
                                     const std::vector<std::uint8_t>& legal,
                                     const std::vector<std::uint8_t>& chosen,
                                     bool, std::uint32_t) {
        usage.record_episode(env_idx, legal, chosen);
    };

    auto wallclock_start = std::chrono::steady_clock::now();
    std::uint64_t updates = 0;
    std::uint32_t defender_resets = 0;

    std::vector<double> obs(nsp_count);

    for (std::uint32_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        RolloutStats rstats;
        RolloutBatch batch = collect_rollouts(trainer.params(), envs,
                                              cfg.steps_per_env(), ppo, &rstats,
                                              on_episode);
        probes.push_from(batch, 64);
        trainer.update(batch);
        ++updates;

        const std::uint32_t pos = ((epoch - 1) % cfg.defender_cycle) + 1;

        if (cfg.facilitator && probes.size() >= cfg.min_probe_states) {
            const bool due_by_count = cfg.nn_prune_wallclock_minutes <= 0.0 &&
                                      updates % cfg.nn_prune_interval == 0;
            bool due_by_clock = false;
            if (cfg.nn_prune_wallclock_minutes > 0.0) {
                const auto now = std::chrono::steady_clock::now();
                const double minutes =
                    std::chrono::duration<double>(now - wallclock_start).count() / 60.0;
                if (minutes >= cfg.nn_prune_wallclock_minutes) {
                    due_by_clock = true;
                    wallclock_start = now;
                }
            }
            if (due_by_count || due_by_clock) {
                const ProbeSet set = probes.snapshot();
                nn_prune_step(trainer.params(), set, cfg.nn_prune_ratio,
                              cfg.nn_prune_tolerance);
            }
        }

        if (cfg.facilitator &&
            std::find(cfg.prune_epochs_in_cycle.begin(), cfg.prune_epochs_in_cycle.end(),
                      pos) != cfg.prune_epochs_in_cycle.end() &&
            usage.window_full() && probes.size() >= cfg.min_probe_states) {
            const std::vector<NspId> candidates = find_candidates(usage, &prune_exclude);
            if (!candidates.empty()) {
                const ProbeSet set = probes.snapshot();
                VerifyResult verified = verify_irrelevant(
                    candidates, trainer.params(), set, cfg.env_prune_tolerance,
                    rng_verify);
                if (!verified.accepted.empty()) {
                    PruneRecord rec = apply_env_pruning(envs, verified,
                                                        cfg.pruned_env_fraction, epoch);
                    if (rec.status == PruneStatus::Removed) {
                        if (log != nullptr) {
                            *log << "epoch " << epoch << ": pruned "
                                 << rec.removed_nsps.size() << " NSPs in "
                                 << rec.env_ids.size() << " envs\n";
                        }
                        records.push_back(std::move(rec));
                    }
                }
            }
        }

        if (cfg.facilitator && pos == cfg.reintroduce_epoch_in_cycle) {
            for (PruneRecord& rec : records) {
                if (rec.status == PruneStatus::Removed) {
                    reintroduce(envs, rec, usage, epoch);
                }
            }
        }

        if (pos == cfg.defender_cycle) {
            for (PruneRecord& rec : records) {
                if (rec.status == PruneStatus::Reintroduced) {
                    confirm_irrelevance(envs, rec, usage, epoch);
                    for (NspId n : rec.confirmed) prune_exclude[n] = 1;
                    for (NspId n : rec.restored) prune_exclude[n] = 1;
                }
            }
            // Defender phase: refresh fitness against the current critic,
            // evolve, then hand each environment a plan and fresh snapshots.
            refresh_fit_sample();
            for (ScoredPlan& m : pop.members) m.fitness = fitness(m.plan);
            if (!fixed_plan.has_value()) {
                for (std::uint32_t it = 0; it < edo_iters_per_cycle; ++it) {
                    edo_step(pop, fitness, rng_edo);
                }
                ++defender_resets;
                for (std::uint32_t i = 0; i < cfg.envs; ++i) {
                    envs[i].set_plan(pop.members[i % pop.members.size()].plan);
                    Rng pool_rng = Rng::stream(
                        cfg.seed, "pool",
                        std::uint64_t{defender_resets} * cfg.envs + i);
                    SnapshotPool pool = SnapshotPool::sample(
                        cg.session_edges.size(), cfg.snapshots_per_env,
                        cfg.session_p, pool_rng);
                    envs[i].set_pool(std::move(pool));
                }
            }
        }

        // Metrics rows (one per environment).
        double best_fit = pop.members.front().fitness;
        double mean_fit = 0.0;
        for (const ScoredPlan& m : pop.members) {
            best_fit = std::min(best_fit, m.fitness);
            mean_fit += m.fitness;
        }
        mean_fit /= static_cast<double>(pop.members.size());
        double mean_scale = 0.0;
        for (double d : trainer.params().dim_scale) mean_scale += d;
        mean_scale /= static_cast<double>(nsp_count);

        for (std::uint32_t e = 0; e < cfg.envs; ++e) {
            const AttackerState st = init_state(cg, envs[e].pool().peek(),
                                                envs[e].plan(), &envs[e].forced_mask());
            encode_state(st, obs);
            const double v0 = critic_forward(trainer.params(), obs);
            std::uint32_t forced = 0;
            for (auto b : envs[e].forced_mask()) forced += b ? 1 : 0;
            const std::uint32_t eps = rstats.episodes[e];
            const double mean_ret =
                eps == 0 ? 0.0
                         : static_cast<double>(rstats.wins[e]) / static_cast<double>(eps);
            csv << epoch << ',' << e << ',' << eps << ',' << format_double(mean_ret)
                << ',' << format_double(v0) << ',' << format_double(best_fit) << ','
                << format_double(mean_fit) << ',' << forced << ','
                << format_double(mean_scale) << '\n';
        }

        if (log != nullptr && (epoch % 10 == 0 || epoch == cfg.epochs)) {
            std::uint32_t eps = 0, wins = 0;
            for (std::uint32_t e = 0; e < cfg.envs; ++e) {
                eps += rstats.episodes[e];
                wins += rstats.wins[e];
            }
            *log << "epoch " << epoch << ": episodes=" << eps << " success="
                 << (eps ? static_cast<double>(wins) / eps : 0.0)
                 << " best_fitness=" << best_fit << '\n';
        }
    }

    // Best defense: the minimum-fitness member of the final population.
    std::size_t best_idx = 0;
    for (std::size_t i = 1; i < pop.members.size(); ++i) {
        if (pop.members[i].fitness < pop.members[best_idx].fitness) best_idx = i;
    }
    art.best_defense = pop.members[best_idx].plan;
    art.best_fitness = pop.members[best_idx].fitness;
    art.final_population = pop.members;
    art.metrics_csv = csv.str();
    art.checkpoint.params = trainer.params();
    art.checkpoint.adam_actor = trainer.adam_actor();
    art.checkpoint.adam_critic = trainer.adam_critic();
    art.checkpoint.has_adam = true;
    return art;
}

EvalReport run_evaluate(const AttackGraph& raw, const DefensePlan& plan,
                        const RunConfig& cfg, std::ostream* log) {
    RunConfig train_cfg = cfg;
    train_cfg.epochs = cfg.eval_epochs;
    TrainArtifacts art = run_training(raw, train_cfg, plan, log);
    const CondensedGraph& cg = art.cg;

    EvalReport report;
    report.trained = art.checkpoint;

    // Fresh snapshots for the final evaluation.
    Rng rng_snaps = Rng::stream(cfg.seed, "eval-snapshots");
    std::vector<Snapshot> snaps;
    for (std::uint32_t i = 0; i < cfg.snapshots_per_env; ++i) {
        snaps.push_back(sample_snapshot(cg.session_edges.size(), cfg.session_p, rng_snaps));
    }

    // Greedy rollouts of the trained policy, rotating over the pool.
    Rng rng_eval = Rng::stream(cfg.seed, "eval-episodes");
    const PolicyParams& params = art.checkpoint.params;
    const std::size_t dim = params.nsp_count();
    std::vector<double> obs(dim), probs(dim);
    std::vector<std::uint8_t> mask(dim);

    report.per_snapshot_success.assign(snaps.size(), 0.0);
    report.per_snapshot_episodes.assign(snaps.size(), 0);
    std::uint32_t wins = 0;
    for (std::uint32_t ep = 0; ep < cfg.eval_episodes; ++ep) {
        const std::size_t si = ep % snaps.size();
        AttackerState s = init_state(cg, snaps[si], plan);
        ++report.per_snapshot_episodes[si];
        bool win = false;
        for (;;) {
            const auto legal = legal_actions(s, cg);
            if (legal.empty()) break;
            encode_state(s, obs);
            std::fill(mask.begin(), mask.end(), 0);
            for (NspId a : legal) mask[a] = 1;
            actor_forward(params, obs, mask, probs);
            const auto action = static_cast<NspId>(argmax_action(probs));
            const StepResult r = step(s, action, cg, rng_eval);
            if (r.reward > 0.5) {
                win = true;
                break;
            }
            if (r.done) break;
        }
        if (win) {
            ++wins;
            report.per_snapshot_success[si] += 1.0;
        }
    }
    report.episodes = cfg.eval_episodes;
    report.mc_success = static_cast<double>(wins) / cfg.eval_episodes;
    for (std::size_t i = 0; i < snaps.size(); ++i) {
        if (report.per_snapshot_episodes[i] > 0) {
            report.per_snapshot_success[i] /= report.per_snapshot_episodes[i];
        }
    }

    try {
        double total = 0.0;
        for (const Snapshot& s : snaps) total += optimal_value(cg, s, plan);
        report.oracle_pool_mean = total / static_cast<double>(snaps.size());
    } catch (const TooLarge&) {
    }
    try {
        report.oracle_expected = expected_value(cg, plan, cfg.session_p);
    } catch (const TooLarge&) {
    }
    return report;
}

}  // namespace adharden
