// adharden: attack-graph hardening simulator. Subcommands cover synthetic
// graph generation, condensation, attacker/defender co-training, standalone
// defense search, policy evaluation, the exact oracle, and prune reporting.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "adharden/condense.hpp"
#include "adharden/edo.hpp"
#include "adharden/graph_io.hpp"
#include "adharden/oracle.hpp"
#include "adharden/orchestrator.hpp"
#include "adharden/simd/kernels.hpp"
#include "adharden/synth.hpp"

namespace fs = std::filesystem;
using namespace adharden;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
}

RunConfig resolve_config(const std::string& preset, const std::string& config_path,
                         std::optional<std::uint64_t> seed) {
    RunConfig cfg;
    if (preset == "desk") {
        cfg = RunConfig::desk_preset();
    } else if (!preset.empty()) {
        throw CLI::ValidationError("--preset", "unknown preset: " + preset);
    }
    if (!config_path.empty()) cfg = load_config(config_path, cfg);
    if (seed.has_value()) cfg.seed = *seed;
    cfg.check();
    return cfg;
}

int cmd_gen(const std::string& out, std::uint32_t computers, const std::string& dist,
            std::uint64_t seed, std::uint32_t entry_pool, std::uint32_t entries) {
    GenSpec spec;
    spec.n_computers = computers;
    spec.seed = seed;
    spec.distribution = distribution_from_string(dist);
    spec.n_entry_pool = entry_pool;
    spec.n_entries = entries;
    AttackGraph g = generate(spec);
    save_graph(g, out);
    std::cout << "generated graph: |V|=" << g.nodes().size()
              << " |E|=" << g.edges().size() << " -> " << out << '\n';
    return 0;
}

int cmd_condense(const std::string& in, const std::string& out) {
    AttackGraph g = preprocess(load_graph(in));
    CondensedGraph cg = condense(g);
    save_condensed(g, cg, out);
    std::cout << "condensed: " << cg.node_count() << " nodes ("
              << cg.entries.size() << " entry, " << cg.splits.size()
              << " split, 1 DA), " << cg.nsps.size() << " NSPs, "
              << cg.bw_edges.size() << " block-worthy edges -> " << out << '\n';
    return 0;
}

int cmd_train(const std::string& graph_path, const RunConfig& cfg,
              const std::string& out_dir, const std::string& resume_path) {
    AttackGraph raw = load_graph(graph_path);
    fs::create_directories(out_dir);
    std::optional<Checkpoint> resume;
    if (!resume_path.empty()) resume = load_checkpoint(resume_path);
    std::cout << "simd kernels: " << simd::active_kernels().name << '\n';
    TrainArtifacts art = run_training(raw, cfg, std::nullopt, &std::cout,
                                      resume ? &*resume : nullptr);
    write_text(fs::path(out_dir) / "metrics.csv", art.metrics_csv);
    write_text(fs::path(out_dir) / "config.json", serialize_config(cfg) + "\n");
    save_checkpoint(art.checkpoint, fs::path(out_dir) / "checkpoint.json");
    save_plan(art.cg, art.best_defense, fs::path(out_dir) / "best_defense.json");
    write_text(fs::path(out_dir) / "prune_records.json",
               serialize_prune_records(art.prune_records) + "\n");
    std::cout << "best defense fitness: " << format_double(art.best_fitness)
              << "\nartifacts in " << out_dir << '\n';
    return 0;
}

int cmd_defend(const std::string& graph_path, const std::string& checkpoint_path,
               const RunConfig& cfg, std::uint32_t iters, int k,
               const std::string& out_dir) {
    AttackGraph g = preprocess(load_graph(graph_path));
    CondensedGraph cg = condense(g);
    PolicyParams params;
    if (!checkpoint_path.empty()) {
        params = load_checkpoint(checkpoint_path).params;
        if (params.nsp_count() != cg.nsps.size()) {
            throw std::runtime_error("checkpoint does not match this graph");
        }
    } else {
        Rng rng = Rng::stream(cfg.seed, "policy-init");
        params = init_policy(cg.nsps.size(), cfg.hidden, rng);
    }

    Rng rng_snaps = Rng::stream(cfg.seed, "fitness-snapshots");
    std::vector<Snapshot> sample;
    for (std::uint32_t i = 0; i < cfg.fitness_snapshot_sample; ++i) {
        sample.push_back(sample_snapshot(cg.session_edges.size(), cfg.session_p, rng_snaps));
    }
    Rng rng_mc = Rng::stream(cfg.seed, "fitness-mc");
    FitnessFn fitness = [&](const DefensePlan& plan) {
        if (cfg.fitness_mode == FitnessMode::MonteCarlo) {
            return fitness_monte_carlo(plan, params, sample, cg,
                                       cfg.mc_episodes_per_snapshot, rng_mc);
        }
        return fitness_critic(plan, params, sample, cg);
    };

    Rng rng_edo = Rng::stream(cfg.seed, "edo");
    Population pop = init_population(cg, k, cfg.population_mu, fitness, rng_edo);

    fs::create_directories(out_dir);
    std::ostringstream hist;
    hist << "iteration,best_fitness,mean_fitness,diversity_entropy\n";
    auto emit = [&](std::uint32_t it) {
        double best = pop.members.front().fitness, mean = 0.0;
        for (const ScoredPlan& m : pop.members) {
            best = std::min(best, m.fitness);
            mean += m.fitness;
        }
        mean /= static_cast<double>(pop.members.size());
        hist << it << ',' << format_double(best) << ',' << format_double(mean)
             << ',' << format_double(diversity_entropy(pop)) << '\n';
    };
    emit(0);
    for (std::uint32_t it = 1; it <= iters; ++it) {
        edo_step(pop, fitness, rng_edo);
        emit(it);
    }

    std::size_t best_idx = 0;
    for (std::size_t i = 1; i < pop.members.size(); ++i) {
        if (pop.members[i].fitness < pop.members[best_idx].fitness) best_idx = i;
    }
    write_text(fs::path(out_dir) / "defend_history.csv", hist.str());
    save_plan(cg, pop.members[best_idx].plan, fs::path(out_dir) / "best_defense.json");
    std::cout << "best defense fitness: "
              << format_double(pop.members[best_idx].fitness) << "\nartifacts in "
              << out_dir << '\n';
    return 0;
}

int cmd_eval(const std::string& graph_path, const std::string& defense_path,
             const RunConfig& cfg, const std::string& out_dir) {
    AttackGraph raw = load_graph(graph_path);
    AttackGraph g = preprocess(raw);
    CondensedGraph cg = condense(g);
    DefensePlan plan = defense_path.empty() ? empty_plan(cg)
                                            : load_plan(cg, defense_path);
    EvalReport report = run_evaluate(raw, plan, cfg, &std::cout);

    fs::create_directories(out_dir);
    nlohmann::json doc;
    doc["episodes"] = report.episodes;
    doc["mc_success"] = report.mc_success;
    if (report.oracle_pool_mean) doc["oracle_pool_mean"] = *report.oracle_pool_mean;
    if (report.oracle_expected) doc["oracle_expected"] = *report.oracle_expected;
    write_text(fs::path(out_dir) / "eval_report.json", doc.dump(1) + "\n");

    std::ostringstream csv;
    csv << "snapshot,episodes,success\n";
    for (std::size_t i = 0; i < report.per_snapshot_success.size(); ++i) {
        csv << i << ',' << report.per_snapshot_episodes[i] << ','
            << format_double(report.per_snapshot_success[i]) << '\n';
    }
    write_text(fs::path(out_dir) / "eval_breakdown.csv", csv.str());
    save_checkpoint(report.trained, fs::path(out_dir) / "eval_checkpoint.json");

    std::cout << "success over " << report.episodes << " episodes: "
              << format_double(report.mc_success) << '\n';
    if (report.oracle_pool_mean) {
        std::cout << "oracle pool mean: " << format_double(*report.oracle_pool_mean) << '\n';
    }
    return 0;
}

int cmd_oracle(const std::string& graph_path, const std::string& plan_path,
               double session_p, bool best_defense, int k) {
    AttackGraph g = preprocess(load_graph(graph_path));
    CondensedGraph cg = condense(g);
    if (best_defense) {
        auto [plan, value] = exhaustive_best_defense(cg, k, session_p);
        std::cout << "best defense value: " << format_double(value) << '\n';
        std::cout << "blocked edges:";
        for (EdgeId e : plan_to_edges(cg, plan)) std::cout << ' ' << e;
        std::cout << '\n';
        return 0;
    }
    DefensePlan plan = plan_path.empty() ? empty_plan(cg) : load_plan(cg, plan_path);
    std::cout << format_double(expected_value(cg, plan, session_p)) << '\n';
    return 0;
}

int cmd_prune_report(const std::string& run_dir, const std::string& in_file) {
    fs::path path = in_file.empty() ? fs::path(run_dir) / "prune_records.json"
                                    : fs::path(in_file);
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    std::cout << format_prune_report(deserialize_prune_records(ss.str()));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"attack-graph hardening: PPO attacker vs EDO defender on dynamic AD-style graphs"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic AD-style attack graph");
    std::uint32_t gen_computers = 1000;
    std::string gen_dist = "ind";
    std::uint64_t gen_seed = 0;
    std::uint32_t gen_pool = 40, gen_entries = 20;
    std::string gen_out;
    gen->add_option("--computers", gen_computers, "computer count (r1000/r2000/r4000 scale)");
    gen->add_option("--dist", gen_dist, "probability distribution: ind|pos|neg");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--entry-pool", gen_pool, "entry candidate pool size");
    gen->add_option("--entries", gen_entries, "entry node count");
    gen->add_option("--out", gen_out, "output graph file")->required();

    // condense
    auto* cond = app.add_subcommand("condense", "preprocess and condense a graph");
    std::string cond_in, cond_out;
    cond->add_option("--in", cond_in, "input graph file")->required();
    cond->add_option("--out", cond_out, "output condensed document")->required();

    // shared config options helper
    struct CfgOpts {
        std::string preset, config;
        std::optional<std::uint64_t> seed;
    };
    auto add_cfg = [](CLI::App* sub, CfgOpts& o) {
        sub->add_option("--preset", o.preset, "configuration preset (desk)");
        sub->add_option("--config", o.config, "config file (JSON key-value)");
        sub->add_option("--seed", [&o](const std::vector<std::string>& v) {
            o.seed = std::stoull(v.front());
            return true;
        }, "master seed (overrides config)");
    };

    // train
    auto* train = app.add_subcommand("train", "co-train attacker and defender");
    std::string train_graph, train_out, train_resume;
    CfgOpts train_cfg;
    train->add_option("--graph", train_graph, "input graph file")->required();
    train->add_option("--out", train_out, "output directory")->required();
    train->add_option("--resume", train_resume, "warm-start from a checkpoint");
    add_cfg(train, train_cfg);

    // defend
    auto* defend = app.add_subcommand("defend", "standalone EDO defense search");
    std::string defend_graph, defend_ckpt, defend_out, defend_fitness;
    std::uint32_t defend_iters = 1000;
    int defend_k = 5;
    CfgOpts defend_cfg;
    defend->add_option("--graph", defend_graph, "input graph file")->required();
    defend->add_option("--checkpoint", defend_ckpt, "trained policy checkpoint");
    defend->add_option("--iters", defend_iters, "EDO iterations");
    defend->add_option("--k", defend_k, "edge-blocking budget");
    defend->add_option("--fitness", defend_fitness, "fitness mode: critic|mc");
    defend->add_option("--out", defend_out, "output directory")->required();
    add_cfg(defend, defend_cfg);

    // eval
    auto* eval = app.add_subcommand("eval", "train a fresh policy against a fixed defense and evaluate");
    std::string eval_graph, eval_defense, eval_out;
    std::optional<std::uint32_t> eval_episodes;
    CfgOpts eval_cfg;
    eval->add_option("--graph", eval_graph, "input graph file")->required();
    eval->add_option("--defense", eval_defense, "defense plan file (default: no blocks)");
    eval->add_option("--episodes", [&eval_episodes](const std::vector<std::string>& v) {
        eval_episodes = static_cast<std::uint32_t>(std::stoul(v.front()));
        return true;
    }, "evaluation episodes");
    eval->add_option("--out", eval_out, "output directory")->required();
    add_cfg(eval, eval_cfg);

    // oracle
    auto* oracle = app.add_subcommand("oracle", "exact value / best defense on small instances");
    std::string oracle_graph, oracle_plan;
    double oracle_p = 0.5;
    bool oracle_best = false;
    int oracle_k = 5;
    oracle->add_option("--graph", oracle_graph, "input graph file")->required();
    oracle->add_option("--plan", oracle_plan, "defense plan file");
    oracle->add_option("--session-p", oracle_p, "HasSession activation probability");
    oracle->add_flag("--best-defense", oracle_best, "exhaustive best-defense search");
    oracle->add_option("--k", oracle_k, "budget for --best-defense");

    // prune-report
    auto* prep = app.add_subcommand("prune-report", "print the prune-record history");
    std::string prep_run, prep_in;
    prep->add_option("--run", prep_run, "training output directory");
    prep->add_option("--in", prep_in, "prune records file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) {
            return cmd_gen(gen_out, gen_computers, gen_dist, gen_seed, gen_pool,
                           gen_entries);
        }
        if (cond->parsed()) return cmd_condense(cond_in, cond_out);
        if (train->parsed()) {
            return cmd_train(train_graph,
                             resolve_config(train_cfg.preset, train_cfg.config,
                                            train_cfg.seed),
                             train_out, train_resume);
        }
        if (defend->parsed()) {
            RunConfig cfg = resolve_config(defend_cfg.preset, defend_cfg.config,
                                           defend_cfg.seed);
            if (!defend_fitness.empty()) {
                cfg.fitness_mode = defend_fitness == "mc" || defend_fitness == "monte_carlo"
                                       ? FitnessMode::MonteCarlo
                                       : FitnessMode::Critic;
            }
            return cmd_defend(defend_graph, defend_ckpt, cfg, defend_iters,
                              defend_k, defend_out);
        }
        if (eval->parsed()) {
            RunConfig cfg = resolve_config(eval_cfg.preset, eval_cfg.config,
                                           eval_cfg.seed);
            if (eval_episodes) cfg.eval_episodes = *eval_episodes;
            return cmd_eval(eval_graph, eval_defense, cfg, eval_out);
        }
        if (oracle->parsed()) {
            return cmd_oracle(oracle_graph, oracle_plan, oracle_p, oracle_best,
                              oracle_k);
        }
        if (prep->parsed()) {
            if (prep_run.empty() && prep_in.empty()) {
                std::cerr << "prune-report: provide --run or --in\n";
                return 2;
            }
            return cmd_prune_report(prep_run, prep_in);
        }
    } catch (const CLI::Error& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
