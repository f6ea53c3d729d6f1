// berngraph command line. Talks to the engine exclusively through the C API
// in berngraph.h; flags are translated into config override lines.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "berngraph.h"

namespace {

struct CommonArgs {
    std::string config;
    std::vector<std::string> sets; // raw key=value overrides
    std::string overrides;         // assembled override block

    void add_kv(const std::string& key, const std::string& value) {
        overrides += key + "=" + value + "\n";
    }
};

// flags that map 1:1 onto config keys
void add_run_flags(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config, "key=value config file");
    cmd->add_option("--set", args.sets, "extra key=value override (repeatable)");

    auto opt = [cmd, &args](const char* flag, const char* key, const char* help) {
        cmd->add_option_function<std::string>(
               flag, [&args, key](const std::string& v) { args.add_kv(key, v); }, help)
            ->expected(1);
    };
    opt("--ratios", "ratios", "train/val/test fractions, e.g. 0.6,0.2,0.2");
    opt("--split-seed", "split_seed", "row partition seed");
    opt("--node-mode", "node_mode", "bm|llr|te|rn");
    opt("--edge-mode", "edge_mode", "post|cooc|re");
    opt("--encoding-seed", "encoding_seed", "seed for random encodings");
    opt("--min-joint", "min_joint", "minimum co-occurrence count for an edge");
    opt("--stats-all-rows", "stats_all_rows", "estimate statistics on all rows (true|false)");
    opt("--model", "model", "gnn|lr|mlp");
    opt("--learning-rate", "learning_rate", "Adam learning rate");
    opt("--epochs", "epochs", "training epochs");
    opt("--batch-size", "batch_size", "minibatch size");
    opt("--seed", "seed", "root experiment seed");
    opt("--hidden", "hidden", "GNN hidden width");
    opt("--mlp-hidden", "mlp_hidden", "MLP hidden width");
    opt("--layers", "layers", "message-passing layers");
    opt("--patience", "patience", "early-stop patience on validation Jaccard (0 = off)");
    opt("--lr-input", "lr_input", "logistic regression input: raw|encoded");
    opt("--bootstrap-rounds", "bootstrap_rounds", "bootstrap rounds");
    opt("--bootstrap-frac", "bootstrap_frac", "bootstrap sample fraction");
    opt("--bootstrap-seed", "bootstrap_seed", "bootstrap sampling seed");
    opt("--threads", "threads", "worker cap (0 = auto / BERNGRAPH_THREADS)");
    opt("--row", "row", "patient row for graph/export-viz");
    opt("--k", "top_k", "top-k highlight count for export-viz");
    cmd->add_flag_function(
        "--deterministic",
        [&args](int64_t) { args.add_kv("deterministic", "true"); },
        "single-threaded deterministic reductions");
}

std::string final_overrides(CommonArgs& args) {
    std::string out = args.overrides;
    for (const auto& kv : args.sets) out += kv + "\n";
    return out;
}

int fail(bg_status rc) {
    std::fprintf(stderr, "error: %s\n", bg_last_error());
    return rc == BG_OK ? 1 : static_cast<int>(1);
}

struct CohortHandle {
    bg_cohort* ptr = nullptr;
    ~CohortHandle() { bg_cohort_close(ptr); }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"BernGraph: Bernoulli-statistics graphs for medication recommendation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", []() { return std::string(bg_version()); });

    std::string cohort_path, out_path, checkpoint_path;

    auto* sim = app.add_subcommand("simulate", "generate a synthetic cohort");
    CommonArgs sim_args;
    sim->add_option("--config", sim_args.config, "simulator key=value config file");
    sim->add_option("--set", sim_args.sets, "extra key=value override (repeatable)");
    std::string sim_out;
    sim->add_option("--out", sim_out, "output directory")->required();

    auto* stats = app.add_subcommand("stats", "emit Bernoulli statistics for a cohort");
    CommonArgs stats_args;
    stats->add_option("--cohort", cohort_path, "cohort manifest")->required();
    stats->add_option("--out", out_path, "statistics file")->required();
    add_run_flags(stats, stats_args);

    auto* graph = app.add_subcommand("graph", "dump one patient graph as JSON");
    CommonArgs graph_args;
    graph->add_option("--cohort", cohort_path, "cohort manifest")->required();
    graph->add_option("--out", out_path, "output JSON file")->required();
    add_run_flags(graph, graph_args);

    auto* train = app.add_subcommand("train", "train a model");
    CommonArgs train_args;
    train->add_option("--cohort", cohort_path, "cohort manifest")->required();
    train->add_option("--out", out_path, "output directory")->required();
    add_run_flags(train, train_args);

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
    CommonArgs eval_args;
    eval->add_option("--cohort", cohort_path, "cohort manifest")->required();
    eval->add_option("--checkpoint", checkpoint_path, "trained checkpoint")->required();
    eval->add_option("--out", out_path, "output directory")->required();
    add_run_flags(eval, eval_args);

    auto* ablate = app.add_subcommand("ablate", "run the full embedding/backbone grid");
    CommonArgs ablate_args;
    ablate->add_option("--cohort", cohort_path, "cohort manifest")->required();
    ablate->add_option("--out", out_path, "output directory")->required();
    add_run_flags(ablate, ablate_args);

    auto* viz = app.add_subcommand("export-viz", "export node activations for plotting");
    CommonArgs viz_args;
    viz->add_option("--cohort", cohort_path, "cohort manifest")->required();
    viz->add_option("--checkpoint", checkpoint_path, "trained GNN checkpoint")->required();
    viz->add_option("--out", out_path, "output JSON file")->required();
    add_run_flags(viz, viz_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e); // prints the message and usage
        return 2;
    }

    if (sim->parsed()) {
        const std::string ov = final_overrides(sim_args);
        bg_status rc = bg_run_simulate(sim_args.config.empty() ? nullptr : sim_args.config.c_str(),
                                       ov.empty() ? nullptr : ov.c_str(), sim_out.c_str());
        if (rc != BG_OK) return fail(rc);
        std::printf("cohort written to %s\n", sim_out.c_str());
        return 0;
    }

    CohortHandle cohort;
    if (bg_status rc = bg_cohort_open(cohort_path.c_str(), &cohort.ptr); rc != BG_OK) {
        return fail(rc);
    }

    auto run = [&](CommonArgs& args, auto fn) -> int {
        const std::string ov = final_overrides(args);
        bg_status rc = fn(args.config.empty() ? nullptr : args.config.c_str(),
                          ov.empty() ? nullptr : ov.c_str());
        if (rc != BG_OK) return fail(rc);
        return 0;
    };

    if (stats->parsed()) {
        return run(stats_args, [&](const char* cfg, const char* ov) {
            return bg_run_stats(cohort.ptr, cfg, ov, out_path.c_str());
        });
    }
    if (graph->parsed()) {
        return run(graph_args, [&](const char* cfg, const char* ov) {
            return bg_run_graph_dump(cohort.ptr, cfg, ov, out_path.c_str());
        });
    }
    if (train->parsed()) {
        int rc = run(train_args, [&](const char* cfg, const char* ov) {
            return bg_run_train(cohort.ptr, cfg, ov, out_path.c_str());
        });
        if (rc == 0) std::printf("checkpoint written to %s\n", out_path.c_str());
        return rc;
    }
    if (eval->parsed()) {
        int rc = run(eval_args, [&](const char* cfg, const char* ov) {
            return bg_run_eval(cohort.ptr, checkpoint_path.c_str(), cfg, ov, out_path.c_str());
        });
        if (rc == 0) std::printf("metrics written to %s\n", out_path.c_str());
        return rc;
    }
    if (ablate->parsed()) {
        int rc = run(ablate_args, [&](const char* cfg, const char* ov) {
            return bg_run_ablate(cohort.ptr, cfg, ov, out_path.c_str());
        });
        if (rc == 0) std::printf("grid results written to %s\n", out_path.c_str());
        return rc;
    }
    if (viz->parsed()) {
        return run(viz_args, [&](const char* cfg, const char* ov) {
            return bg_run_export_viz(cohort.ptr, checkpoint_path.c_str(), cfg, ov,
                                     out_path.c_str());
        });
    }
    return 2;
}
