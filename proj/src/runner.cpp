#include "berngraph/runner.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "berngraph/baselines.hpp"
#include "berngraph/checkpoint.hpp"
#include "berngraph/errors.hpp"
#include "berngraph/io_util.hpp"
#include "berngraph/synth.hpp"
#include "berngraph/train.hpp"

namespace berngraph {

using nlohmann::json;

namespace {

struct Experiment {
    DatasetSplit split;
    BernoulliStats stats;
    NodeEncoding encoding;
    std::shared_ptr<const EdgeSet> edges;
};

Experiment prepare_experiment(const EventCohort& cohort, const RunConfig& cfg) {
    Experiment ex;
    ex.split = make_split(cohort, cfg.ratios, cfg.split_seed);
    std::vector<int64_t> all_rows;
    std::span<const int64_t> stat_rows;
    if (cfg.stats_all_rows) {
        all_rows.resize(static_cast<size_t>(cohort.n_patients()));
        std::iota(all_rows.begin(), all_rows.end(), 0);
        stat_rows = all_rows;
    } else {
        stat_rows = ex.split.train_rows; // frozen training statistics
    }
    ex.stats = BernoulliStats::estimate(cohort.events, stat_rows, cfg.resolved_threads());
    ex.encoding =
        NodeEncoding::prepare(cfg.node_mode, ex.stats, cohort, stat_rows, cfg.encoding_seed);
    ex.edges = std::make_shared<EdgeSet>(
        EdgeSet::build(ex.stats, cfg.edge_mode, cfg.encoding_seed, cfg.min_joint));
    return ex;
}

std::vector<PatientGraph> all_graphs(const EventCohort& cohort, const Experiment& ex) {
    std::vector<int64_t> rows(static_cast<size_t>(cohort.n_patients()));
    std::iota(rows.begin(), rows.end(), 0);
    return build_graphs(cohort, rows, ex.encoding, ex.edges);
}

Eigen::MatrixXd raw_features(const EventCohort& cohort) {
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(cohort.n_patients(), cohort.n_events());
    for (int64_t r = 0; r < cohort.n_patients(); ++r) {
        for (int32_t c : cohort.events.row(r)) f(r, c) = 1.0;
    }
    return f;
}

Eigen::MatrixXd encoded_features(const EventCohort& cohort, const NodeEncoding& enc) {
    Eigen::MatrixXd f(cohort.n_patients(), cohort.n_events());
    for (int64_t r = 0; r < cohort.n_patients(); ++r) {
        const auto v = node_values(cohort.events, r, enc);
        for (int64_t j = 0; j < cohort.n_events(); ++j) f(r, j) = v[static_cast<size_t>(j)];
    }
    return f;
}

std::vector<std::vector<uint8_t>> label_rows(const EventCohort& cohort) {
    std::vector<std::vector<uint8_t>> out(static_cast<size_t>(cohort.n_patients()));
    for (int64_t r = 0; r < cohort.n_patients(); ++r) {
        auto& row = out[static_cast<size_t>(r)];
        row.assign(static_cast<size_t>(cohort.n_drugs()), 0);
        for (int32_t c : cohort.labels.row(r)) row[static_cast<size_t>(c)] = 1;
    }
    return out;
}

std::vector<std::vector<uint8_t>> labels_for(const std::vector<std::vector<uint8_t>>& all,
                                             std::span<const int64_t> rows) {
    std::vector<std::vector<uint8_t>> out;
    out.reserve(rows.size());
    for (int64_t r : rows) out.push_back(all[static_cast<size_t>(r)]);
    return out;
}

std::string history_csv(const std::vector<EpochStats>& history) {
    std::string out = "epoch,train_loss,val_jaccard,val_f1,val_prauc,val_auroc,val_avg_drug\n";
    for (size_t e = 0; e < history.size(); ++e) {
        const auto& h = history[e];
        out += fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n", e + 1, h.train_loss,
                           h.val.jaccard.mean, h.val.f1.mean, h.val.prauc.mean, h.val.auroc.mean,
                           h.val.avg_drug.mean);
    }
    return out;
}

json report_json(const MetricsReport& rep) {
    json j;
    j["jaccard"] = {{"mean", rep.jaccard.mean}, {"std", rep.jaccard.stddev}};
    j["f1"] = {{"mean", rep.f1.mean}, {"std", rep.f1.stddev}};
    j["prauc"] = {{"mean", rep.prauc.mean}, {"std", rep.prauc.stddev}};
    j["auroc"] = {{"mean", rep.auroc.mean}, {"std", rep.auroc.stddev}};
    j["avg_drug"] = {{"mean", rep.avg_drug.mean}, {"std", rep.avg_drug.stddev}};
    j["skipped_rows"] = {{"prauc", rep.skipped_prauc}, {"auroc", rep.skipped_auroc}};
    j["rounds"] = rep.rounds;
    return j;
}

json train_meta_json(const RunConfig& cfg) {
    json meta;
    meta["model"] = cfg.model;
    meta["node_mode"] = to_string(cfg.node_mode);
    meta["edge_mode"] = to_string(cfg.edge_mode);
    meta["encoding_seed"] = cfg.encoding_seed;
    meta["ratios"] = {cfg.ratios[0], cfg.ratios[1], cfg.ratios[2]};
    meta["split_seed"] = cfg.split_seed;
    meta["min_joint"] = cfg.min_joint;
    meta["stats_all_rows"] = cfg.stats_all_rows;
    meta["lr_input"] = cfg.lr_input;
    meta["seed"] = cfg.seed;
    meta["mlp_hidden"] = cfg.mlp_hidden;
    return meta;
}

// The checkpoint's training metadata pins everything the encodings depend
// on; eval-side flags only steer the evaluation itself.
RunConfig apply_train_meta(RunConfig cfg, const json& meta) {
    if (meta.is_null()) return cfg;
    cfg.model = meta.value("model", cfg.model);
    if (meta.contains("node_mode")) cfg.node_mode = node_mode_from_string(meta["node_mode"]);
    if (meta.contains("edge_mode")) cfg.edge_mode = edge_mode_from_string(meta["edge_mode"]);
    cfg.encoding_seed = meta.value("encoding_seed", cfg.encoding_seed);
    if (meta.contains("ratios")) {
        cfg.ratios = {meta["ratios"][0].get<double>(), meta["ratios"][1].get<double>(),
                      meta["ratios"][2].get<double>()};
    }
    cfg.split_seed = meta.value("split_seed", cfg.split_seed);
    cfg.min_joint = meta.value("min_joint", cfg.min_joint);
    cfg.stats_all_rows = meta.value("stats_all_rows", cfg.stats_all_rows);
    cfg.lr_input = meta.value("lr_input", cfg.lr_input);
    cfg.mlp_hidden = meta.value("mlp_hidden", cfg.mlp_hidden);
    return cfg;
}

struct TrainedArtifacts {
    std::vector<EpochStats> history;
    int best_epoch = -1;
    std::function<void(const std::filesystem::path&)> save;
    std::function<std::vector<Prediction>(std::span<const int64_t>)> predict_test;
};

void evaluate_and_write(const EventCohort& cohort, const RunConfig& cfg, const Experiment& ex,
                        std::vector<Prediction> preds, const std::filesystem::path& out_dir) {
    const auto labels = labels_for(label_rows(cohort), ex.split.test_rows);
    const MetricsReport plain = metrics(preds, labels);
    std::vector<BootstrapRound> rounds;
    const MetricsReport boot = bootstrap_eval(preds, labels, cfg.bootstrap_rounds,
                                              cfg.bootstrap_frac, cfg.bootstrap_seed, &rounds);

    json j;
    j["n_test"] = ex.split.test_rows.size();
    j["bootstrap"] = report_json(boot);
    j["bootstrap"]["frac"] = cfg.bootstrap_frac;
    j["plain"] = report_json(plain);
    if (cohort.has_groups()) {
        std::vector<int64_t> gids;
        gids.reserve(ex.split.test_rows.size());
        for (int64_t r : ex.split.test_rows) {
            gids.push_back(cohort.group_ids[static_cast<size_t>(r)]);
        }
        j["grouped"] = report_json(group_eval(preds, labels, gids));
    }
    write_file_atomic(out_dir / "metrics.json", j.dump(2) + "\n");

    std::string csv = "round,jaccard,f1,prauc,auroc,avg_drug\n";
    for (size_t r = 0; r < rounds.size(); ++r) {
        csv += fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n", r + 1, rounds[r].jaccard,
                           rounds[r].f1, rounds[r].prauc, rounds[r].auroc, rounds[r].avg_drug);
    }
    csv += fmt::format("mean,{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n", boot.jaccard.mean, boot.f1.mean,
                       boot.prauc.mean, boot.auroc.mean, boot.avg_drug.mean);
    csv += fmt::format("std,{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n", boot.jaccard.stddev,
                       boot.f1.stddev, boot.prauc.stddev, boot.auroc.stddev,
                       boot.avg_drug.stddev);
    write_file_atomic(out_dir / "metrics.csv", csv);
    write_file_atomic(out_dir / "resolved.cfg", cfg.echo());
}

TrainedArtifacts train_model(const EventCohort& cohort, const RunConfig& cfg,
                             const Experiment& ex) {
    TrainedArtifacts art;
    const json meta = train_meta_json(cfg);
    const auto labels = std::make_shared<std::vector<std::vector<uint8_t>>>(label_rows(cohort));

    if (cfg.model == "gnn") {
        auto graphs = std::make_shared<std::vector<PatientGraph>>(all_graphs(cohort, ex));
        GnnDims dims{cfg.hidden, cfg.layers, static_cast<int>(cohort.n_events()),
                     static_cast<int>(cohort.n_drugs())};
        auto result = std::make_shared<GnnTrainResult>(
            train_gnn(*graphs, ex.split.train_rows, ex.split.val_rows, dims,
                      cfg.train_options()));
        art.history = result->history;
        art.best_epoch = result->best_epoch;
        art.save = [result, meta](const std::filesystem::path& p) {
            save_gnn_checkpoint(p, result->params, &result->adam, meta);
        };
        const int threads = cfg.resolved_threads();
        art.predict_test = [result, graphs, threads](std::span<const int64_t> rows) {
            return predict_rows(result->params, *graphs, rows, threads);
        };
        return art;
    }

    // baselines share the Prediction/metrics path byte for byte
    auto features = std::make_shared<Eigen::MatrixXd>();
    if (cfg.model == "lr" && cfg.lr_input == "raw") {
        *features = raw_features(cohort);
    } else if (cfg.model == "lr") {
        *features = encoded_features(cohort, ex.encoding);
    } else {
        // MLP consumes Bernoulli-mean node values regardless of node_mode
        const auto bm = NodeEncoding::prepare(NodeMode::bernoulli, ex.stats, cohort,
                                              ex.split.train_rows, cfg.encoding_seed);
        *features = encoded_features(cohort, bm);
    }

    if (cfg.model == "lr") {
        auto result = std::make_shared<BaselineTrainResult>(
            train_lr(*features, *labels, ex.split.train_rows, ex.split.val_rows,
                     cfg.train_options()));
        art.history = result->history;
        art.best_epoch = result->best_epoch;
        art.save = [result, meta](const std::filesystem::path& p) {
            save_linear_checkpoint(p, result->linear, meta);
        };
        art.predict_test = [result, features](std::span<const int64_t> rows) {
            return predict_linear(result->linear, *features, rows);
        };
    } else if (cfg.model == "mlp") {
        auto result = std::make_shared<BaselineTrainResult>(
            train_mlp(*features, *labels, ex.split.train_rows, ex.split.val_rows, cfg.mlp_hidden,
                      cfg.train_options()));
        art.history = result->history;
        art.best_epoch = result->best_epoch;
        art.save = [result, meta](const std::filesystem::path& p) {
            save_mlp_checkpoint(p, result->mlp, meta);
        };
        art.predict_test = [result, features](std::span<const int64_t> rows) {
            return predict_mlp(result->mlp, *features, rows);
        };
    } else {
        throw Error(ErrorCode::invalid, fmt::format("unknown model '{}'", cfg.model));
    }
    return art;
}

} // namespace

// ---------------------------------------------------------------------------

void run_simulate(const std::string& config_path, const std::string& overrides,
                  const std::filesystem::path& out_dir) {
    const SynthConfig cfg = resolve_synth_config(config_path, overrides);
    std::filesystem::create_directories(out_dir);
    SynthResult result = generate(cfg);
    save_cohort(result.cohort, out_dir / "cohort.json");

    json truth;
    truth["active_causes"] = result.truth.active_causes;
    truth["clean_labels"] = result.truth.clean_labels;
    write_file_atomic(out_dir / "ground_truth.json", truth.dump(2) + "\n");
    write_file_atomic(out_dir / "resolved.cfg", echo_synth_config(cfg));
}

void run_stats(const EventCohort& cohort, const RunConfig& cfg,
               const std::filesystem::path& out_path) {
    const Experiment ex = prepare_experiment(cohort, cfg);
    save_stats(ex.stats, out_path);
}

void run_graph_dump(const EventCohort& cohort, const RunConfig& cfg,
                    const std::filesystem::path& out_path) {
    const Experiment ex = prepare_experiment(cohort, cfg);
    const PatientGraph g = build_graph(cohort, cfg.row, ex.encoding, ex.edges);

    json j;
    j["row"] = cfg.row;
    auto& nodes = j["nodes"] = json::array();
    for (size_t v = 0; v < g.node_values.size(); ++v) {
        nodes.push_back({{"event", v}, {"value", g.node_values[v]}});
    }
    auto& edges = j["edges"] = json::array();
    for (int64_t e = 0; e < g.edges->size(); ++e) {
        edges.push_back({{"src", g.edges->src[static_cast<size_t>(e)]},
                         {"dst", g.edges->dst[static_cast<size_t>(e)]},
                         {"weight", g.edges->weight[static_cast<size_t>(e)]}});
    }
    j["labels"] = g.labels;
    write_file_atomic(out_path, j.dump(2) + "\n");
}

void run_train(const EventCohort& cohort, const RunConfig& cfg,
               const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    const Experiment ex = prepare_experiment(cohort, cfg);
    TrainedArtifacts art = train_model(cohort, cfg, ex);

    art.save(out_dir / "checkpoint.bin");
    write_file_atomic(out_dir / "history.csv", history_csv(art.history));
    write_file_atomic(out_dir / "resolved.cfg", cfg.echo());

    json summary;
    summary["model"] = cfg.model;
    summary["epochs_run"] = art.history.size();
    summary["best_epoch"] = art.best_epoch + 1;
    if (!art.history.empty()) {
        summary["final_train_loss"] = art.history.back().train_loss;
        summary["final_val"] = report_json(art.history.back().val);
    }
    write_file_atomic(out_dir / "train_summary.json", summary.dump(2) + "\n");
}

void run_eval(const EventCohort& cohort, const std::filesystem::path& checkpoint_path,
              const RunConfig& cfg_in, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::string kind = checkpoint_kind(checkpoint_path);

    std::vector<Prediction> preds;
    RunConfig cfg = cfg_in;
    if (kind == "gnn") {
        LoadedGnn loaded = load_gnn_checkpoint(checkpoint_path);
        cfg = apply_train_meta(cfg_in, loaded.train_meta);
        const Experiment ex = prepare_experiment(cohort, cfg);
        if (loaded.params.dims.n_events != cohort.n_events() ||
            loaded.params.dims.n_drugs != cohort.n_drugs()) {
            throw Error(ErrorCode::state,
                        fmt::format("checkpoint is for {} events / {} drugs, cohort has {} / {}",
                                    loaded.params.dims.n_events, loaded.params.dims.n_drugs,
                                    cohort.n_events(), cohort.n_drugs()));
        }
        const auto graphs = all_graphs(cohort, ex);
        preds = predict_rows(loaded.params, graphs, ex.split.test_rows, cfg.resolved_threads());
        evaluate_and_write(cohort, cfg, ex, std::move(preds), out_dir);
        return;
    }
    LoadedBaseline loaded = load_baseline_checkpoint(checkpoint_path);
    cfg = apply_train_meta(cfg_in, loaded.train_meta);
    cfg.model = loaded.kind;
    const Experiment ex = prepare_experiment(cohort, cfg);
    Eigen::MatrixXd features;
    if (loaded.kind == "lr" && cfg.lr_input == "raw") {
        features = raw_features(cohort);
    } else if (loaded.kind == "lr") {
        features = encoded_features(cohort, ex.encoding);
    } else {
        const auto bm = NodeEncoding::prepare(NodeMode::bernoulli, ex.stats, cohort,
                                              ex.split.train_rows, cfg.encoding_seed);
        features = encoded_features(cohort, bm);
    }
    preds = loaded.kind == "lr" ? predict_linear(loaded.linear, features, ex.split.test_rows)
                                : predict_mlp(loaded.mlp, features, ex.split.test_rows);
    evaluate_and_write(cohort, cfg, ex, std::move(preds), out_dir);
}

void run_ablate(const EventCohort& cohort, const RunConfig& cfg,
                const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);

    struct Arm {
        const char* model;
        NodeMode node;
        EdgeMode edge;
    };
    const Arm arms[] = {
        {"gnn", NodeMode::bernoulli, EdgeMode::posterior},
        {"gnn", NodeMode::bernoulli, EdgeMode::cooccurrence},
        {"gnn", NodeMode::bernoulli, EdgeMode::random},
        {"gnn", NodeMode::llr, EdgeMode::posterior},
        {"gnn", NodeMode::llr, EdgeMode::cooccurrence},
        {"gnn", NodeMode::target, EdgeMode::posterior},
        {"gnn", NodeMode::target, EdgeMode::cooccurrence},
        {"gnn", NodeMode::random, EdgeMode::posterior},
        {"gnn", NodeMode::random, EdgeMode::random},
        {"lr", NodeMode::bernoulli, EdgeMode::posterior},
        {"mlp", NodeMode::bernoulli, EdgeMode::posterior},
    };

    std::string csv = "model,node_mode,edge_mode,jaccard,f1,prauc,auroc,avg_drug\n";
    for (const Arm& arm : arms) {
        RunConfig arm_cfg = cfg;
        arm_cfg.model = arm.model;
        arm_cfg.node_mode = arm.node;
        arm_cfg.edge_mode = arm.edge;
        const Experiment ex = prepare_experiment(cohort, arm_cfg);
        TrainedArtifacts art = train_model(cohort, arm_cfg, ex);
        const auto preds = art.predict_test(ex.split.test_rows);
        const auto labels = labels_for(label_rows(cohort), ex.split.test_rows);
        const MetricsReport rep = bootstrap_eval(preds, labels, cfg.bootstrap_rounds,
                                                 cfg.bootstrap_frac, cfg.bootstrap_seed);
        const bool is_gnn = std::string(arm.model) == "gnn";
        csv += fmt::format("{},{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n", arm.model,
                           is_gnn ? to_string(arm.node) : "-", is_gnn ? to_string(arm.edge) : "-",
                           rep.jaccard.mean, rep.f1.mean, rep.prauc.mean, rep.auroc.mean,
                           rep.avg_drug.mean);
    }
    write_file_atomic(out_dir / "ablate.csv", csv);
    write_file_atomic(out_dir / "resolved.cfg", cfg.echo());
}

void run_export_viz(const EventCohort& cohort, const std::filesystem::path& checkpoint_path,
                    const RunConfig& cfg_in, const std::filesystem::path& out_path) {
    LoadedGnn loaded = load_gnn_checkpoint(checkpoint_path);
    const RunConfig cfg = apply_train_meta(cfg_in, loaded.train_meta);
    if (cfg.top_k > cohort.n_events()) {
        throw Error(ErrorCode::invalid,
                    fmt::format("top_k {} exceeds the {} events", cfg.top_k, cohort.n_events()));
    }
    const Experiment ex = prepare_experiment(cohort, cfg);
    const PatientGraph g = build_graph(cohort, cfg.row, ex.encoding, ex.edges);
    ForwardCache cache;
    forward(g, loaded.params, cache);

    // top-k by final-layer scalar; ties at the boundary go to the lower index
    std::vector<int64_t> order(static_cast<size_t>(cohort.n_events()));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
        if (cache.node_out(a) != cache.node_out(b)) return cache.node_out(a) > cache.node_out(b);
        return a < b;
    });
    std::vector<uint8_t> flagged(static_cast<size_t>(cohort.n_events()), 0);
    for (int64_t k = 0; k < cfg.top_k; ++k) flagged[static_cast<size_t>(order[k])] = 1;

    json j;
    j["row"] = cfg.row;
    j["k"] = cfg.top_k;
    auto& nodes = j["nodes"] = json::array();
    for (int64_t v = 0; v < cohort.n_events(); ++v) {
        nodes.push_back({{"event", v},
                         {"name", cohort.event_names[static_cast<size_t>(v)]},
                         {"activation", cache.node_out(v)},
                         {"top_k", flagged[static_cast<size_t>(v)] != 0}});
    }
    auto& edges = j["edges"] = json::array();
    for (int64_t e = 0; e < g.edges->size(); ++e) {
        edges.push_back({{"src", g.edges->src[static_cast<size_t>(e)]},
                         {"dst", g.edges->dst[static_cast<size_t>(e)]},
                         {"weight", g.edges->weight[static_cast<size_t>(e)]}});
    }
    write_file_atomic(out_path, j.dump(2) + "\n");
}

} // namespace berngraph
