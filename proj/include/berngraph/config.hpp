#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "berngraph/encoders.hpp"
#include "berngraph/synth.hpp"
#include "berngraph/train.hpp"

namespace berngraph {

using KvMap = std::map<std::string, std::string>;

// Flat key=value text; '#' starts a comment, blank lines ignored.
KvMap parse_kv_text(const std::string& text, const std::string& origin);
KvMap load_kv_file(const std::filesystem::path& path);

// Resolved experiment configuration. Precedence: overrides > file > defaults.
// Every key is validated up front; unknown keys are errors.
struct RunConfig {
    std::string cohort_path;
    std::array<double, 3> ratios{0.6, 0.2, 0.2};
    uint64_t split_seed = 0;

    NodeMode node_mode = NodeMode::bernoulli;
    EdgeMode edge_mode = EdgeMode::posterior;
    uint64_t encoding_seed = 0; // defaults to `seed` when not set
    int64_t min_joint = 1;
    bool stats_all_rows = false;

    std::string model = "gnn"; // gnn | lr | mlp
    double learning_rate = 1e-4;
    int epochs = 200;
    int batch_size = 32;
    uint64_t seed = 0;
    int hidden = 128;
    int mlp_hidden = 64;
    int layers = 2;
    int patience = 0;
    std::string lr_input = "raw"; // raw | encoded

    int bootstrap_rounds = 10;
    double bootstrap_frac = 0.8;
    uint64_t bootstrap_seed = 0; // defaults to `seed` when not set

    int threads = 0; // 0 = auto (BERNGRAPH_THREADS env, else hardware)
    bool deterministic = false;

    int64_t row = 0;   // graph / export-viz target row
    int64_t top_k = 5; // export-viz highlight count

    static RunConfig resolve(const std::string& config_path,
                             const std::string& overrides_text);

    // Canonical sorted key=value text; resolving the echo reproduces *this.
    std::string echo() const;

    TrainOptions train_options() const;
    int resolved_threads() const;
};

// Simulator configuration shares the key=value format but its own schema.
SynthConfig resolve_synth_config(const std::string& config_path,
                                 const std::string& overrides_text);
std::string echo_synth_config(const SynthConfig& config);

} // namespace berngraph
