#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>

#include "berngraph/baselines.hpp"
#include "berngraph/gnn.hpp"

namespace berngraph {

// Container: "BGCK" magic, u32 little-endian header length, JSON header,
// then header["n_values"] raw float64 little-endian values. The header
// carries format_version, model kind, dims and optional training metadata;
// values follow the model's arrays() order, then Adam m and v when present.

inline constexpr int kCheckpointVersion = 1;

struct RawCheckpoint {
    nlohmann::json header;
    std::vector<double> values;
};

void write_checkpoint(const std::filesystem::path& path, nlohmann::json header,
                      std::span<const ConstArrayRef> arrays);
RawCheckpoint read_checkpoint(const std::filesystem::path& path);

void save_gnn_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                         const AdamState* adam, const nlohmann::json& train_meta);

struct LoadedGnn {
    ModelParams params;
    std::optional<AdamState> adam;
    nlohmann::json train_meta;
};

// Throws on version or shape mismatch and on truncated payloads.
LoadedGnn load_gnn_checkpoint(const std::filesystem::path& path);

void save_linear_checkpoint(const std::filesystem::path& path, const LinearModel& m,
                            const nlohmann::json& train_meta);
void save_mlp_checkpoint(const std::filesystem::path& path, const MlpModel& m,
                         const nlohmann::json& train_meta);

struct LoadedBaseline {
    std::string kind; // "lr" | "mlp"
    LinearModel linear;
    MlpModel mlp;
    nlohmann::json train_meta;
};

LoadedBaseline load_baseline_checkpoint(const std::filesystem::path& path);

// Kind tag without loading the payload.
std::string checkpoint_kind(const std::filesystem::path& path);

} // namespace berngraph
