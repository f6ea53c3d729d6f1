#include "berngraph/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "berngraph/errors.hpp"

namespace berngraph {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'B', 'G', 'C', 'K'};

} // namespace

void write_checkpoint(const std::filesystem::path& path, json header,
                      std::span<const ConstArrayRef> arrays) {
    header["format_version"] = kCheckpointVersion;
    header["n_values"] = total_size(arrays);
    std::vector<std::string> order;
    for (const auto& a : arrays) order.push_back(a.name);
    header["array_order"] = order;
    const std::string head = header.dump();

    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::io, fmt::format("cannot write '{}'", tmp));
        out.write(kMagic, 4);
        const uint32_t len = static_cast<uint32_t>(head.size());
        out.write(reinterpret_cast<const char*>(&len), sizeof(len));
        out.write(head.data(), static_cast<std::streamsize>(head.size()));
        for (const auto& a : arrays) {
            out.write(reinterpret_cast<const char*>(a.data),
                      static_cast<std::streamsize>(a.size) * 8);
        }
        if (!out) throw Error(ErrorCode::io, fmt::format("write failed for '{}'", tmp));
    }
    std::filesystem::rename(tmp, path);
}

RawCheckpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, fmt::format("cannot open checkpoint '{}'", path.string()));
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw Error(ErrorCode::parse,
                    fmt::format("'{}' is not a berngraph checkpoint", path.string()));
    }
    uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    if (!in) throw Error(ErrorCode::parse, fmt::format("truncated checkpoint '{}'", path.string()));
    std::string head(len, '\0');
    in.read(head.data(), len);
    if (!in) throw Error(ErrorCode::parse, fmt::format("truncated checkpoint '{}'", path.string()));

    RawCheckpoint ck;
    try {
        ck.header = json::parse(head);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse,
                    fmt::format("'{}': bad checkpoint header: {}", path.string(), e.what()));
    }
    if (!ck.header.contains("format_version") ||
        ck.header["format_version"].get<int>() != kCheckpointVersion) {
        throw Error(ErrorCode::parse,
                    fmt::format("'{}': unsupported checkpoint version", path.string()));
    }
    const int64_t n = ck.header.value("n_values", int64_t{-1});
    if (n < 0) throw Error(ErrorCode::parse, "checkpoint header missing n_values");
    ck.values.resize(static_cast<size_t>(n));
    in.read(reinterpret_cast<char*>(ck.values.data()), n * 8);
    if (in.gcount() != n * 8) {
        throw Error(ErrorCode::parse,
                    fmt::format("truncated checkpoint '{}': expected {} values", path.string(), n));
    }
    return ck;
}

namespace {

// copies `arrays` out of the flat value buffer, in order
void unpack(const std::vector<double>& values, std::vector<ArrayRef> arrays,
            const std::string& what) {
    int64_t total = 0;
    for (const auto& a : arrays) total += a.size;
    if (static_cast<int64_t>(values.size()) != total) {
        throw Error(ErrorCode::parse,
                    fmt::format("{}: payload has {} values, model needs {}", what, values.size(),
                                total));
    }
    size_t offset = 0;
    for (auto& a : arrays) {
        std::memcpy(a.data, values.data() + offset, static_cast<size_t>(a.size) * 8);
        offset += static_cast<size_t>(a.size);
    }
}

} // namespace

void save_gnn_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                         const AdamState* adam, const json& train_meta) {
    json header;
    header["kind"] = "gnn";
    header["dims"] = {{"hidden", params.dims.hidden},
                      {"layers", params.dims.layers},
                      {"n_events", params.dims.n_events},
                      {"n_drugs", params.dims.n_drugs}};
    header["activation"] = "relu";
    header["has_adam"] = adam != nullptr;
    if (adam) header["adam_step"] = adam->step;
    if (!train_meta.is_null()) header["train_meta"] = train_meta;

    auto arrays = params.arrays();
    if (adam) {
        arrays.emplace_back("adam_m", adam->m.data(), static_cast<int64_t>(adam->m.size()));
        arrays.emplace_back("adam_v", adam->v.data(), static_cast<int64_t>(adam->v.size()));
    }
    write_checkpoint(path, std::move(header), arrays);
}

LoadedGnn load_gnn_checkpoint(const std::filesystem::path& path) {
    RawCheckpoint ck = read_checkpoint(path);
    if (ck.header.value("kind", std::string{}) != "gnn") {
        throw Error(ErrorCode::state,
                    fmt::format("'{}' holds a '{}' model, expected gnn", path.string(),
                                ck.header.value("kind", std::string{"?"})));
    }
    GnnDims dims;
    const auto& d = ck.header.at("dims");
    dims.hidden = d.at("hidden").get<int>();
    dims.layers = d.at("layers").get<int>();
    dims.n_events = d.at("n_events").get<int>();
    dims.n_drugs = d.at("n_drugs").get<int>();

    LoadedGnn out;
    out.params = ModelParams::zeros(dims);
    out.train_meta = ck.header.value("train_meta", json{});

    const int64_t n_params = out.params.param_count();
    if (ck.header.value("has_adam", false)) {
        AdamState adam = AdamState::sized(n_params);
        adam.step = ck.header.value("adam_step", int64_t{0});
        std::vector<ArrayRef> arrays = out.params.arrays();
        arrays.push_back({"adam_m", adam.m.data(), n_params});
        arrays.push_back({"adam_v", adam.v.data(), n_params});
        unpack(ck.values, std::move(arrays), path.string());
        out.adam = std::move(adam);
    } else {
        unpack(ck.values, out.params.arrays(), path.string());
    }
    return out;
}

void save_linear_checkpoint(const std::filesystem::path& path, const LinearModel& m,
                            const json& train_meta) {
    json header;
    header["kind"] = "lr";
    header["dims"] = {{"n_features", m.w.cols()}, {"n_drugs", m.w.rows()}};
    if (!train_meta.is_null()) header["train_meta"] = train_meta;
    write_checkpoint(path, std::move(header), m.arrays());
}

void save_mlp_checkpoint(const std::filesystem::path& path, const MlpModel& m,
                         const json& train_meta) {
    json header;
    header["kind"] = "mlp";
    header["dims"] = {{"n_features", m.w1.cols()},
                      {"hidden", m.w1.rows()},
                      {"n_drugs", m.w2.rows()}};
    if (!train_meta.is_null()) header["train_meta"] = train_meta;
    write_checkpoint(path, std::move(header), m.arrays());
}

LoadedBaseline load_baseline_checkpoint(const std::filesystem::path& path) {
    RawCheckpoint ck = read_checkpoint(path);
    LoadedBaseline out;
    out.kind = ck.header.value("kind", std::string{});
    out.train_meta = ck.header.value("train_meta", json{});
    const auto& d = ck.header.at("dims");
    if (out.kind == "lr") {
        out.linear = LinearModel::zeros(d.at("n_features").get<int64_t>(),
                                        d.at("n_drugs").get<int64_t>());
        unpack(ck.values, out.linear.arrays(), path.string());
    } else if (out.kind == "mlp") {
        out.mlp = MlpModel::glorot_init(d.at("n_features").get<int64_t>(),
                                        d.at("n_drugs").get<int64_t>(),
                                        d.at("hidden").get<int>(), 0);
        unpack(ck.values, out.mlp.arrays(), path.string());
    } else {
        throw Error(ErrorCode::state,
                    fmt::format("'{}' holds a '{}' model, expected lr or mlp", path.string(),
                                out.kind));
    }
    return out;
}

std::string checkpoint_kind(const std::filesystem::path& path) {
    return read_checkpoint(path).header.value("kind", std::string{});
}

} // namespace berngraph
