#include "berngraph/bern_stats.hpp"

#include <algorithm>
#include <fstream>
#include <thread>
#include <unordered_map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "berngraph/errors.hpp"
#include "berngraph/io_util.hpp"

namespace berngraph {

namespace {

using PairTable = std::unordered_map<uint64_t, int64_t>;

inline uint64_t pair_key(int32_t i, int32_t j) {
    // caller guarantees i < j
    return (static_cast<uint64_t>(static_cast<uint32_t>(i)) << 32) |
           static_cast<uint32_t>(j);
}

void count_rows(const SparseBinaryMatrix& events, std::span<const int64_t> rows,
                size_t begin, size_t end, PairTable& table) {
    for (size_t k = begin; k < end; ++k) {
        auto nz = events.row(rows[k]);
        for (size_t a = 0; a < nz.size(); ++a) {
            for (size_t b = a + 1; b < nz.size(); ++b) {
                table[pair_key(nz[a], nz[b])]++;
            }
        }
    }
}

} // namespace

BernoulliStats BernoulliStats::estimate(const SparseBinaryMatrix& events,
                                        std::span<const int64_t> rows, int threads) {
    if (rows.empty()) {
        throw Error(ErrorCode::invalid, "statistics need at least one row");
    }
    for (int64_t r : rows) {
        if (r < 0 || r >= events.n_rows) {
            throw Error(ErrorCode::invalid, fmt::format("row {} out of range", r));
        }
    }

    BernoulliStats stats;
    stats.n_rows = static_cast<int64_t>(rows.size());
    stats.event_counts = events.column_counts(rows);
    stats.marginals.resize(stats.event_counts.size());
    for (size_t j = 0; j < stats.event_counts.size(); ++j) {
        stats.marginals[j] =
            static_cast<double>(stats.event_counts[j]) / static_cast<double>(stats.n_rows);
    }

    // Shard rows; merge by integer summation, so the shard layout never
    // changes the result.
    int n_shards = std::max(1, threads);
    n_shards = static_cast<int>(std::min<int64_t>(n_shards, stats.n_rows));
    std::vector<PairTable> tables(static_cast<size_t>(n_shards));
    if (n_shards == 1) {
        count_rows(events, rows, 0, rows.size(), tables[0]);
    } else {
        std::vector<std::thread> workers;
        const size_t chunk = (rows.size() + n_shards - 1) / n_shards;
        for (int s = 0; s < n_shards; ++s) {
            const size_t begin = std::min(rows.size(), s * chunk);
            const size_t end = std::min(rows.size(), begin + chunk);
            workers.emplace_back(
                [&, begin, end, s] { count_rows(events, rows, begin, end, tables[s]); });
        }
        for (auto& w : workers) w.join();
        for (int s = 1; s < n_shards; ++s) {
            for (const auto& [key, count] : tables[s]) tables[0][key] += count;
            tables[s].clear();
        }
    }

    stats.joint.reserve(tables[0].size());
    for (const auto& [key, count] : tables[0]) {
        PairCount pc;
        pc.i = static_cast<int32_t>(key >> 32);
        pc.j = static_cast<int32_t>(key & 0xffffffffu);
        pc.count = count;
        stats.joint.push_back(pc);
    }
    std::sort(stats.joint.begin(), stats.joint.end(), [](const PairCount& a, const PairCount& b) {
        return std::tie(a.i, a.j) < std::tie(b.i, b.j);
    });
    return stats;
}

int64_t BernoulliStats::joint_count(int32_t a, int32_t b) const {
    if (a == b) return 0;
    if (a > b) std::swap(a, b);
    auto it = std::lower_bound(joint.begin(), joint.end(), std::make_pair(a, b),
                               [](const PairCount& pc, const std::pair<int32_t, int32_t>& key) {
                                   return std::tie(pc.i, pc.j) < std::tie(key.first, key.second);
                               });
    if (it == joint.end() || it->i != a || it->j != b) return 0;
    return it->count;
}

double BernoulliStats::conditional(int32_t i, int32_t j) const {
    const int64_t c = joint_count(i, j);
    if (c == 0) {
        throw Error(ErrorCode::state,
                    fmt::format("conditional({}, {}) undefined: events never co-occur", i, j));
    }
    return static_cast<double>(c) / static_cast<double>(event_counts[static_cast<size_t>(j)]);
}

void save_stats(const BernoulliStats& stats, const std::filesystem::path& path) {
    std::string out;
    nlohmann::json header;
    header["n_rows"] = stats.n_rows;
    header["n_events"] = stats.event_counts.size();
    out += header.dump();
    out += '\n';
    out += "event,count,rho\n";
    for (size_t j = 0; j < stats.event_counts.size(); ++j) {
        out += fmt::format("{},{},{:.17g}\n", j, stats.event_counts[j], stats.marginals[j]);
    }
    out += "i,j,joint,e_ij\n";
    for (const auto& pc : stats.joint) {
        // both directions: e_ij = P(i|j) and e_ji = P(j|i)
        out += fmt::format("{},{},{},{:.17g}\n", pc.i, pc.j, pc.count,
                           static_cast<double>(pc.count) /
                               static_cast<double>(stats.event_counts[static_cast<size_t>(pc.j)]));
        out += fmt::format("{},{},{},{:.17g}\n", pc.j, pc.i, pc.count,
                           static_cast<double>(pc.count) /
                               static_cast<double>(stats.event_counts[static_cast<size_t>(pc.i)]));
    }
    write_file_atomic(path, out);
}

} // namespace berngraph
