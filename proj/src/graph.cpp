#include "berngraph/graph.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "berngraph/errors.hpp"
#include "berngraph/rng.hpp"

namespace berngraph {

EdgeSet EdgeSet::build(const BernoulliStats& stats, EdgeMode mode, uint64_t seed,
                       int64_t min_joint) {
    if (min_joint < 1) throw Error(ErrorCode::invalid, "min_joint must be >= 1");
    EdgeSet es;
    es.n_nodes = static_cast<int32_t>(stats.marginals.size());

    auto weight_for = [&](int32_t src, int32_t dst, int64_t count) {
        switch (mode) {
        case EdgeMode::posterior:
            // e_{dst,src} = P(dst | src) = joint / count(src)
            return static_cast<double>(count) /
                   static_cast<double>(stats.event_counts[static_cast<size_t>(src)]);
        case EdgeMode::cooccurrence:
            return static_cast<double>(count) / static_cast<double>(stats.n_rows);
        case EdgeMode::random:
            return keyed_uniform(seed, static_cast<uint64_t>(src), static_cast<uint64_t>(dst),
                                 0xed6e);
        }
        return 0.0;
    };

    for (const auto& pc : stats.joint) {
        if (pc.count < min_joint) continue;
        es.src.push_back(pc.j);
        es.dst.push_back(pc.i);
        es.weight.push_back(weight_for(pc.j, pc.i, pc.count));
        es.src.push_back(pc.i);
        es.dst.push_back(pc.j);
        es.weight.push_back(weight_for(pc.i, pc.j, pc.count));
    }

    // canonical order: by destination, then source; CSR over destinations
    std::vector<int64_t> order(es.src.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
        return std::tie(es.dst[a], es.src[a]) < std::tie(es.dst[b], es.src[b]);
    });
    EdgeSet sorted;
    sorted.n_nodes = es.n_nodes;
    sorted.src.reserve(es.src.size());
    sorted.dst.reserve(es.dst.size());
    sorted.weight.reserve(es.weight.size());
    for (int64_t idx : order) {
        sorted.src.push_back(es.src[idx]);
        sorted.dst.push_back(es.dst[idx]);
        sorted.weight.push_back(es.weight[idx]);
    }
    sorted.in_offsets.assign(static_cast<size_t>(sorted.n_nodes) + 1, 0);
    for (int32_t d : sorted.dst) sorted.in_offsets[static_cast<size_t>(d) + 1]++;
    for (int32_t v = 0; v < sorted.n_nodes; ++v) {
        sorted.in_offsets[v + 1] += sorted.in_offsets[v];
    }
    return sorted;
}

std::vector<int32_t> EdgeSet::isolated_nodes() const {
    std::vector<int32_t> out;
    for (int32_t v = 0; v < n_nodes; ++v) {
        if (in_degree(v) == 0) out.push_back(v);
    }
    return out;
}

PatientGraph build_graph(const EventCohort& cohort, int64_t row, const NodeEncoding& enc,
                         std::shared_ptr<const EdgeSet> edges) {
    if (row < 0 || row >= cohort.n_patients()) {
        throw Error(ErrorCode::invalid,
                    fmt::format("row {} out of range [0, {})", row, cohort.n_patients()));
    }
    if (edges && edges->n_nodes != cohort.n_events()) {
        throw Error(ErrorCode::invalid,
                    fmt::format("edge set built for {} events, cohort has {}", edges->n_nodes,
                                cohort.n_events()));
    }
    PatientGraph g;
    g.node_values = node_values(cohort.events, row, enc);
    g.edges = std::move(edges);
    g.labels.assign(static_cast<size_t>(cohort.n_drugs()), 0);
    for (int32_t c : cohort.labels.row(row)) g.labels[static_cast<size_t>(c)] = 1;
    g.row_id = row;
    g.group_id = cohort.has_groups() ? cohort.group_ids[static_cast<size_t>(row)] : -1;
    return g;
}

std::vector<PatientGraph> build_graphs(const EventCohort& cohort, std::span<const int64_t> rows,
                                       const NodeEncoding& enc,
                                       std::shared_ptr<const EdgeSet> edges) {
    std::vector<PatientGraph> out;
    out.reserve(rows.size());
    for (int64_t r : rows) out.push_back(build_graph(cohort, r, enc, edges));
    return out;
}

} // namespace berngraph
