#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "berngraph/bern_stats.hpp"
#include "berngraph/encoders.hpp"

namespace berngraph {

// Directed weighted edge set shared by every patient graph built from the
// same statistics and encoding. Edges exist in both directions for every
// pair with joint count >= min_joint; no self loops. Sorted by (dst, src)
// with a CSR index over destinations for in-neighbor iteration.
struct EdgeSet {
    int32_t n_nodes = 0;
    std::vector<int32_t> src;
    std::vector<int32_t> dst;
    std::vector<double> weight;
    std::vector<int64_t> in_offsets; // size n_nodes + 1

    int64_t size() const { return static_cast<int64_t>(src.size()); }
    int64_t in_degree(int32_t node) const { return in_offsets[node + 1] - in_offsets[node]; }

    // posterior: weight(j->i) = P(i|j); cooccurrence: joint / n_rows (both
    // directions equal); random: per directed edge, keyed (seed, src, dst).
    static EdgeSet build(const BernoulliStats& stats, EdgeMode mode, uint64_t seed,
                         int64_t min_joint = 1);

    // Events with no incident edge (in-degree 0 implies out-degree 0 here
    // since both directions of a pair are always present).
    std::vector<int32_t> isolated_nodes() const;
};

struct PatientGraph {
    std::vector<double> node_values;          // length M
    std::shared_ptr<const EdgeSet> edges;     // shared, never copied per patient
    std::vector<uint8_t> labels;              // length C
    int64_t row_id = -1;
    int64_t group_id = -1;
};

PatientGraph build_graph(const EventCohort& cohort, int64_t row,
                         const NodeEncoding& enc,
                         std::shared_ptr<const EdgeSet> edges);

std::vector<PatientGraph> build_graphs(const EventCohort& cohort,
                                       std::span<const int64_t> rows,
                                       const NodeEncoding& enc,
                                       std::shared_ptr<const EdgeSet> edges);

} // namespace berngraph
