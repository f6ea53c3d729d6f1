#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "berngraph/bern_stats.hpp"
#include "berngraph/cohort.hpp"

namespace berngraph {

enum class NodeMode { bernoulli, llr, target, random };
enum class EdgeMode { posterior, cooccurrence, random };

NodeMode node_mode_from_string(const std::string& tag);  // bm | llr | te | rn
EdgeMode edge_mode_from_string(const std::string& tag);  // post | cooc | re
std::string to_string(NodeMode m);
std::string to_string(EdgeMode m);

// Per-event node value tables, prepared once from training data.
// bernoulli: (rho, 1-rho); llr: (s, 1-s) with s the rescaled event score;
// target: per-category target means. random draws per (row, event) instead.
struct NodeEncoding {
    NodeMode mode = NodeMode::bernoulli;
    uint64_t seed = 0;
    std::vector<double> value_if_one;
    std::vector<double> value_if_zero;

    static NodeEncoding prepare(NodeMode mode,
                                const BernoulliStats& stats,
                                const EventCohort& cohort,
                                std::span<const int64_t> train_rows,
                                uint64_t seed);
};

// Node scalars for one patient row.
std::vector<double> node_values(const SparseBinaryMatrix& events, int64_t row,
                                const NodeEncoding& enc);
std::vector<double> node_values(std::span<const uint8_t> x_row, int64_t row,
                                const NodeEncoding& enc);

// Dunning statistic for one 2x2 contingency table: 2 * T * MI(table).
// Natural log; zero cells contribute 0. Nonnegative, 0 under independence.
double llr_2x2(double k11, double k12, double k21, double k22);

// Mean LLR against the C drug columns, per event, over the given rows.
// Raw scores; callers rescale.
std::vector<double> llr_event_scores(const EventCohort& cohort, std::span<const int64_t> rows);

// In-place min-max rescale to [0, 1]; an all-equal vector becomes all zeros.
void minmax_rescale(std::vector<double>& v);

// Mean drug-label value among rows with event == 1 (first) and == 0 (second).
// An empty category falls back to the global drug-label mean.
struct TargetEncoding {
    std::vector<double> value_if_one;
    std::vector<double> value_if_zero;
};
TargetEncoding target_encode(const EventCohort& cohort, std::span<const int64_t> rows);

} // namespace berngraph
