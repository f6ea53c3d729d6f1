#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "berngraph/cohort.hpp"

namespace berngraph {

// Unordered co-occurrence pair, i < j.
struct PairCount {
    int32_t i = 0;
    int32_t j = 0;
    int64_t count = 0;
};

// Empirical Bernoulli statistics over a row subset (normally the training
// split). Immutable once built; safe to share across threads.
struct BernoulliStats {
    int64_t n_rows = 0;
    std::vector<int64_t> event_counts; // M, sum of column over rows
    std::vector<double> marginals;     // M, event_counts / n_rows
    std::vector<PairCount> joint;      // pairs with count >= 1, sorted by (i, j)

    double marginal(int32_t j) const { return marginals[static_cast<size_t>(j)]; }

    // 0 when the pair never co-occurs. Symmetric.
    int64_t joint_count(int32_t a, int32_t b) const;

    // P(E_i = 1 | E_j = 1) = joint(i, j) / event_counts[j].
    // Only meaningful for stored pairs (joint >= 1 implies event_counts[j] >= 1).
    double conditional(int32_t i, int32_t j) const;

    // Co-occurrence counting iterates each row's nonzero set and increments
    // the pairs inside it: cost sum_rows nnz(row)^2 instead of dense M^2.
    // With threads > 1 rows are sharded and per-shard tables merged by
    // integer summation, so the result is independent of the sharding.
    static BernoulliStats estimate(const SparseBinaryMatrix& events,
                                   std::span<const int64_t> rows,
                                   int threads = 1);
};

// Statistics file: one JSON header line, then `event,count,rho` rows, then
// `i,j,joint,e_ij` rows (both directions of every stored pair).
void save_stats(const BernoulliStats& stats, const std::filesystem::path& path);

} // namespace berngraph
