#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace berngraph {

// Row-compressed binary matrix; only 1-entries are stored.
struct SparseBinaryMatrix {
    int64_t n_rows = 0;
    int64_t n_cols = 0;
    std::vector<int64_t> row_offsets; // size n_rows + 1
    std::vector<int32_t> cols;        // column indices, sorted within each row

    // Validates bounds and duplicates; `what` names the matrix in error
    // messages (e.g. "events"), `origin` the source file when loading.
    static SparseBinaryMatrix from_triplets(int64_t rows, int64_t cols,
                                            std::vector<std::pair<int64_t, int32_t>> triplets,
                                            const std::string& what,
                                            const std::string& origin = {});

    std::span<const int32_t> row(int64_t r) const {
        return {cols.data() + row_offsets[r],
                static_cast<size_t>(row_offsets[r + 1] - row_offsets[r])};
    }

    int64_t nnz() const { return static_cast<int64_t>(cols.size()); }
    bool get(int64_t r, int32_t c) const;
    std::vector<int64_t> column_counts(std::span<const int64_t> rows) const;
    std::vector<std::pair<int64_t, int32_t>> to_triplets() const;
};

// Fraction of zero entries: 1 - nnz / (rows * cols).
double sparsity(const SparseBinaryMatrix& m);

struct EventCohort {
    SparseBinaryMatrix events; // N x M
    SparseBinaryMatrix labels; // N x C
    std::vector<std::string> event_names; // size M
    std::vector<std::string> drug_names;  // size C
    std::vector<int64_t> group_ids;       // size N when present, else empty

    int64_t n_patients() const { return events.n_rows; }
    int64_t n_events() const { return events.n_cols; }
    int64_t n_drugs() const { return labels.n_cols; }
    bool has_groups() const { return !group_ids.empty(); }
};

// Manifest is JSON: {n_patients, n_events, n_drugs, event_names, drug_names,
// events_file, labels_file, group_ids?}. Sparse files are `row,col` CSV.
EventCohort load_cohort(const std::filesystem::path& manifest_path);

// Writes manifest plus events/labels CSVs next to it. load(save(x)) == x.
void save_cohort(const EventCohort& cohort, const std::filesystem::path& manifest_path);

struct DatasetSplit {
    std::vector<int64_t> train_rows;
    std::vector<int64_t> val_rows;
    std::vector<int64_t> test_rows;
    uint64_t seed = 0;
};

// Deterministic partition of {0..N-1}. Val/test sizes are floor(N * ratio);
// train absorbs the remainder. With group_ids present, whole groups are
// assigned to one partition (sizes then approximate the ratios).
DatasetSplit make_split(const EventCohort& cohort, std::array<double, 3> ratios, uint64_t seed);

} // namespace berngraph
