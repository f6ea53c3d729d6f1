#include "berngraph/cohort.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <unordered_map>

#include <fmt/format.h>

#include "berngraph/errors.hpp"
#include "berngraph/io_util.hpp"
#include "berngraph/rng.hpp"

namespace berngraph {

using nlohmann::json;

SparseBinaryMatrix SparseBinaryMatrix::from_triplets(
    int64_t rows, int64_t cols, std::vector<std::pair<int64_t, int32_t>> triplets,
    const std::string& what, const std::string& origin) {
    if (rows < 0 || cols < 0) {
        throw Error(ErrorCode::invalid,
                    fmt::format("{}: negative dimensions {}x{}", what, rows, cols));
    }
    const std::string where = origin.empty() ? what : fmt::format("{} ({})", what, origin);
    for (const auto& [r, c] : triplets) {
        if (r < 0 || r >= rows || c < 0 || c >= cols) {
            throw Error(ErrorCode::parse,
                        fmt::format("{}: coordinate ({}, {}) out of range for {}x{}",
                                    where, r, c, rows, cols));
        }
    }
    std::sort(triplets.begin(), triplets.end());
    for (size_t k = 1; k < triplets.size(); ++k) {
        if (triplets[k] == triplets[k - 1]) {
            throw Error(ErrorCode::parse,
                        fmt::format("{}: duplicate coordinate ({}, {})", where,
                                    triplets[k].first, triplets[k].second));
        }
    }
    SparseBinaryMatrix m;
    m.n_rows = rows;
    m.n_cols = cols;
    m.row_offsets.assign(static_cast<size_t>(rows) + 1, 0);
    m.cols.reserve(triplets.size());
    for (const auto& [r, c] : triplets) m.row_offsets[static_cast<size_t>(r) + 1]++;
    for (int64_t r = 0; r < rows; ++r) m.row_offsets[r + 1] += m.row_offsets[r];
    for (const auto& [r, c] : triplets) m.cols.push_back(c);
    return m;
}

bool SparseBinaryMatrix::get(int64_t r, int32_t c) const {
    auto span = row(r);
    return std::binary_search(span.begin(), span.end(), c);
}

std::vector<int64_t> SparseBinaryMatrix::column_counts(std::span<const int64_t> rows) const {
    std::vector<int64_t> counts(static_cast<size_t>(n_cols), 0);
    for (int64_t r : rows) {
        for (int32_t c : row(r)) counts[static_cast<size_t>(c)]++;
    }
    return counts;
}

std::vector<std::pair<int64_t, int32_t>> SparseBinaryMatrix::to_triplets() const {
    std::vector<std::pair<int64_t, int32_t>> out;
    out.reserve(cols.size());
    for (int64_t r = 0; r < n_rows; ++r) {
        for (int32_t c : row(r)) out.emplace_back(r, c);
    }
    return out;
}

double sparsity(const SparseBinaryMatrix& m) {
    if (m.n_rows <= 0 || m.n_cols <= 0) {
        throw Error(ErrorCode::invalid, "sparsity: empty matrix dimensions");
    }
    const double total = static_cast<double>(m.n_rows) * static_cast<double>(m.n_cols);
    return 1.0 - static_cast<double>(m.nnz()) / total;
}

// ---------------------------------------------------------------------------
// manifest + CSV IO

namespace {

int64_t parse_int_field(std::string_view field, const std::string& file, int64_t line_no) {
    int64_t value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw Error(ErrorCode::parse,
                    fmt::format("{}:{}: expected integer, got '{}'", file, line_no, field));
    }
    return value;
}

// `row,col` CSV, optional third column that must be exactly 1.
std::vector<std::pair<int64_t, int32_t>> read_triplet_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, fmt::format("cannot open '{}'", path.string()));
    const std::string file = path.string();
    std::string line;
    int64_t line_no = 0;
    std::vector<std::pair<int64_t, int32_t>> trips;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != "row,col" && line != "row,col,value") {
                throw Error(ErrorCode::parse,
                            fmt::format("{}:1: expected header 'row,col', got '{}'", file, line));
            }
            continue;
        }
        std::string_view view(line);
        size_t c1 = view.find(',');
        if (c1 == std::string_view::npos) {
            throw Error(ErrorCode::parse, fmt::format("{}:{}: expected 'row,col'", file, line_no));
        }
        size_t c2 = view.find(',', c1 + 1);
        int64_t r = parse_int_field(view.substr(0, c1), file, line_no);
        int64_t c;
        if (c2 == std::string_view::npos) {
            c = parse_int_field(view.substr(c1 + 1), file, line_no);
        } else {
            c = parse_int_field(view.substr(c1 + 1, c2 - c1 - 1), file, line_no);
            int64_t v = parse_int_field(view.substr(c2 + 1), file, line_no);
            if (v != 1) {
                throw Error(ErrorCode::parse,
                            fmt::format("{}:{}: stored value at ({}, {}) must be 1, got {}",
                                        file, line_no, r, c, v));
            }
        }
        if (c < 0 || c > INT32_MAX) {
            throw Error(ErrorCode::parse,
                        fmt::format("{}:{}: column index {} out of range", file, line_no, c));
        }
        trips.emplace_back(r, static_cast<int32_t>(c));
    }
    return trips;
}

std::vector<std::string> parse_names(const json& j, const char* key, int64_t expected,
                                     const std::string& file) {
    if (!j.contains(key) || !j[key].is_array()) {
        throw Error(ErrorCode::parse, fmt::format("{}: missing or non-array '{}'", file, key));
    }
    std::vector<std::string> names;
    for (const auto& v : j[key]) names.push_back(v.get<std::string>());
    if (static_cast<int64_t>(names.size()) != expected) {
        throw Error(ErrorCode::parse,
                    fmt::format("{}: '{}' has {} entries, expected {}", file, key, names.size(),
                                expected));
    }
    return names;
}

} // namespace

EventCohort load_cohort(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) {
        throw Error(ErrorCode::io, fmt::format("cannot open manifest '{}'", manifest_path.string()));
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::parse,
                    fmt::format("{}: invalid JSON: {}", manifest_path.string(), e.what()));
    }
    const std::string file = manifest_path.string();
    for (const char* key : {"n_patients", "n_events", "n_drugs", "events_file", "labels_file"}) {
        if (!j.contains(key)) {
            throw Error(ErrorCode::parse, fmt::format("{}: missing field '{}'", file, key));
        }
    }
    const int64_t n = j["n_patients"].get<int64_t>();
    const int64_t m = j["n_events"].get<int64_t>();
    const int64_t c = j["n_drugs"].get<int64_t>();
    if (n < 0 || m < 0 || c < 0) {
        throw Error(ErrorCode::parse, fmt::format("{}: negative dimension", file));
    }

    EventCohort cohort;
    cohort.event_names = parse_names(j, "event_names", m, file);
    cohort.drug_names = parse_names(j, "drug_names", c, file);

    const auto dir = manifest_path.parent_path();
    const auto events_path = dir / j["events_file"].get<std::string>();
    const auto labels_path = dir / j["labels_file"].get<std::string>();
    cohort.events = SparseBinaryMatrix::from_triplets(n, m, read_triplet_csv(events_path),
                                                      "events", events_path.string());
    cohort.labels = SparseBinaryMatrix::from_triplets(n, c, read_triplet_csv(labels_path),
                                                      "labels", labels_path.string());

    if (j.contains("group_ids") && !j["group_ids"].is_null()) {
        if (!j["group_ids"].is_array() || static_cast<int64_t>(j["group_ids"].size()) != n) {
            throw Error(ErrorCode::parse,
                        fmt::format("{}: 'group_ids' must be an array of {} integers", file, n));
        }
        for (const auto& g : j["group_ids"]) cohort.group_ids.push_back(g.get<int64_t>());
    }
    return cohort;
}

namespace {

std::string triplet_csv_text(const SparseBinaryMatrix& m) {
    std::string out = "row,col\n";
    for (int64_t r = 0; r < m.n_rows; ++r) {
        for (int32_t c : m.row(r)) out += fmt::format("{},{}\n", r, c);
    }
    return out;
}

} // namespace

void save_cohort(const EventCohort& cohort, const std::filesystem::path& manifest_path) {
    const auto dir = manifest_path.parent_path();
    const auto stem = manifest_path.stem().string();
    const std::string events_file = stem + "_events.csv";
    const std::string labels_file = stem + "_labels.csv";

    json j;
    j["n_patients"] = cohort.n_patients();
    j["n_events"] = cohort.n_events();
    j["n_drugs"] = cohort.n_drugs();
    j["event_names"] = cohort.event_names;
    j["drug_names"] = cohort.drug_names;
    j["events_file"] = events_file;
    j["labels_file"] = labels_file;
    if (cohort.has_groups()) j["group_ids"] = cohort.group_ids;

    write_file_atomic(dir / events_file, triplet_csv_text(cohort.events));
    write_file_atomic(dir / labels_file, triplet_csv_text(cohort.labels));
    write_file_atomic(manifest_path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// splitting

namespace {

struct SplitSizes {
    int64_t train, val, test;
};

// Val and test take floor(N * ratio); train absorbs the remainder.
SplitSizes split_sizes(int64_t n, std::array<double, 3> ratios) {
    for (double r : ratios) {
        if (!(r > 0.0)) throw Error(ErrorCode::invalid, "split ratios must be positive");
    }
    if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) {
        throw Error(ErrorCode::invalid,
                    fmt::format("split ratios must sum to 1, got {}",
                                ratios[0] + ratios[1] + ratios[2]));
    }
    SplitSizes s{};
    s.val = static_cast<int64_t>(std::floor(static_cast<double>(n) * ratios[1]));
    s.test = static_cast<int64_t>(std::floor(static_cast<double>(n) * ratios[2]));
    s.train = n - s.val - s.test;
    if (s.train <= 0 || s.val <= 0 || s.test <= 0) {
        throw Error(ErrorCode::invalid,
                    fmt::format("{} rows are too few to populate all three partitions", n));
    }
    return s;
}

} // namespace

DatasetSplit make_split(const EventCohort& cohort, std::array<double, 3> ratios, uint64_t seed) {
    const int64_t n = cohort.n_patients();
    const SplitSizes sizes = split_sizes(n, ratios);
    DatasetSplit out;
    out.seed = seed;
    Rng rng(mix_key(seed, 0x5917ull));

    if (!cohort.has_groups()) {
        std::vector<int64_t> perm(static_cast<size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        out.train_rows.assign(perm.begin(), perm.begin() + sizes.train);
        out.val_rows.assign(perm.begin() + sizes.train, perm.begin() + sizes.train + sizes.val);
        out.test_rows.assign(perm.begin() + sizes.train + sizes.val, perm.end());
    } else {
        // Whole groups go to one partition: greedily fill the partition with
        // the largest remaining deficit (ties: train, then val, then test).
        std::vector<std::pair<int64_t, std::vector<int64_t>>> groups;
        {
            std::unordered_map<int64_t, size_t> pos; // group id -> slot, first-appearance order
            for (int64_t r = 0; r < n; ++r) {
                int64_t g = cohort.group_ids[static_cast<size_t>(r)];
                auto it = pos.find(g);
                if (it == pos.end()) {
                    pos.emplace(g, groups.size());
                    groups.push_back({g, {r}});
                } else {
                    groups[it->second].second.push_back(r);
                }
            }
        }
        rng.shuffle(groups);
        std::array<int64_t, 3> deficit{sizes.train, sizes.val, sizes.test};
        std::array<std::vector<int64_t>*, 3> parts{&out.train_rows, &out.val_rows, &out.test_rows};
        for (auto& [gid, rows] : groups) {
            size_t best = 0;
            for (size_t p = 1; p < 3; ++p) {
                if (deficit[p] > deficit[best]) best = p;
            }
            for (int64_t r : rows) parts[best]->push_back(r);
            deficit[best] -= static_cast<int64_t>(rows.size());
        }
        if (out.train_rows.empty() || out.val_rows.empty() || out.test_rows.empty()) {
            throw Error(ErrorCode::invalid,
                        "too few groups to populate all three partitions");
        }
    }
    std::sort(out.train_rows.begin(), out.train_rows.end());
    std::sort(out.val_rows.begin(), out.val_rows.end());
    std::sort(out.test_rows.begin(), out.test_rows.end());
    return out;
}

} // namespace berngraph
