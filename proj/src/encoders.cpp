#include "berngraph/encoders.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "berngraph/errors.hpp"
#include "berngraph/rng.hpp"

namespace berngraph {

NodeMode node_mode_from_string(const std::string& tag) {
    if (tag == "bm") return NodeMode::bernoulli;
    if (tag == "llr") return NodeMode::llr;
    if (tag == "te") return NodeMode::target;
    if (tag == "rn") return NodeMode::random;
    throw Error(ErrorCode::invalid,
                fmt::format("unknown node mode '{}' (expected bm|llr|te|rn)", tag));
}

EdgeMode edge_mode_from_string(const std::string& tag) {
    if (tag == "post") return EdgeMode::posterior;
    if (tag == "cooc") return EdgeMode::cooccurrence;
    if (tag == "re") return EdgeMode::random;
    throw Error(ErrorCode::invalid,
                fmt::format("unknown edge mode '{}' (expected post|cooc|re)", tag));
}

std::string to_string(NodeMode m) {
    switch (m) {
    case NodeMode::bernoulli: return "bm";
    case NodeMode::llr: return "llr";
    case NodeMode::target: return "te";
    case NodeMode::random: return "rn";
    }
    return "?";
}

std::string to_string(EdgeMode m) {
    switch (m) {
    case EdgeMode::posterior: return "post";
    case EdgeMode::cooccurrence: return "cooc";
    case EdgeMode::random: return "re";
    }
    return "?";
}

// ---------------------------------------------------------------------------

namespace {

inline double xlnx(double v) { return v > 0.0 ? v * std::log(v) : 0.0; }

// Per-event co-occurrence counts with every drug column: k11[j][y].
std::vector<std::vector<int64_t>> event_drug_counts(const EventCohort& cohort,
                                                    std::span<const int64_t> rows) {
    const size_t m = static_cast<size_t>(cohort.n_events());
    const size_t c = static_cast<size_t>(cohort.n_drugs());
    std::vector<std::vector<int64_t>> k11(m, std::vector<int64_t>(c, 0));
    for (int64_t r : rows) {
        auto ev = cohort.events.row(r);
        auto dr = cohort.labels.row(r);
        for (int32_t e : ev) {
            auto& row_counts = k11[static_cast<size_t>(e)];
            for (int32_t y : dr) row_counts[static_cast<size_t>(y)]++;
        }
    }
    return k11;
}

} // namespace

double llr_2x2(double k11, double k12, double k21, double k22) {
    const double t = k11 + k12 + k21 + k22;
    if (t <= 0.0) {
        throw Error(ErrorCode::invalid, "llr_2x2: table total must be positive");
    }
    const double cells = xlnx(k11) + xlnx(k12) + xlnx(k21) + xlnx(k22);
    const double rows = xlnx(k11 + k12) + xlnx(k21 + k22);
    const double cols = xlnx(k11 + k21) + xlnx(k12 + k22);
    const double llr = 2.0 * (cells - rows - cols + xlnx(t));
    return std::max(0.0, llr); // mutual information is nonnegative; clamp rounding jitter
}

std::vector<double> llr_event_scores(const EventCohort& cohort, std::span<const int64_t> rows) {
    if (rows.empty()) throw Error(ErrorCode::invalid, "llr scores need at least one row");
    const auto k11 = event_drug_counts(cohort, rows);
    const auto event_counts = cohort.events.column_counts(rows);
    const auto drug_counts = cohort.labels.column_counts(rows);
    const auto n = static_cast<double>(rows.size());
    const size_t m = static_cast<size_t>(cohort.n_events());
    const size_t c = static_cast<size_t>(cohort.n_drugs());

    std::vector<double> scores(m, 0.0);
    for (size_t j = 0; j < m; ++j) {
        double sum = 0.0;
        for (size_t y = 0; y < c; ++y) {
            const double a = static_cast<double>(k11[j][y]);
            const double ec = static_cast<double>(event_counts[j]);
            const double dc = static_cast<double>(drug_counts[y]);
            sum += llr_2x2(a, ec - a, dc - a, n - ec - dc + a);
        }
        scores[j] = sum / static_cast<double>(c);
    }
    return scores;
}

void minmax_rescale(std::vector<double>& v) {
    if (v.empty()) return;
    auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    const double lo = *lo_it, hi = *hi_it;
    if (hi == lo) {
        std::fill(v.begin(), v.end(), 0.0);
        return;
    }
    for (double& x : v) x = (x - lo) / (hi - lo);
}

TargetEncoding target_encode(const EventCohort& cohort, std::span<const int64_t> rows) {
    if (rows.empty()) throw Error(ErrorCode::invalid, "target encoding needs at least one row");
    const auto k11 = event_drug_counts(cohort, rows);
    const auto event_counts = cohort.events.column_counts(rows);
    const auto drug_counts = cohort.labels.column_counts(rows);
    const auto n = static_cast<int64_t>(rows.size());
    const size_t m = static_cast<size_t>(cohort.n_events());
    const size_t c = static_cast<size_t>(cohort.n_drugs());

    int64_t total_drug = 0;
    for (int64_t dc : drug_counts) total_drug += dc;
    const double global_mean =
        static_cast<double>(total_drug) / (static_cast<double>(n) * static_cast<double>(c));

    TargetEncoding te;
    te.value_if_one.resize(m);
    te.value_if_zero.resize(m);
    for (size_t j = 0; j < m; ++j) {
        const int64_t n1 = event_counts[j];
        const int64_t n0 = n - n1;
        if (n1 > 0) {
            double sum = 0.0;
            for (size_t y = 0; y < c; ++y) {
                sum += static_cast<double>(k11[j][y]) / static_cast<double>(n1);
            }
            te.value_if_one[j] = sum / static_cast<double>(c);
        } else {
            te.value_if_one[j] = global_mean; // empty category fallback
        }
        if (n0 > 0) {
            double sum = 0.0;
            for (size_t y = 0; y < c; ++y) {
                sum += static_cast<double>(drug_counts[y] - k11[j][y]) / static_cast<double>(n0);
            }
            te.value_if_zero[j] = sum / static_cast<double>(c);
        } else {
            te.value_if_zero[j] = global_mean;
        }
    }
    return te;
}

NodeEncoding NodeEncoding::prepare(NodeMode mode, const BernoulliStats& stats,
                                   const EventCohort& cohort,
                                   std::span<const int64_t> train_rows, uint64_t seed) {
    NodeEncoding enc;
    enc.mode = mode;
    enc.seed = seed;
    const size_t m = stats.marginals.size();
    switch (mode) {
    case NodeMode::bernoulli:
        enc.value_if_one = stats.marginals;
        enc.value_if_zero.resize(m);
        for (size_t j = 0; j < m; ++j) enc.value_if_zero[j] = 1.0 - stats.marginals[j];
        break;
    case NodeMode::llr: {
        auto scores = llr_event_scores(cohort, train_rows);
        minmax_rescale(scores);
        enc.value_if_one = scores;
        enc.value_if_zero.resize(m);
        for (size_t j = 0; j < m; ++j) enc.value_if_zero[j] = 1.0 - scores[j];
        break;
    }
    case NodeMode::target: {
        auto te = target_encode(cohort, train_rows);
        enc.value_if_one = std::move(te.value_if_one);
        enc.value_if_zero = std::move(te.value_if_zero);
        break;
    }
    case NodeMode::random:
        break; // draws are keyed per (row, event); no tables
    }
    return enc;
}

namespace {

std::vector<double> random_node_values(int64_t row, int64_t m, uint64_t seed) {
    std::vector<double> v(static_cast<size_t>(m));
    for (int64_t j = 0; j < m; ++j) {
        v[static_cast<size_t>(j)] =
            keyed_uniform(seed, static_cast<uint64_t>(row), static_cast<uint64_t>(j), 0x4e0d);
    }
    return v;
}

} // namespace

std::vector<double> node_values(const SparseBinaryMatrix& events, int64_t row,
                                const NodeEncoding& enc) {
    if (enc.mode == NodeMode::random) return random_node_values(row, events.n_cols, enc.seed);
    if (static_cast<size_t>(events.n_cols) != enc.value_if_one.size()) {
        throw Error(ErrorCode::invalid,
                    fmt::format("encoding prepared for {} events, matrix has {}",
                                enc.value_if_one.size(), events.n_cols));
    }
    std::vector<double> v = enc.value_if_zero;
    for (int32_t j : events.row(row)) v[static_cast<size_t>(j)] = enc.value_if_one[j];
    return v;
}

std::vector<double> node_values(std::span<const uint8_t> x_row, int64_t row,
                                const NodeEncoding& enc) {
    if (enc.mode == NodeMode::random)
        return random_node_values(row, static_cast<int64_t>(x_row.size()), enc.seed);
    if (x_row.size() != enc.value_if_one.size()) {
        throw Error(ErrorCode::invalid,
                    fmt::format("encoding prepared for {} events, row has {}",
                                enc.value_if_one.size(), x_row.size()));
    }
    std::vector<double> v(x_row.size());
    for (size_t j = 0; j < x_row.size(); ++j) {
        v[j] = x_row[j] ? enc.value_if_one[j] : enc.value_if_zero[j];
    }
    return v;
}

} // namespace berngraph
