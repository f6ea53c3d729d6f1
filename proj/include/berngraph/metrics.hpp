#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace berngraph {

struct Prediction {
    Eigen::VectorXd probs;          // o, length C
    std::vector<uint8_t> decisions; // r, r_y = 1 iff o_y > 0.5
};

Prediction make_prediction(Eigen::VectorXd probs);

struct MetricStat {
    double mean = 0.0;
    double stddev = 0.0; // 0 for single-shot reports
};

struct MetricsReport {
    MetricStat jaccard;
    MetricStat f1;
    MetricStat prauc;
    MetricStat auroc;
    MetricStat avg_drug;
    int64_t skipped_prauc = 0; // rows with empty true set
    int64_t skipped_auroc = 0; // rows with constant true labels
    int64_t rounds = 1;
};

// Step-wise average precision of scores against relevance; requires at
// least one relevant item. Ties broken by ascending index.
double average_precision(std::span<const double> scores, std::span<const uint8_t> relevant);

// Mann-Whitney statistic with midrank tie correction; requires both classes.
double auroc_midrank(std::span<const double> scores, std::span<const uint8_t> relevant);

struct RowMetrics {
    double jaccard = 0.0; // 1 when both sets empty
    double f1 = 0.0;      // 1 when both sets empty
    double n_predicted = 0.0;
    std::optional<double> prauc; // absent when true set empty
    std::optional<double> auroc; // absent when true labels constant
};

RowMetrics row_metrics(const Prediction& pred, std::span<const uint8_t> labels);

// Example-based aggregation: per-row metrics averaged over rows.
MetricsReport metrics(const std::vector<Prediction>& preds,
                      const std::vector<std::vector<uint8_t>>& labels);

// Two-stage averaging: rows averaged within each group, then across groups.
MetricsReport group_eval(const std::vector<Prediction>& preds,
                         const std::vector<std::vector<uint8_t>>& labels,
                         std::span<const int64_t> group_ids);

struct BootstrapRound {
    double jaccard = 0, f1 = 0, prauc = 0, auroc = 0, avg_drug = 0;
};

// Each round samples floor(frac * n) rows without replacement; reports the
// across-round mean and population standard deviation per metric.
// rounds_out, when given, receives the per-round values.
MetricsReport bootstrap_eval(const std::vector<Prediction>& preds,
                             const std::vector<std::vector<uint8_t>>& labels,
                             int rounds, double frac, uint64_t seed,
                             std::vector<BootstrapRound>* rounds_out = nullptr);

} // namespace berngraph
