#include "berngraph/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "berngraph/errors.hpp"
#include "berngraph/rng.hpp"

namespace berngraph {

Prediction make_prediction(Eigen::VectorXd probs) {
    Prediction p;
    p.decisions.resize(static_cast<size_t>(probs.size()));
    for (Eigen::Index y = 0; y < probs.size(); ++y) {
        p.decisions[static_cast<size_t>(y)] = probs(y) > 0.5 ? 1 : 0;
    }
    p.probs = std::move(probs);
    return p;
}

double average_precision(std::span<const double> scores, std::span<const uint8_t> relevant) {
    if (scores.size() != relevant.size()) {
        throw Error(ErrorCode::invalid, "average_precision: length mismatch");
    }
    int64_t n_rel = 0;
    for (uint8_t r : relevant) n_rel += r ? 1 : 0;
    if (n_rel == 0) {
        throw Error(ErrorCode::invalid, "average_precision: no relevant items");
    }
    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    double hits = 0.0, sum = 0.0;
    for (size_t k = 0; k < order.size(); ++k) {
        if (relevant[order[k]]) {
            hits += 1.0;
            sum += hits / static_cast<double>(k + 1);
        }
    }
    return sum / static_cast<double>(n_rel);
}

double auroc_midrank(std::span<const double> scores, std::span<const uint8_t> relevant) {
    if (scores.size() != relevant.size()) {
        throw Error(ErrorCode::invalid, "auroc: length mismatch");
    }
    int64_t n_pos = 0;
    for (uint8_t r : relevant) n_pos += r ? 1 : 0;
    const int64_t n_neg = static_cast<int64_t>(scores.size()) - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw Error(ErrorCode::invalid, "auroc: needs both classes");
    }
    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });
    double rank_sum_pos = 0.0;
    size_t k = 0;
    while (k < order.size()) {
        size_t tie_end = k + 1;
        while (tie_end < order.size() && scores[order[tie_end]] == scores[order[k]]) ++tie_end;
        const double midrank = 0.5 * static_cast<double>(k + 1 + tie_end); // 1-based
        for (size_t t = k; t < tie_end; ++t) {
            if (relevant[order[t]]) rank_sum_pos += midrank;
        }
        k = tie_end;
    }
    const double p = static_cast<double>(n_pos);
    return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * static_cast<double>(n_neg));
}

RowMetrics row_metrics(const Prediction& pred, std::span<const uint8_t> labels) {
    if (pred.decisions.size() != labels.size()) {
        throw Error(ErrorCode::invalid,
                    fmt::format("row_metrics: {} predictions vs {} labels",
                                pred.decisions.size(), labels.size()));
    }
    int64_t inter = 0, n_pred = 0, n_true = 0;
    for (size_t y = 0; y < labels.size(); ++y) {
        const bool r = pred.decisions[y] != 0;
        const bool t = labels[y] != 0;
        inter += (r && t) ? 1 : 0;
        n_pred += r ? 1 : 0;
        n_true += t ? 1 : 0;
    }
    const int64_t uni = n_pred + n_true - inter;

    RowMetrics rm;
    rm.n_predicted = static_cast<double>(n_pred);
    rm.jaccard = (uni == 0) ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    rm.f1 = (n_pred + n_true == 0)
                ? 1.0
                : 2.0 * static_cast<double>(inter) / static_cast<double>(n_pred + n_true);
    std::span<const double> scores(pred.probs.data(), static_cast<size_t>(pred.probs.size()));
    if (n_true > 0) rm.prauc = average_precision(scores, labels);
    if (n_true > 0 && n_true < static_cast<int64_t>(labels.size())) {
        rm.auroc = auroc_midrank(scores, labels);
    }
    return rm;
}

namespace {

struct Welford {
    int64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        n += 1;
        const double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
    }
    double stddev() const { return n > 0 ? std::sqrt(m2 / static_cast<double>(n)) : 0.0; }
};

MetricsReport aggregate_rows(const std::vector<RowMetrics>& rows) {
    MetricsReport rep;
    double j = 0, f = 0, nd = 0, pr = 0, au = 0;
    int64_t n_pr = 0, n_au = 0;
    for (const auto& r : rows) {
        j += r.jaccard;
        f += r.f1;
        nd += r.n_predicted;
        if (r.prauc) { pr += *r.prauc; n_pr++; } else { rep.skipped_prauc++; }
        if (r.auroc) { au += *r.auroc; n_au++; } else { rep.skipped_auroc++; }
    }
    const double n = static_cast<double>(rows.size());
    rep.jaccard.mean = j / n;
    rep.f1.mean = f / n;
    rep.avg_drug.mean = nd / n;
    rep.prauc.mean = n_pr > 0 ? pr / static_cast<double>(n_pr) : 0.0;
    rep.auroc.mean = n_au > 0 ? au / static_cast<double>(n_au) : 0.0;
    return rep;
}

std::vector<RowMetrics> all_row_metrics(const std::vector<Prediction>& preds,
                                        const std::vector<std::vector<uint8_t>>& labels) {
    if (preds.size() != labels.size()) {
        throw Error(ErrorCode::invalid,
                    fmt::format("metrics: {} predictions vs {} label rows", preds.size(),
                                labels.size()));
    }
    if (preds.empty()) throw Error(ErrorCode::invalid, "metrics: empty prediction list");
    std::vector<RowMetrics> rows;
    rows.reserve(preds.size());
    for (size_t i = 0; i < preds.size(); ++i) rows.push_back(row_metrics(preds[i], labels[i]));
    return rows;
}

} // namespace

MetricsReport metrics(const std::vector<Prediction>& preds,
                      const std::vector<std::vector<uint8_t>>& labels) {
    return aggregate_rows(all_row_metrics(preds, labels));
}

MetricsReport group_eval(const std::vector<Prediction>& preds,
                         const std::vector<std::vector<uint8_t>>& labels,
                         std::span<const int64_t> group_ids) {
    if (group_ids.size() != preds.size()) {
        throw Error(ErrorCode::invalid, "group_eval: group ids missing or wrong length");
    }
    const auto rows = all_row_metrics(preds, labels);

    struct GroupAcc {
        double j = 0, f = 0, nd = 0, pr = 0, au = 0;
        int64_t n = 0, n_pr = 0, n_au = 0;
    };
    std::map<int64_t, GroupAcc> groups;
    MetricsReport rep;
    for (size_t i = 0; i < rows.size(); ++i) {
        auto& g = groups[group_ids[i]];
        g.n++;
        g.j += rows[i].jaccard;
        g.f += rows[i].f1;
        g.nd += rows[i].n_predicted;
        if (rows[i].prauc) { g.pr += *rows[i].prauc; g.n_pr++; } else { rep.skipped_prauc++; }
        if (rows[i].auroc) { g.au += *rows[i].auroc; g.n_au++; } else { rep.skipped_auroc++; }
    }
    double j = 0, f = 0, nd = 0, pr = 0, au = 0;
    int64_t n_pr_groups = 0, n_au_groups = 0;
    for (const auto& [gid, g] : groups) {
        const double n = static_cast<double>(g.n);
        j += g.j / n;
        f += g.f / n;
        nd += g.nd / n;
        if (g.n_pr > 0) { pr += g.pr / static_cast<double>(g.n_pr); n_pr_groups++; }
        if (g.n_au > 0) { au += g.au / static_cast<double>(g.n_au); n_au_groups++; }
    }
    const double ng = static_cast<double>(groups.size());
    rep.jaccard.mean = j / ng;
    rep.f1.mean = f / ng;
    rep.avg_drug.mean = nd / ng;
    rep.prauc.mean = n_pr_groups > 0 ? pr / static_cast<double>(n_pr_groups) : 0.0;
    rep.auroc.mean = n_au_groups > 0 ? au / static_cast<double>(n_au_groups) : 0.0;
    return rep;
}

MetricsReport bootstrap_eval(const std::vector<Prediction>& preds,
                             const std::vector<std::vector<uint8_t>>& labels, int rounds,
                             double frac, uint64_t seed,
                             std::vector<BootstrapRound>* rounds_out) {
    if (preds.empty()) throw Error(ErrorCode::invalid, "bootstrap_eval: empty test set");
    if (rounds < 1) throw Error(ErrorCode::invalid, "bootstrap_eval: rounds must be >= 1");
    if (!(frac > 0.0 && frac <= 1.0)) {
        throw Error(ErrorCode::invalid, "bootstrap_eval: frac must be in (0, 1]");
    }
    const auto rows = all_row_metrics(preds, labels);
    const size_t n = rows.size();
    const size_t take = std::max<size_t>(1, static_cast<size_t>(
                                                std::floor(frac * static_cast<double>(n))));

    Welford j, f, nd, pr, au;
    MetricsReport rep;
    std::vector<size_t> pool(n);
    for (int round = 0; round < rounds; ++round) {
        std::iota(pool.begin(), pool.end(), 0); // fresh subsample per round
        Rng rng(mix_key(seed, static_cast<uint64_t>(round), 0xb007));
        for (size_t k = 0; k < take; ++k) { // partial Fisher-Yates
            const size_t idx = k + static_cast<size_t>(rng.bounded(n - k));
            std::swap(pool[k], pool[idx]);
        }
        // canonical accumulation order, so frac = 1 reproduces the plain
        // metrics bit for bit
        std::sort(pool.begin(), pool.begin() + static_cast<ptrdiff_t>(take));
        double rj = 0, rf = 0, rnd = 0, rpr = 0, rau = 0;
        int64_t n_pr = 0, n_au = 0;
        for (size_t k = 0; k < take; ++k) {
            const auto& r = rows[pool[k]];
            rj += r.jaccard;
            rf += r.f1;
            rnd += r.n_predicted;
            if (r.prauc) { rpr += *r.prauc; n_pr++; } else { rep.skipped_prauc++; }
            if (r.auroc) { rau += *r.auroc; n_au++; } else { rep.skipped_auroc++; }
        }
        const double t = static_cast<double>(take);
        BootstrapRound br;
        br.jaccard = rj / t;
        br.f1 = rf / t;
        br.avg_drug = rnd / t;
        br.prauc = n_pr > 0 ? rpr / static_cast<double>(n_pr) : 0.0;
        br.auroc = n_au > 0 ? rau / static_cast<double>(n_au) : 0.0;
        j.add(br.jaccard);
        f.add(br.f1);
        nd.add(br.avg_drug);
        if (n_pr > 0) pr.add(br.prauc);
        if (n_au > 0) au.add(br.auroc);
        if (rounds_out) rounds_out->push_back(br);
    }
    rep.jaccard = {j.mean, j.stddev()};
    rep.f1 = {f.mean, f.stddev()};
    rep.avg_drug = {nd.mean, nd.stddev()};
    rep.prauc = {pr.mean, pr.stddev()};
    rep.auroc = {au.mean, au.stddev()};
    rep.rounds = rounds;
    return rep;
}

} // namespace berngraph
