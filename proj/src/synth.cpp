#include "berngraph/synth.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "berngraph/errors.hpp"
#include "berngraph/rng.hpp"

namespace berngraph {

namespace {

void check_prob(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw Error(ErrorCode::invalid, fmt::format("{} must be in [0, 1], got {}", what, p));
    }
}

std::vector<double> broadcast(std::vector<double> v, size_t n, double fallback,
                              const char* what) {
    if (v.empty()) v.assign(n, fallback);
    if (v.size() == 1) v.assign(n, v[0]);
    if (v.size() != n) {
        throw Error(ErrorCode::invalid,
                    fmt::format("{}: expected 1 or {} values, got {}", what, n, v.size()));
    }
    for (double p : v) check_prob(p, what);
    return v;
}

// draw tags, per patient: causes first, then activations, background, flips
struct Tags {
    int64_t l, m;
    uint64_t cause(int32_t cause) const { return static_cast<uint64_t>(cause); }
    uint64_t activation(int32_t cause, int32_t event) const {
        return static_cast<uint64_t>(l + cause * m + event);
    }
    uint64_t background(int32_t event) const { return static_cast<uint64_t>(l + l * m + event); }
    uint64_t flip(int32_t drug) const { return static_cast<uint64_t>(l + l * m + m + drug); }
};

} // namespace

void SynthConfig::finalize() {
    if (n_patients < 1 || n_events < 1 || n_drugs < 1 || n_causes < 1) {
        throw Error(ErrorCode::invalid, "synth dims must all be >= 1");
    }
    const auto l = static_cast<size_t>(n_causes);
    cause_prevalence = broadcast(std::move(cause_prevalence), l, 0.4, "cause_prevalence");
    cause_activation = broadcast(std::move(cause_activation), l, 0.6, "cause_activation");
    check_prob(background_rate, "background_rate");
    check_prob(label_noise, "label_noise");

    if (cause_events.empty()) {
        // contiguous blocks; any remainder events stay background-only
        const int32_t block = n_events / n_causes;
        if (block < 1) {
            throw Error(ErrorCode::invalid, "more causes than events; set cause_events explicitly");
        }
        cause_events.resize(l);
        for (int32_t cz = 0; cz < n_causes; ++cz) {
            for (int32_t j = cz * block; j < (cz + 1) * block; ++j) {
                cause_events[static_cast<size_t>(cz)].push_back(j);
            }
        }
    }
    if (cause_events.size() != l) {
        throw Error(ErrorCode::invalid,
                    fmt::format("cause_events: expected {} lists, got {}", l, cause_events.size()));
    }
    for (const auto& evs : cause_events) {
        for (int32_t j : evs) {
            if (j < 0 || j >= n_events) {
                throw Error(ErrorCode::invalid, fmt::format("cause event {} out of range", j));
            }
        }
    }

    if (rules.empty()) {
        // drug c: any-of over the first events of cause (c mod L)
        rules.resize(static_cast<size_t>(n_drugs));
        for (int32_t cz = 0; cz < n_drugs; ++cz) {
            const auto& evs = cause_events[static_cast<size_t>(cz % n_causes)];
            DrugRule r;
            r.kind = DrugRule::Kind::any_of;
            const size_t take = std::min<size_t>(3, evs.size());
            r.events.assign(evs.begin(), evs.begin() + static_cast<ptrdiff_t>(take));
            rules[static_cast<size_t>(cz)] = std::move(r);
        }
    }
    if (rules.size() != static_cast<size_t>(n_drugs)) {
        throw Error(ErrorCode::invalid,
                    fmt::format("rules: expected {} entries, got {}", n_drugs, rules.size()));
    }
    for (const auto& r : rules) {
        if (r.events.empty()) throw Error(ErrorCode::invalid, "drug rule with no events");
        for (int32_t j : r.events) {
            if (j < 0 || j >= n_events) {
                throw Error(ErrorCode::invalid, fmt::format("rule event {} out of range", j));
            }
        }
    }
}

SynthResult generate(const SynthConfig& config_in) {
    SynthConfig cfg = config_in;
    cfg.finalize();
    const Tags tags{cfg.n_causes, cfg.n_events};

    SynthResult out;
    out.truth.active_causes.resize(static_cast<size_t>(cfg.n_patients));
    out.truth.clean_labels.resize(static_cast<size_t>(cfg.n_patients));

    std::vector<std::pair<int64_t, int32_t>> event_trips;
    std::vector<std::pair<int64_t, int32_t>> label_trips;
    std::vector<uint8_t> x(static_cast<size_t>(cfg.n_events));

    for (int64_t i = 0; i < cfg.n_patients; ++i) {
        const auto pid = static_cast<uint64_t>(i);
        std::fill(x.begin(), x.end(), 0);

        auto& causes = out.truth.active_causes[static_cast<size_t>(i)];
        for (int32_t cz = 0; cz < cfg.n_causes; ++cz) {
            if (keyed_uniform(cfg.seed, pid, tags.cause(cz)) <
                cfg.cause_prevalence[static_cast<size_t>(cz)]) {
                causes.push_back(cz);
            }
        }
        for (int32_t j = 0; j < cfg.n_events; ++j) {
            if (keyed_uniform(cfg.seed, pid, tags.background(j)) < cfg.background_rate) {
                x[static_cast<size_t>(j)] = 1;
            }
        }
        for (int32_t cz : causes) {
            const double act = cfg.cause_activation[static_cast<size_t>(cz)];
            for (int32_t j : cfg.cause_events[static_cast<size_t>(cz)]) {
                if (x[static_cast<size_t>(j)]) continue;
                if (keyed_uniform(cfg.seed, pid, tags.activation(cz, j)) < act) {
                    x[static_cast<size_t>(j)] = 1;
                }
            }
        }
        for (int32_t j = 0; j < cfg.n_events; ++j) {
            if (x[static_cast<size_t>(j)]) event_trips.emplace_back(i, j);
        }

        auto& clean = out.truth.clean_labels[static_cast<size_t>(i)];
        clean.resize(static_cast<size_t>(cfg.n_drugs));
        for (int32_t cz = 0; cz < cfg.n_drugs; ++cz) {
            const DrugRule& rule = cfg.rules[static_cast<size_t>(cz)];
            bool fired;
            if (rule.kind == DrugRule::Kind::any_of) {
                fired = std::any_of(rule.events.begin(), rule.events.end(),
                                    [&](int32_t j) { return x[static_cast<size_t>(j)] != 0; });
            } else {
                fired = std::all_of(rule.events.begin(), rule.events.end(),
                                    [&](int32_t j) { return x[static_cast<size_t>(j)] != 0; });
            }
            clean[static_cast<size_t>(cz)] = fired ? 1 : 0;
            bool label = fired;
            if (keyed_uniform(cfg.seed, pid, tags.flip(cz)) < cfg.label_noise) label = !label;
            if (label) label_trips.emplace_back(i, cz);
        }
    }

    out.cohort.events = SparseBinaryMatrix::from_triplets(cfg.n_patients, cfg.n_events,
                                                          std::move(event_trips), "events");
    out.cohort.labels = SparseBinaryMatrix::from_triplets(cfg.n_patients, cfg.n_drugs,
                                                          std::move(label_trips), "labels");
    out.cohort.event_names.reserve(static_cast<size_t>(cfg.n_events));
    for (int32_t j = 0; j < cfg.n_events; ++j) {
        out.cohort.event_names.push_back(fmt::format("event_{}", j));
    }
    out.cohort.drug_names.reserve(static_cast<size_t>(cfg.n_drugs));
    for (int32_t cz = 0; cz < cfg.n_drugs; ++cz) {
        out.cohort.drug_names.push_back(fmt::format("drug_{}", cz));
    }
    return out;
}

std::vector<double> analytic_marginals(const SynthConfig& config_in) {
    SynthConfig cfg = config_in;
    cfg.finalize();
    std::vector<double> rho(static_cast<size_t>(cfg.n_events),
                            cfg.background_rate);
    // rho_j = 1 - (1 - beta) * prod_l (1 - pi_l * a_l) over causes loading j
    std::vector<double> miss(static_cast<size_t>(cfg.n_events), 1.0 - cfg.background_rate);
    for (int32_t cz = 0; cz < cfg.n_causes; ++cz) {
        const double pa = cfg.cause_prevalence[static_cast<size_t>(cz)] *
                          cfg.cause_activation[static_cast<size_t>(cz)];
        for (int32_t j : cfg.cause_events[static_cast<size_t>(cz)]) {
            miss[static_cast<size_t>(j)] *= (1.0 - pa);
        }
    }
    for (size_t j = 0; j < rho.size(); ++j) rho[j] = 1.0 - miss[j];
    return rho;
}

BernoulliStats brute_force_stats(const SparseBinaryMatrix& events,
                                 std::span<const int64_t> rows) {
    const int64_t n = static_cast<int64_t>(rows.size());
    const int64_t m = events.n_cols;
    if (n < 1) throw Error(ErrorCode::invalid, "brute_force_stats: no rows");
    if (n * m * m > 10'000'000) {
        throw Error(ErrorCode::invalid,
                    fmt::format("brute_force_stats: {} x {}^2 exceeds the size guard", n, m));
    }

    // dense copy, then literal triple loop
    std::vector<std::vector<uint8_t>> dense(static_cast<size_t>(n),
                                            std::vector<uint8_t>(static_cast<size_t>(m), 0));
    for (int64_t k = 0; k < n; ++k) {
        for (int32_t c : events.row(rows[k])) dense[static_cast<size_t>(k)][static_cast<size_t>(c)] = 1;
    }

    BernoulliStats stats;
    stats.n_rows = n;
    stats.event_counts.assign(static_cast<size_t>(m), 0);
    for (int64_t j = 0; j < m; ++j) {
        int64_t count = 0;
        for (int64_t k = 0; k < n; ++k) count += dense[static_cast<size_t>(k)][static_cast<size_t>(j)];
        stats.event_counts[static_cast<size_t>(j)] = count;
    }
    stats.marginals.resize(static_cast<size_t>(m));
    for (int64_t j = 0; j < m; ++j) {
        stats.marginals[static_cast<size_t>(j)] =
            static_cast<double>(stats.event_counts[static_cast<size_t>(j)]) /
            static_cast<double>(n);
    }
    for (int32_t i = 0; i < m; ++i) {
        for (int32_t j = i + 1; j < m; ++j) {
            int64_t both = 0;
            for (int64_t k = 0; k < n; ++k) {
                both += dense[static_cast<size_t>(k)][static_cast<size_t>(i)] &
                        dense[static_cast<size_t>(k)][static_cast<size_t>(j)];
            }
            if (both >= 1) stats.joint.push_back({i, j, both});
        }
    }
    return stats;
}

} // namespace berngraph
