#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "berngraph/bern_stats.hpp"
#include "berngraph/cohort.hpp"

namespace berngraph {

struct DrugRule {
    enum class Kind { any_of, all_of };
    Kind kind = Kind::any_of;
    std::vector<int32_t> events;
};

// Noisy-OR cohort simulator: each patient draws independent latent causes;
// an event fires if any active cause that loads it activates it, or by
// background noise. Drug labels are event-subset rules with flip noise.
struct SynthConfig {
    int64_t n_patients = 2000;
    int32_t n_events = 40;
    int32_t n_drugs = 6;
    int32_t n_causes = 5;
    std::vector<double> cause_prevalence;           // per cause; default 0.4
    std::vector<std::vector<int32_t>> cause_events; // default: contiguous blocks
    std::vector<double> cause_activation;           // per cause; default 0.6
    double background_rate = 0.02;
    double label_noise = 0.05;
    std::vector<DrugRule> rules;                    // default: any-of over the
                                                    // first 3 events of cause (c mod L)
    uint64_t seed = 0;

    // Fills defaulted fields and validates; idempotent.
    void finalize();
};

struct GroundTruth {
    std::vector<std::vector<int32_t>> active_causes; // per patient
    std::vector<std::vector<uint8_t>> clean_labels;  // pre-noise labels, N x C
};

struct SynthResult {
    EventCohort cohort;
    GroundTruth truth;
};

// All draws are counter-based keyed by (seed, patient, purpose), so the
// output is reproducible and independent of generation order.
SynthResult generate(const SynthConfig& config);

// Closed-form event marginals implied by the config.
std::vector<double> analytic_marginals(const SynthConfig& config);

// Naive dense reference for BernoulliStats: O(N * M^2) triple loop.
// Guarded to N * M^2 <= 1e7.
BernoulliStats brute_force_stats(const SparseBinaryMatrix& events,
                                 std::span<const int64_t> rows);

} // namespace berngraph
