#include "berngraph.h"

#include <exception>
#include <string>

#include "berngraph/cohort.hpp"
#include "berngraph/config.hpp"
#include "berngraph/errors.hpp"
#include "berngraph/runner.hpp"

struct bg_cohort {
    berngraph::EventCohort impl;
};

namespace {

thread_local std::string t_last_error;

bg_status code_of(berngraph::ErrorCode c) {
    switch (c) {
    case berngraph::ErrorCode::io: return BG_ERR_IO;
    case berngraph::ErrorCode::parse: return BG_ERR_PARSE;
    case berngraph::ErrorCode::invalid: return BG_ERR_INVALID;
    case berngraph::ErrorCode::state: return BG_ERR_STATE;
    case berngraph::ErrorCode::internal: return BG_ERR_INTERNAL;
    }
    return BG_ERR_INTERNAL;
}

template <class Fn>
bg_status guarded(Fn&& fn) {
    try {
        fn();
        return BG_OK;
    } catch (const berngraph::Error& e) {
        t_last_error = e.what();
        return code_of(e.code());
    } catch (const std::exception& e) {
        t_last_error = e.what();
        return BG_ERR_INTERNAL;
    } catch (...) {
        t_last_error = "unknown error";
        return BG_ERR_INTERNAL;
    }
}

bg_status require(bool ok, const char* msg) {
    if (ok) return BG_OK;
    t_last_error = msg;
    return BG_ERR_INVALID;
}

std::string opt(const char* s) { return s ? std::string(s) : std::string(); }

berngraph::RunConfig resolve_run(const char* config_path, const char* overrides) {
    return berngraph::RunConfig::resolve(opt(config_path), opt(overrides));
}

} // namespace

extern "C" {

const char* bg_version(void) { return "0.1.0"; }

const char* bg_last_error(void) { return t_last_error.c_str(); }

bg_status bg_cohort_open(const char* manifest_path, bg_cohort** out) {
    if (auto rc = require(manifest_path && out, "bg_cohort_open: null argument")) return rc;
    return guarded([&] {
        auto handle = new bg_cohort{berngraph::load_cohort(manifest_path)};
        *out = handle;
    });
}

void bg_cohort_close(bg_cohort* cohort) { delete cohort; }

bg_status bg_cohort_dims(const bg_cohort* cohort, int64_t* n_patients, int64_t* n_events,
                         int64_t* n_drugs) {
    if (auto rc = require(cohort != nullptr, "bg_cohort_dims: null cohort")) return rc;
    if (n_patients) *n_patients = cohort->impl.n_patients();
    if (n_events) *n_events = cohort->impl.n_events();
    if (n_drugs) *n_drugs = cohort->impl.n_drugs();
    return BG_OK;
}

bg_status bg_cohort_sparsity(const bg_cohort* cohort, int matrix, double* out) {
    if (auto rc = require(cohort && out, "bg_cohort_sparsity: null argument")) return rc;
    if (auto rc = require(matrix == BG_MATRIX_EVENTS || matrix == BG_MATRIX_LABELS,
                          "bg_cohort_sparsity: matrix must be 0 (events) or 1 (labels)")) {
        return rc;
    }
    return guarded([&] {
        *out = berngraph::sparsity(matrix == BG_MATRIX_EVENTS ? cohort->impl.events
                                                              : cohort->impl.labels);
    });
}

bg_status bg_run_simulate(const char* config_path, const char* overrides, const char* out_dir) {
    if (auto rc = require(out_dir != nullptr, "bg_run_simulate: null out_dir")) return rc;
    return guarded([&] { berngraph::run_simulate(opt(config_path), opt(overrides), out_dir); });
}

bg_status bg_run_stats(const bg_cohort* cohort, const char* config_path, const char* overrides,
                       const char* out_path) {
    if (auto rc = require(cohort && out_path, "bg_run_stats: null argument")) return rc;
    return guarded([&] {
        berngraph::run_stats(cohort->impl, resolve_run(config_path, overrides), out_path);
    });
}

bg_status bg_run_graph_dump(const bg_cohort* cohort, const char* config_path,
                            const char* overrides, const char* out_path) {
    if (auto rc = require(cohort && out_path, "bg_run_graph_dump: null argument")) return rc;
    return guarded([&] {
        berngraph::run_graph_dump(cohort->impl, resolve_run(config_path, overrides), out_path);
    });
}

bg_status bg_run_train(const bg_cohort* cohort, const char* config_path, const char* overrides,
                       const char* out_dir) {
    if (auto rc = require(cohort && out_dir, "bg_run_train: null argument")) return rc;
    return guarded([&] {
        berngraph::run_train(cohort->impl, resolve_run(config_path, overrides), out_dir);
    });
}

bg_status bg_run_eval(const bg_cohort* cohort, const char* checkpoint_path,
                      const char* config_path, const char* overrides, const char* out_dir) {
    if (auto rc = require(cohort && checkpoint_path && out_dir, "bg_run_eval: null argument")) {
        return rc;
    }
    return guarded([&] {
        berngraph::run_eval(cohort->impl, checkpoint_path, resolve_run(config_path, overrides),
                            out_dir);
    });
}

bg_status bg_run_ablate(const bg_cohort* cohort, const char* config_path, const char* overrides,
                        const char* out_dir) {
    if (auto rc = require(cohort && out_dir, "bg_run_ablate: null argument")) return rc;
    return guarded([&] {
        berngraph::run_ablate(cohort->impl, resolve_run(config_path, overrides), out_dir);
    });
}

bg_status bg_run_export_viz(const bg_cohort* cohort, const char* checkpoint_path,
                            const char* config_path, const char* overrides,
                            const char* out_path) {
    if (auto rc = require(cohort && checkpoint_path && out_path,
                          "bg_run_export_viz: null argument")) {
        return rc;
    }
    return guarded([&] {
        berngraph::run_export_viz(cohort->impl, checkpoint_path,
                                  resolve_run(config_path, overrides), out_path);
    });
}

} // extern "C"
