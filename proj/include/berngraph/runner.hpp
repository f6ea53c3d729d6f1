#pragma once

#include <filesystem>
#include <string>

#include "berngraph/cohort.hpp"
#include "berngraph/config.hpp"

namespace berngraph {

// Workflow entry points behind the CLI and the C API. Each writes its
// artifacts atomically (temp file + rename) and echoes the resolved
// configuration into the output directory.

void run_simulate(const std::string& config_path, const std::string& overrides,
                  const std::filesystem::path& out_dir);

void run_stats(const EventCohort& cohort, const RunConfig& cfg,
               const std::filesystem::path& out_path);

void run_graph_dump(const EventCohort& cohort, const RunConfig& cfg,
                    const std::filesystem::path& out_path);

void run_train(const EventCohort& cohort, const RunConfig& cfg,
               const std::filesystem::path& out_dir);

void run_eval(const EventCohort& cohort, const std::filesystem::path& checkpoint_path,
              const RunConfig& cfg, const std::filesystem::path& out_dir);

// Table-style grid: bm x {post, cooc, re}, llr x {post, cooc},
// te x {post, cooc}, rn x {post, re}, plus lr and mlp; one CSV row each.
void run_ablate(const EventCohort& cohort, const RunConfig& cfg,
                const std::filesystem::path& out_dir);

void run_export_viz(const EventCohort& cohort, const std::filesystem::path& checkpoint_path,
                    const RunConfig& cfg, const std::filesystem::path& out_path);

} // namespace berngraph
