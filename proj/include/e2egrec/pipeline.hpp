// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "e2egrec/config.hpp"
#include "e2egrec/synth.hpp"
#include "e2egrec/trainer.hpp"

namespace e2eg {

/// Stream over generated (or loaded) data with the item graph built from the
/// history log. Resolves labels.tau when auto_tau is set.
Stream make_stream(const SynthData& data, const ItemGraph& graph);
ItemGraph build_history_graph(const SynthData& data, const RunConfig& cfg);
double resolve_tau(const SynthData& data, const RunConfig& cfg);

/// Generate data, build the graph, train in the configured mode.
MetricReport run_pipeline(const RunConfig& cfg);
/// Same, on already-materialized data and graph.
MetricReport run_on(const RunConfig& cfg, const SynthData& data, const ItemGraph& graph);

/// A report together with the provenance of the run that produced it.
struct ReportBundle {
  MetricReport report;
  std::string config_text;  ///< canonical config
  std::string config_hash;  ///< hex FNV-1a
};

ReportBundle bundle(const MetricReport& report, const RunConfig& cfg);

/// Tabular text report.
std::string format_report_text(const ReportBundle& b);
/// Line-delimited JSON: a header record, one record per day per metric, and
/// one record per training step.
std::string format_report_jsonl(const ReportBundle& b);
/// Writes <dir>/report.txt and <dir>/report.jsonl.
void write_report(const ReportBundle& b, const std::filesystem::path& dir);
ReportBundle read_report_jsonl(const std::filesystem::path& path);

/// Paired per-day lift table of `treatment` against `baseline`.
std::string format_lift_table(const ReportBundle& treatment, const ReportBundle& baseline);

// ---------------------------------------------------------------------------
// Verification suite

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Gradient-coupling and subspace checks over `seeds` consecutive seeds.
std::vector<CheckResult> verify_theorems(const RunConfig& cfg, std::uint64_t seed, std::size_t seeds = 20);
std::string format_checks(const std::vector<CheckResult>& checks, const RunConfig& cfg, std::uint64_t seed);

}  // namespace e2eg
