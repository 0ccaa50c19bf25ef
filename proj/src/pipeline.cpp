// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2egrec/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include "json.hpp"
#include <sstream>

#include "e2egrec/error.hpp"

namespace e2eg {

using nlohmann::json;

Stream make_stream(const SynthData& data, const ItemGraph& graph) {
  Stream s;
  s.days = data.days;
  s.user_features = data.user_features;
  s.item_features = data.item_features;
  s.graph = graph;
  return s;
}

ItemGraph build_history_graph(const SynthData& data, const RunConfig& cfg) {
  std::uint64_t num_items = 0;
  auto grow = [&](const InteractionLog& log) {
    if (!log.records.empty()) num_items = std::max<std::uint64_t>(num_items, log.max_item_id() + 1);
  };
  grow(data.history);
  for (const auto& d : data.days) grow(d);
  if (data.item_features.rank() == 2) num_items = std::max<std::uint64_t>(num_items, data.item_features.rows());
  return build_swing_graph(data.history, cfg.swing_alpha, cfg.swing_top_k, num_items);
}

double resolve_tau(const SynthData& data, const RunConfig& cfg) {
  if (!cfg.auto_tau) return cfg.train.labels.tau;
  const InteractionLog& ref = data.history.records.empty() ? data.days.front() : data.history;
  InteractionLog probe = ref;
  return select_tau(probe, cfg.tau_target, cfg.train.labels.positive_mask(probe));
}

MetricReport run_on(const RunConfig& cfg_in, const SynthData& data, const ItemGraph& graph) {
  RunConfig cfg = cfg_in;
  cfg.sync_seeds();
  cfg.validate();
  cfg.train.labels.tau = resolve_tau(data, cfg);
  return run_streaming_training(make_stream(data, graph), cfg.train);
}

MetricReport run_pipeline(const RunConfig& cfg) {
  RunConfig c = cfg;
  c.sync_seeds();
  c.validate();
  const SynthData data = generate(c.synth);
  return run_on(c, data, build_history_graph(data, c));
}

ReportBundle bundle(const MetricReport& report, const RunConfig& cfg) {
  return {report, cfg.canonical(), hex64(cfg.hash())};
}

namespace {

std::string f17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string f6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

json header_json(const ReportBundle& b) {
  const auto& r = b.report;
  return json{{"type", "header"},           {"mode", r.mode},
              {"fusion", r.fusion},         {"backbone", r.backbone},
              {"seed", r.seed},             {"tau", r.tau},
              {"config_hash", b.config_hash}, {"config", b.config_text},
              {"frozen_grad_max", r.frozen_grad_max}};
}

}  // namespace

std::string format_report_text(const ReportBundle& b) {
  const auto& r = b.report;
  std::ostringstream os;
  os << "# e2egrec metric report\n";
  os << "# config_hash " << b.config_hash << "  seed " << r.seed << "\n";
  os << "# mode " << r.mode << "  fusion " << r.fusion << "  backbone " << r.backbone << "  tau " << f6(r.tau)
     << "\n";
  os << "day\texamples\tauc\tstay_auc\tssl_loss\tltr_loss\tw_ssl\tw_ltr\n";
  for (const auto& d : r.days)
    os << d.day << '\t' << d.examples << '\t' << f6(d.auc) << '\t' << f6(d.stay_auc) << '\t' << f6(d.mean_ssl_loss)
       << '\t' << f6(d.mean_ltr_loss) << '\t' << f6(d.w_ssl) << '\t' << f6(d.w_ltr) << '\n';
  os << "mean\t\t" << f6(r.mean_auc()) << '\t' << f6(r.mean_stay_auc()) << "\n";
  if (r.mode == "cascaded") os << "# frozen encoder max |grad| during stage B: " << f17(r.frozen_grad_max) << "\n";
  os << "# config\n";
  std::istringstream cfg(b.config_text);
  for (std::string line; std::getline(cfg, line);) os << "#   " << line << '\n';
  return os.str();
}

std::string format_report_jsonl(const ReportBundle& b) {
  const auto& r = b.report;
  std::ostringstream os;
  os << header_json(b).dump() << '\n';
  auto metric = [&](std::size_t day, const char* name, double v) {
    os << json{{"type", "metric"}, {"day", day}, {"metric", name}, {"value", v},
               {"mode", r.mode}, {"seed", r.seed}, {"config_hash", b.config_hash}}
              .dump()
       << '\n';
  };
  for (const auto& d : r.days) {
    metric(d.day, "examples", static_cast<double>(d.examples));
    metric(d.day, "auc", d.auc);
    metric(d.day, "stay_auc", d.stay_auc);
    metric(d.day, "ssl_loss", d.mean_ssl_loss);
    metric(d.day, "ltr_loss", d.mean_ltr_loss);
    metric(d.day, "w_ssl", d.w_ssl);
    metric(d.day, "w_ltr", d.w_ltr);
  }
  for (const auto& s : r.steps)
    os << json{{"type", "step"},         {"day", s.day},     {"step", s.step},  {"ssl_loss", s.ssl_loss},
               {"ltr_loss", s.ltr_loss}, {"w_ssl", s.w_ssl}, {"w_ltr", s.w_ltr}}
              .dump()
       << '\n';
  return os.str();
}

void write_report(const ReportBundle& b, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  for (const auto& [name, text] : {std::pair{"report.txt", format_report_text(b)},
                                   std::pair{"report.jsonl", format_report_jsonl(b)}}) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + (dir / name).string());
    out << text;
    if (!out) throw Error(ErrorCode::kIo, "write failed for " + (dir / name).string());
  }
}

ReportBundle read_report_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open report " + path.string());
  ReportBundle b;
  bool have_header = false;
  std::string line;
  std::size_t lineno = 0;
  auto day_slot = [&](std::size_t day) -> DayMetrics& {
    if (day == 0) throw ParseError(path.string() + ": day numbers start at 1", lineno);
    if (b.report.days.size() < day) b.report.days.resize(day);
    b.report.days[day - 1].day = day;
    return b.report.days[day - 1];
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      const std::string type = j.at("type");
      if (type == "header") {
        have_header = true;
        b.report.mode = j.at("mode");
        b.report.fusion = j.at("fusion");
        b.report.backbone = j.at("backbone");
        b.report.seed = j.at("seed");
        b.report.tau = j.at("tau");
        b.report.frozen_grad_max = j.value("frozen_grad_max", 0.0);
        b.config_hash = j.at("config_hash");
        b.config_text = j.at("config");
      } else if (type == "metric") {
        DayMetrics& d = day_slot(j.at("day"));
        const std::string m = j.at("metric");
        const double v = j.at("value");
        if (m == "examples") d.examples = static_cast<std::size_t>(v);
        else if (m == "auc") d.auc = v;
        else if (m == "stay_auc") d.stay_auc = v;
        else if (m == "ssl_loss") d.mean_ssl_loss = v;
        else if (m == "ltr_loss") d.mean_ltr_loss = v;
        else if (m == "w_ssl") d.w_ssl = v;
        else if (m == "w_ltr") d.w_ltr = v;
      } else if (type == "step") {
        b.report.steps.push_back({j.at("day"), j.at("step"), j.at("ssl_loss"), j.at("ltr_loss"), j.at("w_ssl"),
                                  j.at("w_ltr")});
      }
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ": " + e.what(), lineno);
    }
  }
  if (!have_header) throw ParseError(path.string() + ": missing header record", 1);
  return b;
}

std::string format_lift_table(const ReportBundle& t, const ReportBundle& base) {
  const auto lift = relative_lift(t.report, base.report);
  std::ostringstream os;
  os << "# treatment " << t.report.mode << "/" << t.report.fusion << " (config " << t.config_hash << ", seed "
     << t.report.seed << ")\n";
  os << "# baseline  " << base.report.mode << "/" << base.report.fusion << " (config " << base.config_hash
     << ", seed " << base.report.seed << ")\n";
  os << "day\tauc_treatment\tauc_baseline\tlift_pct\n";
  for (std::size_t d = 0; d < lift.size(); ++d)
    os << d + 1 << '\t' << f6(t.report.days[d].auc) << '\t' << f6(base.report.days[d].auc) << '\t'
       << f6(100.0 * lift[d]) << '\n';
  os << "mean\t" << f6(t.report.mean_auc()) << '\t' << f6(base.report.mean_auc()) << '\t'
     << f6(100.0 * mean_relative_lift(t.report, base.report)) << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Verification suite

std::vector<CheckResult> verify_theorems(const RunConfig& cfg, std::uint64_t seed, std::size_t seeds) {
  ModelConfig mc = cfg.train.model;
  mc.rank.input_dim = cfg.synth.user_feature_dim;
  mc.rank.upper = upper_fusion_for(cfg.train.fusion);

  std::vector<CheckResult> out;
  std::size_t e2e_ok = 0, casc_ok = 0, shift_ok = 0;
  double e2e_min = 1e300, casc_max = 0.0, shift_min = 1e300;
  for (std::size_t k = 0; k < seeds; ++k) {
    const auto r = coupling_check(mc, seed + k);
    e2e_ok += r.e2e_encoder_grad_norm > 1e-6;
    casc_ok += r.cascaded_encoder_grad_norm == 0.0;
    shift_ok += r.head_grad_shift > 1e-6;
    e2e_min = std::min(e2e_min, r.e2e_encoder_grad_norm);
    casc_max = std::max(casc_max, r.cascaded_encoder_grad_norm);
    shift_min = std::min(shift_min, r.head_grad_shift);
  }
  const std::string of = "/" + std::to_string(seeds);
  out.push_back({"coupling.cascaded_encoder_grad_zero", casc_ok == seeds,
                 std::to_string(casc_ok) + of + " seeds exactly 0; max " + f17(casc_max)});
  out.push_back({"coupling.e2e_encoder_grad_nonzero", e2e_ok == seeds,
                 std::to_string(e2e_ok) + of + " seeds > 1e-6; min " + f17(e2e_min)});
  out.push_back({"coupling.head_grad_depends_on_encoder", shift_ok == seeds,
                 std::to_string(shift_ok) + of + " seeds > 1e-6; min " + f17(shift_min)});

  double kern = 0.0, change = 0.0, dec = 0.0, proj = 0.0;
  for (std::size_t k = 0; k < seeds; ++k) {
    const auto r = subspace_check_random(seed + k);
    kern = std::max(kern, r.max_kernel_grad);
    change = std::max(change, r.bpr_relative_change);
    dec = std::max(dec, r.decoder_residual);
    proj = std::max(proj, r.projection_residual);
  }
  out.push_back({"subspace.bpr_grad_in_span_w", kern <= 1e-10, "max kernel component " + f17(kern)});
  out.push_back({"subspace.bpr_kernel_invariance", change <= 1e-12, "max relative change " + f17(change)});
  out.push_back({"subspace.ssl_column_space", dec <= 1e-8 && proj <= 1e-8,
                 "decoder residual " + f17(dec) + ", projection residual " + f17(proj)});
  return out;
}

std::string format_checks(const std::vector<CheckResult>& checks, const RunConfig& cfg, std::uint64_t seed) {
  std::ostringstream os;
  os << "# e2egrec verification report\n# config_hash " << hex64(cfg.hash()) << "  seed " << seed << "\n";
  for (const auto& c : checks) os << (c.pass ? "PASS" : "FAIL") << '\t' << c.name << '\t' << c.detail << '\n';
  return os.str();
}

}  // namespace e2eg
