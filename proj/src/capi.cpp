// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2egrec/e2egrec.h"

#include <filesystem>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "e2egrec/config.hpp"
#include "e2egrec/error.hpp"
#include "e2egrec/graph_store.hpp"
#include "e2egrec/pipeline.hpp"
#include "e2egrec/sampler.hpp"
#include "e2egrec/synth.hpp"

struct e2eg_config {
  e2eg::RunConfig cfg;
  std::string scratch;  // backing storage for returned strings
};

struct e2eg_report {
  e2eg::ReportBundle bundle;
  std::string scratch;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_text;

e2eg_status to_status(e2eg::ErrorCode code) { return static_cast<e2eg_status>(static_cast<int>(code)); }

template <class F>
e2eg_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return E2EG_OK;
  } catch (const e2eg::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return E2EG_ERR_INTERNAL;
}

void need(const void* p, const char* what) {
  if (!p) throw e2eg::Error(e2eg::ErrorCode::kInvalidArgument, std::string(what) + " must not be null");
}

void need_file(const char* path, const char* what) {
  need(path, what);
  if (!std::filesystem::exists(path))
    throw e2eg::Error(e2eg::ErrorCode::kIo, std::string(what) + " not found: " + path);
}

std::string f17(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

extern "C" {

const char* e2eg_version(void) { return "0.1.0"; }
const char* e2eg_last_error(void) { return g_last_error.c_str(); }

const char* e2eg_status_name(e2eg_status s) {
  switch (s) {
    case E2EG_OK: return "ok";
    case E2EG_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case E2EG_ERR_CONFIG: return "config";
    case E2EG_ERR_IO: return "io";
    case E2EG_ERR_CHECK_FAILED: return "check_failed";
    case E2EG_ERR_UNDEFINED_AUC: return "undefined_auc";
    case E2EG_ERR_NUMERIC: return "numeric";
    case E2EG_ERR_SHAPE: return "shape";
    case E2EG_ERR_PARSE: return "parse";
    case E2EG_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

// ---- configuration ---------------------------------------------------------

e2eg_status e2eg_config_new(e2eg_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new e2eg_config{};
  });
}

e2eg_status e2eg_config_parse(const char* text, e2eg_config** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = new e2eg_config{e2eg::parse_run_config(text), {}};
  });
}

e2eg_status e2eg_config_load(const char* path, e2eg_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new e2eg_config{e2eg::load_run_config(path), {}};
  });
}

e2eg_status e2eg_config_set(e2eg_config* c, const char* key, const char* value) {
  return guarded([&] {
    need(c, "config");
    need(key, "key");
    need(value, "value");
    c->cfg.set(key, value);
  });
}

e2eg_status e2eg_config_get(const e2eg_config* c, const char* key, const char** value) {
  return guarded([&] {
    need(c, "config");
    need(key, "key");
    need(value, "value");
    auto* m = const_cast<e2eg_config*>(c);
    m->scratch = c->cfg.get(key);
    *value = m->scratch.c_str();
  });
}

e2eg_status e2eg_config_canonical(const e2eg_config* c, const char** text) {
  return guarded([&] {
    need(c, "config");
    need(text, "text");
    auto* m = const_cast<e2eg_config*>(c);
    m->scratch = c->cfg.canonical();
    *text = m->scratch.c_str();
  });
}

e2eg_status e2eg_config_hash(const e2eg_config* c, const char** hex) {
  return guarded([&] {
    need(c, "config");
    need(hex, "hex");
    auto* m = const_cast<e2eg_config*>(c);
    m->scratch = e2eg::hex64(c->cfg.hash());
    *hex = m->scratch.c_str();
  });
}

void e2eg_config_free(e2eg_config* c) { delete c; }

// ---- data and graph --------------------------------------------------------

e2eg_status e2eg_gen_data(const e2eg_config* c, const char* out_dir) {
  return guarded([&] {
    need(c, "config");
    need(out_dir, "out_dir");
    e2eg::RunConfig cfg = c->cfg;
    cfg.sync_seeds();
    cfg.validate();
    e2eg::write_synth(e2eg::generate(cfg.synth), out_dir);
  });
}

e2eg_status e2eg_build_graph(const char* log_path, double alpha, size_t top_k, uint64_t num_items,
                             const char* out_path, size_t* num_edges) {
  return guarded([&] {
    need_file(log_path, "log");
    need(out_path, "out_path");
    const auto log = e2eg::read_log_tsv(log_path);
    const auto graph = e2eg::build_swing_graph(log, alpha, top_k, num_items);
    e2eg::save_graph(graph, out_path);
    if (num_edges) *num_edges = graph.num_edges();
  });
}

e2eg_status e2eg_sample(const char* graph_path, const uint64_t* sources, size_t num_sources, const e2eg_config* c,
                        const char* out_path) {
  return guarded([&] {
    need_file(graph_path, "graph");
    need(sources, "sources");
    need(c, "config");
    need(out_path, "out_path");
    const auto graph = e2eg::load_graph(graph_path);
    e2eg::RunConfig cfg = c->cfg;
    cfg.sync_seeds();
    cfg.validate();
    e2eg::Rng rng = e2eg::substream(cfg.seed, "debug.sampler");
    const auto sub =
        e2eg::sample_subgraph({sources, num_sources}, graph, cfg.train.sampler, rng);
    std::ofstream out(out_path);
    if (!out) throw e2eg::Error(e2eg::ErrorCode::kIo, std::string("cannot write ") + out_path);
    out << "# nodes " << sub.num_nodes() << "  sources " << sub.num_sources << "  edges " << sub.edges.size()
        << "\nhop\tdst\tsrc\tweight\n";
    for (const auto& e : sub.edges)
      if (sub.hop[e.src] > sub.hop[e.dst])
        out << sub.hop[e.src] << '\t' << sub.nodes[e.dst] << '\t' << sub.nodes[e.src] << '\t' << f17(e.weight)
            << '\n';
    if (!out) throw e2eg::Error(e2eg::ErrorCode::kIo, std::string("write failed for ") + out_path);
  });
}

// ---- training and evaluation ----------------------------------------------

e2eg_status e2eg_train(const e2eg_config* c, const char* data_dir, const char* graph_path, const char* mode,
                       e2eg_report** out) {
  return guarded([&] {
    need(c, "config");
    need_file(data_dir, "data directory");
    need_file(graph_path, "graph");
    need(out, "out");
    e2eg::RunConfig cfg = c->cfg;
    if (mode) cfg.set("train.mode", mode);
    const auto data = e2eg::read_synth(data_dir);
    const auto graph = e2eg::load_graph(graph_path);
    const auto report = e2eg::run_on(cfg, data, graph);
    *out = new e2eg_report{e2eg::bundle(report, cfg), {}};
  });
}

e2eg_status e2eg_run(const e2eg_config* c, e2eg_report** out) {
  return guarded([&] {
    need(c, "config");
    need(out, "out");
    *out = new e2eg_report{e2eg::bundle(e2eg::run_pipeline(c->cfg), c->cfg), {}};
  });
}

e2eg_status e2eg_report_write(const e2eg_report* r, const char* out_dir) {
  return guarded([&] {
    need(r, "report");
    need(out_dir, "out_dir");
    e2eg::write_report(r->bundle, out_dir);
  });
}

e2eg_status e2eg_report_load(const char* jsonl_path, e2eg_report** out) {
  return guarded([&] {
    need_file(jsonl_path, "report");
    need(out, "out");
    *out = new e2eg_report{e2eg::read_report_jsonl(jsonl_path), {}};
  });
}

e2eg_status e2eg_report_text(const e2eg_report* r, const char** text) {
  return guarded([&] {
    need(r, "report");
    need(text, "text");
    auto* m = const_cast<e2eg_report*>(r);
    m->scratch = e2eg::format_report_text(r->bundle);
    *text = m->scratch.c_str();
  });
}

size_t e2eg_report_num_days(const e2eg_report* r) { return r ? r->bundle.report.days.size() : 0; }

double e2eg_report_day_auc(const e2eg_report* r, size_t day_index) {
  if (!r || day_index >= r->bundle.report.days.size()) return 0.0;
  return r->bundle.report.days[day_index].auc;
}

double e2eg_report_mean_auc(const e2eg_report* r) { return r ? r->bundle.report.mean_auc() : 0.0; }

e2eg_status e2eg_lift_table(const e2eg_report* t, const e2eg_report* b, const char** text) {
  return guarded([&] {
    need(t, "treatment");
    need(b, "baseline");
    need(text, "text");
    g_text = e2eg::format_lift_table(t->bundle, b->bundle);
    *text = g_text.c_str();
  });
}

void e2eg_report_free(e2eg_report* r) { delete r; }

// ---- verification and sweeps ----------------------------------------------

e2eg_status e2eg_verify_theorems(const e2eg_config* c, uint64_t seed, const char* out_dir, const char** text) {
  bool all_pass = true;
  const e2eg_status st = guarded([&] {
    need(c, "config");
    e2eg::RunConfig cfg = c->cfg;
    cfg.validate();
    const auto checks = e2eg::verify_theorems(cfg, seed);
    g_text = e2eg::format_checks(checks, cfg, seed);
    for (const auto& ch : checks) all_pass = all_pass && ch.pass;
    if (out_dir) {
      std::filesystem::create_directories(out_dir);
      std::ofstream out(std::filesystem::path(out_dir) / "report.txt");
      if (!(out << g_text)) throw e2eg::Error(e2eg::ErrorCode::kIo, std::string("cannot write report in ") + out_dir);
    }
    if (text) *text = g_text.c_str();
  });
  if (st != E2EG_OK) return st;
  if (!all_pass) {
    g_last_error = "one or more verification checks failed";
    return E2EG_ERR_CHECK_FAILED;
  }
  return E2EG_OK;
}

e2eg_status e2eg_sweep(const e2eg_config* c, const char* grid_text, const char* out_dir, const char** summary) {
  return guarded([&] {
    need(c, "config");
    need(grid_text, "grid");
    need(out_dir, "out_dir");
    const auto trials = e2eg::expand_grid(grid_text);
    std::ostringstream table;
    table << "trial\tconfig_hash\tseed\tmode\tfusion\tmean_auc\tmean_stay_auc\toverrides\n";
    std::size_t index = 0;
    for (const auto& overrides : trials) {
      e2eg::RunConfig cfg = c->cfg;
      std::string desc;
      for (const auto& [k, v] : overrides) {
        cfg.set(k, v);
        desc += (desc.empty() ? "" : ";") + k + "=" + v;
      }
      const auto bundle = e2eg::bundle(e2eg::run_pipeline(cfg), cfg);
      char name[32];
      std::snprintf(name, sizeof name, "trial_%03zu", index);
      e2eg::write_report(bundle, std::filesystem::path(out_dir) / name);
      const auto& r = bundle.report;
      table << index << '\t' << bundle.config_hash << '\t' << r.seed << '\t' << r.mode << '\t' << r.fusion << '\t'
            << f17(r.mean_auc()) << '\t' << f17(r.mean_stay_auc()) << '\t' << desc << '\n';
      ++index;
    }
    g_text = table.str();
    std::ofstream out(std::filesystem::path(out_dir) / "summary.tsv");
    if (!(out << g_text)) throw e2eg::Error(e2eg::ErrorCode::kIo, std::string("cannot write summary in ") + out_dir);
    if (summary) *summary = g_text.c_str();
  });
}

}  // extern "C"
