// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Talks to the library exclusively through the C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "e2egrec/e2egrec.h"

namespace {

/// Reports a failed call as a structured one-line error and yields its code.
int report(e2eg_status st, const char* what) {
  if (st != E2EG_OK)
    std::fprintf(stderr, "error: command=%s status=%s code=%d message=\"%s\"\n", what, e2eg_status_name(st),
                 static_cast<int>(st), e2eg_last_error());
  return static_cast<int>(st);
}

struct Config {
  e2eg_config* handle = nullptr;
  ~Config() { e2eg_config_free(handle); }
};

struct Report {
  e2eg_report* handle = nullptr;
  ~Report() { e2eg_report_free(handle); }
};

/// Loads `path` (or defaults when empty) and applies `key=value` overrides.
e2eg_status load_config(const std::string& path, const std::vector<std::string>& overrides, Config& cfg) {
  e2eg_status st = path.empty() ? e2eg_config_new(&cfg.handle) : e2eg_config_load(path.c_str(), &cfg.handle);
  for (const auto& kv : overrides) {
    if (st != E2EG_OK) break;
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: command=config status=config code=2 message=\"override '%s' is not key=value\"\n",
                   kv.c_str());
      return E2EG_ERR_CONFIG;
    }
    st = e2eg_config_set(cfg.handle, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
  }
  return st;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"e2egrec: end-to-end graph-enhanced ranking experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", e2eg_version());

  std::string config_path;
  std::vector<std::string> overrides;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "key = value configuration file");
    sub->add_option("-s,--set", overrides, "override a key (key=value), repeatable")->allow_extra_args(false);
  };

  auto* show = app.add_subcommand("show-config", "print the resolved configuration");
  add_config(show);

  std::string out;
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic planted-cluster stream");
  add_config(gen);
  gen->add_option("out", out, "output directory")->required();

  std::string log_path;
  double alpha = 1.0;
  std::size_t top_k = 100;
  std::uint64_t num_items = 0;
  auto* bg = app.add_subcommand("build-graph", "build the Swing item graph from an interaction log");
  bg->add_option("log", log_path, "interaction log (tsv)")->required();
  bg->add_option("out", out, "output graph file")->required();
  bg->add_option("--alpha", alpha, "Swing smoothing constant")->capture_default_str();
  bg->add_option("--top-k", top_k, "neighbors kept per item")->capture_default_str();
  bg->add_option("--num-items", num_items, "item count (0 infers from log)")->capture_default_str();

  std::string graph_path;
  std::vector<std::uint64_t> sources;
  auto* sm = app.add_subcommand("sample", "dump a sampled subgraph (debugging)");
  add_config(sm);
  sm->add_option("graph", graph_path, "graph file")->required();
  sm->add_option("--sources", sources, "source item ids")->required();
  sm->add_option("-o,--out", out, "output file")->required();

  std::string data_dir, mode;
  auto* tr = app.add_subcommand("train", "streaming training with progressive validation");
  add_config(tr);
  tr->add_option("data", data_dir, "gen-data directory")->required();
  tr->add_option("graph", graph_path, "graph file")->required();
  tr->add_option("--mode", mode, "e2e | cascaded | e2e-no-gradnorm | cascaded-naive");
  tr->add_option("-o,--out", out, "report directory")->required();

  std::vector<std::string> reports;
  auto* ev = app.add_subcommand("eval", "summarize reports; with two, print the paired lift table");
  ev->add_option("reports", reports, "report.jsonl files (treatment first)")->required()->expected(1, 2);

  std::uint64_t seed = 1;
  auto* vt = app.add_subcommand("verify-theorems", "gradient-coupling and subspace checks");
  add_config(vt);
  vt->add_option("--seed", seed, "first seed")->capture_default_str();
  vt->add_option("-o,--out", out, "report directory");

  std::string grid_path;
  auto* sw = app.add_subcommand("sweep", "run every combination of a grid file");
  add_config(sw);
  sw->add_option("grid", grid_path, "grid file: key = v1 | v2 | ...")->required();
  sw->add_option("-o,--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : E2EG_ERR_INVALID_ARGUMENT;
  }

  const char* text = nullptr;
  Config cfg;
  auto need_config = [&](const char* what) { return report(load_config(config_path, overrides, cfg), what); };

  if (*show) {
    if (int rc = need_config("show-config")) return rc;
    if (int rc = report(e2eg_config_canonical(cfg.handle, &text), "show-config")) return rc;
    std::fputs(text, stdout);
    return 0;
  }
  if (*gen) {
    if (int rc = need_config("gen-data")) return rc;
    if (int rc = report(e2eg_gen_data(cfg.handle, out.c_str()), "gen-data")) return rc;
    std::printf("wrote synthetic stream to %s\n", out.c_str());
    return 0;
  }
  if (*bg) {
    std::size_t edges = 0;
    if (int rc = report(e2eg_build_graph(log_path.c_str(), alpha, top_k, num_items, out.c_str(), &edges),
                        "build-graph"))
      return rc;
    std::printf("wrote graph with %zu directed edges to %s\n", edges, out.c_str());
    return 0;
  }
  if (*sm) {
    if (int rc = need_config("sample")) return rc;
    return report(e2eg_sample(graph_path.c_str(), sources.data(), sources.size(), cfg.handle, out.c_str()),
                  "sample");
  }
  if (*tr) {
    if (int rc = need_config("train")) return rc;
    Report r;
    if (int rc = report(e2eg_train(cfg.handle, data_dir.c_str(), graph_path.c_str(),
                                   mode.empty() ? nullptr : mode.c_str(), &r.handle),
                        "train"))
      return rc;
    if (int rc = report(e2eg_report_write(r.handle, out.c_str()), "train")) return rc;
    if (int rc = report(e2eg_report_text(r.handle, &text), "train")) return rc;
    std::fputs(text, stdout);
    return 0;
  }
  if (*ev) {
    std::vector<Report> loaded(reports.size());
    for (std::size_t i = 0; i < reports.size(); ++i)
      if (int rc = report(e2eg_report_load(reports[i].c_str(), &loaded[i].handle), "eval")) return rc;
    if (loaded.size() == 1) {
      if (int rc = report(e2eg_report_text(loaded[0].handle, &text), "eval")) return rc;
    } else if (int rc = report(e2eg_lift_table(loaded[0].handle, loaded[1].handle, &text), "eval")) {
      return rc;
    }
    std::fputs(text, stdout);
    return 0;
  }
  if (*vt) {
    if (int rc = need_config("verify-theorems")) return rc;
    const e2eg_status st = e2eg_verify_theorems(cfg.handle, seed, out.empty() ? nullptr : out.c_str(), &text);
    if (text && (st == E2EG_OK || st == E2EG_ERR_CHECK_FAILED)) std::fputs(text, stdout);
    return report(st, "verify-theorems");
  }
  if (*sw) {
    if (int rc = need_config("sweep")) return rc;
    std::ifstream in(grid_path);
    if (!in) {
      std::fprintf(stderr, "error: command=sweep status=io code=3 message=\"cannot open grid %s\"\n",
                   grid_path.c_str());
      return E2EG_ERR_IO;
    }
    std::stringstream grid;
    grid << in.rdbuf();
    if (int rc = report(e2eg_sweep(cfg.handle, grid.str().c_str(), out.c_str(), &text), "sweep")) return rc;
    std::fputs(text, stdout);
    return 0;
  }
  return 0;
}
