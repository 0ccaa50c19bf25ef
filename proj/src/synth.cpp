// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2egrec/synth.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "e2egrec/error.hpp"
#include "e2egrec/rng.hpp"

namespace e2eg {

namespace {

bool is_prob(double p) { return p >= 0.0 && p <= 1.0; }

struct Generator {
  const SynthConfig& cfg;
  std::vector<std::uint32_t> item_cluster;
  std::vector<std::vector<std::uint32_t>> user_prefs;
  std::vector<std::vector<std::uint64_t>> cluster_items;
  std::vector<std::vector<std::uint64_t>> user_other_items;

  bool prefers(std::size_t u, std::uint32_t c) const {
    const auto& p = user_prefs[u];
    return std::find(p.begin(), p.end(), c) != p.end();
  }

  std::uint64_t draw_item(std::size_t u, Rng& rng) const {
    const auto& others = user_other_items[u];
    if (others.empty() || rng.bernoulli(cfg.affinity)) {
      const auto& prefs = user_prefs[u];
      const auto& pool = cluster_items[prefs[rng.below(prefs.size())]];
      return pool[rng.below(pool.size())];
    }
    return others[rng.below(others.size())];
  }

  Interaction draw(std::size_t u, Rng& rng) const {
    Interaction r;
    r.user_id = static_cast<std::int64_t>(u);
    const std::uint64_t item = draw_item(u, rng);
    r.item_id = static_cast<std::int64_t>(item);
    const bool pref = prefers(u, item_cluster[item]);
    const double median = pref ? cfg.staytime_median_pref : cfg.staytime_median_other;
    r.staytime = std::round(median * std::exp(cfg.staytime_sigma * rng.normal()) * 10.0) / 10.0;
    const double pa = pref ? cfg.action_prob_pref : cfg.action_prob_other;
    for (std::size_t k = 0; k < synth_action_names().size(); ++k)
      if (rng.bernoulli(pa)) r.pos_actions |= 1u << k;
    r.neg_action = rng.bernoulli(pref ? cfg.neg_prob_pref : cfg.neg_prob_other);
    return r;
  }
};

InteractionLog empty_log() {
  InteractionLog log;
  log.action_names = synth_action_names();
  return log;
}

}  // namespace

void SynthConfig::validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::kConfig, "synth: " + m); };
  if (num_users == 0 || num_items == 0) bad("num_users and num_items must be positive");
  if (num_clusters == 0 || num_clusters > num_items) bad("num_clusters must be in [1, num_items]");
  if (!is_prob(affinity) || !is_prob(second_pref_prob)) bad("affinity probabilities must lie in [0, 1]");
  if (!is_prob(action_prob_pref) || !is_prob(action_prob_other) || !is_prob(neg_prob_pref) ||
      !is_prob(neg_prob_other))
    bad("action probabilities must lie in [0, 1]");
  if (!(staytime_median_other > 0.0) || !(staytime_median_pref > staytime_median_other))
    bad("preferred staytime median must exceed the non-preferred median (both positive)");
  if (!(staytime_sigma >= 0.0)) bad("staytime_sigma must be >= 0");
  if (days == 0 || interactions_per_day == 0) bad("days and interactions_per_day must be positive");
  if (user_feature_dim == 0) bad("user_feature_dim must be positive");
  if (!(feature_noise >= 0.0) || !(item_feature_noise >= 0.0)) bad("feature noise must be >= 0");
  if (item_feature_dim == 0) bad("item_feature_dim must be positive");
}

const std::vector<std::string>& synth_action_names() {
  static const std::vector<std::string> names{"like", "comment", "share"};
  return names;
}

SynthData generate(const SynthConfig& cfg) {
  cfg.validate();
  Generator gen{cfg, {}, {}, {}, {}};
  const std::size_t c = cfg.num_clusters;

  // Balanced random cluster assignment.
  Rng item_rng = substream(cfg.seed, "synth.items");
  std::vector<std::uint64_t> perm(cfg.num_items);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[item_rng.below(i)]);
  gen.item_cluster.assign(cfg.num_items, 0);
  gen.cluster_items.assign(c, {});
  for (std::size_t k = 0; k < perm.size(); ++k) gen.item_cluster[perm[k]] = static_cast<std::uint32_t>(k % c);
  for (std::uint64_t i = 0; i < cfg.num_items; ++i) gen.cluster_items[gen.item_cluster[i]].push_back(i);

  SynthData out;
  out.item_features = Tensor({cfg.num_items, cfg.item_feature_dim});
  Rng feat_rng = substream(cfg.seed, "synth.item_features");
  for (std::uint64_t i = 0; i < cfg.num_items; ++i) {
    for (std::size_t f = 0; f < cfg.item_feature_dim; ++f)
      out.item_features.at(i, f) = cfg.item_feature_noise * feat_rng.normal();
    out.item_features.at(i, gen.item_cluster[i] % cfg.item_feature_dim) += 1.0;
  }

  Rng user_rng = substream(cfg.seed, "synth.users");
  out.user_features = Tensor({cfg.num_users, cfg.user_feature_dim});
  gen.user_prefs.resize(cfg.num_users);
  gen.user_other_items.resize(cfg.num_users);
  for (std::size_t u = 0; u < cfg.num_users; ++u) {
    auto& prefs = gen.user_prefs[u];
    prefs.push_back(static_cast<std::uint32_t>(user_rng.below(c)));
    if (c > 1 && user_rng.bernoulli(cfg.second_pref_prob)) {
      std::uint32_t second = static_cast<std::uint32_t>(user_rng.below(c - 1));
      if (second >= prefs[0]) ++second;
      prefs.push_back(second);
    }
    for (std::size_t f = 0; f < cfg.user_feature_dim; ++f)
      out.user_features.at(u, f) = cfg.feature_noise * user_rng.normal();
    for (auto p : prefs) out.user_features.at(u, p % cfg.user_feature_dim) += 1.0;
    for (std::uint64_t i = 0; i < cfg.num_items; ++i)
      if (!gen.prefers(u, gen.item_cluster[i])) gen.user_other_items[u].push_back(i);
  }

  Rng hist_rng = substream(cfg.seed, "synth.history");
  out.history = empty_log();
  for (std::size_t u = 0; u < cfg.num_users; ++u)
    for (std::size_t k = 0; k < cfg.history_per_user; ++k) out.history.records.push_back(gen.draw(u, hist_rng));

  for (std::size_t d = 0; d < cfg.days; ++d) {
    Rng day_rng = substream(cfg.seed, "synth.day", d);
    InteractionLog log = empty_log();
    log.records.reserve(cfg.interactions_per_day);
    for (std::size_t k = 0; k < cfg.interactions_per_day; ++k)
      log.records.push_back(gen.draw(day_rng.below(cfg.num_users), day_rng));
    out.days.push_back(std::move(log));
  }
  out.item_cluster = std::move(gen.item_cluster);
  out.user_prefs = std::move(gen.user_prefs);
  return out;
}

namespace {

int interact(const Interaction& r, std::uint32_t mask) {
  return std::popcount(r.pos_actions & mask) - (r.neg_action ? 1 : 0);
}

}  // namespace

double label_base_rate(const InteractionLog& log, double tau, std::uint32_t positive_mask) {
  require(!log.records.empty(), "label_base_rate: empty log");
  std::size_t pos = 0;
  for (const auto& r : log.records) pos += ((r.staytime > tau ? 1 : 0) + interact(r, positive_mask)) >= 1;
  return static_cast<double>(pos) / static_cast<double>(log.records.size());
}

double select_tau(const InteractionLog& log, double target, std::uint32_t positive_mask) {
  require(!log.records.empty(), "select_tau: empty log");
  require(target >= 0.0 && target <= 1.0, "select_tau: target must lie in [0, 1]");
  std::vector<double> st;
  st.reserve(log.records.size());
  for (const auto& r : log.records) st.push_back(r.staytime);
  std::sort(st.begin(), st.end());
  st.erase(std::unique(st.begin(), st.end()), st.end());
  // Candidate thresholds: below everything, midpoints, at the maximum.
  std::vector<double> cand{st.front() - 1.0};
  for (std::size_t k = 0; k + 1 < st.size(); ++k) cand.push_back(0.5 * (st[k] + st[k + 1]));
  cand.push_back(st.back());
  // The base rate is non-increasing in tau: binary search for the crossing.
  std::size_t lo = 0, hi = cand.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (label_base_rate(log, cand[mid], positive_mask) >= target)
      lo = mid;
    else
      hi = mid;
  }
  const double dlo = std::abs(label_base_rate(log, cand[lo], positive_mask) - target);
  const double dhi = std::abs(label_base_rate(log, cand[hi], positive_mask) - target);
  return dhi < dlo ? cand[hi] : cand[lo];
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

std::vector<std::vector<std::string>> read_table(const std::filesystem::path& path, const std::string& header) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != header)
    throw ParseError(path.string() + ": expected header '" + header + "'", 1);
  std::vector<std::vector<std::string>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, '\t')) cells.push_back(cell);
    if (cells.empty()) throw ParseError(path.string() + ": empty row", lineno);
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::string day_file(std::size_t d) { return "day_" + std::to_string(d + 1) + ".tsv"; }

}  // namespace

void write_synth(const SynthData& data, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create directory " + dir.string() + ": " + ec.message());
  write_log_tsv(data.history, dir / "history.tsv");
  for (std::size_t d = 0; d < data.days.size(); ++d) write_log_tsv(data.days[d], dir / day_file(d));

  write_feature_table(data.user_features, "user_id", dir / "user_features.tsv");
  write_feature_table(data.item_features, "item_id", dir / "item_features.tsv");

  std::ostringstream ic;
  ic << "item_id\tcluster\n";
  for (std::size_t i = 0; i < data.item_cluster.size(); ++i) ic << i << '\t' << data.item_cluster[i] << '\n';
  write_text(dir / "item_clusters.tsv", ic.str());
}

SynthData read_synth(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::kIo, "data directory not found: " + dir.string());
  SynthData data;
  data.history = read_log_tsv(dir / "history.tsv", synth_action_names());
  for (std::size_t d = 0; std::filesystem::exists(dir / day_file(d)); ++d)
    data.days.push_back(read_log_tsv(dir / day_file(d), synth_action_names()));
  if (data.days.empty()) throw Error(ErrorCode::kIo, "no day_<n>.tsv files in " + dir.string());

  data.user_features = read_feature_table(dir / "user_features.tsv", "user_id");
  if (std::filesystem::exists(dir / "item_features.tsv"))
    data.item_features = read_feature_table(dir / "item_features.tsv", "item_id");

  const auto ic_path = dir / "item_clusters.tsv";
  if (std::filesystem::exists(ic_path)) {
    const auto ic = read_table(ic_path, "item_id\tcluster");
    for (std::size_t r = 0; r < ic.size(); ++r) {
      if (ic[r].size() != 2) throw ParseError(ic_path.string() + ": wrong column count", r + 2);
      try {
        data.item_cluster.push_back(static_cast<std::uint32_t>(std::stoul(ic[r][1])));
      } catch (const std::logic_error&) {
        throw ParseError(ic_path.string() + ": malformed number", r + 2);
      }
    }
  }
  return data;
}

void write_feature_table(const Tensor& table, const std::string& id_name, const std::filesystem::path& path) {
  require(table.rank() == 2, "feature table must be a matrix");
  std::ostringstream os;
  os << id_name;
  for (std::size_t f = 0; f < table.cols(); ++f) os << "\tf" << f;
  os << '\n';
  char buf[64];
  for (std::size_t r = 0; r < table.rows(); ++r) {
    os << r;
    for (std::size_t f = 0; f < table.cols(); ++f) {
      std::snprintf(buf, sizeof buf, "%.17g", table.at(r, f));
      os << '\t' << buf;
    }
    os << '\n';
  }
  write_text(path, os.str());
}

Tensor read_feature_table(const std::filesystem::path& path, const std::string& id_name) {
  std::ifstream probe(path);
  if (!probe) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::string header;
  std::getline(probe, header);
  probe.close();
  const std::size_t dim = static_cast<std::size_t>(std::count(header.begin(), header.end(), '\t'));
  if (dim == 0 || header.rfind(id_name + "\t", 0) != 0)
    throw ParseError(path.string() + ": header must start with '" + id_name + "' followed by feature columns", 1);
  const auto rows = read_table(path, header);
  Tensor out({rows.size(), dim});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != dim + 1) throw ParseError(path.string() + ": wrong column count", r + 2);
    try {
      if (std::stoull(rows[r][0]) != r) throw ParseError(path.string() + ": ids must be 0..n-1 in order", r + 2);
      for (std::size_t f = 0; f < dim; ++f) out.at(r, f) = std::stod(rows[r][f + 1]);
    } catch (const std::logic_error&) {
      throw ParseError(path.string() + ": malformed number", r + 2);
    }
  }
  return out;
}

ClusterMass cluster_mass(const ItemGraph& graph, const std::vector<std::uint32_t>& item_cluster) {
  require(item_cluster.size() >= graph.num_items, "cluster_mass: cluster map shorter than the graph");
  ClusterMass m;
  for (std::uint64_t i = 0; i < graph.num_items; ++i) {
    auto nb = graph.neighbors(i);
    auto w = graph.neighbor_weights(i);
    for (std::size_t k = 0; k < nb.size(); ++k)
      (item_cluster[i] == item_cluster[nb[k]] ? m.within : m.cross) += w[k];
  }
  return m;
}

}  // namespace e2eg
