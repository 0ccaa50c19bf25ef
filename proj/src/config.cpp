// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2egrec/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "e2egrec/error.hpp"
#include "e2egrec/rng.hpp"

namespace e2eg {

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expect) {
  throw Error(ErrorCode::kConfig, "config key '" + key + "': cannot parse '" + value + "' as " + expect);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) bad_value(key, v, "a number");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) bad_value(key, v, "a nonnegative integer");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "a boolean (true|false)");
}

std::vector<std::string> split_list(const std::string& v, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::size_t> to_sizes(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  for (const auto& s : split_list(v)) out.push_back(static_cast<std::size_t>(to_u64(key, s)));
  if (out.empty()) bad_value(key, v, "a comma-separated list of integers");
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
std::string join(const std::vector<T>& xs) {
  std::ostringstream os;
  for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? "," : "") << xs[i];
  return os.str();
}

struct Field {
  std::function<void(RunConfig&, const std::string& key, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define E2EG_DOUBLE(member)                                                                                 \
  Field {                                                                                                   \
    [](RunConfig& c, const std::string& k, const std::string& v) { c.member = to_double(k, v); },          \
        [](const RunConfig& c) { return fmt(c.member); }                                                    \
  }
#define E2EG_SIZE(member)                                                                                   \
  Field {                                                                                                   \
    [](RunConfig& c, const std::string& k, const std::string& v) {                                          \
      c.member = static_cast<decltype(c.member)>(to_u64(k, v));                                             \
    },                                                                                                      \
        [](const RunConfig& c) { return std::to_string(c.member); }                                         \
  }
#define E2EG_BOOL(member)                                                                                   \
  Field {                                                                                                   \
    [](RunConfig& c, const std::string& k, const std::string& v) { c.member = to_bool(k, v); },            \
        [](const RunConfig& c) { return std::string(c.member ? "true" : "false"); }                         \
  }

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"seed", E2EG_SIZE(seed)},
      {"synth.num_users", E2EG_SIZE(synth.num_users)},
      {"synth.num_items", E2EG_SIZE(synth.num_items)},
      {"synth.num_clusters", E2EG_SIZE(synth.num_clusters)},
      {"synth.affinity", E2EG_DOUBLE(synth.affinity)},
      {"synth.second_pref_prob", E2EG_DOUBLE(synth.second_pref_prob)},
      {"synth.history_per_user", E2EG_SIZE(synth.history_per_user)},
      {"synth.days", E2EG_SIZE(synth.days)},
      {"synth.interactions_per_day", E2EG_SIZE(synth.interactions_per_day)},
      {"synth.staytime_median_pref", E2EG_DOUBLE(synth.staytime_median_pref)},
      {"synth.staytime_median_other", E2EG_DOUBLE(synth.staytime_median_other)},
      {"synth.staytime_sigma", E2EG_DOUBLE(synth.staytime_sigma)},
      {"synth.action_prob_pref", E2EG_DOUBLE(synth.action_prob_pref)},
      {"synth.action_prob_other", E2EG_DOUBLE(synth.action_prob_other)},
      {"synth.neg_prob_pref", E2EG_DOUBLE(synth.neg_prob_pref)},
      {"synth.neg_prob_other", E2EG_DOUBLE(synth.neg_prob_other)},
      {"synth.user_feature_dim", E2EG_SIZE(synth.user_feature_dim)},
      {"synth.feature_noise", E2EG_DOUBLE(synth.feature_noise)},
      {"synth.item_feature_dim", E2EG_SIZE(synth.item_feature_dim)},
      {"synth.item_feature_noise", E2EG_DOUBLE(synth.item_feature_noise)},
      {"graph.alpha", E2EG_DOUBLE(swing_alpha)},
      {"graph.top_k", E2EG_SIZE(swing_top_k)},
      {"sampler.fanouts",
       {[](RunConfig& c, const std::string& k, const std::string& v) { c.train.sampler.fanouts = to_sizes(k, v); },
        [](const RunConfig& c) { return join(c.train.sampler.fanouts); }}},
      {"sampler.beta", E2EG_DOUBLE(train.sampler.beta)},
      {"encoder.backbone",
       {[](RunConfig& c, const std::string&, const std::string& v) {
          c.train.model.encoder.backbone = parse_backbone(v);
        },
        [](const RunConfig& c) { return std::string(backbone_name(c.train.model.encoder.backbone)); }}},
      {"encoder.layers", E2EG_SIZE(train.model.encoder.layers)},
      {"encoder.dim", E2EG_SIZE(train.model.encoder.dim)},
      {"rank.token_dim", E2EG_SIZE(train.model.rank.token_dim)},
      {"rank.heads", E2EG_SIZE(train.model.rank.heads)},
      {"rank.shared_hidden",
       {[](RunConfig& c, const std::string& k, const std::string& v) {
          c.train.model.rank.shared_hidden = to_sizes(k, v);
        },
        [](const RunConfig& c) { return join(c.train.model.rank.shared_hidden); }}},
      {"rank.task_hidden",
       {[](RunConfig& c, const std::string& k, const std::string& v) {
          c.train.model.rank.task_hidden = to_sizes(k, v);
        },
        [](const RunConfig& c) { return join(c.train.model.rank.task_hidden); }}},
      {"rank.score_reward", E2EG_DOUBLE(train.model.rank.score.reward)},
      {"rank.score_stay", E2EG_DOUBLE(train.model.rank.score.stay)},
      {"labels.tau",
       {[](RunConfig& c, const std::string& k, const std::string& v) {
          if (v == "auto") {
            c.auto_tau = true;
          } else {
            c.auto_tau = false;
            c.train.labels.tau = to_double(k, v);
          }
        },
        [](const RunConfig& c) { return c.auto_tau ? std::string("auto") : fmt(c.train.labels.tau); }}},
      {"labels.tau_target", E2EG_DOUBLE(tau_target)},
      {"labels.positive_actions",
       {[](RunConfig& c, const std::string&, const std::string& v) {
          c.train.labels.positive_actions = split_list(v);
        },
        [](const RunConfig& c) { return join(c.train.labels.positive_actions); }}},
      {"gradnorm.enabled", E2EG_BOOL(train.gradnorm.enabled)},
      {"gradnorm.gamma", E2EG_DOUBLE(train.gradnorm.gamma)},
      {"gradnorm.lr_w", E2EG_DOUBLE(train.gradnorm.lr_w)},
      {"gradnorm.warmup_steps", E2EG_SIZE(train.gradnorm.warmup_steps)},
      {"gradnorm.w_ssl_init", E2EG_DOUBLE(train.gradnorm.initial[kTaskSsl])},
      {"gradnorm.w_ltr_init", E2EG_DOUBLE(train.gradnorm.initial[kTaskLtr])},
      {"train.mode",
       {[](RunConfig& c, const std::string&, const std::string& v) { c.train.mode = parse_train_mode(v); },
        [](const RunConfig& c) { return std::string(train_mode_name(c.train.mode)); }}},
      {"train.fusion",
       {[](RunConfig& c, const std::string&, const std::string& v) { c.train.fusion = parse_fusion_mode(v); },
        [](const RunConfig& c) { return std::string(fusion_mode_name(c.train.fusion)); }}},
      {"train.ssl_target",
       {[](RunConfig& c, const std::string&, const std::string& v) { c.train.ssl_target = parse_ssl_target(v); },
        [](const RunConfig& c) { return std::string(ssl_target_name(c.train.ssl_target)); }}},
      {"train.lr", E2EG_DOUBLE(train.lr)},
      {"train.batch_size", E2EG_SIZE(train.batch_size)},
      {"train.epochs_per_day", E2EG_SIZE(train.epochs_per_day)},
  };
  return table;
}

#undef E2EG_DOUBLE
#undef E2EG_SIZE
#undef E2EG_BOOL

}  // namespace

RunConfig::RunConfig() {
  train.sampler = SamplerConfig{{10}, 1.0, 0};
  train.ssl_target = SslTarget::kFeatures;
  train.lr = 0.5;
  train.batch_size = 64;
  train.epochs_per_day = 2;
  sync_seeds();
}

void RunConfig::sync_seeds() {
  synth.seed = seed;
  train.seed = seed;
  train.sampler.seed = seed;
}

void RunConfig::validate() const {
  synth.validate();
  train.validate();
  if (!(swing_alpha > 0.0)) throw Error(ErrorCode::kConfig, "graph.alpha must be positive");
  if (swing_top_k == 0) throw Error(ErrorCode::kConfig, "graph.top_k must be positive");
  if (!(tau_target > 0.0 && tau_target < 1.0)) throw Error(ErrorCode::kConfig, "labels.tau_target must lie in (0, 1)");
  if (train.ssl_target == SslTarget::kFeatures && synth.item_feature_dim != train.model.encoder.dim)
    throw Error(ErrorCode::kConfig, "synth.item_feature_dim must equal encoder.dim for the feature target");
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto& f = fields();
  auto it = f.find(key);
  if (it == f.end()) throw Error(ErrorCode::kConfig, "unknown config key '" + key + "'");
  try {
    it->second.set(*this, key, value);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfig) throw;
    throw Error(ErrorCode::kConfig, "config key '" + key + "': " + e.what());
  }
  sync_seeds();
}

std::string RunConfig::get(const std::string& key) const {
  const auto& f = fields();
  auto it = f.find(key);
  if (it == f.end()) throw Error(ErrorCode::kConfig, "unknown config key '" + key + "'");
  return it->second.get(*this);
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& [name, _] : fields()) out.push_back(name);
    return out;
  }();
  return k;
}

std::string RunConfig::canonical() const {
  std::ostringstream os;
  for (const auto& [name, field] : fields()) os << name << " = " << field.get(*this) << '\n';
  return os.str();
}

std::uint64_t RunConfig::hash() const { return fnv1a64(canonical()); }

std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::set<std::string> seen;
  std::stringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::kConfig, "config line " + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw Error(ErrorCode::kConfig, "config line " + std::to_string(lineno) + ": empty key");
    if (!seen.insert(key).second)
      throw Error(ErrorCode::kConfig, "config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig c;
  for (const auto& [k, v] : parse_key_values(text)) c.set(k, v);
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::vector<std::vector<std::pair<std::string, std::string>>> expand_grid(const std::string& text) {
  const auto axes = parse_key_values(text);
  std::vector<std::vector<std::pair<std::string, std::string>>> out{{}};
  for (const auto& [key, values] : axes) {
    const auto vs = split_list(values, '|');
    if (vs.empty()) throw Error(ErrorCode::kConfig, "sweep axis '" + key + "' has no values");
    std::vector<std::vector<std::pair<std::string, std::string>>> next;
    for (const auto& prefix : out)
      for (const auto& v : vs) {
        auto combo = prefix;
        combo.emplace_back(key, v);
        next.push_back(std::move(combo));
      }
    out = std::move(next);
  }
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace e2eg
