// SPDX-FileCopyrightText: Copyright (c) 2026 The e2egrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "e2egrec/synth.hpp"
#include "e2egrec/trainer.hpp"

namespace e2eg {

/// Every tunable of the pipeline. Defaults are the desk-scale preset used by
/// the directional experiment.
struct RunConfig {
  std::uint64_t seed = 1;
  SynthConfig synth;
  double swing_alpha = 1.0;
  std::size_t swing_top_k = 100;
  TrainConfig train;
  bool auto_tau = true;        ///< choose labels.tau from the history log
  double tau_target = 0.5;     ///< base rate targeted by auto_tau

  RunConfig();

  /// Resolved seeds: synth.seed and train.seed follow `seed`.
  void sync_seeds();
  void validate() const;

  /// Applies one `key = value` assignment. Throws Error(kConfig) for unknown
  /// keys or malformed values.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();

  /// Every key with its resolved value, one `key = value` per line, sorted.
  std::string canonical() const;
  /// FNV-1a of canonical().
  std::uint64_t hash() const;
};

/// Parses `key = value` lines; '#' starts a comment; blank lines ignored.
/// Duplicate keys are rejected.
std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text);

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Sweep grid: `key = v1 | v2 | ...` per line. Expands to the cartesian
/// product in key order of appearance, first key slowest.
std::vector<std::vector<std::pair<std::string, std::string>>> expand_grid(const std::string& text);

std::string hex64(std::uint64_t v);

}  // namespace e2eg
