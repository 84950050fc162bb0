// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slim/arch.hpp"
#include "slim/degrade.hpp"
#include "slim/selector.hpp"
#include "slim/wab.hpp"

namespace slim::pipeline {

enum class Profile { kDesk, kFull };

std::string_view profile_name(Profile p);
Profile parse_profile(std::string_view name);

struct TaskEntry {
  degrade::Task task = degrade::Task::kNoise25;
  degrade::DegradationSpec spec;
};

struct DataConfig {
  int size = 32;               // square patch side
  int train_per_task = 100;
  int eval_per_task = 20;
  std::vector<TaskEntry> tasks;
};

/// Every knob of a run. Defaults come from a profile; a config file then
/// overrides individual keys.
struct RunConfig {
  Profile profile = Profile::kDesk;
  std::uint64_t seed = 1;
  ArchConfig arch;
  wab::WabTrainConfig wab;
  selector::WsTrainConfig ws;
  DataConfig data;

  /// Throws ConfigError on any violated invariant, including K != n.
  void validate() const;
};

RunConfig default_config(Profile profile);

/// Parses the sectioned key = value format. Keys not in the schema are
/// errors. The [run] profile key, if present, picks the defaults the rest of
/// the file overrides.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Writes a config back out; parse_config(format_config(c)) == c.
std::string format_config(const RunConfig& config);

/// Parses a comma-separated task list ("noise25,rain,haze") into entries with
/// default specs for the given patch size.
std::vector<TaskEntry> parse_task_list(const std::string& list, int size);

}  // namespace slim::pipeline
