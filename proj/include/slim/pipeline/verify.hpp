// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace slim::pipeline {

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  double deviation = 0.0;  // worst measured value
  double tolerance = 0.0;
  std::string detail;
};

struct VerifyOptions {
  std::vector<std::string> suites;  // empty runs all
  std::uint64_t seed = 1;
  /// Perturbs one stored weight in the block only wider sub-networks read,
  /// after the prefix oracle has captured the weights. The prefix suite must
  /// then fail.
  bool mutate_slice = false;
};

struct VerifyReport {
  std::vector<CheckResult> checks;

  bool passed() const;
  std::string text() const;
  nlohmann::json to_json() const;
};

/// grad, slicing, prefix, degrade, losses
const std::vector<std::string>& verify_suite_names();

/// Throws ConfigError on an unknown suite name.
VerifyReport run_verify(const VerifyOptions& options);

}  // namespace slim::pipeline
