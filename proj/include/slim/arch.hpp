// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

namespace slim {

/// Shape hyperparameters shared by the backbone, the selector and the cost
/// model.
struct ArchConfig {
  int omega = 30;                                       // maximum width
  std::vector<double> ratios{0.6, 0.7, 0.8, 0.9, 1.0};  // ascending, last == 1
  int blocks = 4;                                       // residual blocks in the trunk
  int c_de = 8;                                         // degradation-encoding channels
  int kernel = 3;
  int num_tasks = 5;

  /// round(ratio * omega) for every candidate.
  std::vector<int> widths() const;
  int num_widths() const { return static_cast<int>(ratios.size()); }
  /// Index of a width in widths(); throws WidthError if it is not a candidate.
  int width_index(int rho) const;
  /// Throws ConfigError on any violated invariant.
  void validate() const;

  bool operator==(const ArchConfig&) const = default;
};

}  // namespace slim
