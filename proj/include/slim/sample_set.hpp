// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "slim/image.hpp"

namespace slim {

/// A (clean, degraded) training or evaluation pair with its task label.
struct LabeledPair {
  Image clean;
  Image degraded;  // clamped, what the network sees
  int label = 0;
};

using SampleSet = std::vector<LabeledPair>;

}  // namespace slim
