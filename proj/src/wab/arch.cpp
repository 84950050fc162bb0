// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "slim/arch.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "slim/error.hpp"

namespace slim {

std::vector<int> ArchConfig::widths() const {
  std::vector<int> out;
  out.reserve(ratios.size());
  for (double r : ratios) out.push_back(static_cast<int>(std::lround(r * omega)));
  return out;
}

int ArchConfig::width_index(int rho) const {
  const auto w = widths();
  const auto it = std::find(w.begin(), w.end(), rho);
  if (it == w.end()) throw WidthError("width " + std::to_string(rho) + " is not a candidate width");
  return static_cast<int>(it - w.begin());
}

void ArchConfig::validate() const {
  if (omega < 1) throw ConfigError("omega must be >= 1");
  if (ratios.empty()) throw ConfigError("ratios must not be empty");
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (!(ratios[i] > 0.0 && ratios[i] <= 1.0)) throw ConfigError("ratios must lie in (0,1]");
    if (i > 0 && !(ratios[i] > ratios[i - 1])) throw ConfigError("ratios must be strictly ascending");
  }
  if (ratios.back() != 1.0) throw ConfigError("the last ratio must be exactly 1");
  const auto w = widths();
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] < 1) throw ConfigError("every candidate width must be >= 1");
    if (i > 0 && w[i] <= w[i - 1]) throw ConfigError("ratios collapse to duplicate integer widths");
  }
  if (blocks < 0) throw ConfigError("blocks must be >= 0");
  if (c_de < 1) throw ConfigError("c_de must be >= 1");
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("kernel must be odd and >= 1");
  if (num_tasks < 1) throw ConfigError("num_tasks must be >= 1");
}

}  // namespace slim
