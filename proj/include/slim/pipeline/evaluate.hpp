// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "slim/sample_set.hpp"
#include "slim/selector.hpp"
#include "slim/wab.hpp"

namespace slim::pipeline {

struct TaskMetrics {
  int label = 0;
  std::string task;
  int count = 0;
  double psnr_input = 0.0;  // degraded vs clean
  double ssim_input = 0.0;
  double psnr = 0.0;        // restored vs clean
  double ssim = 0.0;
  double mean_ratio = 0.0;  // chosen width / omega
  double mean_flops = 0.0;
};

struct EvalReport {
  std::string mode;          // "fixed" or "routed"
  double fixed_ratio = 0.0;  // fixed mode only
  std::vector<TaskMetrics> tasks;  // ascending label
  // Unweighted means over tasks.
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  double mean_ratio = 0.0;
  double mean_flops = 0.0;
  std::int64_t full_width_flops = 0;
  std::int64_t params = 0;
};

/// Index of a width ratio among the candidates; WidthError if absent.
int ratio_index(const ArchConfig& arch, double ratio);

EvalReport evaluate_fixed(const wab::WabModel<float>& wab, const SampleSet& data, double ratio, int batch = 32);
EvalReport evaluate_routed(const wab::WabModel<float>& wab, const selector::SelectorModel<float>& sel,
                           const SampleSet& data, int batch = 32);

nlohmann::json report_json(const EvalReport& report);
/// One row per task plus an "average" row.
std::string report_csv(const EvalReport& report);

struct SweepRow {
  double target = 0.0;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  double mean_flops = 0.0;
  double mean_ratio = 0.0;
  std::vector<double> task_ratios;  // same order as the eval report's tasks
};

/// Trains one selector per target with the same seed and evaluates each.
/// Backbone features for the training set are extracted once and shared.
std::vector<SweepRow> sweep_targets(const wab::WabModel<float>& wab, const SampleSet& train, const SampleSet& eval,
                                    const std::vector<double>& targets, selector::WsTrainConfig config);

std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace slim::pipeline
