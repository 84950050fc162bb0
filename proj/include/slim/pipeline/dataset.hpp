// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "slim/degrade.hpp"
#include "slim/pipeline/config.hpp"
#include "slim/sample_set.hpp"

// A dataset pack is a directory holding manifest.json and data.bin. The blob
// stores, per sample, the clean then the clamped degraded image as
// little-endian f32 in C x H x W order.
namespace slim::pipeline {

enum class Split { kTrain = 0, kEval = 1 };
std::string_view split_name(Split s);
Split parse_split(std::string_view name);

/// Enough to regenerate one sample from scratch.
struct SampleRecipe {
  degrade::Task task = degrade::Task::kNoise25;
  degrade::DegradationSpec spec;
  std::uint64_t clean_seed = 0;
  std::uint64_t deg_seed = 0;
};

struct DatasetPack {
  int size = 0;
  std::uint64_t seed = 0;
  Split split = Split::kTrain;
  std::vector<SampleRecipe> recipes;
  SampleSet samples;  // values already rounded to f32
};

/// Recipes are task-major: per_task samples of the first task, then the next.
DatasetPack synth_pack(const std::vector<TaskEntry>& tasks, int per_task, int size, std::uint64_t seed, Split split);

/// Rebuilds one sample from its recipe, rounded to f32 like the stored blob.
LabeledPair regenerate(const SampleRecipe& recipe, int size);

void write_pack(const DatasetPack& pack, const std::string& dir);
DatasetPack read_pack(const std::string& dir);

nlohmann::json spec_to_json(const degrade::DegradationSpec& spec);
degrade::DegradationSpec spec_from_json(const nlohmann::json& j);

/// Binary PPM (P6, maxval 255) of a 3-channel image; values are clamped and
/// rounded.
void write_ppm(const Image& img, const std::string& path);

}  // namespace slim::pipeline
