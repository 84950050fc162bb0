// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "slim/arch.hpp"
#include "slim/selector.hpp"
#include "slim/wab.hpp"

// On-disk layout: "UWADN1", u64 little-endian header length, JSON header,
// then the payload of little-endian f32 tensors in manifest order.
namespace slim::pipeline {

inline constexpr std::string_view kCheckpointMagic = "UWADN1";

struct TensorBlob {
  std::string name;
  std::vector<int> shape;
  std::vector<float> values;
};

struct Checkpoint {
  std::string kind;  // "wab" or "selector"
  ArchConfig arch;
  nlohmann::json meta = nlohmann::json::object();  // free-form run metadata
  std::vector<TensorBlob> tensors;

  /// crc32 of the payload as 8 lowercase hex digits.
  std::string checksum() const;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
/// Throws BadMagicError, ChecksumError or ManifestError.
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
/// IoError if the file is missing or unreadable, otherwise as decode.
Checkpoint load_checkpoint(const std::string& path);

Checkpoint make_checkpoint(const wab::WabModel<float>& model, nlohmann::json meta = nlohmann::json::object());
Checkpoint make_checkpoint(const selector::SelectorModel<float>& model,
                           nlohmann::json meta = nlohmann::json::object());

/// Rebuilds a model. With `expected`, every differing architecture field is
/// named in a CompatibilityError.
wab::WabModel<float> to_wab(const Checkpoint& ckpt, const ArchConfig* expected = nullptr);
selector::SelectorModel<float> to_selector(const Checkpoint& ckpt, const ArchConfig* expected = nullptr);

/// Names of architecture fields that differ; empty when compatible.
std::vector<std::string> arch_mismatches(const ArchConfig& a, const ArchConfig& b);

nlohmann::json arch_to_json(const ArchConfig& arch);
ArchConfig arch_from_json(const nlohmann::json& j);

}  // namespace slim::pipeline
