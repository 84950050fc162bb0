// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "slim/pipeline/checkpoint.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "slim/error.hpp"

namespace slim::pipeline {
namespace {

using nlohmann::json;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

std::string payload_of(const std::vector<TensorBlob>& tensors) {
  std::string out;
  for (const auto& t : tensors) {
    for (float f : t.values) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

std::string crc_hex(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks for large payloads.
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t n = std::min<std::size_t>(bytes.size() - pos, 1u << 30);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + pos), static_cast<uInt>(n));
    pos += n;
  }
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08lx", static_cast<unsigned long>(crc));
  return buf;
}

template <typename Named>
std::vector<TensorBlob> blobs_of(const std::vector<Named>& params) {
  std::vector<TensorBlob> out;
  for (const auto& p : params) {
    const auto d = p.tensor.data();
    out.push_back({p.name, p.tensor.shape(), std::vector<float>(d.begin(), d.end())});
  }
  return out;
}

template <typename Named>
void fill_params(const Checkpoint& ckpt, const std::vector<Named>& params) {
  std::map<std::string, const TensorBlob*> by_name;
  for (const auto& t : ckpt.tensors) by_name[t.name] = &t;
  if (by_name.size() != params.size()) {
    throw ManifestError("checkpoint holds " + std::to_string(by_name.size()) + " tensors, model expects " +
                        std::to_string(params.size()));
  }
  for (const auto& p : params) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw ManifestError("checkpoint is missing tensor '" + p.name + "'");
    if (it->second->shape != p.tensor.shape()) {
      throw ManifestError("tensor '" + p.name + "' has shape " + shape_str(it->second->shape) + ", model expects " +
                          shape_str(p.tensor.shape()));
    }
    std::copy(it->second->values.begin(), it->second->values.end(), p.tensor.data().begin());
  }
}

void check_kind(const Checkpoint& ckpt, std::string_view kind) {
  if (ckpt.kind != kind) {
    throw CompatibilityError("expected a " + std::string(kind) + " checkpoint, got '" + ckpt.kind + "'");
  }
}

void check_expected(const ArchConfig& stored, const ArchConfig* expected) {
  if (!expected) return;
  const auto bad = arch_mismatches(*expected, stored);
  if (bad.empty()) return;
  std::string msg = "checkpoint architecture differs in:";
  for (const auto& f : bad) msg += " " + f;
  throw CompatibilityError(msg);
}

}  // namespace

std::vector<std::string> arch_mismatches(const ArchConfig& a, const ArchConfig& b) {
  std::vector<std::string> bad;
  if (a.omega != b.omega) bad.push_back("omega");
  if (a.ratios != b.ratios) bad.push_back("ratios");
  if (a.blocks != b.blocks) bad.push_back("blocks");
  if (a.c_de != b.c_de) bad.push_back("c_de");
  if (a.kernel != b.kernel) bad.push_back("kernel");
  if (a.num_tasks != b.num_tasks) bad.push_back("num_tasks");
  return bad;
}

json arch_to_json(const ArchConfig& a) {
  return {{"omega", a.omega},   {"ratios", a.ratios}, {"blocks", a.blocks},
          {"c_de", a.c_de},     {"kernel", a.kernel}, {"num_tasks", a.num_tasks}};
}

ArchConfig arch_from_json(const json& j) {
  try {
    ArchConfig a;
    a.omega = j.at("omega").get<int>();
    a.ratios = j.at("ratios").get<std::vector<double>>();
    a.blocks = j.at("blocks").get<int>();
    a.c_de = j.at("c_de").get<int>();
    a.kernel = j.at("kernel").get<int>();
    a.num_tasks = j.at("num_tasks").get<int>();
    a.validate();
    return a;
  } catch (const json::exception& e) {
    throw ManifestError(std::string("bad architecture block: ") + e.what());
  } catch (const ConfigError& e) {
    throw ManifestError(std::string("bad architecture block: ") + e.what());
  }
}

std::string Checkpoint::checksum() const { return crc_hex(payload_of(tensors)); }

std::string encode_checkpoint(const Checkpoint& ckpt) {
  const std::string payload = payload_of(ckpt.tensors);
  json manifest = json::array();
  std::uint64_t offset = 0;
  for (const auto& t : ckpt.tensors) {
    if (shape_numel(t.shape) != t.values.size()) throw ManifestError("tensor '" + t.name + "' value count mismatch");
    const std::uint64_t nbytes = 4 * t.values.size();
    manifest.push_back({{"name", t.name}, {"shape", t.shape}, {"dtype", "f32"}, {"offset", offset}, {"nbytes", nbytes}});
    offset += nbytes;
  }
  const json header = {{"format", std::string(kCheckpointMagic)},
                       {"kind", ckpt.kind},
                       {"arch", arch_to_json(ckpt.arch)},
                       {"meta", ckpt.meta},
                       {"tensors", manifest},
                       {"payload_bytes", payload.size()},
                       {"checksum", "crc32:" + crc_hex(payload)}};
  const std::string text = header.dump(1);
  std::string out(kCheckpointMagic);
  put_u64(out, text.size());
  out += text;
  out += payload;
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  const std::size_t prefix = kCheckpointMagic.size() + 8;
  if (bytes.size() < prefix || bytes.substr(0, kCheckpointMagic.size()) != kCheckpointMagic) {
    throw BadMagicError("not a checkpoint: missing UWADN1 magic");
  }
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint64_t header_len = get_u64(raw + kCheckpointMagic.size());
  if (header_len > bytes.size() - prefix) throw ManifestError("header length runs past end of file");

  json header;
  try {
    header = json::parse(bytes.substr(prefix, header_len));
  } catch (const json::exception& e) {
    throw ManifestError(std::string("unreadable header: ") + e.what());
  }
  const std::string_view payload = bytes.substr(prefix + header_len);

  Checkpoint ckpt;
  try {
    if (header.at("format").get<std::string>() != kCheckpointMagic) throw ManifestError("header format tag mismatch");
    if (header.at("payload_bytes").get<std::uint64_t>() != payload.size()) {
      throw ManifestError("payload is " + std::to_string(payload.size()) + " bytes, header declares " +
                          std::to_string(header.at("payload_bytes").get<std::uint64_t>()));
    }
    const std::string want = header.at("checksum").get<std::string>();
    const std::string got = "crc32:" + crc_hex(payload);
    if (want != got) throw ChecksumError("payload checksum " + got + " does not match header " + want);

    ckpt.kind = header.at("kind").get<std::string>();
    ckpt.arch = arch_from_json(header.at("arch"));
    ckpt.meta = header.at("meta");

    std::uint64_t expect_offset = 0;
    for (const auto& m : header.at("tensors")) {
      TensorBlob t;
      t.name = m.at("name").get<std::string>();
      t.shape = m.at("shape").get<std::vector<int>>();
      if (m.at("dtype").get<std::string>() != "f32") throw ManifestError("tensor '" + t.name + "' is not f32");
      const auto offset = m.at("offset").get<std::uint64_t>();
      const auto nbytes = m.at("nbytes").get<std::uint64_t>();
      std::size_t numel = 0;
      try {
        numel = shape_numel(t.shape);
      } catch (const Error&) {
        throw ManifestError("tensor '" + t.name + "' has an invalid shape");
      }
      if (nbytes != 4ULL * numel) throw ManifestError("tensor '" + t.name + "' byte count disagrees with its shape");
      // Tensors are packed back to back: this rules out overlap and gaps.
      if (offset != expect_offset) throw ManifestError("tensor '" + t.name + "' offset overlaps or leaves a gap");
      if (offset + nbytes > payload.size()) throw ManifestError("tensor '" + t.name + "' extends past the payload");
      t.values.resize(numel);
      const auto* p = reinterpret_cast<const unsigned char*>(payload.data()) + offset;
      for (std::size_t i = 0; i < numel; ++i) t.values[i] = std::bit_cast<float>(get_u32(p + 4 * i));
      expect_offset = offset + nbytes;
      ckpt.tensors.push_back(std::move(t));
    }
    if (expect_offset != payload.size()) throw ManifestError("payload has trailing bytes outside the manifest");
  } catch (const json::exception& e) {
    throw ManifestError(std::string("malformed header: ") + e.what());
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const std::string bytes = encode_checkpoint(ckpt);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write checkpoint " + path);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("short write to " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read checkpoint " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return decode_checkpoint(ss.str());
}

Checkpoint make_checkpoint(const wab::WabModel<float>& model, json meta) {
  return {"wab", model.arch(), std::move(meta), blobs_of(model.named_parameters())};
}

Checkpoint make_checkpoint(const selector::SelectorModel<float>& model, json meta) {
  return {"selector", model.arch(), std::move(meta), blobs_of(model.named_parameters())};
}

wab::WabModel<float> to_wab(const Checkpoint& ckpt, const ArchConfig* expected) {
  check_kind(ckpt, "wab");
  check_expected(ckpt.arch, expected);
  wab::WabModel<float> m(ckpt.arch);
  fill_params(ckpt, m.named_parameters());
  return m;
}

selector::SelectorModel<float> to_selector(const Checkpoint& ckpt, const ArchConfig* expected) {
  check_kind(ckpt, "selector");
  check_expected(ckpt.arch, expected);
  selector::SelectorModel<float> m(ckpt.arch);
  fill_params(ckpt, m.named_parameters());
  return m;
}

}  // namespace slim::pipeline
