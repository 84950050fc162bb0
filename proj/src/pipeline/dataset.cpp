// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "slim/pipeline/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "slim/error.hpp"
#include "slim/rng.hpp"

namespace slim::pipeline {
namespace {

using nlohmann::json;

Image round_f32(const Image& img) {
  Image out = img;
  for (double& v : out.data) v = static_cast<double>(static_cast<float>(v));
  return out;
}

void append_f32(std::string& out, const Image& img) {
  for (double v : img.data) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
}

Image read_f32(const unsigned char*& p, int size) {
  Image img(3, size, size);
  for (double& v : img.data) {
    const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
                               static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
    v = static_cast<double>(std::bit_cast<float>(bits));
    p += 4;
  }
  return img;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("short write to " + path.string());
}

}  // namespace

std::string_view split_name(Split s) { return s == Split::kTrain ? "train" : "eval"; }

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "eval") return Split::kEval;
  throw ConfigError("unknown split '" + std::string(name) + "' (expected train or eval)");
}

json spec_to_json(const degrade::DegradationSpec& spec) {
  json j = {{"noise_sigma", spec.noise_sigma}};
  if (const auto* n = std::get_if<degrade::NoiseSpec>(&spec.kind)) {
    j["type"] = "noise";
    j["sigma"] = n->sigma;
  } else if (const auto* r = std::get_if<degrade::RainSpec>(&spec.kind)) {
    j["type"] = "rain";
    j["streaks"] = r->streaks;
    j["length"] = r->length;
    j["angle"] = r->angle;
    j["intensity"] = r->intensity;
    j["thickness"] = r->thickness;
  } else {
    const auto& h = std::get<degrade::HazeSpec>(spec.kind);
    j["type"] = "haze";
    j["beta"] = h.beta;
    j["airlight"] = h.airlight;
    j["mode"] = h.mode == degrade::HazeMode::kPaper ? "paper" : "scattering";
  }
  return j;
}

degrade::DegradationSpec spec_from_json(const json& j) {
  try {
    degrade::DegradationSpec spec;
    spec.noise_sigma = j.at("noise_sigma").get<double>();
    const auto type = j.at("type").get<std::string>();
    if (type == "noise") {
      spec.kind = degrade::NoiseSpec{j.at("sigma").get<double>()};
    } else if (type == "rain") {
      degrade::RainSpec r;
      r.streaks = j.at("streaks").get<int>();
      r.length = j.at("length").get<double>();
      r.angle = j.at("angle").get<double>();
      r.intensity = j.at("intensity").get<double>();
      r.thickness = j.at("thickness").get<double>();
      spec.kind = r;
    } else if (type == "haze") {
      degrade::HazeSpec h;
      h.beta = j.at("beta").get<double>();
      h.airlight = j.at("airlight").get<double>();
      const auto mode = j.at("mode").get<std::string>();
      if (mode != "paper" && mode != "scattering") throw ConfigError("unknown haze mode '" + mode + "'");
      h.mode = mode == "paper" ? degrade::HazeMode::kPaper : degrade::HazeMode::kScattering;
      spec.kind = h;
    } else {
      throw ConfigError("unknown degradation type '" + type + "'");
    }
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed degradation spec: ") + e.what());
  }
}

LabeledPair regenerate(const SampleRecipe& r, int size) {
  const auto s = degrade::make_sample(r.spec, static_cast<int>(r.task), r.clean_seed, r.deg_seed, size, size);
  return {round_f32(s.clean), round_f32(s.degraded), s.task_label};
}

DatasetPack synth_pack(const std::vector<TaskEntry>& tasks, int per_task, int size, std::uint64_t seed, Split split) {
  if (tasks.empty()) throw ConfigError("synth: no tasks");
  if (per_task < 1) throw ConfigError("synth: count must be >= 1");
  DatasetPack pack;
  pack.size = size;
  pack.seed = seed;
  pack.split = split;
  for (const auto& t : tasks) {
    t.spec.validate();
    const std::uint64_t base = derive_seed(seed, 16 * static_cast<std::uint64_t>(split) + static_cast<std::uint64_t>(t.task));
    for (int i = 0; i < per_task; ++i) {
      SampleRecipe r{t.task, t.spec, derive_seed(base, 2 * static_cast<std::uint64_t>(i)),
                     derive_seed(base, 2 * static_cast<std::uint64_t>(i) + 1)};
      pack.samples.push_back(regenerate(r, size));
      pack.recipes.push_back(std::move(r));
    }
  }
  return pack;
}

void write_pack(const DatasetPack& pack, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());

  json samples = json::array();
  std::string blob;
  for (std::size_t i = 0; i < pack.recipes.size(); ++i) {
    const auto& r = pack.recipes[i];
    samples.push_back({{"task", degrade::task_name(r.task)},
                       {"label", static_cast<int>(r.task)},
                       {"clean_seed", r.clean_seed},
                       {"deg_seed", r.deg_seed},
                       {"spec", spec_to_json(r.spec)}});
    append_f32(blob, pack.samples[i].clean);
    append_f32(blob, pack.samples[i].degraded);
  }
  const json manifest = {{"format", "slim-pack-1"},
                         {"split", split_name(pack.split)},
                         {"seed", pack.seed},
                         {"size", pack.size},
                         {"channels", 3},
                         {"count", pack.recipes.size()},
                         {"blob", "data.bin"},
                         {"layout", "per sample: clean f32[3*size*size], degraded f32[3*size*size], little-endian"},
                         {"samples", samples}};
  const std::filesystem::path root(dir);
  write_file(root / "manifest.json", manifest.dump(1) + "\n");
  write_file(root / "data.bin", blob);
}

DatasetPack read_pack(const std::string& dir) {
  const std::filesystem::path root(dir);
  json manifest;
  try {
    manifest = json::parse(read_file(root / "manifest.json"));
  } catch (const json::exception& e) {
    throw ConfigError("unreadable manifest in " + dir + ": " + e.what());
  }
  DatasetPack pack;
  const std::string blob = read_file(root / "data.bin");
  try {
    if (manifest.at("format").get<std::string>() != "slim-pack-1") throw ConfigError("unknown pack format in " + dir);
    pack.size = manifest.at("size").get<int>();
    pack.seed = manifest.at("seed").get<std::uint64_t>();
    pack.split = parse_split(manifest.at("split").get<std::string>());
    const std::size_t per = 3 * static_cast<std::size_t>(pack.size) * pack.size;
    const auto& samples = manifest.at("samples");
    if (blob.size() != samples.size() * 2 * per * 4) {
      throw ConfigError("data.bin is " + std::to_string(blob.size()) + " bytes, manifest implies " +
                        std::to_string(samples.size() * 2 * per * 4));
    }
    const auto* p = reinterpret_cast<const unsigned char*>(blob.data());
    for (const auto& s : samples) {
      SampleRecipe r;
      r.task = degrade::parse_task(s.at("task").get<std::string>());
      r.spec = spec_from_json(s.at("spec"));
      r.clean_seed = s.at("clean_seed").get<std::uint64_t>();
      r.deg_seed = s.at("deg_seed").get<std::uint64_t>();
      LabeledPair pair;
      pair.clean = read_f32(p, pack.size);
      pair.degraded = read_f32(p, pack.size);
      pair.label = static_cast<int>(r.task);
      pack.samples.push_back(std::move(pair));
      pack.recipes.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw ConfigError("malformed manifest in " + dir + ": " + e.what());
  }
  return pack;
}

void write_ppm(const Image& img, const std::string& path) {
  if (img.channels != 3) throw DimensionError("PPM export needs 3 channels");
  std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(img.at(c, y, x), 0.0, 1.0);
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
      }
    }
  }
  write_file(path, out);
}

}  // namespace slim::pipeline
