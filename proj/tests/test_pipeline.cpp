// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "slim/error.hpp"
#include "slim/pipeline/checkpoint.hpp"
#include "slim/pipeline/config.hpp"
#include "slim/pipeline/dataset.hpp"
#include "slim/pipeline/evaluate.hpp"
#include "slim/pipeline/verify.hpp"

using namespace slim;
using namespace slim::pipeline;
namespace fs = std::filesystem;

namespace {

ArchConfig small_arch() {
  ArchConfig a;
  a.omega = 10;
  a.blocks = 2;
  a.c_de = 4;
  return a;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("slim_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

// Splits an encoded checkpoint into its header JSON and payload.
std::pair<nlohmann::json, std::string> split(const std::string& bytes) {
  std::uint64_t len = 0;
  std::memcpy(&len, bytes.data() + 6, 8);
  return {nlohmann::json::parse(bytes.substr(14, len)), bytes.substr(14 + len)};
}

std::string join(const nlohmann::json& header, const std::string& payload) {
  const std::string h = header.dump(1);
  const std::uint64_t len = h.size();
  std::string out = "UWADN1";
  out.append(reinterpret_cast<const char*>(&len), 8);
  return out + h + payload;
}

}  // namespace

TEST(Config, RoundTrip) {
  for (auto profile : {Profile::kDesk, Profile::kFull}) {
    const auto c = default_config(profile);
    const auto text = format_config(c);
    const auto back = parse_config(text);
    EXPECT_EQ(format_config(back), text);
    EXPECT_EQ(back.arch, c.arch);
  }
}

TEST(Config, DeskDefaults) {
  const auto c = default_config(Profile::kDesk);
  EXPECT_EQ(c.arch.omega, 30);
  EXPECT_EQ(c.arch.widths(), (std::vector<int>{18, 21, 24, 27, 30}));
  EXPECT_EQ(c.ws.epochs, 20);
  EXPECT_DOUBLE_EQ(c.ws.lr, 0.01);
  EXPECT_DOUBLE_EQ(c.ws.target, 0.8);
  EXPECT_EQ(c.data.tasks.size(), 5u);
}

TEST(Config, UnknownKeysAndSections) {
  EXPECT_THROW(parse_config("[run]\nseed = 3\ncolour = red\n"), ConfigError);
  EXPECT_THROW(parse_config("[nonsense]\nx = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[arch]\nomega = banana\n"), ConfigError);
  EXPECT_EQ(parse_config("[run]\nseed = 42\n").seed, 42u);
}

TEST(Config, TaskCountMustMatchWidths) {
  EXPECT_THROW(parse_config("[arch]\nnum_tasks = 3\n"), ConfigError);
  EXPECT_THROW(parse_config("[arch]\nratios = 0.5, 0.9, 0.8, 1.0\nnum_tasks = 4\n"), ConfigError);
}

TEST(Config, TaskList) {
  const auto t = parse_task_list("noise25,rain,haze", 32);
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[1].task, degrade::Task::kRain);
  EXPECT_THROW(parse_task_list("noise25,fog", 32), ConfigError);
}

TEST(Checkpoint, RoundTripIsByteIdentical) {
  const auto model = wab::WabModel<float>::initialized(small_arch(), 3);
  const auto ckpt = make_checkpoint(model, {{"note", "x"}});
  const auto bytes = encode_checkpoint(ckpt);
  ASSERT_EQ(bytes.substr(0, 6), "UWADN1");
  const auto back = decode_checkpoint(bytes);
  EXPECT_EQ(encode_checkpoint(back), bytes);
  EXPECT_EQ(back.arch, small_arch());
  EXPECT_EQ(back.meta.at("note"), "x");

  const auto restored = to_wab(back);
  const auto a = model.parameters(), b = restored.parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    ASSERT_EQ(std::memcmp(a[i].ptr(), b[i].ptr(), a[i].numel() * sizeof(float)), 0);

  const auto dir = scratch("ckpt");
  save_checkpoint(ckpt, (dir / "m.ckpt").string());
  EXPECT_EQ(slurp(dir / "m.ckpt"), bytes);
  EXPECT_EQ(encode_checkpoint(load_checkpoint((dir / "m.ckpt").string())), bytes);
}

TEST(Checkpoint, SelectorRoundTrip) {
  const auto sel = selector::SelectorModel<float>::initialized(small_arch(), 4);
  const auto bytes = encode_checkpoint(make_checkpoint(sel, {{"target_t", 0.8}}));
  const auto back = decode_checkpoint(bytes);
  EXPECT_EQ(back.kind, "selector");
  EXPECT_DOUBLE_EQ(back.meta.at("target_t").get<double>(), 0.8);
  EXPECT_EQ(to_selector(back).parameter_count(), sel.parameter_count());
  EXPECT_THROW(to_wab(back), CompatibilityError);
}

TEST(Checkpoint, CorruptionIsRejected) {
  const auto bytes = encode_checkpoint(make_checkpoint(wab::WabModel<float>::initialized(small_arch(), 5)));
  auto flipped = bytes;
  flipped[flipped.size() - 17] ^= 0x01;
  EXPECT_THROW(decode_checkpoint(flipped), ChecksumError);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad_magic), BadMagicError);
  EXPECT_THROW(decode_checkpoint("UWA"), BadMagicError);

  EXPECT_THROW(decode_checkpoint(bytes.substr(0, 20)), ManifestError);
}

TEST(Checkpoint, ManifestErrors) {
  const auto bytes = encode_checkpoint(make_checkpoint(wab::WabModel<float>::initialized(small_arch(), 6)));
  const auto [header, payload] = split(bytes);
  ASSERT_NO_THROW(decode_checkpoint(join(header, payload)));

  auto overlap = header;
  overlap["tensors"][1]["offset"] = 0;
  EXPECT_THROW(decode_checkpoint(join(overlap, payload)), ManifestError);

  auto overflow = header;
  auto& last = overflow["tensors"].back();
  last["nbytes"] = last["nbytes"].get<std::uint64_t>() + 4;
  last["shape"] = nlohmann::json::array({static_cast<int>(last["nbytes"].get<std::uint64_t>() / 4)});
  EXPECT_THROW(decode_checkpoint(join(overflow, payload)), ManifestError);

  auto wrong_shape = header;
  wrong_shape["tensors"][0]["shape"] = nlohmann::json::array({1, 2, 3});
  EXPECT_THROW(decode_checkpoint(join(wrong_shape, payload)), ManifestError);
}

TEST(Checkpoint, MismatchedArchNamesField) {
  const auto ckpt = make_checkpoint(wab::WabModel<float>::initialized(small_arch(), 7));
  auto other = small_arch();
  other.omega = 12;
  try {
    to_wab(ckpt, &other);
    FAIL() << "expected CompatibilityError";
  } catch (const CompatibilityError& e) {
    EXPECT_NE(std::string(e.what()).find("omega"), std::string::npos) << e.what();
  }
  EXPECT_EQ(arch_mismatches(small_arch(), other), std::vector<std::string>{"omega"});
  EXPECT_EQ(arch_from_json(arch_to_json(other)), other);
}

TEST(Checkpoint, SameSeedTrainingSameChecksum) {
  const auto tasks = parse_task_list("noise25,rain,haze", 12);
  const auto pack = synth_pack(tasks, 4, 12, 3, Split::kTrain);
  wab::WabTrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch = 4;
  const auto a = make_checkpoint(wab::train_wab(small_arch(), cfg, pack.samples).model);
  const auto b = make_checkpoint(wab::train_wab(small_arch(), cfg, pack.samples).model);
  EXPECT_EQ(a.checksum(), b.checksum());
  cfg.seed = 2;
  const auto c = make_checkpoint(wab::train_wab(small_arch(), cfg, pack.samples).model);
  EXPECT_NE(a.checksum(), c.checksum());
}

TEST(Dataset, CountsAndDeterminism) {
  const auto tasks = parse_task_list("noise25,rain,haze", 32);
  const auto a = synth_pack(tasks, 60, 32, 7, Split::kTrain);
  ASSERT_EQ(a.samples.size(), 180u);
  std::map<int, int> per;
  for (const auto& s : a.samples) ++per[s.label];
  EXPECT_EQ(per, (std::map<int, int>{{1, 60}, {3, 60}, {4, 60}}));

  const auto d1 = scratch("pack1"), d2 = scratch("pack2");
  write_pack(a, d1.string());
  write_pack(synth_pack(tasks, 60, 32, 7, Split::kTrain), d2.string());
  EXPECT_EQ(slurp(d1 / "manifest.json"), slurp(d2 / "manifest.json"));
  EXPECT_EQ(slurp(d1 / "data.bin"), slurp(d2 / "data.bin"));

  const auto e = synth_pack(tasks, 60, 32, 7, Split::kEval);
  EXPECT_NE(e.samples[0].clean.data, a.samples[0].clean.data);
}

TEST(Dataset, RegenerationFromManifest) {
  const auto tasks = parse_task_list("noise50,rain,haze", 16);
  const auto dir = scratch("pack3");
  write_pack(synth_pack(tasks, 5, 16, 11, Split::kTrain), dir.string());
  const auto pack = read_pack(dir.string());
  ASSERT_EQ(pack.samples.size(), 15u);
  for (std::size_t i = 0; i < pack.samples.size(); ++i) {
    const auto r = regenerate(pack.recipes[i], pack.size);
    EXPECT_EQ(r.clean.data, pack.samples[i].clean.data) << i;
    EXPECT_EQ(r.degraded.data, pack.samples[i].degraded.data) << i;
    EXPECT_EQ(r.label, pack.samples[i].label);
  }
  EXPECT_THROW(read_pack((dir / "missing").string()), Error);
}

TEST(Dataset, SpecJsonRoundTrip) {
  for (int t = 0; t < degrade::kNumTasks; ++t) {
    auto spec = degrade::default_spec(static_cast<degrade::Task>(t), 32, 32);
    spec.noise_sigma = 0.03;
    const auto j = spec_to_json(spec);
    EXPECT_EQ(spec_to_json(spec_from_json(j)), j);
  }
}

TEST(Dataset, PpmExport) {
  const auto dir = scratch("ppm");
  Image img(3, 4, 5, 0.5);
  write_ppm(img, (dir / "a.ppm").string());
  const auto bytes = slurp(dir / "a.ppm");
  EXPECT_EQ(bytes.substr(0, 2), "P6");
  EXPECT_EQ(bytes.size(), std::string("P6\n5 4\n255\n").size() + 60);
}

TEST(Evaluate, FixedWidthFlopsRatio) {
  const ArchConfig arch;
  const auto wab = wab::WabModel<float>::initialized(arch, 8);
  const auto pack = synth_pack(parse_task_list("noise25,rain,haze", 32), 2, 32, 8, Split::kEval);
  const auto full = evaluate_fixed(wab, pack.samples, 1.0);
  const auto small = evaluate_fixed(wab, pack.samples, 0.6);
  const double r = small.mean_flops / full.mean_flops;
  EXPECT_GE(r, 0.33);
  EXPECT_LE(r, 0.42);
  EXPECT_EQ(full.tasks.size(), 3u);
  EXPECT_EQ(full.mean_flops, static_cast<double>(full.full_width_flops));
  EXPECT_EQ(small.params, full.params);
  EXPECT_THROW(evaluate_fixed(wab, pack.samples, 0.65), WidthError);

  const auto csv = report_csv(full);
  EXPECT_NE(csv.find("haze"), std::string::npos);
  const auto j = report_json(full);
  EXPECT_EQ(j.at("tasks").size(), 3u);
}

TEST(Evaluate, RoutedReportsPerTaskRatios) {
  const auto arch = small_arch();
  const auto wab = wab::WabModel<float>::initialized(arch, 9);
  selector::SelectorModel<float> sel(arch);
  const auto pack = synth_pack(parse_task_list("noise25,rain,haze", 16), 2, 16, 9, Split::kEval);
  const auto r = evaluate_routed(wab, sel, pack.samples);
  EXPECT_EQ(r.mode, "routed");
  for (const auto& t : r.tasks) EXPECT_DOUBLE_EQ(t.mean_ratio, 0.6);  // zero selector picks the smallest width
}

TEST(Evaluate, SweepHasOneRowPerTarget) {
  const auto arch = small_arch();
  const auto wab = wab::WabModel<float>::initialized(arch, 10);
  const auto train = synth_pack(parse_task_list("noise25,rain,haze", 12), 3, 12, 10, Split::kTrain);
  const auto eval = synth_pack(parse_task_list("noise25,rain,haze", 12), 2, 12, 10, Split::kEval);
  selector::WsTrainConfig cfg;
  cfg.epochs = 2;
  const auto rows = sweep_targets(wab, train.samples, eval.samples, {0.6, 0.8, 1.0}, cfg);
  ASSERT_EQ(rows.size(), 3u);
  const auto csv = sweep_csv(rows);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);  // header + rows
}

TEST(Evaluate, TrainedModelBeatsIdentity) {
  auto arch = small_arch();
  const auto train = synth_pack(parse_task_list("noise50", 16), 48, 16, 12, Split::kTrain);
  wab::WabTrainConfig cfg;
  cfg.epochs = 8;
  cfg.batch = 8;
  cfg.lr = 3e-3;
  const auto model = wab::train_wab(arch, cfg, train.samples).model;
  const auto r = evaluate_fixed(model, train.samples, 1.0);
  ASSERT_EQ(r.tasks.size(), 1u);
  EXPECT_GT(r.tasks[0].psnr, r.tasks[0].psnr_input);
}

TEST(Verify, AllSuitesPass) {
  const auto r = run_verify({});
  EXPECT_TRUE(r.passed()) << r.text();
  std::map<std::string, int> per;
  for (const auto& c : r.checks) ++per[c.suite];
  for (const auto& s : verify_suite_names()) EXPECT_GT(per[s], 0) << s;
}

TEST(Verify, MutationIsCaught) {
  VerifyOptions opt;
  opt.mutate_slice = true;
  const auto r = run_verify(opt);
  EXPECT_FALSE(r.passed());
  for (const auto& c : r.checks)
    if (!c.passed) {
      EXPECT_EQ(c.suite, "prefix") << c.name;
    }
}

TEST(Verify, SuiteFilter) {
  VerifyOptions opt;
  opt.suites = {"degrade"};
  const auto r = run_verify(opt);
  ASSERT_FALSE(r.checks.empty());
  for (const auto& c : r.checks) EXPECT_EQ(c.suite, "degrade");
  opt.suites = {"nope"};
  EXPECT_THROW(run_verify(opt), ConfigError);
}
