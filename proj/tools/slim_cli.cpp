// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: dataset synthesis, two-stage training, evaluation,
// sparsity sweeps, invariant verification and PPM export.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "slim/error.hpp"
#include "slim/metrics.hpp"
#include "slim/pipeline/checkpoint.hpp"
#include "slim/pipeline/config.hpp"
#include "slim/pipeline/dataset.hpp"
#include "slim/pipeline/evaluate.hpp"
#include "slim/pipeline/verify.hpp"

namespace fs = std::filesystem;
using namespace slim;
using namespace slim::pipeline;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string profile;
  std::string out = "out";
};

RunConfig resolve(const Globals& g) {
  RunConfig c = g.config_path.empty() ? default_config(Profile::kDesk) : load_config(g.config_path);
  if (!g.profile.empty()) {
    const Profile p = parse_profile(g.profile);
    if (g.config_path.empty()) {
      c = default_config(p);
    } else if (p != c.profile) {
      throw ConfigError("--profile " + g.profile + " contradicts the config file's profile");
    }
  }
  if (g.seed) c.seed = c.wab.seed = c.ws.seed = *g.seed;
  c.validate();
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
}

fs::path out_dir(const Globals& g) {
  fs::create_directories(g.out);
  return fs::path(g.out);
}

// The architecture is checked against the run config only when one was given
// explicitly; otherwise the checkpoint's own header is authoritative.
wab::WabModel<float> load_wab(const std::string& path, const Globals& g) {
  if (path.empty() || !fs::exists(path)) {
    throw LoadError("no WAB checkpoint at '" + path + "'; run train-wab first");
  }
  if (g.config_path.empty()) return to_wab(load_checkpoint(path));
  const RunConfig config = resolve(g);
  return to_wab(load_checkpoint(path), &config.arch);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Width-adaptive image restoration: training, routing and verification"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "Run configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Override the run seed");
  app.add_option("--profile", g.profile, "desk or full")->check(CLI::IsMember({"desk", "full"}));
  app.add_option("--out", g.out, "Output directory");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a dataset pack");
  std::string synth_tasks;
  int synth_count = 0;
  int synth_size = 0;
  std::string synth_split = "train";
  synth->add_option("--tasks", synth_tasks, "Comma-separated tasks, e.g. noise25,rain,haze");
  synth->add_option("--count", synth_count, "Samples per task");
  synth->add_option("--size", synth_size, "Square patch size");
  synth->add_option("--split", synth_split, "train or eval")->check(CLI::IsMember({"train", "eval"}));

  // train-wab
  auto* twab = app.add_subcommand("train-wab", "Train the width-adaptive backbone");
  std::string twab_data;
  std::optional<int> twab_epochs;
  twab->add_option("--data", twab_data, "Training pack directory")->required();
  twab->add_option("--epochs", twab_epochs, "Override the epoch count");

  // train-ws
  auto* tws = app.add_subcommand("train-ws", "Train the width selector on a frozen backbone");
  std::string tws_wab;
  std::string tws_data;
  std::optional<double> tws_target;
  tws->add_option("--wab", tws_wab, "Backbone checkpoint")->required();
  tws->add_option("--data", tws_data, "Training pack directory")->required();
  tws->add_option("--target-t", tws_target, "Sparsity target in [0,1]");

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate at a fixed width or with routing");
  std::string ev_wab;
  std::string ev_data;
  std::string ev_ws;
  std::optional<double> ev_width;
  ev->add_option("--wab", ev_wab, "Backbone checkpoint")->required();
  ev->add_option("--data", ev_data, "Evaluation pack directory")->required();
  auto* ws_opt = ev->add_option("--ws", ev_ws, "Selector checkpoint (routed mode)");
  auto* width_opt = ev->add_option("--width", ev_width, "Fixed width ratio, e.g. 0.6");
  ws_opt->excludes(width_opt);
  width_opt->excludes(ws_opt);

  // sweep-t
  auto* sweep = app.add_subcommand("sweep-t", "Train one selector per sparsity target and evaluate each");
  std::string sw_wab;
  std::string sw_data;
  std::string sw_eval;
  std::vector<double> sw_targets{0.6, 0.7, 0.8, 0.9, 1.0};
  sweep->add_option("--wab", sw_wab, "Backbone checkpoint")->required();
  sweep->add_option("--data", sw_data, "Training pack directory")->required();
  sweep->add_option("--eval-data", sw_eval, "Evaluation pack directory")->required();
  sweep->add_option("--targets", sw_targets, "Sparsity targets")->delimiter(',');

  // verify
  auto* ver = app.add_subcommand("verify", "Run the invariant suites");
  std::vector<std::string> ver_suites;
  bool ver_mutate = false;
  ver->add_option("--suite", ver_suites, "Run only these suites (grad, slicing, prefix, degrade, losses)");
  ver->add_flag("--mutate-slice", ver_mutate, "Corrupt one stored weight slice; the prefix suite must fail");

  // export-ppm
  auto* ppm = app.add_subcommand("export-ppm", "Write clean/degraded pairs of a pack as PPM images");
  std::string ppm_data;
  int ppm_count = 4;
  ppm->add_option("--data", ppm_data, "Pack directory")->required();
  ppm->add_option("--count", ppm_count, "Number of samples to export");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      RunConfig c = resolve(g);
      const int size = synth_size > 0 ? synth_size : c.data.size;
      std::vector<TaskEntry> tasks;
      if (!synth_tasks.empty()) {
        tasks = parse_task_list(synth_tasks, size);
      } else if (size == c.data.size) {
        tasks = c.data.tasks;
      } else {
        std::string names;
        for (const auto& t : c.data.tasks) names += (names.empty() ? "" : ",") + std::string(degrade::task_name(t.task));
        tasks = parse_task_list(names, size);
      }
      const Split split = parse_split(synth_split);
      const int count = synth_count > 0 ? synth_count
                                        : (split == Split::kTrain ? c.data.train_per_task : c.data.eval_per_task);
      const auto pack = synth_pack(tasks, count, size, c.seed, split);
      write_pack(pack, g.out);
      std::cout << "wrote " << pack.samples.size() << " samples (" << tasks.size() << " tasks x " << count << ", "
                << size << "x" << size << ") to " << g.out << "\n";
    } else if (*twab) {
      RunConfig c = resolve(g);
      if (twab_epochs) c.wab.epochs = *twab_epochs;
      const auto pack = read_pack(twab_data);
      const auto dir = out_dir(g);
      std::string csv = "epoch,recon,distill,de,total\n";
      auto result = wab::train_wab(c.arch, c.wab, pack.samples, [&](const wab::EpochLog& l) {
        csv += std::to_string(l.epoch) + "," + std::to_string(l.recon) + "," + std::to_string(l.distill) + "," +
               std::to_string(l.de) + "," + std::to_string(l.total) + "\n";
        std::cout << "epoch " << l.epoch << "  L_WAB " << l.total << "\n" << std::flush;
      });
      nlohmann::json meta = {{"stage", "wab"},
                             {"seed", c.seed},
                             {"epochs", c.wab.epochs},
                             {"samples", pack.samples.size()},
                             {"initial_loss", result.initial_loss},
                             {"config", format_config(c)}};
      const auto ckpt = make_checkpoint(result.model, meta);
      save_checkpoint(ckpt, (dir / "wab.ckpt").string());
      write_text(dir / "wab_loss.csv", csv);
      std::cout << "checkpoint " << (dir / "wab.ckpt").string() << " crc32 " << ckpt.checksum() << "\n";
    } else if (*tws) {
      RunConfig c = resolve(g);
      if (tws_target) c.ws.target = *tws_target;
      c.validate();
      const auto backbone = load_wab(tws_wab, g);
      const auto pack = read_pack(tws_data);
      const auto dir = out_dir(g);
      const auto result = selector::train_ws(backbone, pack.samples, c.ws);
      std::string csv = "epoch,cls,spars,select,total\n";
      for (const auto& l : result.log) {
        csv += std::to_string(l.epoch) + "," + std::to_string(l.cls) + "," + std::to_string(l.spars) + "," +
               std::to_string(l.select) + "," + std::to_string(l.total) + "\n";
      }
      nlohmann::json meta = {{"stage", "ws"},
                             {"seed", c.seed},
                             {"epochs", c.ws.epochs},
                             {"target_t", c.ws.target},
                             {"wab_checksum", make_checkpoint(backbone).checksum()},
                             {"config", format_config(c)}};
      const auto ckpt = make_checkpoint(result.model, meta);
      save_checkpoint(ckpt, (dir / "ws.ckpt").string());
      write_text(dir / "ws_loss.csv", csv);
      std::cout << "checkpoint " << (dir / "ws.ckpt").string() << " crc32 " << ckpt.checksum() << "\n";
    } else if (*ev) {
      if (ev_ws.empty() == !ev_width.has_value()) throw CLI::ValidationError("eval", "exactly one of --ws or --width is required");
      const auto backbone = load_wab(ev_wab, g);
      const auto pack = read_pack(ev_data);
      EvalReport report;
      if (ev_width) {
        report = evaluate_fixed(backbone, pack.samples, *ev_width);
      } else {
        const auto sel = to_selector(load_checkpoint(ev_ws), &backbone.arch());
        report = evaluate_routed(backbone, sel, pack.samples);
      }
      const auto dir = out_dir(g);
      write_text(dir / "eval.json", report_json(report).dump(2) + "\n");
      write_text(dir / "eval.csv", report_csv(report));
      std::cout << report_csv(report);
    } else if (*sweep) {
      RunConfig c = resolve(g);
      const auto backbone = load_wab(sw_wab, g);
      const auto train = read_pack(sw_data);
      const auto eval = read_pack(sw_eval);
      const auto rows = sweep_targets(backbone, train.samples, eval.samples, sw_targets, c.ws);
      const auto dir = out_dir(g);
      write_text(dir / "sweep.csv", sweep_csv(rows));
      std::cout << sweep_csv(rows);
    } else if (*ver) {
      VerifyOptions opt;
      opt.suites = ver_suites;
      opt.mutate_slice = ver_mutate;
      if (g.seed) opt.seed = *g.seed;
      const auto report = run_verify(opt);
      std::cout << report.text();
      if (app.get_option("--out")->count() > 0) write_text(out_dir(g) / "verify.json", report.to_json().dump(2) + "\n");
      return report.passed() ? 0 : 1;
    } else if (*ppm) {
      const auto pack = read_pack(ppm_data);
      const auto dir = out_dir(g);
      const int n = std::min<int>(ppm_count, static_cast<int>(pack.samples.size()));
      for (int i = 0; i < n; ++i) {
        const auto& s = pack.samples[static_cast<std::size_t>(i)];
        const std::string stem = std::to_string(i) + "_" + std::string(degrade::task_name(pack.recipes[static_cast<std::size_t>(i)].task));
        write_ppm(s.clean, (dir / (stem + "_clean.ppm")).string());
        write_ppm(s.degraded, (dir / (stem + "_degraded.ppm")).string());
      }
      std::cout << "wrote " << 2 * n << " images to " << g.out << "\n";
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const slim::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
