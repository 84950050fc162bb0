// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "slim/pipeline/evaluate.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "slim/degrade.hpp"
#include "slim/error.hpp"
#include "slim/metrics.hpp"

namespace slim::pipeline {
namespace {

struct Accum {
  int count = 0;
  double psnr_in = 0, ssim_in = 0, psnr = 0, ssim = 0, ratio = 0, flops = 0;
};

void add_sample(Accum& a, const LabeledPair& s, const Image& restored, double ratio, double flops) {
  const Image out = clamp01(restored);
  a.count += 1;
  a.psnr_in += metrics::psnr(s.degraded, s.clean);
  a.ssim_in += metrics::ssim(s.degraded, s.clean);
  a.psnr += metrics::psnr(out, s.clean);
  a.ssim += metrics::ssim(out, s.clean);
  a.ratio += ratio;
  a.flops += flops;
}

EvalReport finish(std::string mode, const std::map<int, Accum>& acc, const ArchConfig& arch, int size,
                  bool with_selector) {
  EvalReport r;
  r.mode = std::move(mode);
  const metrics::ModelDesc desc{arch, with_selector};
  r.full_width_flops = metrics::count_flops(desc, arch.omega, size, size).flops;
  r.params = metrics::count_params(desc);
  for (const auto& [label, a] : acc) {
    TaskMetrics t;
    t.label = label;
    t.task = std::string(degrade::task_name(static_cast<degrade::Task>(label)));
    t.count = a.count;
    const double n = a.count;
    t.psnr_input = a.psnr_in / n;
    t.ssim_input = a.ssim_in / n;
    t.psnr = a.psnr / n;
    t.ssim = a.ssim / n;
    t.mean_ratio = a.ratio / n;
    t.mean_flops = a.flops / n;
    r.mean_psnr += t.psnr;
    r.mean_ssim += t.ssim;
    r.mean_ratio += t.mean_ratio;
    r.mean_flops += t.mean_flops;
    r.tasks.push_back(std::move(t));
  }
  if (!r.tasks.empty()) {
    const double k = static_cast<double>(r.tasks.size());
    r.mean_psnr /= k;
    r.mean_ssim /= k;
    r.mean_ratio /= k;
    r.mean_flops /= k;
  }
  return r;
}

void check_data(const SampleSet& data) {
  if (data.empty()) throw ConfigError("evaluation set is empty");
}

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(6);
  o << std::fixed << v;
  return o.str();
}

}  // namespace

int ratio_index(const ArchConfig& arch, double ratio) {
  for (int i = 0; i < arch.num_widths(); ++i) {
    if (std::abs(arch.ratios[static_cast<std::size_t>(i)] - ratio) < 1e-9) return i;
  }
  throw WidthError("width ratio " + fmt(ratio) + " is not a candidate");
}

EvalReport evaluate_fixed(const wab::WabModel<float>& wab, const SampleSet& data, double ratio, int batch) {
  check_data(data);
  const ArchConfig& arch = wab.arch();
  const int idx = ratio_index(arch, ratio);
  const int rho = arch.widths()[static_cast<std::size_t>(idx)];
  const int size = data.front().clean.height;
  const double cost = static_cast<double>(metrics::count_flops({arch, false}, rho, size, size).flops);
  const double actual_ratio = static_cast<double>(rho) / arch.omega;

  std::map<int, Accum> acc;
  for (std::size_t start = 0; start < data.size(); start += static_cast<std::size_t>(batch)) {
    const std::size_t end = std::min(data.size(), start + static_cast<std::size_t>(batch));
    std::vector<const Image*> imgs;
    for (std::size_t i = start; i < end; ++i) imgs.push_back(&data[i].degraded);
    const auto out = wab.forward(nullptr, to_tensor<float>(imgs), rho).restored;
    for (std::size_t i = start; i < end; ++i) {
      add_sample(acc[data[i].label], data[i], from_tensor(out, static_cast<int>(i - start)), actual_ratio, cost);
    }
  }
  auto r = finish("fixed", acc, arch, size, false);
  r.fixed_ratio = ratio;
  return r;
}

EvalReport evaluate_routed(const wab::WabModel<float>& wab, const selector::SelectorModel<float>& sel,
                           const SampleSet& data, int batch) {
  check_data(data);
  const ArchConfig& arch = wab.arch();
  const int size = data.front().clean.height;
  std::map<int, Accum> acc;
  for (std::size_t start = 0; start < data.size(); start += static_cast<std::size_t>(batch)) {
    const std::size_t end = std::min(data.size(), start + static_cast<std::size_t>(batch));
    std::vector<const Image*> imgs;
    for (std::size_t i = start; i < end; ++i) imgs.push_back(&data[i].degraded);
    const auto routed = selector::route_and_restore(wab, sel, imgs);
    for (std::size_t i = start; i < end; ++i) {
      const std::size_t j = i - start;
      const double ratio = static_cast<double>(routed.decisions[j].chosen_width) / arch.omega;
      add_sample(acc[data[i].label], data[i], routed.restored[j], ratio, static_cast<double>(routed.flops[j]));
    }
  }
  return finish("routed", acc, arch, size, true);
}

nlohmann::json report_json(const EvalReport& r) {
  nlohmann::json tasks = nlohmann::json::array();
  for (const auto& t : r.tasks) {
    tasks.push_back({{"task", t.task},
                     {"label", t.label},
                     {"count", t.count},
                     {"psnr_input", t.psnr_input},
                     {"ssim_input", t.ssim_input},
                     {"psnr", t.psnr},
                     {"ssim", t.ssim},
                     {"mean_width_ratio", t.mean_ratio},
                     {"mean_flops", t.mean_flops}});
  }
  nlohmann::json j = {{"mode", r.mode},
                      {"tasks", tasks},
                      {"average",
                       {{"psnr", r.mean_psnr},
                        {"ssim", r.mean_ssim},
                        {"mean_width_ratio", r.mean_ratio},
                        {"mean_flops", r.mean_flops}}},
                      {"full_width_flops", r.full_width_flops},
                      {"params", r.params}};
  if (r.mode == "fixed") j["width_ratio"] = r.fixed_ratio;
  return j;
}

std::string report_csv(const EvalReport& r) {
  std::ostringstream o;
  o << "task,count,psnr_input,ssim_input,psnr,ssim,mean_width_ratio,mean_flops\n";
  for (const auto& t : r.tasks) {
    o << t.task << "," << t.count << "," << fmt(t.psnr_input) << "," << fmt(t.ssim_input) << "," << fmt(t.psnr)
      << "," << fmt(t.ssim) << "," << fmt(t.mean_ratio) << "," << fmt(t.mean_flops) << "\n";
  }
  o << "average,,,," << fmt(r.mean_psnr) << "," << fmt(r.mean_ssim) << "," << fmt(r.mean_ratio) << ","
    << fmt(r.mean_flops) << "\n";
  return o.str();
}

std::vector<SweepRow> sweep_targets(const wab::WabModel<float>& wab, const SampleSet& train, const SampleSet& eval,
                                    const std::vector<double>& targets, selector::WsTrainConfig config) {
  if (targets.empty()) throw ConfigError("sweep needs at least one target");
  const auto features = selector::extract_frozen_features(wab, train, config.batch);
  std::vector<SweepRow> rows;
  for (double t : targets) {
    config.target = t;
    const auto trained = selector::train_ws(wab.arch(), features, config);
    const auto r = evaluate_routed(wab, trained.model, eval);
    SweepRow row{t, r.mean_psnr, r.mean_ssim, r.mean_flops, r.mean_ratio, {}};
    for (const auto& task : r.tasks) row.task_ratios.push_back(task.mean_ratio);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream o;
  o << "target,mean_psnr,mean_ssim,mean_flops,mean_width_ratio\n";
  for (const auto& r : rows) {
    o << fmt(r.target) << "," << fmt(r.mean_psnr) << "," << fmt(r.mean_ssim) << "," << fmt(r.mean_flops) << ","
      << fmt(r.mean_ratio) << "\n";
  }
  return o.str();
}

}  // namespace slim::pipeline
