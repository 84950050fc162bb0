// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails. Criteria 7-9 share one trained backbone.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "slim/degrade.hpp"
#include "slim/error.hpp"
#include "slim/metrics.hpp"
#include "slim/ops.hpp"
#include "slim/pipeline/checkpoint.hpp"
#include "slim/pipeline/config.hpp"
#include "slim/pipeline/dataset.hpp"
#include "slim/pipeline/evaluate.hpp"
#include "slim/selector.hpp"
#include "slim/wab.hpp"

using namespace slim;
using oracle::TD;
using Clock = std::chrono::steady_clock;

namespace {

// Training budget for the desk trend criteria.
constexpr int kWabEpochs = 30;
constexpr int kTrainPerTask = 300;
constexpr int kEvalPerTask = 50;
constexpr int kImageSize = 32;
constexpr std::uint64_t kSeed = 7;
constexpr double kBudgetSeconds = 30 * 60;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int prec = 4) {
  std::ostringstream o;
  o.precision(prec);
  o << v;
  return o.str();
}

// --- 1: gradients ----------------------------------------------------------

struct GradStats {
  int instances = 0;
  double worst = 0.0;
};

void grad_check(GradStats& s, const std::vector<TD>& inputs, const std::function<TD(Tape<double>*)>& build) {
  for (const auto& in : inputs) in.zero_grad();
  Tape<double> tape;
  tape.backward(build(&tape));
  for (const auto& in : inputs) {
    std::vector<double> analytic(in.grad().begin(), in.grad().end());
    const auto numeric = oracle::numeric_grad(in, [&] { return build(nullptr).item(); });
    s.worst = std::max(s.worst, oracle::rel_error(analytic, numeric));
  }
  ++s.instances;
}

Outcome criterion_gradients() {
  const auto t0 = Clock::now();
  Rng rng(101);
  std::map<std::string, GradStats> ops_seen;
  for (int r = 0; r < 20; ++r) {
    auto x = oracle::random(rng, {2, 2, 4, 3}, -1, 1, true);
    auto w = oracle::random(rng, {3, 2, 3, 3}, -1, 1, true);
    auto b = oracle::random(rng, {3}, -1, 1, true);
    auto p = oracle::random(rng, {2, 3, 4, 3});
    grad_check(ops_seen["conv2d"], {x, w, b},
               [&](Tape<double>* tp) { return ops::sum(tp, ops::mul(tp, ops::conv2d(tp, x, w, b, 1), p)); });

    auto xs = oracle::random(rng, {1, 2, 4, 4}, -1, 1, true);
    auto ws = oracle::random(rng, {4, 3, 3, 3}, -1, 1, true);
    auto bs = oracle::random(rng, {4}, -1, 1, true);
    auto ps = oracle::random(rng, {1, 3, 4, 4});
    grad_check(ops_seen["conv2d_sliced"], {xs, ws, bs}, [&](Tape<double>* tp) {
      return ops::sum(tp, ops::mul(tp, ops::conv2d_sliced(tp, xs, ws, bs, 2, 3), ps));
    });

    auto a = oracle::random(rng, {3, 4}, -1, 1, true);
    auto c = oracle::random(rng, {3, 4}, -1, 1, true);
    auto pe = oracle::random(rng, {3, 4});
    auto proj = [&](Tape<double>* tp, const TD& y) { return ops::sum(tp, ops::mul(tp, y, pe)); };
    grad_check(ops_seen["add"], {a, c}, [&](Tape<double>* tp) { return proj(tp, ops::add(tp, a, c)); });
    grad_check(ops_seen["sub"], {a, c}, [&](Tape<double>* tp) { return proj(tp, ops::sub(tp, a, c)); });
    grad_check(ops_seen["mul"], {a, c}, [&](Tape<double>* tp) { return proj(tp, ops::mul(tp, a, c)); });
    grad_check(ops_seen["scale"], {a}, [&](Tape<double>* tp) { return proj(tp, ops::scale(tp, a, -1.7)); });
    grad_check(ops_seen["add_scalar"], {a}, [&](Tape<double>* tp) { return proj(tp, ops::add_scalar(tp, a, 0.3)); });
    grad_check(ops_seen["square"], {a}, [&](Tape<double>* tp) { return proj(tp, ops::square(tp, a)); });
    grad_check(ops_seen["sum"], {a}, [&](Tape<double>* tp) { return ops::square(tp, ops::sum(tp, a)); });
    grad_check(ops_seen["mean"], {a}, [&](Tape<double>* tp) { return ops::square(tp, ops::mean(tp, a)); });

    auto xr = oracle::random(rng, {4, 5}, -1, 1, true);
    for (double& v : xr.data()) v += v < 0 ? -0.05 : 0.05;  // keep off the kink
    auto pr = oracle::random(rng, {4, 5});
    grad_check(ops_seen["relu"], {xr}, [&](Tape<double>* tp) { return ops::sum(tp, ops::mul(tp, ops::relu(tp, xr), pr)); });

    auto xp = oracle::random(rng, {2, 3, 3, 3}, -1, 1, true);
    auto pp = oracle::random(rng, {2, 3});
    grad_check(ops_seen["global_avg_pool"], {xp},
               [&](Tape<double>* tp) { return ops::sum(tp, ops::mul(tp, ops::global_avg_pool(tp, xp), pp)); });

    auto v = oracle::random(rng, {3, 4}, -1, 1, true);
    auto wl = oracle::random(rng, {5, 4}, -1, 1, true);
    auto bl = oracle::random(rng, {5}, -1, 1, true);
    auto pl = oracle::random(rng, {3, 5});
    grad_check(ops_seen["linear"], {v, wl, bl},
               [&](Tape<double>* tp) { return ops::sum(tp, ops::mul(tp, ops::linear(tp, v, wl, bl), pl)); });

    auto z = oracle::random(rng, {3, 5}, -2, 2, true);
    grad_check(ops_seen["softmax"], {z}, [&](Tape<double>* tp) { return ops::sum(tp, ops::mul(tp, ops::softmax(tp, z), pl)); });
    const std::vector<int> labels{rng.uniform_int(0, 4), rng.uniform_int(0, 4), rng.uniform_int(0, 4)};
    grad_check(ops_seen["cross_entropy"], {z}, [&](Tape<double>* tp) { return ops::cross_entropy(tp, z, labels); });

    auto la = oracle::random(rng, {2, 5}, -1, 1, true);
    auto lb = la.detach();
    for (double& e : lb.data()) e += (rng.uniform() < 0.5 ? -1 : 1) * rng.uniform(0.05, 0.5);
    lb.set_requires_grad(true);
    grad_check(ops_seen["l1_loss"], {la, lb}, [&](Tape<double>* tp) { return ops::l1_loss(tp, la, lb); });
  }
  const double elapsed = seconds_since(t0);
  double worst = 0;
  int min_instances = 1 << 30;
  std::string worst_op;
  for (const auto& [name, s] : ops_seen) {
    if (s.worst >= worst) {
      worst = s.worst;
      worst_op = name;
    }
    min_instances = std::min(min_instances, s.instances);
  }
  return {worst < 1e-4 && min_instances >= 20 && elapsed < 120,
          std::to_string(ops_seen.size()) + " ops x " + std::to_string(min_instances) + " instances, worst rel err " +
              fmt(worst, 3) + " (" + worst_op + "), " + fmt(elapsed, 3) + " s"};
}

// --- 2: prefix decomposition ------------------------------------------------

// Leading `keep` channels of a [1,C,H,W] value vector.
std::vector<double> head_channels(const std::vector<double>& x, int keep, int plane) {
  return {x.begin(), x.begin() + static_cast<long>(keep) * plane};
}

// Weight sub-block [o0:o1, i0:i1] of a [omega,omega,k,k] store.
std::vector<double> block(const TD& w, int o0, int o1, int i0, int i1) {
  const int in = w.dim(1), kk = w.dim(2) * w.dim(3);
  std::vector<double> out;
  for (int o = o0; o < o1; ++o)
    for (int i = i0; i < i1; ++i)
      for (int q = 0; q < kk; ++q) out.push_back(w.data()[(static_cast<std::size_t>(o) * in + i) * kk + q]);
  return out;
}

Outcome criterion_prefix() {
  constexpr int omega = 16, r1 = 8, r2 = 12, h = 6, plane = h * h;
  double worst = 0, lib_worst = 0, min_remainder = 1e300;
  for (int s = 0; s < 50; ++s) {
    Rng rng(derive_seed(202, s));
    std::vector<wab::WidthAdaptiveConv<double>> layers;
    for (int l = 0; l < 3; ++l)
      layers.push_back({oracle::random(rng, {omega, omega, 3, 3}, -0.3, 0.3), oracle::random(rng, {omega}, -0.1, 0.1)});
    const auto x = oracle::random(rng, {1, omega, h, h});
    TD narrow = TD::from({1, r1, h, h}, head_channels({x.data().begin(), x.data().end()}, r1, plane));
    TD wide = TD::from({1, r2, h, h}, head_channels({x.data().begin(), x.data().end()}, r2, plane));
    std::vector<double> remainder(static_cast<std::size_t>(r1) * plane, 0.0);
    for (int l = 0; l < 3; ++l) {
      // O_l = W[:r1,:r1] * O_{l-1} + W[:r1, r1:r2] * F'_{l-1}[r1:r2], by direct loops
      const std::vector<double> wide_prev(wide.data().begin(), wide.data().end());
      const std::vector<double> extra(wide_prev.begin() + static_cast<long>(r1) * plane, wide_prev.end());
      const auto carried = oracle::conv(remainder, 1, r1, h, h, block(layers[l].weight, 0, r1, 0, r1), r1, 3, {});
      const auto cross = oracle::conv(extra, 1, r2 - r1, h, h, block(layers[l].weight, 0, r1, r1, r2), r1, 3, {});
      for (std::size_t i = 0; i < remainder.size(); ++i) remainder[i] = carried[i] + cross[i];

      narrow = layers[l](nullptr, narrow, r1, r1);
      wide = layers[l](nullptr, wide, r2, r2);
      double rem_norm = 0;
      for (std::size_t i = 0; i < remainder.size(); ++i) {
        worst = std::max(worst, std::abs(wide.data()[i] - (narrow.data()[i] + remainder[i])));
        rem_norm = std::max(rem_norm, std::abs(remainder[i]));
      }
      min_remainder = std::min(min_remainder, rem_norm);
    }
    lib_worst = std::max(lib_worst, wab::verify_prefix_decomposition(layers, x, r1, r2).max_deviation());
  }
  return {worst < 1e-9 && lib_worst < 1e-9 && min_remainder > 0,
          "50 seeds x 3 layers, max |F'[:8] - (F + O)| = " + fmt(worst, 3) + " (library check " + fmt(lib_worst, 3) +
              "), smallest remainder max " + fmt(min_remainder, 3)};
}

// --- 3: slicing equivalence ---------------------------------------------------

void mask(wab::WidthAdaptiveConv<double>& conv, int out_keep, int in_keep) {
  const auto& w = conv.weight;
  const int o = w.dim(0), i = w.dim(1), kk = w.dim(2) * w.dim(3);
  for (int a = 0; a < o; ++a)
    for (int b = 0; b < i; ++b)
      if (a >= out_keep || b >= in_keep)
        for (int q = 0; q < kk; ++q) w.data()[(static_cast<std::size_t>(a) * i + b) * kk + q] = 0.0;
  if (conv.bias.defined())
    for (int a = out_keep; a < o; ++a) conv.bias.data()[a] = 0.0;
}

Outcome criterion_slicing() {
  const ArchConfig arch = pipeline::default_config(pipeline::Profile::kDesk).arch;
  const auto model = wab::WabModel<double>::initialized(arch, 303);
  Rng rng(303);
  double worst = 0;
  int runs = 0;
  for (int rho : arch.widths()) {
    auto masked = model.cast<double>();
    mask(masked.head, rho, 3);
    mask(masked.transform, rho, arch.c_de);
    for (auto& b : masked.trunk) {
      mask(b.conv1, rho, rho);
      mask(b.conv2, rho, rho);
    }
    mask(masked.tail, 3, rho);
    for (int r = 0; r < 20; ++r) {
      const auto img = oracle::random(rng, {1, 3, 12, 12}, 0.0, 1.0);
      wab::Trace<double> ts, tf;
      const auto f_de = model.encode(nullptr, img);
      const auto sliced = model.restore(nullptr, img, f_de, rho, &ts);
      const auto full = masked.restore(nullptr, img, f_de, arch.omega, &tf);
      for (std::size_t i = 0; i < sliced.numel(); ++i)
        worst = std::max(worst, std::abs(sliced.data()[i] - full.data()[i]));
      for (std::size_t l = 0; l < ts.features.size(); ++l) {
        const int plane = 144;
        for (int i = 0; i < rho * plane; ++i)
          worst = std::max(worst, std::abs(ts.features[l].data()[i] - tf.features[l].data()[i]));
        for (int i = rho * plane; i < arch.omega * plane; ++i) worst = std::max(worst, std::abs(tf.features[l].data()[i]));
      }
      ++runs;
    }
  }
  return {worst < 1e-9 && runs == 20 * arch.num_widths(),
          std::to_string(runs) + " forwards over widths 18..30, max deviation " + fmt(worst, 3)};
}

// --- 4: degradation identities ------------------------------------------------

Outcome criterion_degrade() {
  double worst = 0;
  int passed = 0, sparser = 0;
  double max_rain = 0, min_res = 1;
  for (int s = 0; s < 100; ++s) {
    const std::uint64_t seed = derive_seed(404, s);
    const auto x = degrade::synth_clean(derive_seed(seed, 1), 32, 32);
    const double sigma = 0.02 + 0.08 * (s % 5) / 4.0;
    const degrade::RainSpec rain = std::get<degrade::RainSpec>(degrade::default_spec(degrade::Task::kRain, 32, 32).kind);
    const degrade::HazeSpec haze;
    const auto report = degrade::check_decomposition(x, sigma, rain, haze, seed);
    passed += report.passed();

    // independent recomputation from the component maps
    const auto n = degrade::noise_field(seed, sigma, 3, 32, 32);
    const auto a_rain = degrade::rain_layer(rain, seed, 3, 32, 32);
    const auto y_rain = degrade::apply_rain(x, rain, sigma, seed).y;
    const auto hz = degrade::apply_haze(x, haze, sigma, seed);
    Image res(3, 32, 32);
    for (std::size_t i = 0; i < x.size(); ++i) res.data[i] = (hz.layer.data[i] - 1.0) * x.data[i];
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double y_noise = x.data[i] + n.data[i];
      worst = std::max(worst, std::abs(y_rain.data[i] - (y_noise + a_rain.data[i])));
      worst = std::max(worst, std::abs(hz.y.data[i] - (y_noise + res.data[i])));
      const double eq5 = a_rain.data[i] != 0.0 ? y_rain.data[i] + (res.data[i] - a_rain.data[i]) : y_noise + res.data[i];
      worst = std::max(worst, std::abs(hz.y.data[i] - eq5));
    }
    const double fr = support_fraction(a_rain), fa = support_fraction(res);
    sparser += fr < fa;
    max_rain = std::max(max_rain, fr);
    min_res = std::min(min_res, fa);
  }
  return {passed == 100 && sparser == 100 && worst < 1e-12,
          std::to_string(passed) + "/100 reports pass, independent max deviation " + fmt(worst, 3) + ", rain support <= " +
              fmt(max_rain, 3) + " vs A' support >= " + fmt(min_res, 3)};
}

// --- 5: loss identities -------------------------------------------------------

Outcome criterion_losses() {
  const ArchConfig arch = pipeline::default_config(pipeline::Profile::kDesk).arch;
  const int n = arch.num_widths();
  auto logits = [&](int hot) {
    std::vector<double> v(n, 0.0);
    if (hot >= 0) v[hot] = 1000.0;
    return TD::from({1, n}, v);
  };
  const std::vector<int> label{0};
  const std::vector<double> l1{0.9, 0.7, 0.5, 0.3, 0.1};
  auto losses = [&](int hot, double t) {
    return selector::losses_from_logits<double>(nullptr, arch, logits(-1), logits(hot), label, l1, t);
  };
  std::vector<std::string> bad;
  if (losses(2, 0.8).spars.item() != 0.0) bad.push_back("spars@0.8");
  if (std::abs(losses(4, 0.8).spars.item() - 0.04) > 1e-15) bad.push_back("spars@1.0");
  for (int i = 0; i < n; ++i)
    if (std::abs(losses(i, 0.8).select.item() - l1[i] / n) > 1e-15) bad.push_back("select@" + std::to_string(i));

  const wab::WabModel<double> zero_body(arch);
  Rng rng(505);
  const auto img = oracle::random(rng, {2, 3, 12, 12}, 0.0, 1.0);
  const auto clean = oracle::random(rng, {2, 3, 12, 12}, 0.0, 1.0);
  const std::vector<int> labels{1, 4};
  if (wab::wab_losses<double>(nullptr, zero_body, img, clean, labels, 18).distill.item() != 0.0) bad.push_back("distill");

  const double ce = ops::cross_entropy<double>(nullptr, TD::zeros({3, 5}), std::vector<int>{0, 2, 4}).item();
  if (std::abs(ce - std::log(5.0)) > 1e-9) bad.push_back("ce");
  return {bad.empty(), bad.empty() ? "spars 0 / 0.04, select L_i/n for all 5, distill 0, CE ln5 (err " +
                                         fmt(std::abs(ce - std::log(5.0)), 3) + ")"
                                   : "failed: " + std::accumulate(bad.begin(), bad.end(), std::string{},
                                                                  [](std::string a, const std::string& b) { return a + b + " "; })};
}

// --- 6: cost structure ----------------------------------------------------------

Outcome criterion_flops() {
  const ArchConfig arch = pipeline::default_config(pipeline::Profile::kDesk).arch;
  const int full = arch.omega, small = arch.widths().front();
  const auto cf = metrics::count_flops({arch}, full, kImageSize, kImageSize);
  const auto cs = metrics::count_flops({arch}, small, kImageSize, kImageSize);
  const double whole = static_cast<double>(cs.flops) / static_cast<double>(cf.flops);
  // trunk: B blocks x 2 convs of k^2 rho^2 HW MACs
  const std::int64_t trunk_full = 2LL * arch.blocks * 2 * 9 * full * full * kImageSize * kImageSize;
  const std::int64_t trunk_small = 2LL * arch.blocks * 2 * 9 * small * small * kImageSize * kImageSize;
  const bool trunk_ok = cf.flops_with_prefix("trunk.") == trunk_full && cs.flops_with_prefix("trunk.") == trunk_small &&
                        trunk_small * 100 == trunk_full * 36;
  bool params_same = true;
  const auto model_params = wab::WabModel<float>(arch).parameter_count();
  for (int rho : arch.widths()) params_same &= metrics::count_flops({arch}, rho, kImageSize, kImageSize).params == model_params;
  const auto with_sel = metrics::count_params({arch, true});
  return {whole >= 0.33 && whole <= 0.42 && trunk_ok && params_same && with_sel > model_params,
          "whole ratio " + fmt(whole) + ", trunk ratio " +
              fmt(static_cast<double>(cs.flops_with_prefix("trunk.")) / static_cast<double>(cf.flops_with_prefix("trunk.")), 6) +
              ", params " + std::to_string(model_params) + " at every width, " + std::to_string(with_sel) +
              " with selector"};
}

// --- 7-9: desk training ------------------------------------------------------------

struct DeskRun {
  pipeline::RunConfig config;
  SampleSet train;
  SampleSet eval;
  std::optional<wab::WabModel<float>> model;
  double train_seconds = 0.0;
};

std::size_t longest_nondecreasing(const std::vector<double>& v) {
  std::vector<std::size_t> best(v.size(), 1);
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (v[j] <= v[i]) best[i] = std::max(best[i], best[j] + 1);
  return v.empty() ? 0 : *std::max_element(best.begin(), best.end());
}

Outcome criterion_training(DeskRun& run) {
  const auto& arch = run.config.arch;
  const auto t0 = Clock::now();
  auto result = wab::train_wab(arch, run.config.wab, run.train, [&](const wab::EpochLog& l) {
    std::fprintf(stderr, "  wab epoch %d/%d  L_WAB %.4f  (%.0f s)\n", l.epoch, run.config.wab.epochs, l.total,
                 seconds_since(t0));
  });
  run.train_seconds = seconds_since(t0);
  run.model = std::move(result.model);

  std::vector<double> mean_psnr;
  std::vector<pipeline::EvalReport> reports;
  for (double r : arch.ratios) {
    reports.push_back(pipeline::evaluate_fixed(*run.model, run.eval, r));
    mean_psnr.push_back(reports.back().mean_psnr);
  }
  auto task_drop = [&](degrade::Task t) {
    const auto find = [&](const pipeline::EvalReport& rep) {
      for (const auto& m : rep.tasks)
        if (m.label == static_cast<int>(t)) return m.psnr;
      throw Error("task missing from report");
    };
    return find(reports.back()) - find(reports.front());
  };
  const double haze_drop = task_drop(degrade::Task::kHaze);
  const double noise_drop = task_drop(degrade::Task::kNoise25);
  const std::size_t chain = longest_nondecreasing(mean_psnr);
  const bool a = mean_psnr.back() >= mean_psnr.front() && chain >= 4;
  const bool b = haze_drop > noise_drop;
  std::string curve;
  for (double p : mean_psnr) curve += fmt(p, 5) + " ";
  return {a && b && run.train_seconds <= kBudgetSeconds,
          "trained " + std::to_string(run.config.wab.epochs) + " epochs in " + fmt(run.train_seconds, 4) +
              " s; mean PSNR by width " + curve + "(nondecreasing chain " + std::to_string(chain) + "/5) [a " +
              (a ? "ok" : "FAIL") + "]; PSNR drop 1.0->0.6 haze " + fmt(haze_drop, 3) + " dB vs noise " +
              fmt(noise_drop, 3) + " dB [b " + (b ? "ok" : "FAIL") + "]"};
}

double task_ratio(const pipeline::EvalReport& r, degrade::Task t) {
  for (const auto& m : r.tasks)
    if (m.label == static_cast<int>(t)) return m.mean_ratio;
  throw Error("task missing from report");
}

Outcome criterion_routing(const DeskRun& run) {
  if (!run.model) return {false, "no trained backbone (criterion 7 did not complete)"};
  auto ws = run.config.ws;
  ws.target = 0.8;
  const auto sel = selector::train_ws(*run.model, run.train, ws).model;
  const auto routed = pipeline::evaluate_routed(*run.model, sel, run.eval);
  const double dn = task_ratio(routed, degrade::Task::kNoise25);
  const double dr = task_ratio(routed, degrade::Task::kRain);
  const double dh = task_ratio(routed, degrade::Task::kHaze);
  const double saving = 1.0 - routed.mean_flops / static_cast<double>(routed.full_width_flops);
  const bool order = dn <= dr && dr <= dh;
  return {order && saving >= 0.10, "mean width ratio noise " + fmt(dn, 3) + " / rain " + fmt(dr, 3) + " / haze " +
                                       fmt(dh, 3) + (order ? " (ordered)" : " (NOT ordered)") + ", FLOPs saving " +
                                       fmt(100 * saving, 3) + "%"};
}

Outcome criterion_sweep(const DeskRun& run) {
  if (!run.model) return {false, "no trained backbone (criterion 7 did not complete)"};
  const std::vector<double> targets{0.6, 0.7, 0.8, 0.9, 1.0};
  const auto rows = pipeline::sweep_targets(*run.model, run.train, run.eval, targets, run.config.ws);
  bool mono = rows.size() == targets.size();
  std::string curve;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    curve += "t=" + fmt(rows[i].target, 2) + ":" + fmt(rows[i].mean_ratio, 3) + " ";
    if (i > 0 && rows[i].mean_ratio < rows[i - 1].mean_ratio) mono = false;
  }
  return {mono, "mean selected ratio " + curve + (mono ? "(nondecreasing)" : "(NOT monotone)")};
}

// --- 10: persistence -----------------------------------------------------------------

Outcome criterion_persistence(const DeskRun& run) {
  const auto& arch = run.config.arch;
  const auto model = run.model ? *run.model : wab::WabModel<float>::initialized(arch, kSeed);
  const auto bytes = pipeline::encode_checkpoint(pipeline::make_checkpoint(model, {{"seed", kSeed}}));
  const bool round_trip = pipeline::encode_checkpoint(pipeline::decode_checkpoint(bytes)) == bytes;

  int rejected = 0;
  const std::size_t payload_start = bytes.size() - 4 * static_cast<std::size_t>(model.parameter_count());
  for (std::size_t off : {payload_start, payload_start + 1234, bytes.size() - 1}) {
    auto corrupt = bytes;
    corrupt[off] ^= 0x20;
    try {
      pipeline::decode_checkpoint(corrupt);
    } catch (const ChecksumError&) {
      ++rejected;
    }
  }

  // two same-seed runs on a small slice of the training set
  SampleSet slice(run.train.begin(), run.train.begin() + 24);
  auto cfg = run.config.wab;
  cfg.epochs = 2;
  cfg.batch = 8;
  const auto a = pipeline::make_checkpoint(wab::train_wab(arch, cfg, slice).model).checksum();
  const auto b = pipeline::make_checkpoint(wab::train_wab(arch, cfg, slice).model).checksum();
  return {round_trip && rejected == 3 && a == b,
          std::string("round trip ") + (round_trip ? "byte-identical" : "DIFFERS") + ", " + std::to_string(rejected) +
              "/3 corrupted payloads rejected, same-seed checksums " + a + " / " + b};
}

}  // namespace

int main() {
  DeskRun run;
  run.config = pipeline::default_config(pipeline::Profile::kDesk);
  run.config.seed = kSeed;
  run.config.wab.epochs = kWabEpochs;
  run.config.wab.seed = kSeed;
  run.config.ws.seed = kSeed;
  const auto tasks = pipeline::parse_task_list("noise25,rain,haze", kImageSize);
  run.train = pipeline::synth_pack(tasks, kTrainPerTask, kImageSize, kSeed, pipeline::Split::kTrain).samples;
  run.eval = pipeline::synth_pack(tasks, kEvalPerTask, kImageSize, kSeed, pipeline::Split::kEval).samples;

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient suite", criterion_gradients},
      {"prefix decomposition", criterion_prefix},
      {"slicing equivalence", criterion_slicing},
      {"degradation identities", criterion_degrade},
      {"loss unit identities", criterion_losses},
      {"FLOPs and parameter structure", criterion_flops},
      {"desk training trends", [&] { return criterion_training(run); }},
      {"routing trend", [&] { return criterion_routing(run); }},
      {"sparsity sweep", [&] { return criterion_sweep(run); }},
      {"persistence", [&] { return criterion_persistence(run); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %2zu %s  %s: %s [%.1f s]\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
