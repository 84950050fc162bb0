// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "slim/pipeline/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "slim/degrade.hpp"
#include "slim/error.hpp"
#include "slim/ops.hpp"
#include "slim/rng.hpp"
#include "slim/selector.hpp"
#include "slim/wab.hpp"

namespace slim::pipeline {
namespace {

using TD = Tensor<double>;
using Build = std::function<TD(Tape<double>*, const std::vector<TD>&)>;

constexpr double kFdStep = 1e-5;
constexpr double kGradTol = 1e-4;
constexpr int kGradInstances = 20;

TD random_tensor(Rng& rng, const Shape& shape, double lo = -1.0, double hi = 1.0, bool grad = true) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return TD::from(shape, std::move(v), grad);
}

/// Random values whose magnitude is at least `gap`, to stay off kinks.
TD away_from_zero(Rng& rng, const Shape& shape, double gap) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(gap, 1.0);
  return TD::from(shape, std::move(v), true);
}

TD project(Tape<double>* tape, const TD& out, const TD& r) { return ops::sum(tape, ops::mul(tape, out, r)); }

/// Worst over inputs of ||analytic - fd|| / max(||analytic||, ||fd||).
double grad_rel_error(const Build& f, const std::vector<TD>& inputs) {
  for (const auto& t : inputs) t.zero_grad();
  Tape<double> tape;
  tape.backward(f(&tape, inputs));
  double worst = 0.0;
  for (const auto& t : inputs) {
    const auto analytic = t.grad();
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    auto v = t.data();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double keep = v[i];
      v[i] = keep + kFdStep;
      const double lp = f(nullptr, inputs).item();
      v[i] = keep - kFdStep;
      const double lm = f(nullptr, inputs).item();
      v[i] = keep;
      const double num = (lp - lm) / (2 * kFdStep);
      diff2 += (analytic[i] - num) * (analytic[i] - num);
      a2 += analytic[i] * analytic[i];
      n2 += num * num;
    }
    const double scale = std::sqrt(std::max(a2, n2));
    if (scale < 1e-10) continue;
    worst = std::max(worst, std::sqrt(diff2) / scale);
  }
  return worst;
}

struct GradCase {
  std::string name;
  std::function<std::pair<Build, std::vector<TD>>(Rng&)> make;
};

std::vector<GradCase> grad_cases() {
  std::vector<GradCase> cases;
  cases.push_back({"conv2d", [](Rng& rng) {
                     auto x = random_tensor(rng, {2, 2, 4, 4});
                     auto w = random_tensor(rng, {3, 2, 3, 3});
                     auto b = random_tensor(rng, {3});
                     auto r = random_tensor(rng, {2, 3, 4, 4}, -1, 1, false);
                     Build f = [r](Tape<double>* t, const std::vector<TD>& in) {
                       return project(t, ops::conv2d(t, in[0], in[1], in[2], 1), r);
                     };
                     return std::pair{f, std::vector<TD>{x, w, b}};
                   }});
  cases.push_back({"conv2d_sliced", [](Rng& rng) {
                     auto x = random_tensor(rng, {2, 2, 4, 4});
                     auto w = random_tensor(rng, {4, 3, 3, 3});
                     auto b = random_tensor(rng, {4});
                     auto r = random_tensor(rng, {2, 3, 4, 4}, -1, 1, false);
                     Build f = [r](Tape<double>* t, const std::vector<TD>& in) {
                       return project(t, ops::conv2d_sliced(t, in[0], in[1], in[2], 2, 3), r);
                     };
                     return std::pair{f, std::vector<TD>{x, w, b}};
                   }});
  cases.push_back({"relu", [](Rng& rng) {
                     auto x = away_from_zero(rng, {3, 5}, 0.05);
                     auto r = random_tensor(rng, {3, 5}, -1, 1, false);
                     Build f = [r](Tape<double>* t, const std::vector<TD>& in) {
                       return project(t, ops::relu(t, in[0]), r);
                     };
                     return std::pair{f, std::vector<TD>{x}};
                   }});
  cases.push_back({"global_avg_pool", [](Rng& rng) {
                     auto x = random_tensor(rng, {2, 3, 3, 4});
                     auto r = random_tensor(rng, {2, 3}, -1, 1, false);
                     Build f = [r](Tape<double>* t, const std::vector<TD>& in) {
                       return project(t, ops::global_avg_pool(t, in[0]), r);
                     };
                     return std::pair{f, std::vector<TD>{x}};
                   }});
  cases.push_back({"linear", [](Rng& rng) {
                     auto x = random_tensor(rng, {3, 4});
                     auto w = random_tensor(rng, {5, 4});
                     auto b = random_tensor(rng, {5});
                     auto r = random_tensor(rng, {3, 5}, -1, 1, false);
                     Build f = [r](Tape<double>* t, const std::vector<TD>& in) {
                       return project(t, ops::linear(t, in[0], in[1], in[2]), r);
                     };
                     return std::pair{f, std::vector<TD>{x, w, b}};
                   }});
  cases.push_back({"softmax", [](Rng& rng) {
                     auto x = random_tensor(rng, {3, 5}, -2, 2);
                     auto r = random_tensor(rng, {3, 5}, -1, 1, false);
                     Build f = [r](Tape<double>* t, const std::vector<TD>& in) {
                       return project(t, ops::softmax(t, in[0]), r);
                     };
                     return std::pair{f, std::vector<TD>{x}};
                   }});
  cases.push_back({"cross_entropy", [](Rng& rng) {
                     auto x = random_tensor(rng, {4, 5}, -2, 2);
                     std::vector<int> labels(4);
                     for (int& l : labels) l = rng.uniform_int(0, 4);
                     Build f = [labels](Tape<double>* t, const std::vector<TD>& in) {
                       return ops::cross_entropy(t, in[0], labels);
                     };
                     return std::pair{f, std::vector<TD>{x}};
                   }});
  cases.push_back({"l1_loss", [](Rng& rng) {
                     auto a = random_tensor(rng, {2, 6});
                     auto d = away_from_zero(rng, {2, 6}, 0.05);
                     std::vector<double> bv(a.numel());
                     for (std::size_t i = 0; i < bv.size(); ++i) bv[i] = a.data()[i] + d.data()[i];
                     auto b = TD::from({2, 6}, std::move(bv), true);
                     Build f = [](Tape<double>* t, const std::vector<TD>& in) { return ops::l1_loss(t, in[0], in[1]); };
                     return std::pair{f, std::vector<TD>{a, b}};
                   }});
  auto binary = [&](const std::string& name, TD (*op)(Tape<double>*, const TD&, const TD&)) {
    cases.push_back({name, [op](Rng& rng) {
                       auto a = random_tensor(rng, {3, 4});
                       auto b = random_tensor(rng, {3, 4});
                       auto r = random_tensor(rng, {3, 4}, -1, 1, false);
                       Build f = [r, op](Tape<double>* t, const std::vector<TD>& in) {
                         return project(t, op(t, in[0], in[1]), r);
                       };
                       return std::pair{f, std::vector<TD>{a, b}};
                     }});
  };
  binary("add", &ops::add<double>);
  binary("sub", &ops::sub<double>);
  binary("mul", &ops::mul<double>);
  cases.push_back({"scale", [](Rng& rng) {
                     auto x = random_tensor(rng, {3, 4});
                     const double k = rng.uniform(-2, 2);
                     auto r = random_tensor(rng, {3, 4}, -1, 1, false);
                     Build f = [r, k](Tape<double>* t, const std::vector<TD>& in) {
                       return project(t, ops::scale(t, in[0], k), r);
                     };
                     return std::pair{f, std::vector<TD>{x}};
                   }});
  cases.push_back({"add_scalar", [](Rng& rng) {
                     auto x = random_tensor(rng, {3, 4});
                     const double k = rng.uniform(-2, 2);
                     auto r = random_tensor(rng, {3, 4}, -1, 1, false);
                     Build f = [r, k](Tape<double>* t, const std::vector<TD>& in) {
                       return project(t, ops::add_scalar(t, in[0], k), r);
                     };
                     return std::pair{f, std::vector<TD>{x}};
                   }});
  cases.push_back({"square", [](Rng& rng) {
                     auto x = random_tensor(rng, {3, 4});
                     auto r = random_tensor(rng, {3, 4}, -1, 1, false);
                     Build f = [r](Tape<double>* t, const std::vector<TD>& in) {
                       return project(t, ops::square(t, in[0]), r);
                     };
                     return std::pair{f, std::vector<TD>{x}};
                   }});
  cases.push_back({"sum", [](Rng& rng) {
                     auto x = random_tensor(rng, {3, 4});
                     Build f = [](Tape<double>* t, const std::vector<TD>& in) {
                       return ops::square(t, ops::sum(t, in[0]));
                     };
                     return std::pair{f, std::vector<TD>{x}};
                   }});
  cases.push_back({"mean", [](Rng& rng) {
                     auto x = random_tensor(rng, {3, 4});
                     Build f = [](Tape<double>* t, const std::vector<TD>& in) {
                       return ops::square(t, ops::mean(t, in[0]));
                     };
                     return std::pair{f, std::vector<TD>{x}};
                   }});
  return cases;
}

void suite_grad(std::uint64_t seed, std::vector<CheckResult>& out) {
  std::uint64_t stream = 0;
  for (const auto& c : grad_cases()) {
    Rng rng(derive_seed(seed, 100 + stream++));
    double worst = 0.0;
    for (int i = 0; i < kGradInstances; ++i) {
      auto [f, inputs] = c.make(rng);
      worst = std::max(worst, grad_rel_error(f, inputs));
    }
    out.push_back({"grad", c.name, worst < kGradTol, worst, kGradTol,
                   std::to_string(kGradInstances) + " instances, central differences h=1e-5"});
  }
}

// --- slicing ------------------------------------------------------------

ArchConfig small_arch() {
  ArchConfig a;
  a.omega = 10;
  a.blocks = 2;
  a.c_de = 4;
  return a;
}

void randomize_biases(const wab::WabModel<double>& m, Rng& rng) {
  for (const auto& p : m.named_parameters()) {
    if (p.name.size() > 5 && p.name.ends_with(".bias")) {
      for (double& v : p.tensor.data()) v = rng.normal(0.0, 0.1);
    }
  }
}

/// Zeroes everything a width-rho pass would not read.
void mask_conv(const wab::WidthAdaptiveConv<double>& c, int rho, int omega) {
  const int o = c.weight.dim(0);
  const int in = c.weight.dim(1);
  const int kk = c.weight.dim(2) * c.weight.dim(3);
  const int o_lim = o == omega ? rho : o;
  const int i_lim = in == omega ? rho : in;
  auto w = c.weight.data();
  for (int a = 0; a < o; ++a) {
    for (int b = 0; b < in; ++b) {
      if (a < o_lim && b < i_lim) continue;
      std::fill_n(w.begin() + (static_cast<long>(a) * in + b) * kk, kk, 0.0);
    }
  }
  if (c.bias.defined()) {
    auto bias = c.bias.data();
    for (int a = o_lim; a < o; ++a) bias[static_cast<std::size_t>(a)] = 0.0;
  }
}

wab::WabModel<double> masked_copy(const wab::WabModel<double>& m, int rho) {
  auto c = m.cast<double>();
  const int om = m.arch().omega;
  mask_conv(c.head, rho, om);
  mask_conv(c.transform, rho, om);
  for (const auto& b : c.trunk) {
    mask_conv(b.conv1, rho, om);
    mask_conv(b.conv2, rho, om);
  }
  mask_conv(c.tail, rho, om);
  return c;
}

void suite_slicing(std::uint64_t seed, std::vector<CheckResult>& out) {
  constexpr double kTol = 1e-9;
  const ArchConfig arch = small_arch();
  Rng rng(derive_seed(seed, 200));
  const auto model = wab::WabModel<double>::initialized(arch, derive_seed(seed, 201));
  randomize_biases(model, rng);

  for (int rho : arch.widths()) {
    const auto masked = masked_copy(model, rho);
    double worst = 0.0;
    for (int s = 0; s < 20; ++s) {
      const auto x = random_tensor(rng, {1, 3, 8, 8}, 0, 1, false);
      wab::Trace<double> ts, tm;
      const auto f_de = model.encode(nullptr, x);
      const auto ys = model.restore(nullptr, x, f_de, rho, &ts);
      const auto ym = masked.restore(nullptr, x, masked.encode(nullptr, x), arch.omega, &tm);
      for (std::size_t i = 0; i < ys.numel(); ++i) worst = std::max(worst, std::abs(ys.data()[i] - ym.data()[i]));
      for (std::size_t l = 0; l < ts.features.size(); ++l) {
        const auto& a = ts.features[l];
        const auto& b = tm.features[l];
        const std::size_t plane = 64;
        for (int c = 0; c < arch.omega; ++c) {
          for (std::size_t p = 0; p < plane; ++p) {
            const double vb = b.data()[c * plane + p];
            const double va = c < rho ? a.data()[c * plane + p] : 0.0;
            worst = std::max(worst, std::abs(va - vb));
          }
        }
      }
    }
    out.push_back({"slicing", "zero-mask equivalence rho=" + std::to_string(rho), worst < kTol, worst, kTol,
                   "20 random inputs, output and every trunk feature map"});
  }

  // Backward through a narrow pass must not touch weights outside the slice.
  const int rho = arch.widths().front();
  for (const auto& p : model.parameters()) p.zero_grad();
  Tape<double> tape;
  const auto x = random_tensor(rng, {2, 3, 8, 8}, 0, 1, false);
  const auto y = random_tensor(rng, {2, 3, 8, 8}, 0, 1, false);
  tape.backward(ops::l1_loss(&tape, model.forward(&tape, x, rho).restored, y));
  double leaked = 0.0;
  auto check = [&](const wab::WidthAdaptiveConv<double>& c) {
    const auto g = c.weight.grad();
    const int o = c.weight.dim(0), in = c.weight.dim(1), kk = c.weight.dim(2) * c.weight.dim(3);
    for (int a = 0; a < o; ++a) {
      for (int b = 0; b < in; ++b) {
        const bool inside = (o != arch.omega || a < rho) && (in != arch.omega || b < rho);
        if (inside) continue;
        for (int k = 0; k < kk; ++k) leaked = std::max(leaked, std::abs(g[(static_cast<std::size_t>(a) * in + b) * kk + k]));
      }
    }
  };
  check(model.head);
  check(model.transform);
  for (const auto& b : model.trunk) {
    check(b.conv1);
    check(b.conv2);
  }
  check(model.tail);
  out.push_back({"slicing", "gradient isolation rho=" + std::to_string(rho), leaked == 0.0, leaked, 0.0,
                 "weight grads outside the active block are exactly zero"});
}

// --- prefix -------------------------------------------------------------

/// Worst deviation over a random 3-layer linear stack. With `mutate`, one
/// weight in the block only the wide pass reads is corrupted after the
/// reference copy is taken.
double prefix_violation(std::uint64_t seed, int omega, int r1, int r2, bool mutate) {
  Rng rng(seed);
  std::vector<wab::WidthAdaptiveConv<double>> layers;
  for (int l = 0; l < 3; ++l) {
    layers.push_back({random_tensor(rng, {omega, omega, 3, 3}, -0.3, 0.3, false),
                      random_tensor(rng, {omega}, -0.1, 0.1, false)});
  }
  const auto x = random_tensor(rng, {1, omega, 6, 6}, -1, 1, false);
  if (!mutate || r2 == r1) return wab::check_prefix_decomposition(layers, x, r1, r2).max_deviation();
  std::vector<wab::WidthAdaptiveConv<double>> stored;
  for (const auto& l : layers) stored.push_back({l.weight.detach(), l.bias.detach()});
  stored[1].weight.data()[static_cast<std::size_t>(r1) * 9 + 4] += 0.5;  // W[0, r1, 1, 1]
  return wab::check_prefix_decomposition(stored, x, r1, r2, &layers).max_deviation();
}

void suite_prefix(const VerifyOptions& opt, std::vector<CheckResult>& out) {
  constexpr double kTol = wab::kPrefixTolerance;
  double worst = 0.0;
  for (int s = 0; s < 50; ++s) worst = std::max(worst, prefix_violation(derive_seed(opt.seed, 300 + s), 16, 8, 12, opt.mutate_slice));
  out.push_back({"prefix", "remainder decomposition omega=16 rho1=8 rho2=12", worst < kTol, worst, kTol,
                 opt.mutate_slice ? "50 seeds, 3 linear layers, one stored weight corrupted" : "50 seeds, 3 linear layers"});

  double same = 0.0;
  for (int s = 0; s < 10; ++s) same = std::max(same, prefix_violation(derive_seed(opt.seed, 400 + s), 16, 8, 8, false));
  out.push_back({"prefix", "zero remainder when rho1 == rho2", same == 0.0, same, 0.0, "10 seeds"});
}

// --- degrade ------------------------------------------------------------

void suite_degrade(std::uint64_t seed, std::vector<CheckResult>& out) {
  std::vector<double> worst(3, 0.0);
  std::vector<std::string> names(3);
  int sparse_ok = 0;
  constexpr int kSamples = 100;
  Rng rng(derive_seed(seed, 500));
  for (int i = 0; i < kSamples; ++i) {
    const auto x = degrade::synth_clean(derive_seed(seed, 1000 + i), 32, 32);
    degrade::RainSpec rain;
    rain.streaks = rng.uniform_int(3, 10);
    rain.length = rng.uniform(4.0, 10.0);
    rain.angle = rng.uniform(45.0, 85.0);
    rain.intensity = rng.uniform(0.2, 0.8);
    degrade::HazeSpec haze;
    haze.beta = rng.uniform(0.5, 1.5);
    const double sigma = rng.uniform(0.0, 0.2);
    const auto rep = degrade::check_decomposition(x, sigma, rain, haze, derive_seed(seed, 2000 + i));
    for (std::size_t c = 0; c < 3 && c < rep.checks.size(); ++c) {
      names[c] = rep.checks[c].name;
      worst[c] = std::max(worst[c], rep.checks[c].max_deviation);
    }
    if (rep.sparsity_passed) ++sparse_ok;
  }
  for (std::size_t c = 0; c < 3; ++c) {
    out.push_back({"degrade", names[c], worst[c] < degrade::kIdentityTolerance, worst[c], degrade::kIdentityTolerance,
                   std::to_string(kSamples) + " random samples, pre-clamp"});
  }
  out.push_back({"degrade", "support(A_rain) < support(A')", sparse_ok == kSamples,
                 static_cast<double>(kSamples - sparse_ok), 0.0,
                 std::to_string(sparse_ok) + "/" + std::to_string(kSamples) + " samples sparser"});
}

// --- losses -------------------------------------------------------------

void suite_losses(std::uint64_t seed, std::vector<CheckResult>& out) {
  constexpr double kTol = 1e-12;
  ArchConfig arch;  // ratios 0.6..1.0, n == K == 5
  const int n = arch.num_widths();
  auto one_hot_logits = [&](int idx) {
    std::vector<double> z(static_cast<std::size_t>(n), 0.0);
    z[static_cast<std::size_t>(idx)] = 1000.0;  // exp(-1000) underflows to 0
    return TD::from({1, n}, std::move(z));
  };
  const std::vector<int> label{0};
  const std::vector<double> l1{0.5, 0.4, 0.3, 0.2, 0.1};
  auto add = [&](const std::string& name, double got, double want, double tol) {
    const double dev = std::abs(got - want);
    std::ostringstream d;
    d.precision(17);
    d << "got " << got << ", want " << want;
    out.push_back({"losses", name, dev <= tol, dev, tol, d.str()});
  };

  const auto at08 = selector::losses_from_logits<double>(nullptr, arch, one_hot_logits(2), one_hot_logits(2), label, l1, 0.8);
  add("L_spars one-hot at ratio == t", at08.spars.item(), 0.0, kTol);
  const auto at10 = selector::losses_from_logits<double>(nullptr, arch, one_hot_logits(4), one_hot_logits(4), label, l1, 0.8);
  add("L_spars one-hot at 1.0, t=0.8", at10.spars.item(), 0.04, kTol);
  double worst_sel = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto l = selector::losses_from_logits<double>(nullptr, arch, one_hot_logits(i), one_hot_logits(i), label, l1, 0.8);
    worst_sel = std::max(worst_sel, std::abs(l.select.item() - l1[static_cast<std::size_t>(i)] / n));
  }
  add("L_select one-hot == L_i/n", worst_sel, 0.0, kTol);
  const auto uni = selector::losses_from_logits<double>(nullptr, arch, TD::zeros({1, n}), TD::zeros({1, n}), label, l1, 0.8);
  add("L_spars uniform p, t=0.8", uni.spars.item(), 0.0, kTol);
  add("CE of uniform 5-way logits", ops::cross_entropy<double>(nullptr, TD::zeros({1, 5}), label).item(), std::log(5.0),
      1e-9);

  // A zero backbone restores every width to its input, so sub == full.
  const ArchConfig small = small_arch();
  const wab::WabModel<double> zero(small);
  Rng rng(derive_seed(seed, 600));
  const auto img = random_tensor(rng, {2, 3, 8, 8}, 0, 1, false);
  const std::vector<int> labels{1, 3};
  const auto zl = wab::wab_losses<double>(nullptr, zero, img, img, labels, small.widths().front());
  add("L_distill == 0 at equal outputs", zl.distill.item(), 0.0, 0.0);
  add("L_recon == 0 when restored == clean", zl.recon.item(), 0.0, 0.0);

  const auto model = wab::WabModel<double>::initialized(small, derive_seed(seed, 601));
  const auto clean = random_tensor(rng, {2, 3, 8, 8}, 0, 1, false);
  const auto rl = wab::wab_losses<double>(nullptr, model, img, clean, labels, small.widths()[1]);
  add("L_WAB == L_recon + L_distill + L_de", rl.total.item(), rl.recon.item() + rl.distill.item() + rl.de.item(), kTol);
}

}  // namespace

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::string VerifyReport::text() const {
  std::ostringstream o;
  for (const auto& c : checks) {
    o << (c.passed ? "PASS " : "FAIL ") << c.suite << ": " << c.name << "  (measured " << c.deviation
      << ", tolerance " << c.tolerance << "; " << c.detail << ")\n";
  }
  const auto failed = std::count_if(checks.begin(), checks.end(), [](const CheckResult& c) { return !c.passed; });
  o << checks.size() - static_cast<std::size_t>(failed) << "/" << checks.size() << " checks passed\n";
  return o.str();
}

nlohmann::json VerifyReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks) {
    arr.push_back({{"suite", c.suite},
                   {"name", c.name},
                   {"passed", c.passed},
                   {"deviation", c.deviation},
                   {"tolerance", c.tolerance},
                   {"detail", c.detail}});
  }
  return {{"passed", passed()}, {"checks", arr}};
}

const std::vector<std::string>& verify_suite_names() {
  static const std::vector<std::string> names{"grad", "slicing", "prefix", "degrade", "losses"};
  return names;
}

VerifyReport run_verify(const VerifyOptions& options) {
  const auto& all = verify_suite_names();
  for (const auto& s : options.suites) {
    if (std::find(all.begin(), all.end(), s) == all.end()) throw ConfigError("unknown verify suite '" + s + "'");
  }
  auto wanted = [&](const std::string& s) {
    return options.suites.empty() || std::find(options.suites.begin(), options.suites.end(), s) != options.suites.end();
  };
  VerifyReport r;
  if (wanted("grad")) suite_grad(options.seed, r.checks);
  if (wanted("slicing")) suite_slicing(options.seed, r.checks);
  if (wanted("prefix")) suite_prefix(options, r.checks);
  if (wanted("degrade")) suite_degrade(options.seed, r.checks);
  if (wanted("losses")) suite_losses(options.seed, r.checks);
  return r;
}

}  // namespace slim::pipeline
