// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#include "slim/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "slim/error.hpp"
#include "slim/rng.hpp"

namespace slim::degrade {
namespace {

constexpr std::uint64_t kNoiseStream = 1;
constexpr std::uint64_t kRainStream = 2;
constexpr std::uint64_t kDepthStream = 3;
constexpr double kMaxRainSupport = 0.3;

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double vx = bx - ax;
  const double vy = by - ay;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((px - ax) * vx + (py - ay) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = px - (ax + t * vx);
  const double dy = py - (ay + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

std::string_view task_name(Task task) {
  switch (task) {
    case Task::kNoise15: return "noise15";
    case Task::kNoise25: return "noise25";
    case Task::kNoise50: return "noise50";
    case Task::kRain: return "rain";
    case Task::kHaze: return "haze";
  }
  return "unknown";
}

Task parse_task(std::string_view name) {
  for (int i = 0; i < kNumTasks; ++i) {
    if (task_name(static_cast<Task>(i)) == name) return static_cast<Task>(i);
  }
  throw ConfigError("unknown task '" + std::string(name) + "' (expected noise15|noise25|noise50|rain|haze)");
}

double DegradationSpec::effective_sigma() const {
  if (const auto* n = std::get_if<NoiseSpec>(&kind)) return n->sigma;
  return noise_sigma;
}

void DegradationSpec::validate() const {
  if (effective_sigma() < 0) throw ConfigError("noise sigma must be >= 0");
  if (const auto* r = std::get_if<RainSpec>(&kind)) {
    if (r->streaks < 0) throw ConfigError("rain streak count must be >= 0");
    if (!(r->intensity > 0 && r->intensity <= 1)) throw ConfigError("rain intensity must be in (0,1]");
    if (!(r->length > 0) || !(r->thickness > 0)) throw ConfigError("rain length/thickness must be > 0");
  }
  if (const auto* h = std::get_if<HazeSpec>(&kind)) {
    if (!(h->beta > 0)) throw ConfigError("haze beta must be > 0");
    if (h->airlight < 0 || h->airlight > 1) throw ConfigError("haze airlight must be in [0,1]");
  }
}

DegradationSpec default_spec(Task task, int height, int width) {
  DegradationSpec spec;
  switch (task) {
    case Task::kNoise15: spec.kind = NoiseSpec{15.0 / 255.0}; break;
    case Task::kNoise25: spec.kind = NoiseSpec{25.0 / 255.0}; break;
    case Task::kNoise50: spec.kind = NoiseSpec{50.0 / 255.0}; break;
    case Task::kRain: {
      RainSpec r;
      r.streaks = std::max(1, static_cast<int>(std::lround(20.0 * height * width / (64.0 * 64.0))));
      spec.kind = r;
      break;
    }
    case Task::kHaze: spec.kind = HazeSpec{}; break;
  }
  return spec;
}

Image synth_clean(std::uint64_t seed, int height, int width) {
  if (height < 8 || width < 8) throw DimensionError("synth_clean: image must be at least 8x8");
  Rng rng(seed);
  Image img(3, height, width);

  // Smooth base: per-channel offset, a linear ramp and two low-frequency cosines.
  for (int c = 0; c < 3; ++c) {
    const double offset = rng.uniform(0.25, 0.75);
    const double ramp_angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double ramp = rng.uniform(0.2, 0.4);
    double fx[2], fy[2], amp[2], phase[2];
    for (int t = 0; t < 2; ++t) {
      fx[t] = rng.uniform(0.3, 2.0);
      fy[t] = rng.uniform(0.3, 2.0);
      amp[t] = rng.uniform(0.05, 0.15);
      phase[t] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double u = static_cast<double>(x) / width - 0.5;
        const double v = static_cast<double>(y) / height - 0.5;
        double val = offset + ramp * (u * std::cos(ramp_angle) + v * std::sin(ramp_angle));
        for (int t = 0; t < 2; ++t) {
          val += amp[t] * std::cos(2.0 * std::numbers::pi * (fx[t] * u + fy[t] * v) + phase[t]);
        }
        img.at(c, y, x) = val;
      }
    }
  }

  // Flat-colored rectangles and discs with soft alpha.
  const int shapes = rng.uniform_int(3, 6);
  for (int s = 0; s < shapes; ++s) {
    const bool disc = rng.uniform() < 0.5;
    const double cx = rng.uniform(0.0, width);
    const double cy = rng.uniform(0.0, height);
    const double rx = rng.uniform(0.08, 0.3) * width;
    const double ry = disc ? rx : rng.uniform(0.08, 0.3) * height;
    const double alpha = rng.uniform(0.5, 1.0);
    double color[3];
    for (double& col : color) col = rng.uniform();
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double dx = (x + 0.5 - cx) / rx;
        const double dy = (y + 0.5 - cy) / ry;
        const bool inside = disc ? (dx * dx + dy * dy <= 1.0) : (std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0);
        if (!inside) continue;
        for (int c = 0; c < 3; ++c) img.at(c, y, x) = (1.0 - alpha) * img.at(c, y, x) + alpha * color[c];
      }
    }
  }
  return clamp01(img);
}

Image noise_field(std::uint64_t seed, double sigma, int channels, int height, int width) {
  if (sigma < 0) throw ConfigError("noise sigma must be >= 0");
  Image n(channels, height, width);
  if (sigma == 0.0) return n;
  Rng rng(derive_seed(seed, kNoiseStream));
  for (double& v : n.data) v = sigma * rng.normal();
  return n;
}

Degraded apply_noise(const Image& x, double sigma, std::uint64_t seed) {
  Image n = noise_field(seed, sigma, x.channels, x.height, x.width);
  Image y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] += n.data[i];
  return {std::move(y), std::move(n)};
}

Image rain_layer(const RainSpec& spec, std::uint64_t seed, int channels, int height, int width) {
  if (spec.streaks < 0) throw ConfigError("rain streak count must be >= 0");
  Image layer(channels, height, width);
  if (spec.streaks == 0) return layer;
  Rng rng(derive_seed(seed, kRainStream));
  std::vector<double> plane(static_cast<std::size_t>(height) * width, 0.0);
  const double reach = spec.thickness / 2.0 + 0.5;
  for (int s = 0; s < spec.streaks; ++s) {
    const double cx = rng.uniform(0.0, width);
    const double cy = rng.uniform(0.0, height);
    const double angle = (spec.angle + rng.uniform(-10.0, 10.0)) * std::numbers::pi / 180.0;
    const double len = spec.length * rng.uniform(0.7, 1.3);
    const double peak = spec.intensity * rng.uniform(0.6, 1.0);
    const double hx = 0.5 * len * std::cos(angle);
    const double hy = 0.5 * len * std::sin(angle);
    const double ax = cx - hx, ay = cy - hy, bx = cx + hx, by = cy + hy;
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(ax, bx) - reach)));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(std::max(ax, bx) + reach)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(ay, by) - reach)));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(std::max(ay, by) + reach)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double d = segment_distance(x + 0.5, y + 0.5, ax, ay, bx, by);
        const double coverage = std::clamp(reach - d, 0.0, 1.0);
        plane[static_cast<std::size_t>(y) * width + x] += peak * coverage;
      }
    }
  }
  std::size_t nonzero = 0;
  for (double v : plane) nonzero += (v > 0.0);
  const double fraction = static_cast<double>(nonzero) / static_cast<double>(plane.size());
  if (fraction >= kMaxRainSupport) {
    std::ostringstream os;
    os << "rain layer covers " << fraction << " of pixels (limit " << kMaxRainSupport
       << "); reduce streak count/length/thickness";
    throw ConfigError(os.str());
  }
  for (int c = 0; c < channels; ++c) std::copy(plane.begin(), plane.end(), layer.data.begin() + c * plane.size());
  return layer;
}

Degraded apply_rain(const Image& x, const RainSpec& spec, double noise_sigma, std::uint64_t seed) {
  Image a = rain_layer(spec, seed, x.channels, x.height, x.width);
  const Image n = noise_field(seed, noise_sigma, x.channels, x.height, x.width);
  Image y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] = x.data[i] + a.data[i] + n.data[i];
  return {std::move(y), std::move(a)};
}

Image depth_map(std::uint64_t seed, int height, int width) {
  Rng rng(derive_seed(seed, kDepthStream));
  Image d(1, height, width);
  const double ramp_angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  double fx[3], fy[3], amp[3], phase[3];
  for (int t = 0; t < 3; ++t) {
    fx[t] = rng.uniform(0.2, 1.2);
    fy[t] = rng.uniform(0.2, 1.2);
    amp[t] = rng.uniform(0.2, 0.5);
    phase[t] = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double u = static_cast<double>(x) / width - 0.5;
      const double v = static_cast<double>(y) / height - 0.5;
      double val = u * std::cos(ramp_angle) + v * std::sin(ramp_angle);
      for (int t = 0; t < 3; ++t) val += amp[t] * std::cos(2.0 * std::numbers::pi * (fx[t] * u + fy[t] * v) + phase[t]);
      d.at(0, y, x) = val;
    }
  }
  const auto [lo, hi] = std::minmax_element(d.data.begin(), d.data.end());
  const double lo_v = *lo;
  const double span = *hi - *lo;
  for (double& v : d.data) v = span > 0 ? (v - lo_v) / span : 0.0;
  return d;
}

Degraded apply_haze(const Image& x, const HazeSpec& spec, double noise_sigma, std::uint64_t seed) {
  if (spec.beta < 0) throw ConfigError("haze beta must be >= 0");
  const Image depth = depth_map(seed, x.height, x.width);
  Image a(x.channels, x.height, x.width);
  const std::size_t plane = x.plane();
  for (int c = 0; c < x.channels; ++c) {
    for (std::size_t p = 0; p < plane; ++p) a.data[c * plane + p] = std::exp(-spec.beta * depth.data[p]);
  }
  const Image n = noise_field(seed, noise_sigma, x.channels, x.height, x.width);
  Image y = x;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double v = x.data[i] * a.data[i];
    if (spec.mode == HazeMode::kScattering) v += spec.airlight * (1.0 - a.data[i]);
    y.data[i] = v + n.data[i];
  }
  return {std::move(y), std::move(a)};
}

Image residual_haze(const Image& x, const Image& haze) {
  if (!x.same_shape(haze)) throw DimensionError("residual_haze: shapes differ");
  Image r = x;
  for (std::size_t i = 0; i < r.size(); ++i) r.data[i] = (haze.data[i] - 1.0) * x.data[i];
  return r;
}

DegradedSample make_sample(const DegradationSpec& spec, int task_label, std::uint64_t clean_seed,
                           std::uint64_t deg_seed, int height, int width) {
  spec.validate();
  DegradedSample s;
  s.clean = synth_clean(clean_seed, height, width);
  s.task_label = task_label;
  const double sigma = spec.effective_sigma();
  s.components.noise = noise_field(deg_seed, sigma, s.clean.channels, height, width);
  if (std::holds_alternative<NoiseSpec>(spec.kind)) {
    s.degraded_raw = apply_noise(s.clean, sigma, deg_seed).y;
  } else if (const auto* r = std::get_if<RainSpec>(&spec.kind)) {
    auto out = apply_rain(s.clean, *r, sigma, deg_seed);
    s.degraded_raw = std::move(out.y);
    s.components.rain = std::move(out.layer);
  } else {
    const auto& h = std::get<HazeSpec>(spec.kind);
    auto out = apply_haze(s.clean, h, sigma, deg_seed);
    s.degraded_raw = std::move(out.y);
    s.components.residual = residual_haze(s.clean, out.layer);
    s.components.haze = std::move(out.layer);
  }
  s.degraded = clamp01(s.degraded_raw);
  return s;
}

bool DecompositionReport::passed() const {
  return sparsity_passed && std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

std::string DecompositionReport::summary() const {
  std::ostringstream os;
  for (const auto& c : checks) os << c.name << ": max dev " << c.max_deviation << (c.passed ? " ok" : " FAIL") << "\n";
  os << "support(A_rain)=" << rain_support << " support(A')=" << residual_support
     << (sparsity_passed ? " ok" : " FAIL") << "\n";
  return os.str();
}

DecompositionReport check_decomposition(const Image& x, double noise_sigma, const RainSpec& rain,
                                        const HazeSpec& haze, std::uint64_t seed) {
  HazeSpec paper = haze;
  paper.mode = HazeMode::kPaper;
  const auto noisy = apply_noise(x, noise_sigma, seed);
  const auto rainy = apply_rain(x, rain, noise_sigma, seed);
  const auto hazy = apply_haze(x, paper, noise_sigma, seed);
  const Image residual = residual_haze(x, hazy.layer);
  const Image& a_rain = rainy.layer;

  DecompositionReport report;
  auto record = [&](std::string name, const Image& lhs, const Image& rhs) {
    const double dev = max_abs_diff(lhs, rhs);
    report.checks.push_back({std::move(name), dev, dev < kIdentityTolerance});
  };

  Image rhs_a = noisy.y;
  for (std::size_t i = 0; i < rhs_a.size(); ++i) rhs_a.data[i] += a_rain.data[i];
  record("y_rain = y_noise + A_rain", rainy.y, rhs_a);

  Image rhs_b = noisy.y;
  for (std::size_t i = 0; i < rhs_b.size(); ++i) rhs_b.data[i] += residual.data[i];
  record("y_haze = y_noise + A'", hazy.y, rhs_b);

  Image rhs_c = rainy.y;
  for (std::size_t i = 0; i < rhs_c.size(); ++i) {
    rhs_c.data[i] += (a_rain.data[i] != 0.0) ? residual.data[i] - a_rain.data[i] : residual.data[i];
  }
  record("y_haze = y_rain + (A'-A_rain)|rain + A'|no-rain", hazy.y, rhs_c);

  report.rain_support = support_fraction(a_rain);
  report.residual_support = support_fraction(residual);
  // With no rain and no haze there is nothing to compare.
  const bool both_empty = report.rain_support == 0.0 && report.residual_support == 0.0;
  report.sparsity_passed = both_empty || report.rain_support < report.residual_support;
  return report;
}

DecompositionReport verify_decomposition(const Image& x, double noise_sigma, const RainSpec& rain,
                                         const HazeSpec& haze, std::uint64_t seed) {
  auto report = check_decomposition(x, noise_sigma, rain, haze, seed);
  for (const auto& c : report.checks) {
    if (!c.passed) {
      std::ostringstream os;
      os << "identity violated: " << c.name << " (max deviation " << c.max_deviation << ")";
      throw VerificationError(os.str());
    }
  }
  if (!report.sparsity_passed) {
    std::ostringstream os;
    os << "sparsity violated: support(A_rain)=" << report.rain_support << " >= support(A')=" << report.residual_support;
    throw VerificationError(os.str());
  }
  return report;
}

}  // namespace slim::degrade
