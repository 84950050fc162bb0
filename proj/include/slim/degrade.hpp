// Copyright 2026 The slim Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "slim/image.hpp"

// Synthetic degradation lab: procedural clean images, additive noise,
// sparse additive rain streaks and multiplicative haze, plus a checker for
// the noise -> rain -> haze composition identities.
namespace slim::degrade {

/// Task labels, ordered by ascending restoration difficulty.
enum class Task : int { kNoise15 = 0, kNoise25 = 1, kNoise50 = 2, kRain = 3, kHaze = 4 };
inline constexpr int kNumTasks = 5;

std::string_view task_name(Task task);
/// Parses "noise15", "noise25", "noise50", "rain", "haze". Throws ConfigError.
Task parse_task(std::string_view name);

struct NoiseSpec {
  double sigma = 25.0 / 255.0;
};

struct RainSpec {
  int streaks = 20;
  double length = 8.0;      // px
  double angle = 70.0;      // degrees from the horizontal
  double intensity = 0.5;   // additive peak value
  double thickness = 1.0;   // px
};

enum class HazeMode { kPaper, kScattering };

struct HazeSpec {
  double beta = 1.0;
  double airlight = 0.9;
  HazeMode mode = HazeMode::kPaper;
};

struct DegradationSpec {
  std::variant<NoiseSpec, RainSpec, HazeSpec> kind;
  /// Additive noise shared by rain and haze. Ignored for the noise variant,
  /// whose sigma lives in NoiseSpec.
  double noise_sigma = 0.0;

  double effective_sigma() const;
  void validate() const;
};

/// Default spec for a task at a given image size. Rain streak counts scale
/// with area from 20 streaks per 64x64.
DegradationSpec default_spec(Task task, int height, int width);

struct Components {
  Image noise;                    // N
  std::optional<Image> rain;      // A_rain
  std::optional<Image> haze;      // A_haze
  std::optional<Image> residual;  // A' = (A_haze - 1) * x
};

struct DegradedSample {
  Image clean;
  Image degraded_raw;  // before clamping
  Image degraded;      // clamped to [0,1]
  Components components;
  int task_label = 0;
};

struct Degraded {
  Image y;
  Image layer;  // N, A_rain or A_haze depending on the op
};

Image synth_clean(std::uint64_t seed, int height, int width);

/// Standard-normal field for a seed, scaled by sigma. Shared by all ops so
/// that the same seed gives the same N.
Image noise_field(std::uint64_t seed, double sigma, int channels, int height, int width);

/// y_noise = x + N. Returns {y_noise, N}.
Degraded apply_noise(const Image& x, double sigma, std::uint64_t seed);

/// Sparse non-negative streak layer for the spec. Throws ConfigError when the
/// support fraction reaches 0.3.
Image rain_layer(const RainSpec& spec, std::uint64_t seed, int channels, int height, int width);

/// y_rain = x + A_rain + N. Returns {y_rain, A_rain}.
Degraded apply_rain(const Image& x, const RainSpec& spec, double noise_sigma, std::uint64_t seed);

/// Smooth low-frequency depth map normalized to [0,1].
Image depth_map(std::uint64_t seed, int height, int width);

/// A_haze = exp(-beta * d). paper mode: y = x * A + N; scattering mode adds
/// airlight * (1 - A). Returns {y_haze, A_haze}.
Degraded apply_haze(const Image& x, const HazeSpec& spec, double noise_sigma, std::uint64_t seed);

/// A' = (A_haze - 1) * x.
Image residual_haze(const Image& x, const Image& haze);

/// Full sample for a spec: clean from clean_seed, degradation from deg_seed.
DegradedSample make_sample(const DegradationSpec& spec, int task_label, std::uint64_t clean_seed,
                           std::uint64_t deg_seed, int height, int width);

struct IdentityCheck {
  std::string name;
  double max_deviation = 0.0;
  bool passed = false;
};

struct DecompositionReport {
  std::vector<IdentityCheck> checks;
  double rain_support = 0.0;      // nonzero fraction of A_rain
  double residual_support = 0.0;  // nonzero fraction of A'
  bool sparsity_passed = false;

  bool passed() const;
  std::string summary() const;
};

inline constexpr double kIdentityTolerance = 1e-12;

/// Builds y_noise, y_rain and y_haze (paper mode) from one shared noise draw
/// and checks, pre-clamp:
///   (a) y_rain = y_noise + A_rain
///   (b) y_haze = y_noise + A'
///   (c) y_haze = y_rain + (A' - A_rain) on rain support + A' off support
///   (d) support(A_rain) < support(A')
DecompositionReport check_decomposition(const Image& x, double noise_sigma, const RainSpec& rain,
                                        const HazeSpec& haze, std::uint64_t seed);

/// Same as check_decomposition but throws VerificationError naming the first
/// failed identity and its deviation.
DecompositionReport verify_decomposition(const Image& x, double noise_sigma, const RainSpec& rain,
                                         const HazeSpec& haze, std::uint64_t seed);

}  // namespace slim::degrade
