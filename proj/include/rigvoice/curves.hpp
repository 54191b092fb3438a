/*
 * Copyright 2026 The rigvoice Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rigvoice {

/// A keyframe. Tangents are slopes in controller units per frame.
struct Key {
  int frame = 0;
  double value = 0.0;
  double in_tangent = 0.0;
  double out_tangent = 0.0;

  bool operator==(const Key&) const = default;
};

struct ControllerCurve {
  std::string name;
  std::optional<std::vector<double>> dense;
  std::optional<std::vector<Key>> keys;
};

struct RigAnimationClip {
  std::string name;
  double fps = 24.0;
  int frame_count = 0;
  int emotion = 0;
  std::vector<ControllerCurve> controllers;
  std::string audio_ref;

  const ControllerCurve* find(const std::string& controller) const;
};

/// Throws if the clip breaks its invariants (frame_count >= 2, fps > 0,
/// emotion in [0, n_emotions), dense lengths, strictly increasing keys).
void validate_clip(const RigAnimationClip& clip, int n_emotions);

/// Cubic Hermite segment between k0 (using its out tangent) and k1 (using
/// its in tangent). Slopes are per frame, so they are scaled by the segment
/// length before entering the unit-interval basis.
double hermite_eval(const Key& k0, const Key& k1, double frame);

std::vector<double> reconstruct_dense(std::span<const Key> keys, int frame_count);

/// Greedy refinement: key the first and last frames, then repeatedly key the
/// frame with the largest reconstruction error (earliest on ties) until every
/// frame is within `tolerance`. Slopes come from finite differences.
std::vector<Key> extract_keys(std::span<const double> dense, double tolerance);

/// Finite-difference slope at `frame`: central inside, one-sided at the ends.
double finite_difference_slope(std::span<const double> dense, int frame);

/// Normalized Gaussian, radius ceil(3 sigma), reflective boundary.
std::vector<double> gaussian_smooth(std::span<const double> dense, double sigma);

/// Kernel used by gaussian_smooth: 2r+1 taps with the center at index r.
std::vector<double> gaussian_kernel(double sigma);

/// Snap keys to the stride-`rate` grid (round half up). When several keys
/// land on the same grid frame the earliest wins. The first and last keys
/// are always kept, the last one at its original frame.
std::vector<Key> rate_filter(std::span<const Key> keys, int rate);

/// Per-segment monotone limiting (Fritsch-Carlson). On each segment the out
/// tangent of the left key and the in tangent of the right key are zeroed
/// when they oppose the secant (or the segment is flat) and scaled down
/// together when steeper than three times the secant in norm. Each segment
/// then stays between its two key values.
std::vector<Key> limit_tangents(std::span<const Key> keys);

}  // namespace rigvoice
