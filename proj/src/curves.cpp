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

#include "rigvoice/curves.hpp"

#include <algorithm>
#include <cmath>

#include "rigvoice/error.hpp"

namespace rigvoice {

const ControllerCurve* RigAnimationClip::find(const std::string& controller) const {
  for (const auto& c : controllers)
    if (c.name == controller) return &c;
  return nullptr;
}

void validate_clip(const RigAnimationClip& clip, int n_emotions) {
  const std::string where = "clip '" + clip.name + "': ";
  require(clip.frame_count >= 2, where + "frame_count must be >= 2");
  require(std::isfinite(clip.fps) && clip.fps > 0, where + "fps must be > 0");
  require(clip.emotion >= 0 && clip.emotion < n_emotions,
          where + "emotion label out of range");
  for (const auto& c : clip.controllers) {
    require(c.dense || c.keys, where + "controller '" + c.name + "' has neither values nor keys");
    if (c.dense) {
      require(static_cast<int>(c.dense->size()) == clip.frame_count,
              where + "controller '" + c.name + "' values length != frame_count");
      for (double v : *c.dense)
        require(std::isfinite(v), where + "controller '" + c.name + "' has a non-finite value");
    }
    if (c.keys) {
      int prev = -1;
      for (const auto& k : *c.keys) {
        require(k.frame > prev, where + "controller '" + c.name + "' key frames not strictly increasing");
        require(k.frame < clip.frame_count, where + "controller '" + c.name + "' key past the last frame");
        require(std::isfinite(k.value) && std::isfinite(k.in_tangent) && std::isfinite(k.out_tangent),
                where + "controller '" + c.name + "' has a non-finite key");
        prev = k.frame;
      }
    }
  }
}

double hermite_eval(const Key& k0, const Key& k1, double frame) {
  if (k0.frame >= k1.frame)
    fail(ErrorCode::kInvalidArgument, "hermite_eval: segment start must precede its end");
  if (!(frame >= k0.frame && frame <= k1.frame))
    fail(ErrorCode::kDomain, "hermite_eval: frame outside the segment");
  const double length = static_cast<double>(k1.frame - k0.frame);
  const double t = (frame - k0.frame) / length;
  if (t == 0.0) return k0.value;
  if (t == 1.0) return k1.value;
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1;
  const double h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2;
  const double h11 = t3 - t2;
  return h00 * k0.value + h10 * length * k0.out_tangent + h01 * k1.value +
         h11 * length * k1.in_tangent;
}

std::vector<double> reconstruct_dense(std::span<const Key> keys, int frame_count) {
  require(!keys.empty(), "reconstruct_dense: key list is empty");
  require(frame_count >= 1, "reconstruct_dense: frame_count must be positive");
  for (std::size_t i = 0; i < keys.size(); ++i) {
    require(keys[i].frame >= 0 && keys[i].frame < frame_count,
            "reconstruct_dense: key frame outside [0, frame_count)");
    if (i > 0) require(keys[i].frame > keys[i - 1].frame,
                       "reconstruct_dense: key frames not strictly increasing");
  }
  std::vector<double> out(static_cast<std::size_t>(frame_count));
  std::size_t seg = 0;
  for (int f = 0; f < frame_count; ++f) {
    if (f <= keys.front().frame) {
      out[f] = keys.front().value;
    } else if (f >= keys.back().frame) {
      out[f] = keys.back().value;
    } else {
      while (keys[seg + 1].frame < f) ++seg;
      out[f] = hermite_eval(keys[seg], keys[seg + 1], f);
    }
  }
  return out;
}

double finite_difference_slope(std::span<const double> dense, int frame) {
  const int n = static_cast<int>(dense.size());
  if (n < 2) return 0.0;
  if (frame <= 0) return dense[1] - dense[0];
  if (frame >= n - 1) return dense[n - 1] - dense[n - 2];
  return 0.5 * (dense[frame + 1] - dense[frame - 1]);
}

namespace {

Key key_at(std::span<const double> dense, int frame) {
  const double slope = finite_difference_slope(dense, frame);
  return Key{frame, dense[frame], slope, slope};
}

}  // namespace

std::vector<Key> extract_keys(std::span<const double> dense, double tolerance) {
  require(dense.size() >= 2, "extract_keys: need at least two frames");
  require(tolerance > 0, "extract_keys: tolerance must be > 0");
  for (double v : dense) require(std::isfinite(v), "extract_keys: non-finite input");

  const int n = static_cast<int>(dense.size());
  std::vector<Key> keys{key_at(dense, 0), key_at(dense, n - 1)};
  for (;;) {
    const auto recon = reconstruct_dense(keys, n);
    int worst = -1;
    double worst_err = tolerance;
    for (int f = 0; f < n; ++f) {
      const double err = std::abs(recon[f] - dense[f]);
      if (err > worst_err) {
        worst_err = err;
        worst = f;
      }
    }
    if (worst < 0) break;
    auto pos = std::lower_bound(keys.begin(), keys.end(), worst,
                                [](const Key& k, int f) { return k.frame < f; });
    keys.insert(pos, key_at(dense, worst));
  }
  return keys;
}

std::vector<double> gaussian_kernel(double sigma) {
  require(std::isfinite(sigma) && sigma >= 0, "gaussian_smooth: sigma must be >= 0");
  if (sigma == 0) return {1.0};
  const int radius = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> w(2 * radius + 1);
  double sum = 0;
  for (int k = -radius; k <= radius; ++k) {
    w[k + radius] = std::exp(-0.5 * (k * k) / (sigma * sigma));
    sum += w[k + radius];
  }
  for (double& x : w) x /= sum;
  return w;
}

std::vector<double> gaussian_smooth(std::span<const double> dense, double sigma) {
  const auto w = gaussian_kernel(sigma);
  std::vector<double> out(dense.begin(), dense.end());
  const int n = static_cast<int>(dense.size());
  if (w.size() == 1 || n == 0) return out;
  const int radius = static_cast<int>(w.size() / 2);
  // Half-sample symmetric reflection: ... b a | a b c ... x y | y x ...
  auto reflect = [n](int i) {
    const int period = 2 * n;
    int m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - 1 - m;
  };
  for (int i = 0; i < n; ++i) {
    double acc = 0;
    for (int k = -radius; k <= radius; ++k) acc += w[k + radius] * dense[reflect(i + k)];
    out[i] = acc;
  }
  return out;
}

std::vector<Key> rate_filter(std::span<const Key> keys, int rate) {
  require(rate == 1 || rate == 2 || rate == 4, "rate_filter: rate must be 1, 2 or 4");
  std::vector<Key> out(keys.begin(), keys.end());
  if (rate == 1 || keys.size() <= 2) return out;
  out.clear();
  const Key& last = keys.back();
  out.push_back(keys.front());
  for (std::size_t i = 1; i + 1 < keys.size(); ++i) {
    Key k = keys[i];
    k.frame = (k.frame + rate / 2) / rate * rate;
    if (k.frame <= out.back().frame || k.frame >= last.frame) continue;
    out.push_back(k);
  }
  out.push_back(last);
  return out;
}

std::vector<Key> limit_tangents(std::span<const Key> keys) {
  std::vector<Key> out(keys.begin(), keys.end());
  for (std::size_t i = 0; i + 1 < out.size(); ++i) {
    Key& a = out[i];
    Key& b = out[i + 1];
    require(b.frame > a.frame, "limit_tangents: key frames must increase");
    const double secant = (b.value - a.value) / (b.frame - a.frame);
    if (secant == 0.0) {
      a.out_tangent = 0.0;
      b.in_tangent = 0.0;
      continue;
    }
    double alpha = a.out_tangent / secant;
    double beta = b.in_tangent / secant;
    if (alpha < 0) alpha = 0;
    if (beta < 0) beta = 0;
    const double norm = std::hypot(alpha, beta);
    if (norm > 3.0) {
      alpha *= 3.0 / norm;
      beta *= 3.0 / norm;
    }
    a.out_tangent = alpha * secant;
    b.in_tangent = beta * secant;
  }
  return out;
}

}  // namespace rigvoice
