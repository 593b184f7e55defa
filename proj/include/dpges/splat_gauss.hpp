#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "dpges/core.hpp"
#include "dpges/raster_surfel.hpp"
#include "dpges/scene.hpp"

namespace dpges {

// 3.5-sigma footprint: exponents below -6.125 are dropped.
inline constexpr double kGaussCutoffExponent = -6.125;
inline constexpr double kCovRegularization = 0.3;   // px^2 added to the diagonal
inline constexpr double kCovDetGuard = 1e-12;

template <typename S>
struct GaussianSplat {
  S depth;           // camera-space z of the center, uniform over the footprint
  Vec2<S> mean;      // pixel coordinates
  Mat2<S> cov;       // regularized 2x2 screen-space covariance
  Mat2<S> cov_inv;
  Vec3<S> color;     // view-evaluated color
  S sigma;
  Vec3<S> view_dir;  // world-space unit vector, camera -> center
  PixelBox bbox;
};

template <typename S>
struct AccumBuffers {
  ColorImageT<S> color;    // C_G
  ScalarImageT<S> weight;  // W_G
};

// EWA-style perspective projection of one Gaussian. Returns nothing when the
// center is at or behind the near plane, the footprint misses the screen, or
// the projected covariance is degenerate.
template <typename S>
std::optional<GaussianSplat<S>> project_gaussian(const GaussianT<S>& g, const SceneT<S>& scene,
                                                 const CameraT<S>& cam) {
  const Vec3<S> p = cam.to_camera(g.position);
  if (p[2] <= cam.near_clip || p[2] >= cam.far_clip) return std::nullopt;

  GaussianSplat<S> splat;
  splat.depth = p[2];
  splat.mean = cam.project(p);

  const Mat3<S> R = quat_to_rotation(g.rotation);
  const Mat3<S> cov3 = R * g.scale.array().square().matrix().asDiagonal() * R.transpose();

  Mat23<S> J;
  const S z = p[2];
  J << cam.fx / z, S(0), -cam.fx * p[0] / (z * z),
       S(0), cam.fy / z, -cam.fy * p[1] / (z * z);
  const Mat23<S> T = J * cam.rotation;
  splat.cov = T * cov3 * T.transpose();
  splat.cov(0, 0) += S(kCovRegularization);
  splat.cov(1, 1) += S(kCovRegularization);

  const S det = splat.cov.determinant();
  if (det < S(kCovDetGuard)) return std::nullopt;
  splat.cov_inv << splat.cov(1, 1), -splat.cov(0, 1), -splat.cov(1, 0), splat.cov(0, 0);
  splat.cov_inv /= det;

  const S radius = std::sqrt(S(-2) * S(kGaussCutoffExponent));
  const S ext_x = radius * std::sqrt(splat.cov(0, 0));
  const S ext_y = radius * std::sqrt(splat.cov(1, 1));
  splat.bbox = PixelBox{static_cast<int>(std::floor(splat.mean[0] - ext_x - S(0.5))),
                        static_cast<int>(std::floor(splat.mean[1] - ext_y - S(0.5))),
                        static_cast<int>(std::ceil(splat.mean[0] + ext_x - S(0.5))),
                        static_cast<int>(std::ceil(splat.mean[1] + ext_y - S(0.5)))}
                   .clipped(cam.width, cam.height);
  if (splat.bbox.empty()) return std::nullopt;

  const Vec3<S> rel = g.position - cam.center();
  const S dist = rel.norm();
  splat.view_dir = dist > S(0) ? Vec3<S>(rel / dist) : Vec3<S>(0, 0, 1);
  splat.color = sh_eval(scene.sh_degree, g.sh, splat.view_dir);
  splat.sigma = g.sigma;
  return splat;
}

template <typename S>
struct GaussianViewData {
  bool visible = false;
  GaussianSplat<S> splat;
};

template <typename S>
std::vector<GaussianViewData<S>> prepare_gaussians(const SceneT<S>& scene, const CameraT<S>& cam) {
  std::vector<GaussianViewData<S>> out(scene.gaussians.size());
  for (size_t i = 0; i < scene.gaussians.size(); ++i) {
    auto s = project_gaussian(scene.gaussians[i], scene, cam);
    if (s) {
      out[i].visible = true;
      out[i].splat = *s;
    }
  }
  return out;
}

// Transmittance seen by a primitive at depth d: T_0 in front of the first
// peeled layer, T_k between layers k and k+1, T_{L-1} beyond the second-to-
// last layer. Boundary ties go to the deeper interval. Missing layers sit at
// +far, so an empty pixel returns T_0 = 1. Returns the interval index too.
template <typename S>
S interval_transmittance(const PeelPixel<S>& pixel, int num_layers, S depth, int* interval = nullptr) {
  int k = 0;
  while (k < num_layers - 1) {
    const S boundary = k < pixel.layer_count ? pixel.layers[k].depth : infinity<S>();
    if (depth < boundary) break;
    ++k;
  }
  if (interval) *interval = k;
  return pixel.transmittance[k];
}

// Depth-test indicator: keep a Gaussian when its center depth is in front of
// the margin-extended culling depth. An infinite culling depth disables
// culling at that pixel.
template <typename S>
bool depth_test(const PeelPixel<S>& pixel, S depth, const std::vector<SurfelT<S>>& surfels) {
  if (pixel.cull_surfel_id < 0) return true;
  return depth < pixel.cull_depth + surfels[pixel.cull_surfel_id].margin;
}

// Enumerates the per-pixel contributions of one splat over its footprint.
// Forward accumulation, the hand-written backward pass, and the discrete
// branch fingerprint all walk contributions through this single routine so
// their footprint and branch decisions can never drift apart.
template <typename S, typename Fn>
void for_each_splat_contribution(const GaussianSplat<S>& splat, const PeelImage<S>& stack,
                                 const std::vector<SurfelT<S>>& surfels, Fn&& fn) {
  for (int py = splat.bbox.y0; py <= splat.bbox.y1; ++py) {
    for (int px = splat.bbox.x0; px <= splat.bbox.x1; ++px) {
      const Vec2<S> delta(S(px) + S(0.5) - splat.mean[0], S(py) + S(0.5) - splat.mean[1]);
      const S expo = S(-0.5) * delta.dot(splat.cov_inv * delta);
      if (expo < S(kGaussCutoffExponent)) continue;
      const PeelPixel<S>& pixel = stack(px, py);
      if (!depth_test(pixel, splat.depth, surfels)) continue;
      int interval = 0;
      const S t = interval_transmittance(pixel, stack.num_layers, splat.depth, &interval);
      if (t == S(0)) continue;
      fn(px, py, delta, expo, interval, t);
    }
  }
}

// Sort-free accumulation of Gaussian colors and weights. Within a chunk,
// Gaussians are added in index order; chunk partials merge in chunk order,
// so a fixed (list, threads) pair gives bitwise-identical buffers.
template <typename S>
AccumBuffers<S> splat_accumulate(const SceneT<S>& scene, const CameraT<S>& cam,
                                 const PeelImage<S>& stack,
                                 const std::vector<GaussianViewData<S>>& views, int threads = 1) {
  AccumBuffers<S> accum;
  accum.color = ColorImageT<S>(cam.width, cam.height);
  accum.weight = ScalarImageT<S>(cam.width, cam.height);

  const int n = static_cast<int>(views.size());
  if (n == 0) return accum;
  const int chunk_count = std::max(1, std::min(threads, n));
  std::vector<AccumBuffers<S>> partials(chunk_count);

  parallel_chunks(n, chunk_count, [&](int chunk, int begin, int end) {
    AccumBuffers<S>& buf = partials[chunk];
    buf.color = ColorImageT<S>(cam.width, cam.height);
    buf.weight = ScalarImageT<S>(cam.width, cam.height);
    for (int i = begin; i < end; ++i) {
      if (!views[i].visible) continue;
      const GaussianSplat<S>& splat = views[i].splat;
      for_each_splat_contribution(
          splat, stack, scene.surfels,
          [&](int px, int py, const Vec2<S>&, S expo, int, S t) {
            const S w = splat.sigma * std::exp(expo) * t;
            buf.color(px, py) += w * splat.color;
            buf.weight(px, py) += w;
          });
    }
  });

  for (int c = 0; c < chunk_count; ++c) {
    for (int i = 0; i < accum.color.count(); ++i) {
      accum.color.pixels[i] += partials[c].color.pixels[i];
      accum.weight.values[i] += partials[c].weight.values[i];
    }
  }
  return accum;
}

}  // namespace dpges
