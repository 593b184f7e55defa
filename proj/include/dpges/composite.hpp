#pragma once

#include <cassert>
#include <stdexcept>

#include "dpges/core.hpp"
#include "dpges/raster_surfel.hpp"
#include "dpges/splat_gauss.hpp"

namespace dpges {

// Final assembly: C = (C_s + C_G) / (W_s + W_G). The surfel weight sum is 1
// by construction and W_G >= 0, so the denominator never needs a guard; a
// violation means an upstream bug.
template <typename S>
ColorImageT<S> composite(const ColorImageT<S>& surfel_color, const ScalarImageT<S>& surfel_weight,
                         const AccumBuffers<S>& accum) {
  if (surfel_color.width != accum.color.width || surfel_color.height != accum.color.height)
    throw std::invalid_argument("composite: image dimensions mismatch");
  ColorImageT<S> out(surfel_color.width, surfel_color.height);
  const S weight_slack = S(16) * std::numeric_limits<S>::epsilon();
  for (int i = 0; i < out.count(); ++i) {
    const S denom = surfel_weight.values[i] + accum.weight.values[i];
    assert(denom >= S(1) - weight_slack && "surfel weight identity violated");
    (void)weight_slack;
    out.pixels[i] = (surfel_color.pixels[i] + accum.color.pixels[i]) / denom;
  }
  return out;
}

struct RenderOptions {
  int layers = 3;
  int threads = 1;
  bool geometry_maps = false;  // also blend depth and normal maps
};

// Full forward pass. Keeps every intermediate the hand-written backward pass
// consumes, so the result doubles as the reverse-mode tape.
template <typename S>
struct RenderResult {
  CameraT<S> camera;
  int layers = 3;
  std::vector<SurfelViewData<S>> surfel_views;
  std::vector<GaussianViewData<S>> gaussian_views;
  PeelImage<S> stack;
  ColorImageT<S> surfel_color;   // C_s
  ScalarImageT<S> surfel_weight; // W_s, explicit sum
  AccumBuffers<S> accum;         // C_G, W_G
  ColorImageT<S> color;          // C
  ScalarImageT<S> depth_map;     // blended surfel depth (geometry_maps only)
  ColorImageT<S> normal_map;     // blended camera-space surfel normals
};

template <typename S>
void blend_geometry_maps(const PeelImage<S>& stack, const std::vector<SurfelViewData<S>>& views,
                         ScalarImageT<S>& depth_out, ColorImageT<S>& normal_out) {
  depth_out = ScalarImageT<S>(stack.width, stack.height);
  normal_out = ColorImageT<S>(stack.width, stack.height);
  for (int y = 0; y < stack.height; ++y) {
    for (int x = 0; x < stack.width; ++x) {
      const PeelPixel<S>& pixel = stack(x, y);
      S d = S(0);
      Vec3<S> n = Vec3<S>::Zero();
      for (int i = 1; i <= pixel.layer_count; ++i) {
        const auto& layer = pixel.layers[i - 1];
        const S w = layer.alpha * pixel.transmittance[i - 1];
        const auto& view = views[layer.surfel_id];
        d += w * layer.depth;
        n += w * view.normal_sign * view.frame.col(2);
      }
      depth_out(x, y) = d;
      normal_out(x, y) = n;
    }
  }
}

template <typename S>
RenderResult<S> render(const SceneT<S>& scene, const CameraT<S>& cam,
                       const RenderOptions& opts = {}) {
  if (opts.layers < 2 || opts.layers > kMaxPeelLayers)
    throw std::invalid_argument("render: layer count must be in {2,3,4}");
  RenderResult<S> r;
  r.camera = cam;
  r.layers = opts.layers;
  r.surfel_views = prepare_surfels(scene, cam);
  r.stack = peel(scene, cam, opts.layers, r.surfel_views, opts.threads);
  culling_depth(r.stack);
  blend_surfels(r.stack, r.surfel_views, scene.background, r.surfel_color, r.surfel_weight);
  r.gaussian_views = prepare_gaussians(scene, cam);
  r.accum = splat_accumulate(scene, cam, r.stack, r.gaussian_views, opts.threads);
  r.color = composite(r.surfel_color, r.surfel_weight, r.accum);
  if (opts.geometry_maps)
    blend_geometry_maps(r.stack, r.surfel_views, r.depth_map, r.normal_map);
  return r;
}

}  // namespace dpges
