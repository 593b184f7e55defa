#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "dpges/core.hpp"
#include "dpges/scene.hpp"

namespace dpges {

inline constexpr int kMaxPeelLayers = 4;
inline constexpr int kTileSize = 16;

// Fragments are kept only where alpha >= 1/255, i.e. r^2 <= 2 ln(255 w).
template <typename S>
S surfel_support_r2(S opacity_w) {
  return S(2) * std::log(S(255) * opacity_w);
}

// Surfel boundary-ring opacity: min(1, w exp(-r^2/2)).
template <typename S>
S surfel_alpha(S opacity_w, S r2) {
  return std::min(S(1), opacity_w * std::exp(-r2 / S(2)));
}

// Per-view, camera-space precomputation for one surfel.
template <typename S>
struct SurfelViewData {
  bool visible = false;
  Vec3<S> center;        // camera space
  Mat3<S> frame;         // camera-space orientation; columns are local axes
  Vec2<S> scale;
  Vec3<S> color;         // view-evaluated color, one per surfel per view
  Vec3<S> view_dir;      // world-space unit vector, surfel center -> camera
  S normal_sign = S(1);  // flips frame.col(2) toward the camera
  PixelBox bbox;
};

template <typename S>
struct SurfelFragment {
  S depth;
  S alpha;
  Vec3<S> color;
  int surfel_id;
  S local_r2;
};

// (depth, id) lexicographic order; ids are unique so this is total.
template <typename S>
bool fragment_before(S depth_a, int id_a, S depth_b, int id_b) {
  return depth_a < depth_b || (depth_a == depth_b && id_a < id_b);
}

template <typename S>
struct PeelLayerEntry {
  S depth = infinity<S>();
  S alpha = S(0);
  int surfel_id = -1;
};

template <typename S>
struct PeelPixel {
  std::array<PeelLayerEntry<S>, kMaxPeelLayers> layers;
  std::array<S, kMaxPeelLayers + 1> transmittance;  // T_0..T_L
  int layer_count = 0;
  S cull_depth = infinity<S>();
  int cull_surfel_id = -1;

  // Inserts into the sorted top-L window, keeping at most `limit` entries.
  void insert(S depth, S alpha, int id, int limit) {
    if (layer_count == limit &&
        !fragment_before(depth, id, layers[limit - 1].depth, layers[limit - 1].surfel_id))
      return;
    int pos = layer_count < limit ? layer_count : limit - 1;
    while (pos > 0 && fragment_before(depth, id, layers[pos - 1].depth, layers[pos - 1].surfel_id)) {
      layers[pos] = layers[pos - 1];
      --pos;
    }
    layers[pos] = PeelLayerEntry<S>{depth, alpha, id};
    if (layer_count < limit) ++layer_count;
  }

  void finalize_transmittance(int num_layers) {
    transmittance[0] = S(1);
    for (int i = 1; i <= num_layers; ++i) {
      S a = i <= layer_count ? layers[i - 1].alpha : S(0);
      transmittance[i] = transmittance[i - 1] * (S(1) - a);
    }
    for (int i = num_layers + 1; i <= kMaxPeelLayers; ++i)
      transmittance[i] = transmittance[num_layers];
  }
};

template <typename S>
struct PeelImage {
  int width = 0, height = 0;
  int num_layers = 3;
  std::vector<PeelPixel<S>> px;

  PeelImage() = default;
  PeelImage(int w, int h, int layers)
      : width(w), height(h), num_layers(layers), px(static_cast<size_t>(w) * h) {}
  PeelPixel<S>& operator()(int x, int y) { return px[static_cast<size_t>(y) * width + x]; }
  const PeelPixel<S>& operator()(int x, int y) const {
    return px[static_cast<size_t>(y) * width + x];
  }
};

namespace detail {

// Extremes of the projected rim coordinate (fx p_e/p_z + c). The rim is
// P(t) = c + u cos t + v sin t; critical angles satisfy
// (C D - A F) sin t + (B F - C E) cos t + (B D - A E) = 0 with
// A,B,C the e-axis components and D,E,F the z components.
template <typename S>
bool rim_extremes(S A, S B, S C, S D, S E, S F, S focal, S principal, S& lo, S& hi) {
  const S a = C * D - A * F;
  const S b = B * F - C * E;
  const S g = B * D - A * E;
  const S r = std::hypot(a, b);
  auto screen = [&](S ct, S st) {
    const S num = C + A * ct + B * st;
    const S den = F + D * ct + E * st;
    return focal * num / den + principal;
  };
  if (r < std::abs(g)) return false;
  if (r == S(0)) {
    lo = hi = screen(S(1), S(0));
    return true;
  }
  const S phi = std::atan2(b, a);
  const S base = std::asin(std::min(S(1), std::max(S(-1), -g / r)));
  const S t0 = base - phi;
  const S t1 = S(M_PI) - base - phi;
  const S x0 = screen(std::cos(t0), std::sin(t0));
  const S x1 = screen(std::cos(t1), std::sin(t1));
  lo = std::min(x0, x1);
  hi = std::max(x0, x1);
  return true;
}

}  // namespace detail

// View prep: camera-space frame, view color, and an exact screen-space
// bounding box of the support disc (conservative full-image box when the
// disc straddles the near plane).
template <typename S>
SurfelViewData<S> prepare_surfel(const SurfelT<S>& s, const SceneT<S>& scene,
                                 const CameraT<S>& cam) {
  SurfelViewData<S> out;
  out.center = cam.to_camera(s.position);
  out.frame = cam.rotation * quat_to_rotation(s.rotation);
  out.scale = s.scale;

  const S rcut = std::sqrt(surfel_support_r2(scene.opacity_w));
  const Vec3<S> u = rcut * s.scale[0] * out.frame.col(0);
  const Vec3<S> v = rcut * s.scale[1] * out.frame.col(1);
  const S zspread = std::hypot(u[2], v[2]);

  if (out.center[2] + zspread <= cam.near_clip) return out;  // fully in front of near plane
  if (out.center[2] - zspread >= cam.far_clip) return out;

  if (out.center[2] - zspread <= cam.near_clip) {
    out.bbox = PixelBox{0, 0, cam.width - 1, cam.height - 1};
  } else {
    S x_lo, x_hi, y_lo, y_hi;
    bool okx = detail::rim_extremes(u[0], v[0], out.center[0], u[2], v[2], out.center[2],
                                    cam.fx, cam.cx, x_lo, x_hi);
    bool oky = detail::rim_extremes(u[1], v[1], out.center[1], u[2], v[2], out.center[2],
                                    cam.fy, cam.cy, y_lo, y_hi);
    if (!okx || !oky) {
      out.bbox = PixelBox{0, 0, cam.width - 1, cam.height - 1};
    } else {
      out.bbox = PixelBox{static_cast<int>(std::floor(x_lo - S(0.5))) - 1,
                          static_cast<int>(std::floor(y_lo - S(0.5))) - 1,
                          static_cast<int>(std::ceil(x_hi - S(0.5))) + 1,
                          static_cast<int>(std::ceil(y_hi - S(0.5))) + 1}
                     .clipped(cam.width, cam.height);
    }
  }
  if (out.bbox.empty()) return out;

  const Vec3<S> to_cam = cam.center() - s.position;
  const S dist = to_cam.norm();
  out.view_dir = dist > S(0) ? Vec3<S>(to_cam / dist) : Vec3<S>(0, 0, 1);
  out.color = sh_eval(scene.sh_degree, s.sh, out.view_dir);
  out.normal_sign = out.frame.col(2).dot(out.center) < S(0) ? S(1) : S(-1);
  out.visible = true;
  return out;
}

template <typename S>
std::vector<SurfelViewData<S>> prepare_surfels(const SceneT<S>& scene, const CameraT<S>& cam) {
  std::vector<SurfelViewData<S>> out(scene.surfels.size());
  for (size_t i = 0; i < scene.surfels.size(); ++i)
    out[i] = prepare_surfel(scene.surfels[i], scene, cam);
  return out;
}

template <typename S>
struct FragmentEval {
  S depth;     // camera-space z of the ray/disc intersection
  S u, v;      // intersection in normalized surfel-local units
  S r2;        // u^2 + v^2
  S alpha;
};

// Exact ray/disc intersection for the ray through one pixel. The same
// routine feeds both the peeling rasterizer and the per-pixel oracle path,
// so fragment fields agree bit for bit between them.
template <typename S>
std::optional<FragmentEval<S>> eval_surfel_fragment(const SurfelViewData<S>& view, S opacity_w,
                                                    S r2_cut, const Vec3<S>& ray,
                                                    S near_clip, S far_clip) {
  const Vec3<S> n = view.frame.col(2);
  const S denom = ray.dot(n);
  if (denom == S(0)) return std::nullopt;  // ray parallel to the disc plane
  const S t = view.center.dot(n) / denom;
  if (!(t > near_clip && t < far_clip)) return std::nullopt;
  const Vec3<S> delta = t * ray - view.center;
  const S u = view.frame.col(0).dot(delta) / view.scale[0];
  const S v = view.frame.col(1).dot(delta) / view.scale[1];
  const S r2 = u * u + v * v;
  if (r2 > r2_cut) return std::nullopt;
  FragmentEval<S> f;
  f.depth = t;
  f.u = u;
  f.v = v;
  f.r2 = r2;
  f.alpha = surfel_alpha(opacity_w, r2);
  return f;
}

// All surfel fragments covering one pixel, in surfel index order.
template <typename S>
std::vector<SurfelFragment<S>> rasterize_surfel_fragments(const SceneT<S>& scene,
                                                          const CameraT<S>& cam, int px, int py,
                                                          const std::vector<SurfelViewData<S>>* prepared = nullptr) {
  std::vector<SurfelViewData<S>> local;
  if (!prepared) {
    local = prepare_surfels(scene, cam);
    prepared = &local;
  }
  const S r2_cut = surfel_support_r2(scene.opacity_w);
  const Vec3<S> ray = cam.pixel_ray(px, py);
  std::vector<SurfelFragment<S>> frags;
  for (size_t i = 0; i < prepared->size(); ++i) {
    const auto& view = (*prepared)[i];
    if (!view.visible) continue;
    auto f = eval_surfel_fragment(view, scene.opacity_w, r2_cut, ray, cam.near_clip, cam.far_clip);
    if (!f) continue;
    frags.push_back(SurfelFragment<S>{f->depth, f->alpha, view.color, static_cast<int>(i), f->r2});
  }
  return frags;
}

// Depth peeling: the L nearest fragments per pixel in (depth, id) order,
// each surfel contributing at most once per pixel, plus the transmittance
// ladder. Tiles are independent; the result is bitwise deterministic.
template <typename S>
PeelImage<S> peel(const SceneT<S>& scene, const CameraT<S>& cam, int layers,
                  const std::vector<SurfelViewData<S>>& views, int threads = 1) {
  PeelImage<S> img(cam.width, cam.height, layers);
  const S r2_cut = surfel_support_r2(scene.opacity_w);

  const int tiles_x = (cam.width + kTileSize - 1) / kTileSize;
  const int tiles_y = (cam.height + kTileSize - 1) / kTileSize;
  const int tile_count = tiles_x * tiles_y;

  parallel_chunks(tile_count, threads, [&](int, int begin, int end) {
    std::vector<int> tile_surfels;
    for (int tile = begin; tile < end; ++tile) {
      const int tx = tile % tiles_x, ty = tile / tiles_x;
      PixelBox tile_box{tx * kTileSize, ty * kTileSize,
                        std::min((tx + 1) * kTileSize, cam.width) - 1,
                        std::min((ty + 1) * kTileSize, cam.height) - 1};
      tile_surfels.clear();
      for (size_t i = 0; i < views.size(); ++i)
        if (views[i].visible && views[i].bbox.intersects(tile_box))
          tile_surfels.push_back(static_cast<int>(i));
      if (tile_surfels.empty()) {
        for (int py = tile_box.y0; py <= tile_box.y1; ++py)
          for (int px = tile_box.x0; px <= tile_box.x1; ++px)
            img(px, py).finalize_transmittance(layers);
        continue;
      }
      for (int py = tile_box.y0; py <= tile_box.y1; ++py) {
        for (int px = tile_box.x0; px <= tile_box.x1; ++px) {
          const Vec3<S> ray = cam.pixel_ray(px, py);
          PeelPixel<S>& pixel = img(px, py);
          for (int id : tile_surfels) {
            const auto& view = views[id];
            if (px < view.bbox.x0 || px > view.bbox.x1 || py < view.bbox.y0 ||
                py > view.bbox.y1)
              continue;
            auto f = eval_surfel_fragment(view, scene.opacity_w, r2_cut, ray, cam.near_clip,
                                          cam.far_clip);
            if (f) pixel.insert(f->depth, f->alpha, id, layers);
          }
          pixel.finalize_transmittance(layers);
        }
      }
    }
  });
  return img;
}

template <typename S>
PeelImage<S> peel(const SceneT<S>& scene, const CameraT<S>& cam, int layers, int threads = 1) {
  auto views = prepare_surfels(scene, cam);
  return peel(scene, cam, layers, views, threads);
}

// Explicit weight sum of the compositing scheme; identically 1 by the
// telescoping identity, recomputed here so tests can check the claim.
template <typename S>
S surfel_weight_sum(const PeelPixel<S>& pixel, int num_layers) {
  S sum = S(0);
  for (int i = 1; i <= pixel.layer_count; ++i)
    sum += pixel.layers[i - 1].alpha * pixel.transmittance[i - 1];
  return sum + pixel.transmittance[num_layers];
}

// Front-to-back blend over the peeled layers plus background closure.
template <typename S>
void blend_surfels(const PeelImage<S>& stack, const std::vector<SurfelViewData<S>>& views,
                   const Vec3<S>& background, ColorImageT<S>& color_out,
                   ScalarImageT<S>& weight_out) {
  color_out = ColorImageT<S>(stack.width, stack.height);
  weight_out = ScalarImageT<S>(stack.width, stack.height);
  for (int y = 0; y < stack.height; ++y) {
    for (int x = 0; x < stack.width; ++x) {
      const PeelPixel<S>& pixel = stack(x, y);
      Vec3<S> c = Vec3<S>::Zero();
      for (int i = 1; i <= pixel.layer_count; ++i) {
        const auto& layer = pixel.layers[i - 1];
        c += layer.alpha * pixel.transmittance[i - 1] * views[layer.surfel_id].color;
      }
      c += pixel.transmittance[stack.num_layers] * background;
      color_out(x, y) = c;
      weight_out(x, y) = surfel_weight_sum(pixel, stack.num_layers);
    }
  }
}

// Culling depth: nearest peeled layer whose transmittance is exactly zero,
// else the deepest peeled layer; no culling when the pixel has fewer than L
// layers and every transmittance stays positive. Also records which surfel
// owns the culling fragment, for the per-surfel depth margin.
template <typename S>
ScalarImageT<S> culling_depth(PeelImage<S>& stack) {
  ScalarImageT<S> out(stack.width, stack.height, infinity<S>());
  for (int y = 0; y < stack.height; ++y) {
    for (int x = 0; x < stack.width; ++x) {
      PeelPixel<S>& pixel = stack(x, y);
      pixel.cull_depth = infinity<S>();
      pixel.cull_surfel_id = -1;
      for (int k = 1; k <= pixel.layer_count; ++k) {
        if (pixel.transmittance[k] == S(0)) {
          pixel.cull_depth = pixel.layers[k - 1].depth;
          pixel.cull_surfel_id = pixel.layers[k - 1].surfel_id;
          break;
        }
      }
      if (pixel.cull_surfel_id < 0 && pixel.layer_count == stack.num_layers &&
          stack.num_layers > 0) {
        pixel.cull_depth = pixel.layers[stack.num_layers - 1].depth;
        pixel.cull_surfel_id = pixel.layers[stack.num_layers - 1].surfel_id;
      }
      out(x, y) = pixel.cull_depth;
    }
  }
  return out;
}

}  // namespace dpges
