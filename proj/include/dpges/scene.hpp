#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dpges/core.hpp"
#include "dpges/quaternion.hpp"
#include "dpges/sh.hpp"

namespace dpges {

inline constexpr double kQuatNormTolerance = 1e-6;

// Flat disc primitive: opaque core with a Gaussian-falloff boundary ring.
// `margin` is the derived depth-culling tolerance, recomputed on a schedule
// by the trainer rather than per render.
template <typename S>
struct SurfelT {
  Vec3<S> position = Vec3<S>::Zero();
  Vec4<S> rotation = Vec4<S>(1, 0, 0, 0);  // (w, x, y, z)
  Vec2<S> scale = Vec2<S>(1, 1);           // world units along local X/Y
  Mat3X<S> sh;                             // 3 x K color coefficients
  S margin = S(0);

  template <typename T>
  SurfelT<T> cast() const {
    SurfelT<T> o;
    o.position = position.template cast<T>();
    o.rotation = rotation.template cast<T>();
    o.scale = scale.template cast<T>();
    o.sh = sh.template cast<T>();
    o.margin = static_cast<T>(margin);
    return o;
  }
};

template <typename S>
struct GaussianT {
  Vec3<S> position = Vec3<S>::Zero();
  S sigma = S(1);                          // max opacity, in (0, 1]
  Vec4<S> rotation = Vec4<S>(1, 0, 0, 0);
  Vec3<S> scale = Vec3<S>(1, 1, 1);
  Mat3X<S> sh;

  template <typename T>
  GaussianT<T> cast() const {
    GaussianT<T> o;
    o.position = position.template cast<T>();
    o.sigma = static_cast<T>(sigma);
    o.rotation = rotation.template cast<T>();
    o.scale = scale.template cast<T>();
    o.sh = sh.template cast<T>();
    return o;
  }
};

// Pinhole camera with a world-to-camera rigid transform (x_cam = R x + t).
// Camera space looks down +z; depths are camera-space z.
template <typename S>
struct CameraT {
  Mat3<S> rotation = Mat3<S>::Identity();
  Vec3<S> translation = Vec3<S>::Zero();
  S fx = 1, fy = 1;
  S cx = 0, cy = 0;
  int width = 0, height = 0;
  S near_clip = S(0.01), far_clip = S(1000);

  Vec3<S> to_camera(const Vec3<S>& x_world) const { return rotation * x_world + translation; }
  Vec3<S> center() const { return -(rotation.transpose() * translation); }
  // Camera-space ray direction through a pixel center, z component 1, so the
  // ray parameter equals camera-space depth.
  Vec3<S> pixel_ray(int px, int py) const {
    return Vec3<S>((S(px) + S(0.5) - cx) / fx, (S(py) + S(0.5) - cy) / fy, S(1));
  }
  Vec2<S> project(const Vec3<S>& x_cam) const {
    return Vec2<S>(fx * x_cam[0] / x_cam[2] + cx, fy * x_cam[1] / x_cam[2] + cy);
  }

  template <typename T>
  CameraT<T> cast() const {
    CameraT<T> o;
    o.rotation = rotation.template cast<T>();
    o.translation = translation.template cast<T>();
    o.fx = static_cast<T>(fx);
    o.fy = static_cast<T>(fy);
    o.cx = static_cast<T>(cx);
    o.cy = static_cast<T>(cy);
    o.width = width;
    o.height = height;
    o.near_clip = static_cast<T>(near_clip);
    o.far_clip = static_cast<T>(far_clip);
    return o;
  }
};

template <typename S>
struct SceneT {
  std::vector<SurfelT<S>> surfels;
  std::vector<GaussianT<S>> gaussians;
  Vec3<S> background = Vec3<S>::Zero();
  S opacity_w = S(30);
  int sh_degree = 3;

  int coeff_count() const { return sh_coeff_count(sh_degree); }

  template <typename T>
  SceneT<T> cast() const {
    SceneT<T> o;
    o.surfels.reserve(surfels.size());
    for (const auto& s : surfels) o.surfels.push_back(s.template cast<T>());
    o.gaussians.reserve(gaussians.size());
    for (const auto& g : gaussians) o.gaussians.push_back(g.template cast<T>());
    o.background = background.template cast<T>();
    o.opacity_w = static_cast<T>(opacity_w);
    o.sh_degree = sh_degree;
    return o;
  }
};

// Returns an empty string when all invariants hold, otherwise a message
// naming the first offending record.
template <typename S>
std::string validate_scene(const SceneT<S>& scene) {
  using std::to_string;
  if (!(scene.opacity_w > S(0))) return "scene: opacity modulation w must be positive";
  if (scene.sh_degree < 0 || scene.sh_degree > 3) return "scene: sh_degree must be in [0,3]";
  for (int c = 0; c < 3; ++c) {
    if (!(scene.background[c] >= S(0) && scene.background[c] <= S(1)))
      return "scene: background channel " + to_string(c) + " outside [0,1]";
  }
  const int k = scene.coeff_count();
  for (size_t i = 0; i < scene.surfels.size(); ++i) {
    const auto& s = scene.surfels[i];
    if (std::abs(double(s.rotation.norm()) - 1.0) > kQuatNormTolerance)
      return "surfel " + to_string(i) + ": rotation quaternion not unit";
    if (!(s.scale[0] > S(0)) || !(s.scale[1] > S(0)))
      return "surfel " + to_string(i) + ": scale must be strictly positive";
    if (!(s.margin >= S(0))) return "surfel " + to_string(i) + ": negative depth margin";
    if (s.sh.cols() != k) return "surfel " + to_string(i) + ": color coefficient count mismatch";
  }
  for (size_t i = 0; i < scene.gaussians.size(); ++i) {
    const auto& g = scene.gaussians[i];
    if (!(g.sigma > S(0) && g.sigma <= S(1)))
      return "gaussian " + to_string(i) + ": sigma outside (0,1]";
    if (std::abs(double(g.rotation.norm()) - 1.0) > kQuatNormTolerance)
      return "gaussian " + to_string(i) + ": rotation quaternion not unit";
    for (int c = 0; c < 3; ++c)
      if (!(g.scale[c] > S(0)))
        return "gaussian " + to_string(i) + ": scale must be strictly positive";
    if (g.sh.cols() != k) return "gaussian " + to_string(i) + ": color coefficient count mismatch";
  }
  return {};
}

// Degree-0 coefficient block producing a constant color.
template <typename S>
Mat3X<S> constant_color_sh(const Vec3<S>& color, int degree) {
  Mat3X<S> sh = Mat3X<S>::Zero(3, sh_coeff_count(degree));
  sh.col(0) = color / S(shc::C0);
  return sh;
}

using Surfel = SurfelT<double>;
using Gaussian = GaussianT<double>;
using Camera = CameraT<double>;
using Scene = SceneT<double>;

}  // namespace dpges
