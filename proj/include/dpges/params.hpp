#pragma once

#include <string>
#include <vector>

#include "dpges/scene.hpp"

namespace dpges {

enum class ParamClass {
  SurfelPosition,
  SurfelRotation,
  SurfelScale,
  SurfelColor,
  GaussianPosition,
  GaussianSigma,
  GaussianRotation,
  GaussianScale,
  GaussianColor,
};

const char* param_class_name(ParamClass c);

// One optimizable scalar: (class, primitive index, component within field).
struct ParamRef {
  ParamClass cls;
  int prim = 0;
  int comp = 0;
};

// Gradient (or optimizer-moment) blocks mirroring the scene layout: exactly
// one slot per optimizable scalar.
struct SceneGrads {
  struct SurfelBlock {
    Vec3<double> position = Vec3<double>::Zero();
    Vec4<double> rotation = Vec4<double>::Zero();
    Vec2<double> scale = Vec2<double>::Zero();
    Mat3X<double> sh;
  };
  struct GaussianBlock {
    Vec3<double> position = Vec3<double>::Zero();
    double sigma = 0;
    Vec4<double> rotation = Vec4<double>::Zero();
    Vec3<double> scale = Vec3<double>::Zero();
    Mat3X<double> sh;
  };

  std::vector<SurfelBlock> surfels;
  std::vector<GaussianBlock> gaussians;

  static SceneGrads zeros_like(const Scene& scene);
  void accumulate(const SceneGrads& other, double factor = 1.0);
  void scale_by(double factor);
  double max_abs() const;
};

std::vector<ParamRef> enumerate_params(const Scene& scene);
double get_param(const Scene& scene, const ParamRef& ref);
void set_param(Scene& scene, const ParamRef& ref, double value);
double grad_at(const SceneGrads& grads, const ParamRef& ref);
double& grad_slot(SceneGrads& grads, const ParamRef& ref);

}  // namespace dpges
