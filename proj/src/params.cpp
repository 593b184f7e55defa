#include "dpges/params.hpp"

#include <cmath>
#include <stdexcept>

namespace dpges {

const char* param_class_name(ParamClass c) {
  switch (c) {
    case ParamClass::SurfelPosition: return "surfel.position";
    case ParamClass::SurfelRotation: return "surfel.rotation";
    case ParamClass::SurfelScale: return "surfel.scale";
    case ParamClass::SurfelColor: return "surfel.color";
    case ParamClass::GaussianPosition: return "gaussian.position";
    case ParamClass::GaussianSigma: return "gaussian.sigma";
    case ParamClass::GaussianRotation: return "gaussian.rotation";
    case ParamClass::GaussianScale: return "gaussian.scale";
    case ParamClass::GaussianColor: return "gaussian.color";
  }
  return "?";
}

SceneGrads SceneGrads::zeros_like(const Scene& scene) {
  SceneGrads g;
  const int k = scene.coeff_count();
  g.surfels.resize(scene.surfels.size());
  for (auto& s : g.surfels) s.sh = Mat3X<double>::Zero(3, k);
  g.gaussians.resize(scene.gaussians.size());
  for (auto& gg : g.gaussians) gg.sh = Mat3X<double>::Zero(3, k);
  return g;
}

void SceneGrads::accumulate(const SceneGrads& other, double factor) {
  for (size_t i = 0; i < surfels.size(); ++i) {
    surfels[i].position += factor * other.surfels[i].position;
    surfels[i].rotation += factor * other.surfels[i].rotation;
    surfels[i].scale += factor * other.surfels[i].scale;
    surfels[i].sh += factor * other.surfels[i].sh;
  }
  for (size_t i = 0; i < gaussians.size(); ++i) {
    gaussians[i].position += factor * other.gaussians[i].position;
    gaussians[i].sigma += factor * other.gaussians[i].sigma;
    gaussians[i].rotation += factor * other.gaussians[i].rotation;
    gaussians[i].scale += factor * other.gaussians[i].scale;
    gaussians[i].sh += factor * other.gaussians[i].sh;
  }
}

void SceneGrads::scale_by(double factor) {
  for (auto& s : surfels) {
    s.position *= factor;
    s.rotation *= factor;
    s.scale *= factor;
    s.sh *= factor;
  }
  for (auto& g : gaussians) {
    g.position *= factor;
    g.sigma *= factor;
    g.rotation *= factor;
    g.scale *= factor;
    g.sh *= factor;
  }
}

double SceneGrads::max_abs() const {
  double m = 0;
  auto upd = [&](double v) { m = std::max(m, std::abs(v)); };
  for (const auto& s : surfels) {
    for (int i = 0; i < 3; ++i) upd(s.position[i]);
    for (int i = 0; i < 4; ++i) upd(s.rotation[i]);
    for (int i = 0; i < 2; ++i) upd(s.scale[i]);
    upd(s.sh.cwiseAbs().maxCoeff());
  }
  for (const auto& g : gaussians) {
    for (int i = 0; i < 3; ++i) upd(g.position[i]);
    upd(g.sigma);
    for (int i = 0; i < 4; ++i) upd(g.rotation[i]);
    for (int i = 0; i < 3; ++i) upd(g.scale[i]);
    if (g.sh.size() > 0) upd(g.sh.cwiseAbs().maxCoeff());
  }
  return m;
}

std::vector<ParamRef> enumerate_params(const Scene& scene) {
  std::vector<ParamRef> refs;
  const int k = scene.coeff_count();
  for (int i = 0; i < static_cast<int>(scene.surfels.size()); ++i) {
    for (int c = 0; c < 3; ++c) refs.push_back({ParamClass::SurfelPosition, i, c});
    for (int c = 0; c < 4; ++c) refs.push_back({ParamClass::SurfelRotation, i, c});
    for (int c = 0; c < 2; ++c) refs.push_back({ParamClass::SurfelScale, i, c});
    for (int c = 0; c < 3 * k; ++c) refs.push_back({ParamClass::SurfelColor, i, c});
  }
  for (int i = 0; i < static_cast<int>(scene.gaussians.size()); ++i) {
    for (int c = 0; c < 3; ++c) refs.push_back({ParamClass::GaussianPosition, i, c});
    refs.push_back({ParamClass::GaussianSigma, i, 0});
    for (int c = 0; c < 4; ++c) refs.push_back({ParamClass::GaussianRotation, i, c});
    for (int c = 0; c < 3; ++c) refs.push_back({ParamClass::GaussianScale, i, c});
    for (int c = 0; c < 3 * k; ++c) refs.push_back({ParamClass::GaussianColor, i, c});
  }
  return refs;
}

namespace {
// SH blocks are column-major (channel fastest), matching Eigen storage.
template <typename Block>
double* block_slot(Block& b, ParamClass cls, int comp) {
  switch (cls) {
    case ParamClass::SurfelPosition:
    case ParamClass::GaussianPosition: return b.position.data() + comp;
    case ParamClass::SurfelRotation:
    case ParamClass::GaussianRotation: return b.rotation.data() + comp;
    case ParamClass::SurfelScale:
    case ParamClass::GaussianScale: return b.scale.data() + comp;
    case ParamClass::SurfelColor:
    case ParamClass::GaussianColor: return b.sh.data() + comp;
    default: return nullptr;
  }
}
}  // namespace

double get_param(const Scene& scene, const ParamRef& ref) {
  switch (ref.cls) {
    case ParamClass::SurfelPosition: return scene.surfels[ref.prim].position[ref.comp];
    case ParamClass::SurfelRotation: return scene.surfels[ref.prim].rotation[ref.comp];
    case ParamClass::SurfelScale: return scene.surfels[ref.prim].scale[ref.comp];
    case ParamClass::SurfelColor: return scene.surfels[ref.prim].sh.data()[ref.comp];
    case ParamClass::GaussianPosition: return scene.gaussians[ref.prim].position[ref.comp];
    case ParamClass::GaussianSigma: return scene.gaussians[ref.prim].sigma;
    case ParamClass::GaussianRotation: return scene.gaussians[ref.prim].rotation[ref.comp];
    case ParamClass::GaussianScale: return scene.gaussians[ref.prim].scale[ref.comp];
    case ParamClass::GaussianColor: return scene.gaussians[ref.prim].sh.data()[ref.comp];
  }
  throw std::logic_error("get_param: bad class");
}

void set_param(Scene& scene, const ParamRef& ref, double value) {
  switch (ref.cls) {
    case ParamClass::SurfelPosition: scene.surfels[ref.prim].position[ref.comp] = value; return;
    case ParamClass::SurfelRotation: scene.surfels[ref.prim].rotation[ref.comp] = value; return;
    case ParamClass::SurfelScale: scene.surfels[ref.prim].scale[ref.comp] = value; return;
    case ParamClass::SurfelColor: scene.surfels[ref.prim].sh.data()[ref.comp] = value; return;
    case ParamClass::GaussianPosition: scene.gaussians[ref.prim].position[ref.comp] = value; return;
    case ParamClass::GaussianSigma: scene.gaussians[ref.prim].sigma = value; return;
    case ParamClass::GaussianRotation: scene.gaussians[ref.prim].rotation[ref.comp] = value; return;
    case ParamClass::GaussianScale: scene.gaussians[ref.prim].scale[ref.comp] = value; return;
    case ParamClass::GaussianColor: scene.gaussians[ref.prim].sh.data()[ref.comp] = value; return;
  }
  throw std::logic_error("set_param: bad class");
}

double& grad_slot(SceneGrads& grads, const ParamRef& ref) {
  const bool surfel = ref.cls == ParamClass::SurfelPosition || ref.cls == ParamClass::SurfelRotation ||
                      ref.cls == ParamClass::SurfelScale || ref.cls == ParamClass::SurfelColor;
  double* p = nullptr;
  if (surfel)
    p = block_slot(grads.surfels[ref.prim], ref.cls, ref.comp);
  else if (ref.cls == ParamClass::GaussianSigma)
    p = &grads.gaussians[ref.prim].sigma;
  else
    p = block_slot(grads.gaussians[ref.prim], ref.cls, ref.comp);
  if (!p) throw std::logic_error("grad_slot: bad class");
  return *p;
}

double grad_at(const SceneGrads& grads, const ParamRef& ref) {
  return grad_slot(const_cast<SceneGrads&>(grads), ref);
}

}  // namespace dpges
