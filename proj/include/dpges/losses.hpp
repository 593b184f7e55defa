#pragma once

#include "dpges/composite.hpp"
#include "dpges/params.hpp"
#include "dpges/scene.hpp"

namespace dpges {

// lambda_scale defaults to the bounded-scene value; unbounded scenes use 5e-5.
struct LossWeights {
  double lambda_surfel = 0.01;
  double lambda_scale = 1e-5;
  double lambda_transmittance = 0.08;
  double lambda_geo_depth = 0.1;
  double lambda_geo_normal = 0.05;
  double lambda_geo_depth_normal = 0.05;
  bool geometry_reg = false;
  double ssim_weight = 0.2;

  static double lambda_scale_for(bool bounded) { return bounded ? 1e-5 : 5e-5; }
};

struct LossBreakdown {
  double rgb = 0, surfel = 0, scale = 0, transmittance = 0;
  double geo_depth = 0, geo_normal = 0, geo_depth_normal = 0;
  double total = 0;
};

// Per-image adjoints handed to the backward pass. d_transmittance is the
// already-masked dL/dT_L (zero wherever fewer than 2 surfel layers cover the
// pixel).
struct AdjointImages {
  ColorImageT<double> d_color;
  ColorImageT<double> d_surfel_color;
  ScalarImageT<double> d_transmittance;
  bool has_geometry = false;
  ScalarImageT<double> d_depth;
  ColorImageT<double> d_normal;

  static AdjointImages zeros(int w, int h);
};

double l1_mean(const ColorImageT<double>& a, const ColorImageT<double>& b);

// SSIM with an 11x11 Gaussian window (sigma 1.5), zero padding, and the
// usual constants (0.01^2, 0.03^2) for unit-range images; the scalar is the
// mean of the per-pixel map over pixels and channels.
double ssim_mean(const ColorImageT<double>& a, const ColorImageT<double>& b);
void ssim_backward(const ColorImageT<double>& a, const ColorImageT<double>& b, double d_mean,
                   ColorImageT<double>& d_a);

// (1-beta) L1 + beta (1 - SSIM); the gradient (times `weight`) accumulates
// into d_color when given.
double loss_rgb(const ColorImageT<double>& color, const ColorImageT<double>& target, double beta,
                ColorImageT<double>* d_color = nullptr, double weight = 1.0);

double loss_surfel(const ColorImageT<double>& surfel_color, const ColorImageT<double>& target,
                   ColorImageT<double>* d_surfel_color = nullptr, double weight = 1.0);

// (1/N) sum exp((sX~ + sY~)/2) with scales normalized by the global mean of
// per-surfel mean scales; the gradient flows through the mean too.
double loss_scale(const std::vector<Surfel>& surfels, SceneGrads* grads = nullptr,
                  double weight = 1.0);

// mean (1 - T_L)^2 over all pixels; gradients masked out wherever fewer than
// 2 layers cover the pixel. Minimizing it pushes overlapping boundary rings
// apart rather than darkening them.
double loss_transmittance(const PeelImage<double>& stack,
                          ScalarImageT<double>* d_transmittance = nullptr, double weight = 1.0);

struct GeometrySupervision {
  ScalarImageT<double> depth;
  ColorImageT<double> normal;
};

// Central-difference, back-projected depth-to-normal map; border pixels are
// left zero. Normals are oriented toward the camera.
ColorImageT<double> depth_to_normal(const ScalarImageT<double>& depth, const Camera& cam);

struct GeometryLossResult {
  double depth = 0, normal = 0, depth_normal = 0;
};

GeometryLossResult loss_geometry(const ScalarImageT<double>& depth_map,
                                 const ColorImageT<double>& normal_map,
                                 const GeometrySupervision& supervision, const Camera& cam,
                                 const LossWeights& weights, ScalarImageT<double>* d_depth = nullptr,
                                 ColorImageT<double>* d_normal = nullptr);

struct TotalLossResult {
  LossBreakdown breakdown;
  AdjointImages adjoints;
  SceneGrads direct;  // parameter-space terms (the scale penalty)
};

TotalLossResult total_loss(const Scene& scene, const RenderResult<double>& render,
                           const ColorImageT<double>& target, const LossWeights& weights,
                           const GeometrySupervision* supervision = nullptr);

}  // namespace dpges
