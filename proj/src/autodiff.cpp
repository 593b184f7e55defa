#include "dpges/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace dpges {

namespace {

using Vec2d = Vec2<double>;
using Vec3d = Vec3<double>;
using Mat2d = Mat2<double>;
using Mat3d = Mat3<double>;
using Mat23d = Mat23<double>;

// Leave-one-out transmittance product: prod_{l<=upto, l!=skip} (1 - A_l),
// with layers beyond layer_count contributing a factor of 1.
double loo_product(const PeelPixel<double>& pixel, int upto, int skip) {
  double p = 1.0;
  const int n = std::min(upto, pixel.layer_count);
  for (int l = 1; l <= n; ++l) {
    if (l == skip) continue;
    p *= 1.0 - pixel.layers[l - 1].alpha;
  }
  return p;
}

struct GaussianAdjoint {
  Vec2d mean = Vec2d::Zero();
  Mat2d cov_inv = Mat2d::Zero();
  Vec3d color = Vec3d::Zero();
  double sigma = 0;
};

// Backward of the EWA projection and view-color evaluation of one Gaussian.
void gaussian_projection_backward(const Gaussian& g, const Scene& scene, const Camera& cam,
                                  const GaussianSplat<double>& splat, const GaussianAdjoint& adj,
                                  SceneGrads::GaussianBlock& out) {
  // cov = cov_inv^{-1}: dL/dcov = -P (dL/dP) P with P = cov_inv.
  const Mat2d d_cov = -splat.cov_inv * adj.cov_inv * splat.cov_inv;

  const Vec3d p_c = cam.to_camera(g.position);
  const double z = p_c[2];
  Mat23d J;
  J << cam.fx / z, 0, -cam.fx * p_c[0] / (z * z),
       0, cam.fy / z, -cam.fy * p_c[1] / (z * z);
  const Mat23d T = J * cam.rotation;

  const Mat3d R = quat_to_rotation(g.rotation);
  const Mat3d cov3 = R * g.scale.array().square().matrix().asDiagonal() * R.transpose();

  const Mat3d d_cov3 = T.transpose() * d_cov * T;
  const Mat23d d_T = 2.0 * d_cov * T * cov3;
  const Mat23d d_J = d_T * cam.rotation.transpose();

  Vec3d d_pc = Vec3d::Zero();
  d_pc[0] += d_J(0, 2) * (-cam.fx / (z * z));
  d_pc[1] += d_J(1, 2) * (-cam.fy / (z * z));
  d_pc[2] += d_J(0, 0) * (-cam.fx / (z * z)) + d_J(0, 2) * (2.0 * cam.fx * p_c[0] / (z * z * z)) +
             d_J(1, 1) * (-cam.fy / (z * z)) + d_J(1, 2) * (2.0 * cam.fy * p_c[1] / (z * z * z));
  d_pc += J.transpose() * adj.mean;

  const Mat3d d_R = 2.0 * d_cov3 * R * g.scale.array().square().matrix().asDiagonal().toDenseMatrix();
  out.rotation += rotation_backward(g.rotation, d_R);
  const Mat3d m = R.transpose() * d_cov3 * R;
  for (int k = 0; k < 3; ++k) out.scale[k] += 2.0 * g.scale[k] * m(k, k);

  Vec3d d_dir = Vec3d::Zero();
  out.sigma += adj.sigma;
  sh_eval_backward(scene.sh_degree, g.sh, splat.view_dir, adj.color, out.sh, d_dir);
  const double dist = (g.position - cam.center()).norm();
  Vec3d d_p = cam.rotation.transpose() * d_pc;
  if (dist > 0) {
    const Mat3d proj = (Mat3d::Identity() - splat.view_dir * splat.view_dir.transpose()) / dist;
    d_p += proj * d_dir;
  }
  out.position += d_p;
}

// Backward through one peeled fragment's geometry: alpha (and optionally the
// fragment depth and oriented normal) back to the owning surfel's position,
// rotation, and scale.
void fragment_backward(const Surfel& s, const SurfelViewData<double>& view, const Camera& cam,
                       const Vec3d& ray, double opacity_w, double r2_cut, double d_alpha,
                       double d_depth, const Vec3d& d_normal_vis,
                       SceneGrads::SurfelBlock& out) {
  const auto frag = eval_surfel_fragment(view, opacity_w, r2_cut, ray, cam.near_clip, cam.far_clip);
  if (!frag) return;  // cannot happen for a recorded layer

  double d_r2 = 0;
  if (frag->alpha < 1.0) d_r2 = d_alpha * (-0.5) * frag->alpha;

  const double du = d_r2 * 2.0 * frag->u;
  const double dv = d_r2 * 2.0 * frag->v;
  Vec2d d_scale(du * (-frag->u / s.scale[0]), dv * (-frag->v / s.scale[1]));
  const double dqx = du / view.scale[0];
  const double dqy = dv / view.scale[1];

  const Vec3d nrm = view.frame.col(2);
  const double den = ray.dot(nrm);
  const double t = frag->depth;
  const Vec3d delta = t * ray - view.center;

  const Vec3d g3 = dqx * view.frame.col(0) + dqy * view.frame.col(1);
  Vec3d d_pc = -g3;
  const double d_t = g3.dot(ray) + d_depth;
  const double d_num = d_t / den;
  const double d_den = -d_t * t / den;
  d_pc += d_num * nrm;
  const Vec3d d_nrm = d_num * view.center + d_den * ray;

  Mat3d d_M = Mat3d::Zero();
  d_M.col(0) = dqx * delta;
  d_M.col(1) = dqy * delta;
  d_M.col(2) = d_nrm + view.normal_sign * d_normal_vis;

  out.position += cam.rotation.transpose() * d_pc;
  out.rotation += rotation_backward(s.rotation, cam.rotation.transpose() * d_M);
  out.scale += d_scale;
}

}  // namespace

SceneGrads backward(const Scene& scene, const RenderResult<double>& tape,
                    const AdjointImages& adjoints, const BackwardOptions& opts) {
  const Camera& cam = tape.camera;
  const int W = cam.width, H = cam.height;
  const int L = tape.layers;
  if (adjoints.d_color.width != W || adjoints.d_color.height != H)
    throw std::invalid_argument("backward: adjoint/tape shape mismatch");

  SceneGrads grads = SceneGrads::zeros_like(scene);
  const double r2_cut = surfel_support_r2(scene.opacity_w);

  // Composite stage: C = (C_s + C_G) / (W_s + W_G), with W_s an analytic
  // constant 1, so no gradient flows through it.
  ColorImageT<double> d_Cs(W, H), d_CG(W, H);
  ScalarImageT<double> d_WG(W, H);
  for (int i = 0; i < W * H; ++i) {
    const double denom = tape.surfel_weight.values[i] + tape.accum.weight.values[i];
    const Vec3d dC = adjoints.d_color.pixels[i];
    d_Cs.pixels[i] = dC / denom + adjoints.d_surfel_color.pixels[i];
    d_CG.pixels[i] = dC / denom;
    d_WG.values[i] = -dC.dot(tape.color.pixels[i]) / denom;
  }

  // Gaussian stage, chunked over Gaussians. Each chunk owns its Gaussians'
  // gradient blocks outright and keeps a private per-pixel buffer for the
  // transmittance-mediated surfel path, merged in chunk order afterwards.
  const int num_gauss = static_cast<int>(scene.gaussians.size());
  const int gchunks = num_gauss > 0 ? std::max(1, std::min(opts.threads, num_gauss)) : 0;
  std::vector<std::vector<double>> trans_dA(gchunks);

  parallel_chunks(num_gauss, gchunks, [&](int chunk, int begin, int end) {
    std::vector<double>& dA = trans_dA[chunk];
    dA.assign(static_cast<size_t>(W) * H * kMaxPeelLayers, 0.0);
    for (int gi = begin; gi < end; ++gi) {
      if (!tape.gaussian_views[gi].visible) continue;
      const GaussianSplat<double>& splat = tape.gaussian_views[gi].splat;
      GaussianAdjoint adj;
      for_each_splat_contribution(
          splat, tape.stack, scene.surfels,
          [&](int px, int py, const Vec2d& delta, double expo, int interval, double t) {
            const Vec3d& dC = d_CG(px, py);
            const double dW = d_WG(px, py);
            const double e = std::exp(expo);
            const double sdot = splat.color.dot(dC) + dW;
            adj.color += (splat.sigma * e * t) * dC;
            adj.sigma += e * t * sdot;
            const double d_expo = splat.sigma * e * t * sdot;
            const Vec2d pd = splat.cov_inv * delta;
            adj.mean += d_expo * pd;
            adj.cov_inv += d_expo * (-0.5) * (delta * delta.transpose());
            if (opts.transmittance_gradients && interval >= 1) {
              const double d_t = splat.sigma * e * sdot;
              const PeelPixel<double>& pixel = tape.stack(px, py);
              double* cell = dA.data() + (static_cast<size_t>(py) * W + px) * kMaxPeelLayers;
              for (int j = 1; j <= interval; ++j)
                cell[j - 1] += d_t * (-loo_product(pixel, interval, j));
            }
          });
      gaussian_projection_backward(scene.gaussians[gi], scene, cam, splat, adj,
                                   grads.gaussians[gi]);
    }
  });

  std::vector<double> dA_trans(static_cast<size_t>(W) * H * kMaxPeelLayers, 0.0);
  for (int c = 0; c < gchunks; ++c)
    for (size_t i = 0; i < dA_trans.size(); ++i) dA_trans[i] += trans_dA[c][i];

  // Surfel stage, chunked over pixel rows; per-chunk gradient blocks and
  // per-surfel view-color adjoints merge in chunk order.
  const int schunks = std::max(1, opts.threads);
  const int num_surf = static_cast<int>(scene.surfels.size());
  std::vector<std::vector<SceneGrads::SurfelBlock>> chunk_sgrads(schunks);
  std::vector<std::vector<Vec3d>> chunk_dcolor(schunks);

  parallel_chunks(H, schunks, [&](int chunk, int row_begin, int row_end) {
    auto& sgrads = chunk_sgrads[chunk];
    auto& dcolor = chunk_dcolor[chunk];
    sgrads.resize(num_surf);
    for (auto& b : sgrads) b.sh = Mat3X<double>::Zero(3, scene.coeff_count());
    dcolor.assign(num_surf, Vec3d::Zero());

    for (int py = row_begin; py < row_end; ++py) {
      for (int px = 0; px < W; ++px) {
        const PeelPixel<double>& pixel = tape.stack(px, py);
        const int n = pixel.layer_count;
        if (n == 0) continue;
        const Vec3d& dCs = d_Cs(px, py);
        const double dTL = adjoints.d_transmittance.values[static_cast<size_t>(py) * W + px];
        const double* cell = dA_trans.data() + (static_cast<size_t>(py) * W + px) * kMaxPeelLayers;
        const Vec3d ray = cam.pixel_ray(px, py);

        const double dDs =
            adjoints.has_geometry ? adjoints.d_depth.values[static_cast<size_t>(py) * W + px] : 0.0;
        const Vec3d dNs = adjoints.has_geometry
                              ? adjoints.d_normal.pixels[static_cast<size_t>(py) * W + px]
                              : Vec3d::Zero();

        for (int j = 1; j <= n; ++j) {
          const auto& layer = pixel.layers[j - 1];
          const auto& view = tape.surfel_views[layer.surfel_id];

          // Blend path: dC_s/dA_j across the direct term, deeper layers'
          // transmittances, and the background closure.
          Vec3d dCs_dAj = pixel.transmittance[j - 1] * view.color;
          for (int i = j + 1; i <= n; ++i) {
            const auto& li = pixel.layers[i - 1];
            dCs_dAj += li.alpha * (-loo_product(pixel, i - 1, j)) *
                       tape.surfel_views[li.surfel_id].color;
          }
          dCs_dAj += (-loo_product(pixel, L, j)) * scene.background;
          double d_alpha = dCs.dot(dCs_dAj);

          // Transmittance-ladder loss path and Gaussian-mediated path.
          d_alpha += dTL * (-loo_product(pixel, L, j));
          d_alpha += cell[j - 1];

          // Layer color -> per-surfel view color.
          dcolor[layer.surfel_id] += layer.alpha * pixel.transmittance[j - 1] * dCs;

          double d_depth = 0;
          Vec3d d_normal = Vec3d::Zero();
          if (adjoints.has_geometry) {
            double dDs_dAj = pixel.transmittance[j - 1] * layer.depth;
            Vec3d dNs_dAj = pixel.transmittance[j - 1] * view.normal_sign * view.frame.col(2);
            for (int i = j + 1; i <= n; ++i) {
              const auto& li = pixel.layers[i - 1];
              const auto& vi = tape.surfel_views[li.surfel_id];
              const double dTi = li.alpha * (-loo_product(pixel, i - 1, j));
              dDs_dAj += dTi * li.depth;
              dNs_dAj += dTi * vi.normal_sign * vi.frame.col(2);
            }
            d_alpha += dDs * dDs_dAj + dNs.dot(dNs_dAj);
            d_depth = dDs * layer.alpha * pixel.transmittance[j - 1];
            d_normal = layer.alpha * pixel.transmittance[j - 1] * dNs;
          }

          fragment_backward(scene.surfels[layer.surfel_id], view, cam, ray, scene.opacity_w,
                            r2_cut, d_alpha, d_depth, d_normal, sgrads[layer.surfel_id]);
        }
      }
    }
  });

  std::vector<Vec3d> dcolor_total(num_surf, Vec3d::Zero());
  for (int c = 0; c < schunks; ++c) {
    if (chunk_sgrads[c].empty()) continue;
    for (int i = 0; i < num_surf; ++i) {
      grads.surfels[i].position += chunk_sgrads[c][i].position;
      grads.surfels[i].rotation += chunk_sgrads[c][i].rotation;
      grads.surfels[i].scale += chunk_sgrads[c][i].scale;
      dcolor_total[i] += chunk_dcolor[c][i];
    }
  }

  // View color -> SH coefficients and (through the view direction) position.
  for (int i = 0; i < num_surf; ++i) {
    if (!tape.surfel_views[i].visible) continue;
    const auto& view = tape.surfel_views[i];
    Vec3d d_dir = Vec3d::Zero();
    sh_eval_backward(scene.sh_degree, scene.surfels[i].sh, view.view_dir, dcolor_total[i],
                     grads.surfels[i].sh, d_dir);
    const double dist = (cam.center() - scene.surfels[i].position).norm();
    if (dist > 0) {
      const Mat3d proj =
          (Mat3d::Identity() - view.view_dir * view.view_dir.transpose()) / dist;
      grads.surfels[i].position += -(proj * d_dir);
    }
  }

  return grads;
}

}  // namespace dpges
