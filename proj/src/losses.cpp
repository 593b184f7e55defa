#include "dpges/losses.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace dpges {

namespace {

constexpr int kWindow = 11;
constexpr double kWindowSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kWindow> gaussian_window() {
  std::array<double, kWindow> w{};
  double sum = 0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - (kWindow - 1) / 2.0;
    w[i] = std::exp(-d * d / (2.0 * kWindowSigma * kWindowSigma));
    sum += w[i];
  }
  for (auto& v : w) v /= sum;
  return w;
}

// Separable zero-padded convolution with the symmetric window; since the
// kernel is even, the operator is self-adjoint and backward reuses it.
ScalarImageT<double> conv_window(const ScalarImageT<double>& in) {
  static const auto win = gaussian_window();
  const int w = in.width, h = in.height, r = kWindow / 2;
  ScalarImageT<double> tmp(w, h), out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int k = -r; k <= r; ++k) {
        const int xx = x + k;
        if (xx < 0 || xx >= w) continue;
        acc += win[k + r] * in(xx, y);
      }
      tmp(x, y) = acc;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int k = -r; k <= r; ++k) {
        const int yy = y + k;
        if (yy < 0 || yy >= h) continue;
        acc += win[k + r] * tmp(x, yy);
      }
      out(x, y) = acc;
    }
  return out;
}

ScalarImageT<double> channel(const ColorImageT<double>& img, int c) {
  ScalarImageT<double> out(img.width, img.height);
  for (int i = 0; i < img.count(); ++i) out.values[i] = img.pixels[i][c];
  return out;
}

void check_dims(const ColorImageT<double>& a, const ColorImageT<double>& b, const char* who) {
  if (a.width != b.width || a.height != b.height)
    throw std::invalid_argument(std::string(who) + ": image dimensions mismatch");
}

struct SsimChannelState {
  ScalarImageT<double> mu_x, mu_y, x2, y2, xy;
};

SsimChannelState ssim_prepare(const ScalarImageT<double>& x, const ScalarImageT<double>& y) {
  SsimChannelState s;
  s.mu_x = conv_window(x);
  s.mu_y = conv_window(y);
  ScalarImageT<double> xx(x.width, x.height), yy(x.width, x.height), xyv(x.width, x.height);
  for (int i = 0; i < x.count(); ++i) {
    xx.values[i] = x.values[i] * x.values[i];
    yy.values[i] = y.values[i] * y.values[i];
    xyv.values[i] = x.values[i] * y.values[i];
  }
  s.x2 = conv_window(xx);
  s.y2 = conv_window(yy);
  s.xy = conv_window(xyv);
  return s;
}

}  // namespace

AdjointImages AdjointImages::zeros(int w, int h) {
  AdjointImages a;
  a.d_color = ColorImageT<double>(w, h);
  a.d_surfel_color = ColorImageT<double>(w, h);
  a.d_transmittance = ScalarImageT<double>(w, h);
  a.d_depth = ScalarImageT<double>(w, h);
  a.d_normal = ColorImageT<double>(w, h);
  return a;
}

double l1_mean(const ColorImageT<double>& a, const ColorImageT<double>& b) {
  check_dims(a, b, "l1_mean");
  double sum = 0;
  for (int i = 0; i < a.count(); ++i) sum += (a.pixels[i] - b.pixels[i]).cwiseAbs().sum();
  return sum / (3.0 * a.count());
}

double ssim_mean(const ColorImageT<double>& a, const ColorImageT<double>& b) {
  check_dims(a, b, "ssim");
  double total = 0;
  for (int c = 0; c < 3; ++c) {
    const auto x = channel(a, c), y = channel(b, c);
    const auto s = ssim_prepare(x, y);
    for (int i = 0; i < x.count(); ++i) {
      const double mx = s.mu_x.values[i], my = s.mu_y.values[i];
      const double sx = s.x2.values[i] - mx * mx;
      const double sy = s.y2.values[i] - my * my;
      const double sxy = s.xy.values[i] - mx * my;
      const double a1 = 2 * mx * my + kC1, a2 = 2 * sxy + kC2;
      const double b1 = mx * mx + my * my + kC1, b2 = sx + sy + kC2;
      total += (a1 * a2) / (b1 * b2);
    }
  }
  return total / (3.0 * a.count());
}

void ssim_backward(const ColorImageT<double>& a, const ColorImageT<double>& b, double d_mean,
                   ColorImageT<double>& d_a) {
  check_dims(a, b, "ssim_backward");
  const double q = d_mean / (3.0 * a.count());
  for (int c = 0; c < 3; ++c) {
    const auto x = channel(a, c), y = channel(b, c);
    const auto s = ssim_prepare(x, y);
    ScalarImageT<double> d_mu(x.width, x.height), d_x2(x.width, x.height),
        d_xy(x.width, x.height);
    for (int i = 0; i < x.count(); ++i) {
      const double mx = s.mu_x.values[i], my = s.mu_y.values[i];
      const double sx = s.x2.values[i] - mx * mx;
      const double sy = s.y2.values[i] - my * my;
      const double sxy = s.xy.values[i] - mx * my;
      const double a1 = 2 * mx * my + kC1, a2 = 2 * sxy + kC2;
      const double b1 = mx * mx + my * my + kC1, b2 = sx + sy + kC2;
      const double inv = 1.0 / (b1 * b2);
      const double ssim = a1 * a2 * inv;
      const double dA1 = a2 * inv, dA2 = a1 * inv;
      const double dB1 = -ssim / b1, dB2 = -ssim / b2;
      d_mu.values[i] = q * (2 * my * dA1 + 2 * mx * dB1 - 2 * my * dA2 - 2 * mx * dB2);
      d_x2.values[i] = q * dB2;
      d_xy.values[i] = q * 2 * dA2;
    }
    const auto g_mu = conv_window(d_mu);
    const auto g_x2 = conv_window(d_x2);
    const auto g_xy = conv_window(d_xy);
    for (int i = 0; i < x.count(); ++i) {
      d_a.pixels[i][c] +=
          g_mu.values[i] + 2.0 * x.values[i] * g_x2.values[i] + y.values[i] * g_xy.values[i];
    }
  }
}

double loss_rgb(const ColorImageT<double>& color, const ColorImageT<double>& target, double beta,
                ColorImageT<double>* d_color, double weight) {
  check_dims(color, target, "loss_rgb");
  const double l1 = l1_mean(color, target);
  const double ssim = ssim_mean(color, target);
  const double value = (1.0 - beta) * l1 + beta * (1.0 - ssim);
  if (d_color) {
    const double per = weight * (1.0 - beta) / (3.0 * color.count());
    for (int i = 0; i < color.count(); ++i)
      for (int c = 0; c < 3; ++c) {
        const double diff = color.pixels[i][c] - target.pixels[i][c];
        d_color->pixels[i][c] += per * (diff >= 0 ? 1.0 : -1.0);
      }
    ssim_backward(color, target, -weight * beta, *d_color);
  }
  return value;
}

double loss_surfel(const ColorImageT<double>& surfel_color, const ColorImageT<double>& target,
                   ColorImageT<double>* d_surfel_color, double weight) {
  check_dims(surfel_color, target, "loss_surfel");
  const double value = l1_mean(surfel_color, target);
  if (d_surfel_color) {
    const double per = weight / (3.0 * surfel_color.count());
    for (int i = 0; i < surfel_color.count(); ++i)
      for (int c = 0; c < 3; ++c) {
        const double diff = surfel_color.pixels[i][c] - target.pixels[i][c];
        d_surfel_color->pixels[i][c] += per * (diff >= 0 ? 1.0 : -1.0);
      }
  }
  return value;
}

double loss_scale(const std::vector<Surfel>& surfels, SceneGrads* grads, double weight) {
  const int n = static_cast<int>(surfels.size());
  if (n == 0) return 0.0;
  double mean = 0;
  for (const auto& s : surfels) mean += 0.5 * (s.scale[0] + s.scale[1]);
  mean /= n;

  double value = 0, weighted_by_a = 0;
  std::vector<double> expo(n);
  for (int i = 0; i < n; ++i) {
    const double a = 0.5 * (surfels[i].scale[0] + surfels[i].scale[1]);
    expo[i] = std::exp(a / mean);
    value += expo[i];
    weighted_by_a += expo[i] * a;
  }
  value /= n;

  if (grads) {
    // dL/da_j = e_j/(N m) - (1/N) sum_i e_i a_i / m^2 * dm/da_j, dm/da_j = 1/N
    const double mean_term = -weighted_by_a / (n * mean * mean * n);
    for (int j = 0; j < n; ++j) {
      const double d_a = expo[j] / (n * mean) + mean_term;
      grads->surfels[j].scale[0] += weight * 0.5 * d_a;
      grads->surfels[j].scale[1] += weight * 0.5 * d_a;
    }
  }
  return value;
}

double loss_transmittance(const PeelImage<double>& stack, ScalarImageT<double>* d_transmittance,
                          double weight) {
  const int count = stack.width * stack.height;
  double value = 0;
  for (int y = 0; y < stack.height; ++y) {
    for (int x = 0; x < stack.width; ++x) {
      const auto& pixel = stack(x, y);
      const double t = pixel.transmittance[stack.num_layers];
      value += (1.0 - t) * (1.0 - t);
      if (d_transmittance && pixel.layer_count >= 2)
        (*d_transmittance)(x, y) += weight * (-2.0) * (1.0 - t) / count;
    }
  }
  return value / count;
}

ColorImageT<double> depth_to_normal(const ScalarImageT<double>& depth, const Camera& cam) {
  ColorImageT<double> out(depth.width, depth.height);
  for (int y = 1; y + 1 < depth.height; ++y) {
    for (int x = 1; x + 1 < depth.width; ++x) {
      const Vec3<double> tx =
          0.5 * (depth(x + 1, y) * cam.pixel_ray(x + 1, y) - depth(x - 1, y) * cam.pixel_ray(x - 1, y));
      const Vec3<double> ty =
          0.5 * (depth(x, y + 1) * cam.pixel_ray(x, y + 1) - depth(x, y - 1) * cam.pixel_ray(x, y - 1));
      Vec3<double> n = tx.cross(ty);
      const double len = n.norm();
      if (len == 0) continue;
      n /= len;
      if (n[2] > 0) n = -n;  // face the camera
      out(x, y) = n;
    }
  }
  return out;
}

GeometryLossResult loss_geometry(const ScalarImageT<double>& depth_map,
                                 const ColorImageT<double>& normal_map,
                                 const GeometrySupervision& supervision, const Camera& cam,
                                 const LossWeights& weights, ScalarImageT<double>* d_depth,
                                 ColorImageT<double>* d_normal) {
  GeometryLossResult r;
  const int count = depth_map.count();

  for (int i = 0; i < count; ++i) {
    const double diff = supervision.depth.values[i] - depth_map.values[i];
    r.depth += std::abs(diff);
    if (d_depth)
      d_depth->values[i] += weights.lambda_geo_depth * (diff >= 0 ? -1.0 : 1.0) / count;
  }
  r.depth /= count;

  for (int i = 0; i < count; ++i) {
    r.normal += 1.0 - supervision.normal.pixels[i].dot(normal_map.pixels[i]);
    if (d_normal)
      d_normal->pixels[i] += weights.lambda_geo_normal * (-supervision.normal.pixels[i]) / count;
  }
  r.normal /= count;

  // Depth-to-normal alignment over interior pixels.
  const int w = depth_map.width, h = depth_map.height;
  const int interior = std::max(1, (w - 2) * (h - 2));
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      const Vec3<double> tx = 0.5 * (depth_map(x + 1, y) * cam.pixel_ray(x + 1, y) -
                                     depth_map(x - 1, y) * cam.pixel_ray(x - 1, y));
      const Vec3<double> ty = 0.5 * (depth_map(x, y + 1) * cam.pixel_ray(x, y + 1) -
                                     depth_map(x, y - 1) * cam.pixel_ray(x, y - 1));
      Vec3<double> raw = tx.cross(ty);
      const double len = raw.norm();
      if (len == 0) {
        r.depth_normal += 1.0;
        continue;
      }
      Vec3<double> n = raw / len;
      const double sign = n[2] > 0 ? -1.0 : 1.0;
      n *= sign;
      const Vec3<double>& ref = supervision.normal(x, y);
      r.depth_normal += 1.0 - ref.dot(n);
      if (d_depth) {
        const Vec3<double> d_n =
            weights.lambda_geo_depth_normal * (-ref) / interior;
        const Vec3<double> d_raw =
            sign * (Mat3<double>::Identity() - n * n.transpose()) * d_n / len;
        const Vec3<double> d_tx = ty.cross(d_raw);       // d(a x b)/da adjoint: b x g
        const Vec3<double> d_ty = d_raw.cross(tx);       // d(a x b)/db adjoint: g x a
        (*d_depth)(x + 1, y) += 0.5 * cam.pixel_ray(x + 1, y).dot(d_tx);
        (*d_depth)(x - 1, y) -= 0.5 * cam.pixel_ray(x - 1, y).dot(d_tx);
        (*d_depth)(x, y + 1) += 0.5 * cam.pixel_ray(x, y + 1).dot(d_ty);
        (*d_depth)(x, y - 1) -= 0.5 * cam.pixel_ray(x, y - 1).dot(d_ty);
      }
    }
  }
  r.depth_normal /= interior;
  return r;
}

TotalLossResult total_loss(const Scene& scene, const RenderResult<double>& render,
                           const ColorImageT<double>& target, const LossWeights& weights,
                           const GeometrySupervision* supervision) {
  TotalLossResult out;
  out.adjoints = AdjointImages::zeros(render.color.width, render.color.height);
  out.direct = SceneGrads::zeros_like(scene);

  out.breakdown.rgb = loss_rgb(render.color, target, weights.ssim_weight, &out.adjoints.d_color);
  out.breakdown.total = out.breakdown.rgb;

  if (weights.lambda_surfel != 0) {
    out.breakdown.surfel = loss_surfel(render.surfel_color, target, &out.adjoints.d_surfel_color,
                                       weights.lambda_surfel);
    out.breakdown.total += weights.lambda_surfel * out.breakdown.surfel;
  }
  if (weights.lambda_scale != 0) {
    out.breakdown.scale = loss_scale(scene.surfels, &out.direct, weights.lambda_scale);
    out.breakdown.total += weights.lambda_scale * out.breakdown.scale;
  }
  if (weights.lambda_transmittance != 0) {
    out.breakdown.transmittance = loss_transmittance(render.stack, &out.adjoints.d_transmittance,
                                                     weights.lambda_transmittance);
    out.breakdown.total += weights.lambda_transmittance * out.breakdown.transmittance;
  }
  if (weights.geometry_reg && supervision) {
    out.adjoints.has_geometry = true;
    const auto geo = loss_geometry(render.depth_map, render.normal_map, *supervision,
                                   render.camera, weights, &out.adjoints.d_depth,
                                   &out.adjoints.d_normal);
    out.breakdown.geo_depth = geo.depth;
    out.breakdown.geo_normal = geo.normal;
    out.breakdown.geo_depth_normal = geo.depth_normal;
    out.breakdown.total += weights.lambda_geo_depth * geo.depth +
                           weights.lambda_geo_normal * geo.normal +
                           weights.lambda_geo_depth_normal * geo.depth_normal;
  }
  return out;
}

}  // namespace dpges
