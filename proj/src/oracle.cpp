#include "dpges/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace dpges {
namespace oracle {

AbufferResult abuffer_render_surfels(const Scene& scene, const Camera& cam) {
  AbufferResult out;
  out.width = cam.width;
  out.height = cam.height;
  out.fragments.resize(static_cast<size_t>(cam.width) * cam.height);
  out.color = ColorImageT<double>(cam.width, cam.height);

  const auto views = prepare_surfels(scene, cam);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      auto frags = rasterize_surfel_fragments(scene, cam, x, y, &views);
      std::sort(frags.begin(), frags.end(),
                [](const SurfelFragment<double>& a, const SurfelFragment<double>& b) {
                  return fragment_before(a.depth, a.surfel_id, b.depth, b.surfel_id);
                });
      Vec3<double> c = Vec3<double>::Zero();
      double trans = 1.0;
      for (const auto& f : frags) {
        c += f.alpha * trans * f.color;
        trans *= 1.0 - f.alpha;
      }
      c += trans * scene.background;
      out.color(x, y) = c;
      out.fragments[static_cast<size_t>(y) * cam.width + x] = std::move(frags);
    }
  }
  return out;
}

ColorImageT<double> sorted_full_render(const Scene& scene, const Camera& cam) {
  ColorImageT<double> out(cam.width, cam.height);
  const auto surfel_views = prepare_surfels(scene, cam);
  const auto gauss_views = prepare_gaussians(scene, cam);

  struct Sample {
    double depth;
    double alpha;
    Vec3<double> color;
    int kind;  // 0 = surfel, 1 = gaussian; tie-break component
    int id;
  };

  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      std::vector<Sample> samples;
      for (const auto& f : rasterize_surfel_fragments(scene, cam, x, y, &surfel_views))
        samples.push_back({f.depth, f.alpha, f.color, 0, f.surfel_id});
      for (size_t i = 0; i < gauss_views.size(); ++i) {
        if (!gauss_views[i].visible) continue;
        const auto& splat = gauss_views[i].splat;
        if (x < splat.bbox.x0 || x > splat.bbox.x1 || y < splat.bbox.y0 || y > splat.bbox.y1)
          continue;
        const Vec2<double> delta(x + 0.5 - splat.mean[0], y + 0.5 - splat.mean[1]);
        const double expo = -0.5 * delta.dot(splat.cov_inv * delta);
        if (expo < kGaussCutoffExponent) continue;
        samples.push_back(
            {splat.depth, splat.sigma * std::exp(expo), splat.color, 1, static_cast<int>(i)});
      }
      std::sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) {
        if (a.depth != b.depth) return a.depth < b.depth;
        if (a.kind != b.kind) return a.kind < b.kind;
        return a.id < b.id;
      });
      Vec3<double> c = Vec3<double>::Zero();
      double trans = 1.0;
      for (const auto& s : samples) {
        c += s.alpha * trans * s.color;
        trans *= 1.0 - s.alpha;
      }
      out(x, y) = c + trans * scene.background;
    }
  }
  return out;
}

double fd_gradient(const std::function<double(const Scene&)>& fn, const Scene& scene,
                   const ParamRef& ref, double h) {
  Scene probe = scene;
  const double base = get_param(scene, ref);
  set_param(probe, ref, base + h);
  const double hi = fn(probe);
  set_param(probe, ref, base - h);
  const double lo = fn(probe);
  return (hi - lo) / (2.0 * h);
}

uint64_t discrete_signature(const Scene& scene, const Camera& cam, int layers,
                            const ColorImageT<double>* l1_target) {
  RenderOptions opts;
  opts.layers = layers;
  const RenderResult<double> r = render(scene, cam, opts);

  BranchHash hash;
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const auto& pixel = r.stack(x, y);
      hash.mix_int(pixel.layer_count);
      for (int i = 0; i < pixel.layer_count; ++i) {
        hash.mix_int(pixel.layers[i].surfel_id);
        hash.mix_int(pixel.layers[i].alpha == 1.0 ? 1 : 0);  // opaque-clamp branch
      }
      hash.mix_int(pixel.cull_surfel_id);
    }
  }
  for (size_t i = 0; i < r.gaussian_views.size(); ++i) {
    if (!r.gaussian_views[i].visible) {
      hash.mix_int(-1);
      continue;
    }
    hash.mix_int(static_cast<int>(i));
    for_each_splat_contribution(r.gaussian_views[i].splat, r.stack, scene.surfels,
                                [&](int px, int py, const Vec2<double>&, double, int interval,
                                    double) {
                                  hash.mix_int(px);
                                  hash.mix_int(py);
                                  hash.mix_int(interval);
                                });
  }
  if (l1_target) {
    for (int i = 0; i < r.color.count(); ++i)
      for (int c = 0; c < 3; ++c)
        hash.mix_int(r.color.pixels[i][c] >= (*l1_target).pixels[i][c] ? 1 : 0);
  }
  return hash.state;
}

}  // namespace oracle
}  // namespace dpges
