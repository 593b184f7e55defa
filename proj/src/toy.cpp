#include "dpges/toy.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "dpges/margin.hpp"

namespace dpges {

namespace {

using Vec3d = Vec3<double>;
using Vec4d = Vec4<double>;

Vec4d axis_angle_quat(const Vec3d& axis_raw, double angle) {
  const double n = axis_raw.norm();
  if (n == 0 || angle == 0) return Vec4d(1, 0, 0, 0);
  const Vec3d axis = axis_raw / n;
  const double h = angle / 2;
  return Vec4d(std::cos(h), axis[0] * std::sin(h), axis[1] * std::sin(h), axis[2] * std::sin(h));
}

Vec4d quat_mul(const Vec4d& a, const Vec4d& b) {
  return Vec4d(a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
               a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
               a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
               a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]);
}

// Quaternion rotating the local z axis onto `dir`.
Vec4d quat_from_z_to(const Vec3d& dir_raw) {
  const Vec3d dir = dir_raw.normalized();
  const Vec3d z(0, 0, 1);
  const double c = z.dot(dir);
  if (c > 1.0 - 1e-12) return Vec4d(1, 0, 0, 0);
  if (c < -1.0 + 1e-12) return Vec4d(0, 1, 0, 0);  // 180 degrees about x
  const Vec3d axis = z.cross(dir);
  return axis_angle_quat(axis, std::acos(std::min(1.0, std::max(-1.0, c)))).normalized();
}

Vec3d ramp_color(const Vec3d& p) {
  return Vec3d(0.25 + 0.5 * std::fabs(std::sin(1.7 * p[0] + 0.3)),
               0.25 + 0.5 * std::fabs(std::sin(2.3 * p[1] + 1.1)),
               0.25 + 0.5 * std::fabs(std::sin(1.3 * p[2] + 2.0)));
}

Mat3X<double> noisy_sh(const Vec3d& base_color, int degree, std::mt19937_64& rng,
                       double view_dep = 0.05) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Mat3X<double> sh = constant_color_sh(base_color, degree);
  for (int k = 1; k < sh.cols(); ++k)
    for (int c = 0; c < 3; ++c) sh(c, k) = view_dep * uni(rng);
  return sh;
}

// Opaque-core radius in units of the scale parameter (r where w G(r) = 1).
double core_radius_units(double opacity_w) { return std::sqrt(2.0 * std::log(opacity_w)); }

}  // namespace

Scene make_plane_grid(const PlaneGridParams& params, uint64_t seed, int sh_degree) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::uniform_real_distribution<double> uni01(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Scene scene;
  scene.sh_degree = sh_degree;
  const double spacing = params.grid > 1 ? 2.0 * params.extent / (params.grid - 1) : params.extent;
  const double base_scale = params.scale_fill * spacing / core_radius_units(scene.opacity_w);

  for (int gy = 0; gy < params.grid; ++gy) {
    for (int gx = 0; gx < params.grid; ++gx) {
      Surfel s;
      const double x = params.grid > 1 ? -params.extent + gx * spacing : 0.0;
      const double y = params.grid > 1 ? -params.extent + gy * spacing : 0.0;
      s.position = Vec3d(x + params.position_jitter * uni(rng), y + params.position_jitter * uni(rng),
                         params.depth + params.depth_jitter * uni(rng));
      const Vec3d axis(uni(rng), uni(rng), uni(rng));
      s.rotation = axis_angle_quat(axis, params.rotation_jitter * uni01(rng)).normalized();
      const double sj = 0.85 + 0.35 * uni01(rng);
      s.scale = Vec2<double>(base_scale * sj, base_scale * sj * (0.8 + 0.4 * uni01(rng)));
      s.sh = noisy_sh(ramp_color(s.position), sh_degree, rng);
      scene.surfels.push_back(s);
    }
  }

  std::uniform_int_distribution<int> pick(0, std::max(1, params.grid * params.grid) - 1);
  const int num_gauss = params.gaussians_per_surfel * params.grid * params.grid;
  for (int i = 0; i < num_gauss; ++i) {
    const Surfel& host = scene.surfels[pick(rng)];
    Gaussian g;
    g.position = host.position + 0.08 * Vec3d(gauss(rng), gauss(rng), gauss(rng));
    g.position[2] = std::min(g.position[2], params.depth + 0.1);
    g.sigma = 0.5 + 0.5 * uni01(rng);
    g.rotation = axis_angle_quat(Vec3d(uni(rng), uni(rng), uni(rng)), uni01(rng)).normalized();
    const double s0 = 0.03 + 0.05 * uni01(rng);
    g.scale = Vec3d(s0, s0 * (0.7 + 0.6 * uni01(rng)), s0 * (0.7 + 0.6 * uni01(rng)));
    g.sh = noisy_sh(ramp_color(g.position + Vec3d(0.5, 0.5, 0)), sh_degree, rng);
    scene.gaussians.push_back(g);
  }

  compute_margins(scene.surfels);
  return scene;
}

Scene make_sphere(const SphereParams& params, uint64_t seed, int sh_degree) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::uniform_real_distribution<double> uni01(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Scene scene;
  scene.sh_degree = sh_degree;
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  const double area_per = 4.0 * M_PI * params.radius * params.radius / params.count;
  const double base_scale = 0.75 * std::sqrt(area_per) / core_radius_units(scene.opacity_w);

  for (int i = 0; i < params.count; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / params.count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    const Vec3d dir(r * std::cos(phi), r * std::sin(phi), z);
    Surfel s;
    s.position = params.center + params.radius * dir;
    Vec4d q = quat_from_z_to(dir);
    const Vec3d axis(uni(rng), uni(rng), uni(rng));
    q = quat_mul(axis_angle_quat(axis, params.rotation_jitter * uni01(rng)), q);
    s.rotation = q.normalized();
    const double sj = 0.9 + 0.2 * uni01(rng);
    s.scale = Vec2<double>(base_scale * sj, base_scale * sj);
    s.sh = noisy_sh(ramp_color(dir), sh_degree, rng);
    scene.surfels.push_back(s);
  }

  for (int i = 0; i < params.gaussians; ++i) {
    Gaussian g;
    const double z = uni(rng);
    const double phi = 2 * M_PI * uni01(rng);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const Vec3d dir(r * std::cos(phi), r * std::sin(phi), z);
    g.position = params.center + (params.radius + 0.05 * gauss(rng)) * dir;
    g.sigma = 0.5 + 0.5 * uni01(rng);
    g.rotation = axis_angle_quat(Vec3d(uni(rng), uni(rng), uni(rng)), uni01(rng)).normalized();
    const double s0 = 0.02 + 0.04 * uni01(rng);
    g.scale = Vec3d(s0, s0, s0);
    g.sh = noisy_sh(ramp_color(dir * 2.0), sh_degree, rng);
    scene.gaussians.push_back(g);
  }

  compute_margins(scene.surfels);
  return scene;
}

Scene make_overlap_rings(int count, uint64_t seed, int sh_degree) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);

  Scene scene;
  scene.sh_degree = sh_degree;
  scene.background = Vec3d(0.05, 0.05, 0.08);
  const double ring_radius = 1.15 * 0.35 / 0.35;  // circle the centers sit on
  for (int i = 0; i < count; ++i) {
    const double a = 2 * M_PI * i / count;
    Surfel s;
    const double scale = 0.35 * (1.0 + 0.05 * uni(rng));
    s.position = Vec3d(0.35 * ring_radius * std::cos(a) + 0.02 * uni(rng),
                       0.35 * ring_radius * std::sin(a) + 0.02 * uni(rng), 2.0 + 0.05 * i);
    s.rotation = Vec4d(1, 0, 0, 0);
    s.scale = Vec2<double>(scale, scale);
    Vec3d color(0.2, 0.2, 0.2);
    color[i % 3] = 0.8;
    s.sh = constant_color_sh(color, sh_degree);
    scene.surfels.push_back(s);
  }
  compute_margins(scene.surfels);
  return scene;
}

Scene make_overlap_pair(double center_distance, uint64_t seed, int sh_degree) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);

  Scene scene;
  scene.sh_degree = sh_degree;
  scene.background = Vec3d(0, 0, 0);
  for (int i = 0; i < 2; ++i) {
    Surfel s;
    s.position = Vec3d((i == 0 ? -0.5 : 0.5) * center_distance, 0.03 * uni(rng), 2.0 + 0.04 * i);
    s.rotation = Vec4d(1, 0, 0, 0);
    s.scale = Vec2<double>(0.35, 0.35);
    s.sh = constant_color_sh(i == 0 ? Vec3d(0.8, 0.3, 0.2) : Vec3d(0.2, 0.4, 0.8), sh_degree);
    scene.surfels.push_back(s);
  }
  compute_margins(scene.surfels);
  return scene;
}

Scene make_occluder_box(uint64_t seed, int sh_degree) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);

  Scene scene;
  scene.sh_degree = sh_degree;
  scene.background = Vec3d(0.1, 0.1, 0.1);

  Surfel wall;
  wall.position = Vec3d(0, 0, 2.0);
  wall.rotation = Vec4d(1, 0, 0, 0);
  wall.scale = Vec2<double>(3.0, 3.0);
  wall.sh = constant_color_sh(Vec3d(0.5, 0.5, 0.55), sh_degree);
  scene.surfels.push_back(wall);

  // The wall's 16 nearest neighbors, all small, so the median margin is small.
  for (int i = 0; i < 16; ++i) {
    const double a = 2 * M_PI * i / 16.0;
    Surfel s;
    s.position = Vec3d(0.9 * std::cos(a), 0.9 * std::sin(a), 1.995 + 0.002 * uni(rng));
    s.rotation = Vec4d(1, 0, 0, 0);
    s.scale = Vec2<double>(0.02, 0.02);
    s.sh = constant_color_sh(ramp_color(s.position), sh_degree);
    scene.surfels.push_back(s);
  }

  // Two boundary-ring layers in front of the image center.
  for (int i = 0; i < 2; ++i) {
    Surfel s;
    s.position = Vec3d(i == 0 ? 0.5 : -0.5, 0, 1.0 + 0.2 * i);
    s.rotation = Vec4d(1, 0, 0, 0);
    s.scale = Vec2<double>(0.15, 0.15);
    s.sh = constant_color_sh(i == 0 ? Vec3d(0.9, 0.2, 0.2) : Vec3d(0.2, 0.9, 0.2), sh_degree);
    scene.surfels.push_back(s);
  }

  // Hidden behind the wall: inside the raw margin, outside the smoothed one.
  Gaussian g;
  g.position = Vec3d(0, 0, 2.4);
  g.sigma = 0.9;
  g.rotation = Vec4d(1, 0, 0, 0);
  g.scale = Vec3d(0.05, 0.05, 0.05);
  g.sh = constant_color_sh(Vec3d(1.0, 0.9, 0.1), sh_degree);
  scene.gaussians.push_back(g);

  compute_margins(scene.surfels);
  return scene;
}

void add_backdrop(Scene& scene, double depth, double half_size, const Vec3d& color) {
  Surfel s;
  s.position = Vec3d(0, 0, depth);
  s.rotation = Vec4d(1, 0, 0, 0);
  s.scale = Vec2<double>(half_size, half_size);
  s.sh = constant_color_sh(color, scene.sh_degree);
  s.margin = raw_margin(s);
  scene.surfels.push_back(s);
}

Scene make_toy_scene(const std::string& recipe, uint64_t seed, int sh_degree) {
  if (recipe == "plane-grid") return make_plane_grid(PlaneGridParams{}, seed, sh_degree);
  if (recipe == "sphere") return make_sphere(SphereParams{}, seed, sh_degree);
  if (recipe == "overlap-rings") return make_overlap_rings(4, seed, std::min(sh_degree, 1));
  if (recipe == "occluder-box") return make_occluder_box(seed, std::min(sh_degree, 1));
  if (recipe == "empty") {
    Scene scene;
    scene.sh_degree = sh_degree;
    return scene;
  }
  throw std::invalid_argument("unknown toy recipe: " + recipe);
}

Camera look_at_camera(const Vec3d& eye, const Vec3d& target, int width, int height,
                      double focal_factor) {
  Vec3d forward = (target - eye).normalized();
  Vec3d up(0, 1, 0);
  if (std::abs(forward.dot(up)) > 0.999) up = Vec3d(1, 0, 0);
  const Vec3d right = forward.cross(up).normalized();
  const Vec3d down = forward.cross(right);

  Camera cam;
  cam.rotation.row(0) = right;
  cam.rotation.row(1) = down;
  cam.rotation.row(2) = forward;
  cam.translation = -(cam.rotation * eye);
  cam.width = width;
  cam.height = height;
  cam.fx = focal_factor * width;
  cam.fy = focal_factor * width;
  cam.cx = width / 2.0;
  cam.cy = height / 2.0;
  cam.near_clip = 0.05;
  cam.far_clip = 100.0;
  return cam;
}

std::vector<Camera> make_orbit_cameras(int count, const Vec3d& target, double orbit_radius,
                                       int width, int height) {
  std::vector<Camera> cams;
  cams.reserve(count);
  for (int i = 0; i < count; ++i) {
    Vec3d eye(0, 0, 0);
    if (i > 0) {
      const double a = 2 * M_PI * (i - 1) / std::max(1, count - 1);
      eye = Vec3d(orbit_radius * std::cos(a), orbit_radius * std::sin(a), -0.1 * std::sin(2 * a));
    }
    cams.push_back(look_at_camera(eye, target, width, height));
  }
  return cams;
}

std::vector<Camera> make_toy_cameras(const std::string& recipe, int count, int width, int height) {
  Vec3d target(0, 0, 2.0);
  if (recipe == "sphere") target = Vec3d(0, 0, 2.5);
  double orbit = 0.35;
  if (recipe == "occluder-box") orbit = 0.15;  // keep the probe geometry intact
  return make_orbit_cameras(count, target, orbit, width, height);
}

}  // namespace dpges
