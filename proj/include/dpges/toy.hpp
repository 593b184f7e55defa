#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dpges/scene.hpp"

namespace dpges {

// Synthetic scene recipes on known analytic geometry. Every builder is
// deterministic given its seed.

struct PlaneGridParams {
  int grid = 4;                    // grid x grid surfels
  double extent = 0.9;             // half-width of the covered square
  double depth = 2.0;              // plane z in world units
  double position_jitter = 0.05;   // in-plane jitter bound
  double depth_jitter = 0.02;      // out-of-plane jitter bound
  double rotation_jitter = 0.12;   // radians
  double scale_fill = 0.75;        // opaque-core radius as a fraction of spacing
  int gaussians_per_surfel = 2;
};

Scene make_plane_grid(const PlaneGridParams& params, uint64_t seed, int sh_degree = 1);

struct SphereParams {
  int count = 100;
  double radius = 0.8;
  Vec3<double> center = Vec3<double>(0, 0, 2.5);
  double rotation_jitter = 0.1;  // radians away from radial
  int gaussians = 64;
};

Scene make_sphere(const SphereParams& params, uint64_t seed, int sh_degree = 1);

// Overlapping boundary rings: `count` discs on a small circle, depth-offset
// so peel order is unambiguous, sized so their opaque cores overlap near the
// middle and their semi-transparent rings stack `count` deep at the center.
Scene make_overlap_rings(int count, uint64_t seed, int sh_degree = 0);

// Two side-by-side discs whose cores overlap; the canonical scene for the
// transmittance-loss separation mechanism.
Scene make_overlap_pair(double center_distance, uint64_t seed, int sh_degree = 0);

// A full-frame opaque wall, 16 small surfels on it, two boundary-ring layers
// in front of the image center, and one Gaussian hidden just behind the
// wall, inside the raw scale-derived margin but outside the smoothed one.
Scene make_occluder_box(uint64_t seed, int sh_degree = 0);

// Appends a huge opaque backdrop disc behind everything.
void add_backdrop(Scene& scene, double depth, double half_size, const Vec3<double>& color);

// Bundled recipes: plane-grid, sphere, overlap-rings, occluder-box, empty.
Scene make_toy_scene(const std::string& recipe, uint64_t seed, int sh_degree = 1);

Camera look_at_camera(const Vec3<double>& eye, const Vec3<double>& target, int width, int height,
                      double focal_factor = 0.9);

// Evenly spaced ring of cameras around the +z axis looking at `target`; the
// first camera sits exactly on the axis.
std::vector<Camera> make_orbit_cameras(int count, const Vec3<double>& target, double orbit_radius,
                                       int width, int height);

std::vector<Camera> make_toy_cameras(const std::string& recipe, int count, int width, int height);

}  // namespace dpges
