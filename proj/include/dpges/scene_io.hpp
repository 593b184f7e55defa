#pragma once

#include <string>
#include <vector>

#include "dpges/image_io.hpp"
#include "dpges/scene.hpp"

namespace dpges {

// Scene container: a one-line JSON header (counts, SH degree, w, background)
// followed by little-endian float32 parameter blocks. Round-trips are exact
// for float32 parameter values.
SceneT<float> load_scene(const std::string& path);
void save_scene(const SceneT<float>& scene, const std::string& path);

template <typename S>
SceneT<S> load_scene_as(const std::string& path) {
  return load_scene(path).template cast<S>();
}

CameraT<double> load_camera(const std::string& path);
void save_camera(const CameraT<double>& cam, const std::string& path);

struct DatasetView {
  std::string name;
  CameraT<double> camera;
  ColorImageF image;
};

// A dataset directory holds per-view camera JSON files with images of the
// same stem (.ppm or .pfm); views are ordered by file name.
std::vector<DatasetView> load_dataset(const std::string& dir);

}  // namespace dpges
