#include "dpges/scene_io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace dpges {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

void write_floats(std::ofstream& out, const float* data, size_t n) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * 4));
}

void read_floats(std::ifstream& in, float* data, size_t n, const std::string& path,
                 const std::string& block) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * 4));
  if (!in) fail(path, "truncated parameter block: " + block);
}

}  // namespace

void save_scene(const SceneT<float>& scene, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(path, "cannot open for writing");

  json header;
  header["format"] = "dpges";
  header["version"] = 1;
  header["surfel_count"] = scene.surfels.size();
  header["gaussian_count"] = scene.gaussians.size();
  header["sh_degree"] = scene.sh_degree;
  header["opacity_w"] = scene.opacity_w;
  header["background"] = {scene.background[0], scene.background[1], scene.background[2]};
  out << header.dump() << "\n";

  const int k = scene.coeff_count();
  for (const auto& s : scene.surfels) write_floats(out, s.position.data(), 3);
  for (const auto& s : scene.surfels) write_floats(out, s.rotation.data(), 4);
  for (const auto& s : scene.surfels) write_floats(out, s.scale.data(), 2);
  for (const auto& s : scene.surfels) write_floats(out, &s.margin, 1);
  for (const auto& s : scene.surfels) write_floats(out, s.sh.data(), 3 * k);
  for (const auto& g : scene.gaussians) write_floats(out, g.position.data(), 3);
  for (const auto& g : scene.gaussians) write_floats(out, &g.sigma, 1);
  for (const auto& g : scene.gaussians) write_floats(out, g.rotation.data(), 4);
  for (const auto& g : scene.gaussians) write_floats(out, g.scale.data(), 3);
  for (const auto& g : scene.gaussians) write_floats(out, g.sh.data(), 3 * k);
  if (!out) fail(path, "write failed");
}

SceneT<float> load_scene(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  std::string header_line;
  if (!std::getline(in, header_line)) fail(path, "missing header line");

  json header;
  try {
    header = json::parse(header_line);
  } catch (const json::exception& e) {
    fail(path, std::string("malformed JSON header: ") + e.what());
  }
  if (header.value("format", "") != "dpges") fail(path, "not a dpges scene container");
  if (header.value("version", 0) != 1) fail(path, "unsupported container version");

  SceneT<float> scene;
  const size_t n = header.at("surfel_count").get<size_t>();
  const size_t m = header.at("gaussian_count").get<size_t>();
  scene.sh_degree = header.at("sh_degree").get<int>();
  if (scene.sh_degree < 0 || scene.sh_degree > 3) fail(path, "sh_degree outside [0,3]");
  scene.opacity_w = header.at("opacity_w").get<float>();
  const auto bg = header.at("background");
  if (!bg.is_array() || bg.size() != 3) fail(path, "background must be a 3-array");
  for (int c = 0; c < 3; ++c) scene.background[c] = bg[c].get<float>();

  const int k = scene.coeff_count();
  scene.surfels.resize(n);
  for (auto& s : scene.surfels) s.sh.resize(3, k);
  scene.gaussians.resize(m);
  for (auto& g : scene.gaussians) g.sh.resize(3, k);

  for (auto& s : scene.surfels) read_floats(in, s.position.data(), 3, path, "surfel positions");
  for (auto& s : scene.surfels) read_floats(in, s.rotation.data(), 4, path, "surfel rotations");
  for (auto& s : scene.surfels) read_floats(in, s.scale.data(), 2, path, "surfel scales");
  for (auto& s : scene.surfels) read_floats(in, &s.margin, 1, path, "surfel margins");
  for (auto& s : scene.surfels) read_floats(in, s.sh.data(), 3 * k, path, "surfel colors");
  for (auto& g : scene.gaussians) read_floats(in, g.position.data(), 3, path, "gaussian positions");
  for (auto& g : scene.gaussians) read_floats(in, &g.sigma, 1, path, "gaussian sigmas");
  for (auto& g : scene.gaussians) read_floats(in, g.rotation.data(), 4, path, "gaussian rotations");
  for (auto& g : scene.gaussians) read_floats(in, g.scale.data(), 3, path, "gaussian scales");
  for (auto& g : scene.gaussians) read_floats(in, g.sh.data(), 3 * k, path, "gaussian colors");

  // Renormalize quaternions that drifted past tolerance; bit patterns already
  // within tolerance are kept so float32 round-trips stay exact.
  auto renorm = [&](Vec4<float>& q, const std::string& what) {
    const float norm = q.norm();
    if (norm == 0.0f) fail(path, what + ": zero quaternion");
    if (std::abs(double(norm) - 1.0) > kQuatNormTolerance) q /= norm;
  };
  for (size_t i = 0; i < scene.surfels.size(); ++i)
    renorm(scene.surfels[i].rotation, "surfel " + std::to_string(i));
  for (size_t i = 0; i < scene.gaussians.size(); ++i)
    renorm(scene.gaussians[i].rotation, "gaussian " + std::to_string(i));

  const std::string err = validate_scene(scene);
  if (!err.empty()) fail(path, err);
  return scene;
}

CameraT<double> load_camera(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(path, std::string("malformed camera JSON: ") + e.what());
  }
  CameraT<double> cam;
  cam.width = j.at("width").get<int>();
  cam.height = j.at("height").get<int>();
  cam.fx = j.at("fx").get<double>();
  cam.fy = j.at("fy").get<double>();
  cam.cx = j.at("cx").get<double>();
  cam.cy = j.at("cy").get<double>();
  cam.near_clip = j.value("near", 0.01);
  cam.far_clip = j.value("far", 1000.0);
  const auto& w2c = j.at("world_to_camera");
  if (!w2c.is_array() || w2c.size() != 4) fail(path, "world_to_camera must be a 4x4 array");
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) cam.rotation(r, c) = w2c[r][c].get<double>();
    cam.translation[r] = w2c[r][3].get<double>();
  }
  if (!(cam.fx > 0) || !(cam.fy > 0)) fail(path, "focal lengths must be positive");
  if (!(cam.near_clip > 0) || !(cam.near_clip < cam.far_clip))
    fail(path, "require 0 < near < far");
  return cam;
}

void save_camera(const CameraT<double>& cam, const std::string& path) {
  json j;
  j["width"] = cam.width;
  j["height"] = cam.height;
  j["fx"] = cam.fx;
  j["fy"] = cam.fy;
  j["cx"] = cam.cx;
  j["cy"] = cam.cy;
  j["near"] = cam.near_clip;
  j["far"] = cam.far_clip;
  json rows = json::array();
  for (int r = 0; r < 4; ++r) {
    json row = json::array();
    for (int c = 0; c < 4; ++c) {
      double v = r < 3 ? (c < 3 ? cam.rotation(r, c) : cam.translation[r]) : (c == 3 ? 1.0 : 0.0);
      row.push_back(v);
    }
    rows.push_back(row);
  }
  j["world_to_camera"] = rows;
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(path, "cannot open for writing");
  out << j.dump(2) << "\n";
}

std::vector<DatasetView> load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) fail(dir, "not a directory");
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") stems.push_back(entry.path().stem().string());
  }
  std::sort(stems.begin(), stems.end());
  std::vector<DatasetView> views;
  for (const auto& stem : stems) {
    DatasetView v;
    v.name = stem;
    v.camera = load_camera((fs::path(dir) / (stem + ".json")).string());
    const fs::path ppm = fs::path(dir) / (stem + ".ppm");
    const fs::path pfm = fs::path(dir) / (stem + ".pfm");
    if (fs::exists(ppm))
      v.image = load_ppm(ppm.string());
    else if (fs::exists(pfm))
      v.image = load_pfm(pfm.string());
    else
      fail(dir, "no image found for view " + stem);
    if (v.image.width != v.camera.width || v.image.height != v.camera.height)
      fail(dir, "image/camera size mismatch for view " + stem);
    views.push_back(std::move(v));
  }
  if (views.empty()) fail(dir, "no camera JSON files found");
  return views;
}

}  // namespace dpges
