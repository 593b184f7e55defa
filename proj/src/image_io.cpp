#include "dpges/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace dpges {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

// Reads one whitespace-delimited token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {}
      continue;
    }
    if (!std::isspace(c)) {
      tok.push_back(static_cast<char>(c));
      while ((c = in.peek()) != EOF && !std::isspace(c)) tok.push_back(static_cast<char>(in.get()));
      return tok;
    }
  }
  return tok;
}

}  // namespace

ColorImageF load_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  if (next_token(in) != "P6") fail(path, "not a binary PPM (P6)");
  const int w = std::stoi(next_token(in));
  const int h = std::stoi(next_token(in));
  const int maxval = std::stoi(next_token(in));
  if (w <= 0 || h <= 0) fail(path, "bad dimensions");
  if (maxval != 255) fail(path, "only maxval 255 supported");
  in.get();  // single whitespace byte before raster
  std::vector<uint8_t> raw(static_cast<size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!in) fail(path, "truncated raster");
  ColorImageF img(w, h);
  for (int i = 0; i < w * h; ++i)
    img.pixels[i] = Vec3<float>(raw[3 * i], raw[3 * i + 1], raw[3 * i + 2]) / 255.0f;
  return img;
}

void save_ppm(const std::string& path, const ColorImageF& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<uint8_t> raw(static_cast<size_t>(img.count()) * 3);
  for (int i = 0; i < img.count(); ++i) {
    for (int c = 0; c < 3; ++c) {
      const float v = std::clamp(img.pixels[i][c], 0.0f, 1.0f);
      raw[3 * i + c] = static_cast<uint8_t>(std::lround(v * 255.0f));
    }
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) fail(path, "write failed");
}

ColorImageF load_pfm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  const std::string magic = next_token(in);
  const bool color = magic == "PF";
  if (!color && magic != "Pf") fail(path, "not a PFM");
  const int w = std::stoi(next_token(in));
  const int h = std::stoi(next_token(in));
  const float scale = std::stof(next_token(in));
  if (scale >= 0) fail(path, "big-endian PFM not supported");
  in.get();
  const int ch = color ? 3 : 1;
  std::vector<float> raw(static_cast<size_t>(w) * h * ch);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
  if (!in) fail(path, "truncated raster");
  ColorImageF img(w, h);
  // PFM stores rows bottom to top.
  for (int y = 0; y < h; ++y) {
    const float* row = raw.data() + static_cast<size_t>(h - 1 - y) * w * ch;
    for (int x = 0; x < w; ++x) {
      if (color)
        img(x, y) = Vec3<float>(row[3 * x], row[3 * x + 1], row[3 * x + 2]);
      else
        img(x, y) = Vec3<float>::Constant(row[x]);
    }
  }
  return img;
}

namespace {
void write_pfm_raster(std::ofstream& out, const float* data, int w, int h, int ch) {
  for (int y = h - 1; y >= 0; --y)
    out.write(reinterpret_cast<const char*>(data + static_cast<size_t>(y) * w * ch),
              static_cast<std::streamsize>(static_cast<size_t>(w) * ch * 4));
}
}  // namespace

void save_pfm(const std::string& path, const ColorImageF& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << "PF\n" << img.width << " " << img.height << "\n-1.0\n";
  std::vector<float> raw(static_cast<size_t>(img.count()) * 3);
  for (int i = 0; i < img.count(); ++i)
    for (int c = 0; c < 3; ++c) raw[3 * i + c] = img.pixels[i][c];
  write_pfm_raster(out, raw.data(), img.width, img.height, 3);
  if (!out) fail(path, "write failed");
}

void save_pfm(const std::string& path, const ScalarImageF& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << "Pf\n" << img.width << " " << img.height << "\n-1.0\n";
  write_pfm_raster(out, img.values.data(), img.width, img.height, 1);
  if (!out) fail(path, "write failed");
}

namespace {
bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}
}  // namespace

ColorImageF load_image(const std::string& path) {
  if (ends_with(path, ".ppm")) return load_ppm(path);
  if (ends_with(path, ".pfm")) return load_pfm(path);
  fail(path, "unsupported image extension (expected .ppm or .pfm)");
}

void save_image(const std::string& path, const ColorImageF& img) {
  if (ends_with(path, ".ppm")) return save_ppm(path, img);
  if (ends_with(path, ".pfm")) return save_pfm(path, img);
  fail(path, "unsupported image extension (expected .ppm or .pfm)");
}

}  // namespace dpges
