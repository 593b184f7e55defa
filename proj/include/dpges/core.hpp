#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cstdint>
#include <future>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace dpges {

template <typename S> using Vec2 = Eigen::Matrix<S, 2, 1>;
template <typename S> using Vec3 = Eigen::Matrix<S, 3, 1>;
template <typename S> using Vec4 = Eigen::Matrix<S, 4, 1>;
template <typename S> using Mat2 = Eigen::Matrix<S, 2, 2>;
template <typename S> using Mat3 = Eigen::Matrix<S, 3, 3>;
template <typename S> using Mat23 = Eigen::Matrix<S, 2, 3>;
template <typename S> using Mat3X = Eigen::Matrix<S, 3, Eigen::Dynamic>;

template <typename S>
constexpr S infinity() { return std::numeric_limits<S>::infinity(); }

// Dense row-major image of fixed-size Eigen pixels; (0,0) is the top-left pixel.
template <typename S, int C>
struct ImageT {
  using Pixel = Eigen::Matrix<S, C, 1>;

  int width = 0, height = 0;
  std::vector<Pixel> pixels;

  ImageT() = default;
  ImageT(int w, int h, const Pixel& fill = Pixel::Zero())
      : width(w), height(h), pixels(static_cast<size_t>(w) * h, fill) {}

  Pixel& operator()(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
  const Pixel& operator()(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
  int count() const { return width * height; }

  template <typename T>
  ImageT<T, C> cast() const {
    ImageT<T, C> out(width, height);
    for (int i = 0; i < count(); ++i) out.pixels[i] = pixels[i].template cast<T>();
    return out;
  }
};

template <typename S>
struct ScalarImageT {
  int width = 0, height = 0;
  std::vector<S> values;

  ScalarImageT() = default;
  ScalarImageT(int w, int h, S fill = S(0))
      : width(w), height(h), values(static_cast<size_t>(w) * h, fill) {}

  S& operator()(int x, int y) { return values[static_cast<size_t>(y) * width + x]; }
  const S& operator()(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
  int count() const { return width * height; }
};

template <typename S> using ColorImageT = ImageT<S, 3>;

// Inclusive pixel-coordinate box; empty() when inverted.
struct PixelBox {
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;
  bool empty() const { return x1 < x0 || y1 < y0; }
  PixelBox clipped(int w, int h) const {
    return {std::max(x0, 0), std::max(y0, 0), std::min(x1, w - 1), std::min(y1, h - 1)};
  }
  bool intersects(const PixelBox& o) const {
    return !(o.x1 < x0 || x1 < o.x0 || o.y1 < y0 || y1 < o.y0);
  }
};

// Runs fn(chunk_index, begin, end) over [0,n) split into contiguous chunks.
// Chunk boundaries depend only on (n, threads), so any per-chunk buffers a
// caller merges in chunk order give run-to-run identical results.
template <typename Fn>
void parallel_chunks(int n, int threads, Fn&& fn) {
  if (n <= 0) return;
  int workers = std::max(1, threads);
  workers = std::min(workers, n);
  if (workers == 1) {
    fn(0, 0, n);
    return;
  }
  std::vector<std::future<void>> futs;
  futs.reserve(workers);
  int base = n / workers, rem = n % workers, begin = 0;
  for (int c = 0; c < workers; ++c) {
    int len = base + (c < rem ? 1 : 0);
    int end = begin + len;
    futs.push_back(std::async(std::launch::async, [c, begin, end, &fn] { fn(c, begin, end); }));
    begin = end;
  }
  for (auto& f : futs) f.get();
}

// FNV-1a over arbitrary scalars; used to fingerprint discrete rasterizer
// decisions (layer ids, branch picks) between perturbed forward passes.
struct BranchHash {
  uint64_t state = 1469598103934665603ull;
  void mix(uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      state ^= (v >> (8 * i)) & 0xffu;
      state *= 1099511628211ull;
    }
  }
  void mix_int(int64_t v) { mix(static_cast<uint64_t>(v)); }
};

inline int default_threads() {
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

}  // namespace dpges
