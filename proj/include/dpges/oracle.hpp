#pragma once

#include <functional>
#include <vector>

#include "dpges/composite.hpp"
#include "dpges/params.hpp"
#include "dpges/scene.hpp"

namespace dpges {
namespace oracle {

// Test-only reference implementations. These always run in double precision
// and deliberately avoid the tiled/peeled code paths they check: per-pixel
// fragment lists are fully sorted and composited over every layer.

struct AbufferResult {
  int width = 0, height = 0;
  // Per pixel, all surfel fragments sorted by (depth, id).
  std::vector<std::vector<SurfelFragment<double>>> fragments;
  ColorImageT<double> color;  // full-depth alpha compositing over all layers

  const std::vector<SurfelFragment<double>>& at(int x, int y) const {
    return fragments[static_cast<size_t>(y) * width + x];
  }
};

AbufferResult abuffer_render_surfels(const Scene& scene, const Camera& cam);

// Globally depth-sorted front-to-back compositing of surfel fragments and
// Gaussian footprint samples together. The sort-free pipeline is not meant
// to reproduce this exactly; tests measure and bound the difference.
ColorImageT<double> sorted_full_render(const Scene& scene, const Camera& cam);

// Central finite difference of an arbitrary scene functional.
double fd_gradient(const std::function<double(const Scene&)>& fn, const Scene& scene,
                   const ParamRef& ref, double h);

// Fingerprint of every discrete decision in a forward pass: peel layer ids,
// opaque-clamp branches, culling picks, Gaussian footprint membership,
// interval choices and depth-test bits, plus (optionally) the sign pattern
// of C - target that the L1 loss branches on. Finite-difference probes skip
// parameters whose fingerprint changes, since the true derivative is
// discontinuous across those boundaries.
uint64_t discrete_signature(const Scene& scene, const Camera& cam, int layers,
                            const ColorImageT<double>* l1_target = nullptr);

}  // namespace oracle
}  // namespace dpges
