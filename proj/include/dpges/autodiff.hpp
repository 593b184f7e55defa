#pragma once

#include "dpges/composite.hpp"
#include "dpges/losses.hpp"
#include "dpges/params.hpp"

namespace dpges {

// Reverse pass over the fixed pipeline. Discrete selections recorded by the
// forward pass -- peel ordering, the transmittance interval each Gaussian
// fell into, depth-test outcomes, and the opaque clamp of the surfel kernel
// -- are treated as constants; all within-branch values are differentiated.
struct BackwardOptions {
  // The transmittance-mediated path from Gaussian weights back into surfel
  // geometry; switching it off reproduces the stopped-gradient ablation.
  bool transmittance_gradients = true;
  int threads = 1;
};

SceneGrads backward(const Scene& scene, const RenderResult<double>& tape,
                    const AdjointImages& adjoints, const BackwardOptions& opts = {});

}  // namespace dpges
