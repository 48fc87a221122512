#pragma once

#include <cstdint>
#include <vector>

#include "tgs/image.hpp"
#include "tgs/types.hpp"

namespace tgs {

// Forward-splatted frame. `owner` holds the global id of the strongest
// contributor per pixel (kInvalidId where nothing landed); the synthetic
// oracles use it as a surface-identity map.
struct RenderedFrame {
  Image color;                   // H x W x 3, in [0,1], black background
  std::vector<double> alpha;     // H x W accumulated opacity
  std::vector<uint8_t> coverage; // H x W, alpha > 0.5
  std::vector<uint32_t> owner;   // H x W

  int width() const { return color.width; }
  int height() const { return color.height; }
};

// EWA-style perspective splatting with front-to-back alpha compositing.
// Deterministic: Gaussians are depth-sorted with global-id tie-break, pixels
// are independent, so output bits do not depend on the thread count.
RenderedFrame splat(const GaussianSet& set, const Camera& cam);

// Analytic gradients of a scalar loss wrt every Gaussian attribute, given
// the upstream per-pixel dL/dcolor image. Culled Gaussians get zero grads.
GaussianGrads splat_backward(const GaussianSet& set, const Camera& cam,
                             const Image& dL_dcolor);

// Single-thread reference implementations; kept for correctness testing and
// the serial-vs-parallel benchmark.
RenderedFrame splat_serial(const GaussianSet& set, const Camera& cam);
GaussianGrads splat_backward_serial(const GaussianSet& set, const Camera& cam,
                                    const Image& dL_dcolor);

}  // namespace tgs
