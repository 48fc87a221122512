#pragma once

#include <vector>

#include "tgs/appearance.hpp"
#include "tgs/image.hpp"
#include "tgs/types.hpp"

namespace tgs {

// Loss weights; defaults are the published values (motion stage). The
// appearance stage overrides lambda_smooth to 0.0002.
struct LossWeights {
  double lambda_lap = 2.0;
  double lambda_iso = 0.001;
  double lambda_size = 1.0;
  double lambda_smooth = 0.05;
  double lambda_temporal = 0.01;
  double lambda_dssim = 0.2;
};

// Mean squared distance of each position to the (stop-gradient) centroid of
// its graph neighbors. Only p_i receives gradient; the centroid is constant.
double laplacian_energy(const GaussianSet& set, const DeformGraph& graph,
                        std::vector<double>* grad_pos);

// Mean absolute deviation of activated per-axis scales from their mean.
double iso_energy(const GaussianSet& set, std::vector<double>* grad_log_scale);

// Mean squared hinge on the largest activated scale above s_max.
double size_energy(const GaussianSet& set, double s_max,
                   std::vector<double>* grad_log_scale);

// ARAP rigidity between consecutive frames:
//   sum_i sum_k w_ik ||R(q_i,t q_i,t-1^-1)(p_k,t-1 - p_i,t-1) - (p_k,t - p_i,t)||^2
// Graph and weights are frozen at t-1; gradients land on current positions
// and rotations only.
double arap_energy(const GaussianSet& prev, const GaussianSet& curr,
                   const DeformGraph& graph, GaussianGrads* grads);

// ARAP restricted to the anchor->appearance star graph with unit weights.
// Gradients land on current appearance positions.
double anchor_rigidity(const GaussianSet& anchors_prev, const GaussianSet& anchors_curr,
                       const GaussianSet& apps_prev, const GaussianSet& apps_curr,
                       const std::vector<AnchorLink>& links,
                       std::vector<double>* grad_app_pos);

// lambda * sum of squared frame-to-frame differences of sh, opacity logit and
// log-scale, over ids present in both frames. Previous values are constant.
double temporal_attr_reg(const GaussianSet& curr, const GaussianSet& prev,
                         double lambda, GaussianGrads* grads);

// (1-lambda_dssim) * L1 + lambda_dssim * (1 - SSIM), with the per-pixel
// upstream gradient for splat_backward. SSIM uses an 11-tap Gaussian window
// (sigma 1.5) with zero padding.
double color_loss(const Image& rendered, const Image& observed, double lambda_dssim,
                  Image* dL_drendered);

// Mean SSIM of two images (same window as color_loss).
double ssim_mean(const Image& a, const Image& b);

}  // namespace tgs
