#include "tgs/energy.hpp"

#include <algorithm>
#include <cmath>

#include "tgs/parallel.hpp"

namespace tgs {

double laplacian_energy(const GaussianSet& set, const DeformGraph& graph,
                        std::vector<double>* grad_pos) {
  std::size_t n = set.size();
  if (graph.size() != n) throw invalid_input("laplacian_energy: graph/set size mismatch");
  if (grad_pos) grad_pos->assign(3 * n, 0.0);
  if (n == 0) return 0.0;
  double total = reduce_sum(n, [&](std::size_t i) {
    const auto& nb = graph.neighbors[i];
    if (nb.empty()) return 0.0;
    Vec3 centroid{0, 0, 0};
    for (uint32_t j : nb) centroid += set.position(j);
    centroid = (1.0 / nb.size()) * centroid;
    Vec3 d = set.position(i) - centroid;
    if (grad_pos) {
      (*grad_pos)[3 * i] = 2.0 / n * d.x;
      (*grad_pos)[3 * i + 1] = 2.0 / n * d.y;
      (*grad_pos)[3 * i + 2] = 2.0 / n * d.z;
    }
    return norm2(d);
  });
  return total / n;
}

double iso_energy(const GaussianSet& set, std::vector<double>* grad_log_scale) {
  std::size_t n = set.size();
  if (grad_log_scale) grad_log_scale->assign(3 * n, 0.0);
  if (n == 0) return 0.0;
  double total = reduce_sum(n, [&](std::size_t i) {
    Vec3 s = set.scale(i);
    double sv[3] = {s.x, s.y, s.z};
    double mean = (sv[0] + sv[1] + sv[2]) / 3.0;
    double e = 0, sign_sum = 0, sign_v[3];
    for (int a = 0; a < 3; ++a) {
      double d = sv[a] - mean;
      e += std::abs(d);
      sign_v[a] = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
      sign_sum += sign_v[a];
    }
    if (grad_log_scale)
      for (int a = 0; a < 3; ++a)
        (*grad_log_scale)[3 * i + a] = (sign_v[a] - sign_sum / 3.0) * sv[a] / n;
    return e;
  });
  return total / n;
}

double size_energy(const GaussianSet& set, double s_max,
                   std::vector<double>* grad_log_scale) {
  std::size_t n = set.size();
  if (grad_log_scale) grad_log_scale->assign(3 * n, 0.0);
  if (n == 0) return 0.0;
  double total = reduce_sum(n, [&](std::size_t i) {
    Vec3 s = set.scale(i);
    double sv[3] = {s.x, s.y, s.z};
    int arg = 0;
    for (int a = 1; a < 3; ++a)
      if (sv[a] > sv[arg]) arg = a;
    double excess = sv[arg] - s_max;
    if (excess <= 0) return 0.0;
    if (grad_log_scale)
      (*grad_log_scale)[3 * i + arg] = 2.0 * excess * sv[arg] / n;
    return excess * excess;
  });
  return total / n;
}

namespace {

// d(R(q/|q|))/dq contracted with a 3x3 gradient, returned on the raw 4-vector.
void rotmat_grad_to_quat(Quat q, const double dR[3][3], double out[4]) {
  double qn = qnorm(q);
  double w = q.w / qn, x = q.x / qn, y = q.y / qn, z = q.z / qn;
  double dRdq[4][3][3] = {
      {{0, -2 * z, 2 * y}, {2 * z, 0, -2 * x}, {-2 * y, 2 * x, 0}},
      {{0, 2 * y, 2 * z}, {2 * y, -4 * x, -2 * w}, {2 * z, 2 * w, -4 * x}},
      {{-4 * y, 2 * x, 2 * w}, {2 * x, 0, 2 * z}, {-2 * w, 2 * z, -4 * y}},
      {{-4 * z, -2 * w, 2 * x}, {2 * w, -4 * z, 2 * y}, {2 * x, 2 * y, 0}}};
  double gu[4];
  for (int k = 0; k < 4; ++k) {
    double acc = 0;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) acc += dR[r][c] * dRdq[k][r][c];
    gu[k] = acc;
  }
  double udot = gu[0] * w + gu[1] * x + gu[2] * y + gu[3] * z;
  out[0] = (gu[0] - udot * w) / qn;
  out[1] = (gu[1] - udot * x) / qn;
  out[2] = (gu[2] - udot * y) / qn;
  out[3] = (gu[3] - udot * z) / qn;
}

// One ARAP edge: w * ||R(rel(q_curr)) d_prev - d_curr||^2 where
// rel(q) = (q/|q|) * conj(q_prev). Accumulates gradients for the current
// node position, neighbor position and node rotation.
double arap_edge(Quat q_curr, Quat q_prev, Vec3 d_prev, Vec3 d_curr, double w,
                 Vec3* g_pi, Vec3* g_pk, double g_q[4]) {
  Quat rel = normalized(q_curr) * conj(q_prev);
  Mat3 R = quat_to_rotmat(normalized(rel));
  Vec3 r = R * d_prev - d_curr;
  double e = w * norm2(r);
  if (g_pi) {
    Vec3 g = 2.0 * w * r;
    // d_curr = p_k - p_i
    *g_pi += g;
    *g_pk -= g;
    // dL/dR = 2w r d_prev^T, then through rel = (q/|q|) * conj(q_prev)
    double dR[3][3];
    double rv[3] = {r.x, r.y, r.z};
    double dv[3] = {d_prev.x, d_prev.y, d_prev.z};
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) dR[a][b] = 2.0 * w * rv[a] * dv[b];
    // gradient wrt rel's raw components (rel has unit norm already, but the
    // projection inside rotmat_grad_to_quat is harmless there)
    double g_rel[4];
    rotmat_grad_to_quat(rel, dR, g_rel);
    // rel = u * conj(q_prev) with u = q_curr/|q_curr|; right-multiplication is
    // linear, so pull g_rel back through it, then through the normalization.
    Quat p = conj(q_prev);
    // rel components as functions of u = (uw, ux, uy, uz):
    // rel.w = uw*p.w - ux*p.x - uy*p.y - uz*p.z, etc. (quaternion product u*p)
    double gu[4];
    gu[0] = g_rel[0] * p.w + g_rel[1] * p.x + g_rel[2] * p.y + g_rel[3] * p.z;
    gu[1] = -g_rel[0] * p.x + g_rel[1] * p.w - g_rel[2] * p.z + g_rel[3] * p.y;
    gu[2] = -g_rel[0] * p.y + g_rel[1] * p.z + g_rel[2] * p.w - g_rel[3] * p.x;
    gu[3] = -g_rel[0] * p.z - g_rel[1] * p.y + g_rel[2] * p.x + g_rel[3] * p.w;
    double qn = qnorm(q_curr);
    Quat u = normalized(q_curr);
    double udot = gu[0] * u.w + gu[1] * u.x + gu[2] * u.y + gu[3] * u.z;
    g_q[0] += (gu[0] - udot * u.w) / qn;
    g_q[1] += (gu[1] - udot * u.x) / qn;
    g_q[2] += (gu[2] - udot * u.y) / qn;
    g_q[3] += (gu[3] - udot * u.z) / qn;
  }
  return e;
}

}  // namespace

double arap_energy(const GaussianSet& prev, const GaussianSet& curr,
                   const DeformGraph& graph, GaussianGrads* grads) {
  std::size_t n = curr.size();
  if (prev.size() != n || graph.size() != n)
    throw invalid_input("arap_energy: prev/curr/graph size mismatch");
  for (std::size_t i = 0; i < n; ++i)
    if (prev.ids[i] != curr.ids[i])
      throw invalid_input("arap_energy: index misalignment between frames");

  if (grads) grads->resize_like(curr);

  // Per-block gradient staging keeps the reduction order fixed: node i's own
  // terms are written directly, neighbor contributions are merged in block
  // order afterwards.
  std::size_t block = kDefaultBlock;
  std::size_t nb = block_count(n, block);
  std::vector<std::vector<std::pair<uint32_t, Vec3>>> neighbor_grads(
      grads ? nb : 0);

  std::vector<double> partial(nb, 0.0);
  for_each_block(n, block, [&](std::size_t b, std::size_t lo, std::size_t hi) {
    double acc = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      Quat q_prev = prev.rotation(i);
      Quat q_curr = curr.rotation(i);
      Vec3 pi_prev = prev.position(i), pi_curr = curr.position(i);
      Vec3 g_pi{0, 0, 0};
      double g_q[4] = {0, 0, 0, 0};
      for (std::size_t e = 0; e < graph.neighbors[i].size(); ++e) {
        uint32_t k = graph.neighbors[i][e];
        double w = graph.weights[i][e];
        Vec3 d_prev = prev.position(k) - pi_prev;
        Vec3 d_curr = curr.position(k) - pi_curr;
        Vec3 g_pk{0, 0, 0};
        acc += arap_edge(q_curr, q_prev, d_prev, d_curr, w,
                         grads ? &g_pi : nullptr, &g_pk, g_q);
        if (grads) neighbor_grads[b].emplace_back(k, g_pk);
      }
      if (grads) {
        grads->pos[3 * i] += g_pi.x;
        grads->pos[3 * i + 1] += g_pi.y;
        grads->pos[3 * i + 2] += g_pi.z;
        for (int c = 0; c < 4; ++c) grads->rot[4 * i + c] += g_q[c];
      }
    }
    partial[b] = acc;
  });

  if (grads)
    for (const auto& blockg : neighbor_grads)
      for (const auto& [k, g] : blockg) {
        grads->pos[3 * k] += g.x;
        grads->pos[3 * k + 1] += g.y;
        grads->pos[3 * k + 2] += g.z;
      }

  double total = 0;
  for (double p : partial) total += p;
  return total;
}

double anchor_rigidity(const GaussianSet& anchors_prev, const GaussianSet& anchors_curr,
                       const GaussianSet& apps_prev, const GaussianSet& apps_curr,
                       const std::vector<AnchorLink>& links,
                       std::vector<double>* grad_app_pos) {
  if (grad_app_pos) grad_app_pos->assign(3 * apps_curr.size(), 0.0);
  double total = 0;
  for (const auto& link : links) {
    std::size_t ai_curr = anchors_curr.index_of(link.anchor_id);
    std::size_t ai_prev = anchors_prev.index_of(link.anchor_id);
    std::size_t xi_curr = apps_curr.index_of(link.appearance_id);
    std::size_t xi_prev = apps_prev.index_of(link.appearance_id);
    if (xi_curr == GaussianSet::npos) continue;  // not active this frame
    if (ai_curr == GaussianSet::npos)
      throw invalid_input("anchor_rigidity: dangling link to anchor " +
                          std::to_string(link.anchor_id));
    if (ai_prev == GaussianSet::npos || xi_prev == GaussianSet::npos)
      continue;  // first frame of this pair's life
    Quat rel = anchors_curr.rotation(ai_curr) * conj(anchors_prev.rotation(ai_prev));
    Mat3 R = quat_to_rotmat(normalized(rel));
    Vec3 d_prev = apps_prev.position(xi_prev) - anchors_prev.position(ai_prev);
    Vec3 d_curr = apps_curr.position(xi_curr) - anchors_curr.position(ai_curr);
    Vec3 r = R * d_prev - d_curr;
    total += norm2(r);
    if (grad_app_pos) {
      // anchors are frozen here; only d_curr depends on the appearance position
      (*grad_app_pos)[3 * xi_curr] += -2.0 * r.x;
      (*grad_app_pos)[3 * xi_curr + 1] += -2.0 * r.y;
      (*grad_app_pos)[3 * xi_curr + 2] += -2.0 * r.z;
    }
  }
  return total;
}

double temporal_attr_reg(const GaussianSet& curr, const GaussianSet& prev,
                         double lambda, GaussianGrads* grads) {
  if (grads) grads->resize_like(curr);
  int shp = curr.sh_per_gaussian();
  if (prev.sh_per_gaussian() != shp)
    throw invalid_input("temporal_attr_reg: sh degree mismatch");
  double total = 0;
  std::size_t pi = 0;
  for (std::size_t ci = 0; ci < curr.size(); ++ci) {
    while (pi < prev.size() && prev.ids[pi] < curr.ids[ci]) ++pi;
    if (pi >= prev.size() || prev.ids[pi] != curr.ids[ci]) continue;
    double d_op = curr.opacity[ci] - prev.opacity[pi];
    total += d_op * d_op;
    if (grads) grads->opacity[ci] += 2.0 * lambda * d_op;
    for (int a = 0; a < 3; ++a) {
      double d = curr.log_scale[3 * ci + a] - prev.log_scale[3 * pi + a];
      total += d * d;
      if (grads) grads->log_scale[3 * ci + a] += 2.0 * lambda * d;
    }
    for (int s = 0; s < shp; ++s) {
      double d = curr.sh[static_cast<std::size_t>(shp) * ci + s] -
                 prev.sh[static_cast<std::size_t>(shp) * pi + s];
      total += d * d;
      if (grads) grads->sh[static_cast<std::size_t>(shp) * ci + s] += 2.0 * lambda * d;
    }
  }
  return lambda * total;
}

// ------------------------------------------------------------- ssim -------

namespace {

constexpr int kSsimRadius = 5;  // 11-tap window
constexpr double kSsimC1 = 0.01 * 0.01;
constexpr double kSsimC2 = 0.03 * 0.03;

const std::vector<double>& ssim_kernel() {
  static const std::vector<double> k = [] {
    std::vector<double> v( 2 * kSsimRadius + 1);
    double sigma = 1.5, sum = 0;
    for (int i = -kSsimRadius; i <= kSsimRadius; ++i) {
      v[i + kSsimRadius] = std::exp(-0.5 * i * i / (sigma * sigma));
      sum += v[i + kSsimRadius];
    }
    for (double& x : v) x /= sum;
    return v;
  }();
  return k;
}

// Separable Gaussian blur with zero padding, channel-interleaved images.
Image blur(const Image& img) {
  const auto& k = ssim_kernel();
  Image tmp(img.width, img.height, img.channels), out = tmp;
  int w = img.width, h = img.height, C = img.channels;
  parallel_for(static_cast<std::size_t>(h), [&](std::size_t yy) {
    int y = static_cast<int>(yy);
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < C; ++c) {
        double s = 0;
        for (int o = -kSsimRadius; o <= kSsimRadius; ++o) {
          int xo = x + o;
          if (xo < 0 || xo >= w) continue;
          s += k[o + kSsimRadius] * img.at(xo, y, c);
        }
        tmp.at(x, y, c) = s;
      }
  });
  parallel_for(static_cast<std::size_t>(h), [&](std::size_t yy) {
    int y = static_cast<int>(yy);
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < C; ++c) {
        double s = 0;
        for (int o = -kSsimRadius; o <= kSsimRadius; ++o) {
          int yo = y + o;
          if (yo < 0 || yo >= h) continue;
          s += k[o + kSsimRadius] * tmp.at(x, yo, c);
        }
        out.at(x, y, c) = s;
      }
  });
  return out;
}

Image hadamard(const Image& a, const Image& b) {
  Image out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.data[i];
  return out;
}

struct SsimFields {
  Image mu_a, mu_b, g_a2, g_b2, g_ab;
  double mean = 0;
};

SsimFields ssim_forward(const Image& a, const Image& b) {
  SsimFields f{blur(a), blur(b), blur(hadamard(a, a)), blur(hadamard(b, b)),
               blur(hadamard(a, b)), 0};
  double total = reduce_sum(a.data.size(), [&](std::size_t i) {
    double ma = f.mu_a.data[i], mb = f.mu_b.data[i];
    double va = f.g_a2.data[i] - ma * ma, vb = f.g_b2.data[i] - mb * mb;
    double cab = f.g_ab.data[i] - ma * mb;
    double A1 = 2 * ma * mb + kSsimC1, A2 = 2 * cab + kSsimC2;
    double B1 = ma * ma + mb * mb + kSsimC1, B2 = va + vb + kSsimC2;
    return (A1 * A2) / (B1 * B2);
  });
  f.mean = total / a.data.size();
  return f;
}

}  // namespace

double ssim_mean(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw invalid_input("ssim: resolution mismatch");
  return ssim_forward(a, b).mean;
}

double color_loss(const Image& rendered, const Image& observed, double lambda_dssim,
                  Image* dL_drendered) {
  if (!rendered.same_shape(observed))
    throw invalid_input("color_loss: resolution mismatch");
  std::size_t n = rendered.data.size();
  double inv_n = 1.0 / n;

  double l1 = reduce_sum(n, [&](std::size_t i) {
                return std::abs(rendered.data[i] - observed.data[i]);
              }) *
              inv_n;

  if (dL_drendered) {
    *dL_drendered = Image(rendered.width, rendered.height, rendered.channels);
    for (std::size_t i = 0; i < n; ++i) {
      double d = rendered.data[i] - observed.data[i];
      dL_drendered->data[i] =
          (1.0 - lambda_dssim) * inv_n * (d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0));
    }
  }

  if (lambda_dssim == 0.0) return (1.0 - lambda_dssim) * l1;

  SsimFields f = ssim_forward(rendered, observed);
  if (dL_drendered) {
    Image F1(rendered.width, rendered.height, rendered.channels);
    Image F2 = F1, F3 = F1;
    parallel_for(n, [&](std::size_t i) {
      double ma = f.mu_a.data[i], mb = f.mu_b.data[i];
      double va = f.g_a2.data[i] - ma * ma, vb = f.g_b2.data[i] - mb * mb;
      double cab = f.g_ab.data[i] - ma * mb;
      double A1 = 2 * ma * mb + kSsimC1, A2 = 2 * cab + kSsimC2;
      double B1 = ma * ma + mb * mb + kSsimC1, B2 = va + vb + kSsimC2;
      double S = (A1 * A2) / (B1 * B2);
      double dA1 = A2 / (B1 * B2);
      double dA2 = A1 / (B1 * B2);
      double dB1 = -S / B1;
      double dB2 = -S / B2;
      double dcab = 2 * dA2;
      F1.data[i] = dA1 * 2 * mb + dB1 * 2 * ma + dB2 * (-2 * ma) + dcab * (-mb);
      F2.data[i] = dB2;
      F3.data[i] = dcab;
    });
    Image bF1 = blur(F1), bF2 = blur(F2), bF3 = blur(F3);
    // dmSSIM/da = (1/n)(G*F1 + 2a (G*F2) + b (G*F3)); loss term is -lambda * that
    for (std::size_t i = 0; i < n; ++i)
      dL_drendered->data[i] -=
          lambda_dssim * inv_n *
          (bF1.data[i] + 2 * rendered.data[i] * bF2.data[i] +
           observed.data[i] * bF3.data[i]);
  }
  return (1.0 - lambda_dssim) * l1 + lambda_dssim * (1.0 - f.mean);
}

}  // namespace tgs
