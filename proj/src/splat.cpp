#include "tgs/splat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tgs/parallel.hpp"

namespace tgs {

namespace {

constexpr double kBlur = 0.3;          // low-pass floor on the 2D covariance, px^2
constexpr double kMinAlpha = 1.0 / 255.0;
constexpr double kMaxAlpha = 0.99;
constexpr double kStopTransmittance = 1e-4;
constexpr int kTile = 16;
constexpr int kRowsPerBlock = 8;       // backward accumulation granularity

// Real spherical harmonics constants, degree <= 3.
constexpr double kSH0 = 0.28209479177387814;
constexpr double kSH1 = 0.4886025119029199;
constexpr double kSH2[5] = {1.0925484305920792, -1.0925484305920792,
                            0.31539156525252005, -1.0925484305920792,
                            0.5462742152960396};
constexpr double kSH3[7] = {-0.5900435899266435, 2.890611442640554,
                            -0.4570457994644658, 0.3731763325901154,
                            -0.4570457994644658, 1.445305721320277,
                            -0.5900435899266435};

// Basis values for a unit direction, plus d(basis)/d(dir).
void sh_basis(int degree, Vec3 d, double* y, Vec3* dy) {
  double x = d.x, yy = d.y, z = d.z;
  y[0] = kSH0;
  dy[0] = {0, 0, 0};
  if (degree < 1) return;
  y[1] = -kSH1 * yy;  dy[1] = {0, -kSH1, 0};
  y[2] = kSH1 * z;    dy[2] = {0, 0, kSH1};
  y[3] = -kSH1 * x;   dy[3] = {-kSH1, 0, 0};
  if (degree < 2) return;
  y[4] = kSH2[0] * x * yy;                 dy[4] = {kSH2[0] * yy, kSH2[0] * x, 0};
  y[5] = kSH2[1] * yy * z;                 dy[5] = {0, kSH2[1] * z, kSH2[1] * yy};
  y[6] = kSH2[2] * (2 * z * z - x * x - yy * yy);
  dy[6] = {kSH2[2] * -2 * x, kSH2[2] * -2 * yy, kSH2[2] * 4 * z};
  y[7] = kSH2[3] * x * z;                  dy[7] = {kSH2[3] * z, 0, kSH2[3] * x};
  y[8] = kSH2[4] * (x * x - yy * yy);      dy[8] = {kSH2[4] * 2 * x, kSH2[4] * -2 * yy, 0};
  if (degree < 3) return;
  y[9] = kSH3[0] * yy * (3 * x * x - yy * yy);
  dy[9] = {kSH3[0] * 6 * x * yy, kSH3[0] * (3 * x * x - 3 * yy * yy), 0};
  y[10] = kSH3[1] * x * yy * z;
  dy[10] = {kSH3[1] * yy * z, kSH3[1] * x * z, kSH3[1] * x * yy};
  y[11] = kSH3[2] * yy * (4 * z * z - x * x - yy * yy);
  dy[11] = {kSH3[2] * -2 * x * yy, kSH3[2] * (4 * z * z - x * x - 3 * yy * yy),
            kSH3[2] * 8 * yy * z};
  y[12] = kSH3[3] * z * (2 * z * z - 3 * x * x - 3 * yy * yy);
  dy[12] = {kSH3[3] * -6 * x * z, kSH3[3] * -6 * yy * z,
            kSH3[3] * (6 * z * z - 3 * x * x - 3 * yy * yy)};
  y[13] = kSH3[4] * x * (4 * z * z - x * x - yy * yy);
  dy[13] = {kSH3[4] * (4 * z * z - 3 * x * x - yy * yy), kSH3[4] * -2 * x * yy,
            kSH3[4] * 8 * x * z};
  y[14] = kSH3[5] * z * (x * x - yy * yy);
  dy[14] = {kSH3[5] * 2 * x * z, kSH3[5] * -2 * yy * z, kSH3[5] * (x * x - yy * yy)};
  y[15] = kSH3[6] * x * (x * x - 3 * yy * yy);
  dy[15] = {kSH3[6] * (3 * x * x - 3 * yy * yy), kSH3[6] * -6 * x * yy, 0};
}

struct Splat2D {
  bool valid = false;
  double mean[2] = {0, 0};
  double conic[3] = {0, 0, 0};     // inverse covariance (a, b, c)
  double cov[3] = {0, 0, 0};       // XX, XY, YY including blur
  double depth = 0;
  double opacity = 0;              // activated
  double color[3] = {0, 0, 0};
  uint8_t clamp_lo[3] = {0, 0, 0};
  uint8_t clamp_hi[3] = {0, 0, 0};
  Vec3 t;                          // camera-frame position
  Vec3 dir;                        // view direction, unit, world frame
  double dir_len = 0;              // |p - camera center|
  int x0 = 0, x1 = 0, y0 = 0, y1 = 0;
};

struct SplatContext {
  std::vector<Splat2D> g;
  std::vector<uint32_t> order;                 // gaussian indices, front to back
  int tiles_x = 0, tiles_y = 0;
  std::vector<std::vector<uint32_t>> tiles;    // positions into `order`
};

SplatContext preprocess(const GaussianSet& set, const Camera& cam) {
  SplatContext ctx;
  std::size_t n = set.size();
  ctx.g.resize(n);
  int w = cam.width, h = cam.height;
  Vec3 cam_center = cam.center();
  int basis_n = sh_coeff_count(set.sh_degree);

  parallel_for(n, [&](std::size_t i) {
    Splat2D& s = ctx.g[i];
    Vec3 p = set.position(i);
    Vec3 t = cam.to_camera(p);
    if (t.z <= kNearPlane) return;  // culled

    double tz = t.z;
    double px = cam.fx * t.x / tz + cam.cx;
    double py = cam.fy * t.y / tz + cam.cy;

    // EWA: cov2d = J W Sigma3 W^T J^T, with J the perspective Jacobian.
    Mat3 R = quat_to_rotmat_normalized(set.rotation(i));
    Vec3 sc = set.scale(i);
    Mat3 S3;  // R S^2 R^T
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        S3.m[a][b] = R.m[a][0] * R.m[b][0] * sc.x * sc.x +
                     R.m[a][1] * R.m[b][1] * sc.y * sc.y +
                     R.m[a][2] * R.m[b][2] * sc.z * sc.z;
    double J[2][3] = {{cam.fx / tz, 0, -cam.fx * t.x / (tz * tz)},
                      {0, cam.fy / tz, -cam.fy * t.y / (tz * tz)}};
    double M[2][3];
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 3; ++b)
        M[a][b] = J[a][0] * cam.R.m[0][b] + J[a][1] * cam.R.m[1][b] +
                  J[a][2] * cam.R.m[2][b];
    double MV[2][3];
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 3; ++b)
        MV[a][b] = M[a][0] * S3.m[0][b] + M[a][1] * S3.m[1][b] + M[a][2] * S3.m[2][b];
    double XX = MV[0][0] * M[0][0] + MV[0][1] * M[0][1] + MV[0][2] * M[0][2] + kBlur;
    double XY = MV[0][0] * M[1][0] + MV[0][1] * M[1][1] + MV[0][2] * M[1][2];
    double YY = MV[1][0] * M[1][0] + MV[1][1] * M[1][1] + MV[1][2] * M[1][2] + kBlur;
    double det = XX * YY - XY * XY;
    if (det <= 0) return;

    double mid = 0.5 * (XX + YY);
    double lambda = mid + std::sqrt(std::max(0.1, mid * mid - det));
    double radius = std::ceil(3.0 * std::sqrt(lambda));
    int x0 = static_cast<int>(std::floor(px - radius));
    int x1 = static_cast<int>(std::ceil(px + radius)) + 1;
    int y0 = static_cast<int>(std::floor(py - radius));
    int y1 = static_cast<int>(std::ceil(py + radius)) + 1;
    x0 = std::max(0, x0); y0 = std::max(0, y0);
    x1 = std::min(w, x1); y1 = std::min(h, y1);
    if (x0 >= x1 || y0 >= y1) return;

    s.valid = true;
    s.mean[0] = px; s.mean[1] = py;
    s.cov[0] = XX; s.cov[1] = XY; s.cov[2] = YY;
    s.conic[0] = YY / det; s.conic[1] = -XY / det; s.conic[2] = XX / det;
    s.depth = tz;
    s.opacity = set.activated_opacity(i);
    s.t = t;
    s.x0 = x0; s.x1 = x1; s.y0 = y0; s.y1 = y1;

    Vec3 rel = p - cam_center;
    s.dir_len = norm(rel);
    s.dir = s.dir_len > 0 ? (1.0 / s.dir_len) * rel : Vec3{0, 0, 1};
    double basis[16];
    Vec3 dbasis[16];
    sh_basis(set.sh_degree, s.dir, basis, dbasis);
    for (int c = 0; c < 3; ++c) {
      double v = 0.5;
      for (int b = 0; b < basis_n; ++b) v += basis[b] * set.sh[i * 3 * basis_n + b * 3 + c];
      s.clamp_lo[c] = v < 0;
      s.clamp_hi[c] = v > 1;
      s.color[c] = std::clamp(v, 0.0, 1.0);
    }
  });

  ctx.order.reserve(n);
  for (uint32_t i = 0; i < n; ++i)
    if (ctx.g[i].valid) ctx.order.push_back(i);
  std::sort(ctx.order.begin(), ctx.order.end(), [&](uint32_t a, uint32_t b) {
    if (ctx.g[a].depth != ctx.g[b].depth) return ctx.g[a].depth < ctx.g[b].depth;
    return set.ids[a] < set.ids[b];
  });

  ctx.tiles_x = (w + kTile - 1) / kTile;
  ctx.tiles_y = (h + kTile - 1) / kTile;
  ctx.tiles.resize(static_cast<std::size_t>(ctx.tiles_x) * ctx.tiles_y);
  for (uint32_t pos = 0; pos < ctx.order.size(); ++pos) {
    const Splat2D& s = ctx.g[ctx.order[pos]];
    int tx0 = s.x0 / kTile, tx1 = (s.x1 - 1) / kTile;
    int ty0 = s.y0 / kTile, ty1 = (s.y1 - 1) / kTile;
    for (int ty = ty0; ty <= ty1; ++ty)
      for (int tx = tx0; tx <= tx1; ++tx)
        ctx.tiles[static_cast<std::size_t>(ty) * ctx.tiles_x + tx].push_back(pos);
  }
  return ctx;
}

// alpha of Gaussian s at pixel center (px, py); 0 when skipped.
inline double eval_alpha(const Splat2D& s, double px, double py) {
  double dx = px - s.mean[0], dy = py - s.mean[1];
  double power = -0.5 * (s.conic[0] * dx * dx + s.conic[2] * dy * dy) - s.conic[1] * dx * dy;
  if (power > 0) return 0;
  double alpha = std::min(kMaxAlpha, s.opacity * std::exp(power));
  return alpha < kMinAlpha ? 0 : alpha;
}

void render_row(const SplatContext& ctx, int y, int width, RenderedFrame& out) {
  int ty = y / kTile;
  for (int x = 0; x < width; ++x) {
    const auto& list = ctx.tiles[static_cast<std::size_t>(ty) * ctx.tiles_x + x / kTile];
    double px = x + 0.5, py = y + 0.5;
    double T = 1.0;
    double c[3] = {0, 0, 0};
    double best_w = 0;
    uint32_t best_id = kInvalidId;
    for (uint32_t pos : list) {
      const Splat2D& s = ctx.g[ctx.order[pos]];
      if (x < s.x0 || x >= s.x1 || y < s.y0 || y >= s.y1) continue;
      double alpha = eval_alpha(s, px, py);
      if (alpha <= 0) continue;
      double w = alpha * T;
      for (int ch = 0; ch < 3; ++ch) c[ch] += s.color[ch] * w;
      if (w > best_w) {
        best_w = w;
        best_id = ctx.order[pos];
      }
      T *= 1.0 - alpha;
      if (T < kStopTransmittance) break;
    }
    std::size_t p = static_cast<std::size_t>(y) * width + x;
    for (int ch = 0; ch < 3; ++ch) out.color.data[3 * p + ch] = c[ch];
    out.alpha[p] = 1.0 - T;
    out.coverage[p] = out.alpha[p] > 0.5;
    out.owner[p] = best_id;
  }
}

RenderedFrame splat_impl(const GaussianSet& set, const Camera& cam, bool parallel) {
  if (cam.width <= 0 || cam.height <= 0 || cam.fx <= 0 || cam.fy <= 0)
    throw invalid_input("splat: invalid camera");
  RenderedFrame out;
  out.color = Image(cam.width, cam.height, 3);
  out.alpha.assign(static_cast<std::size_t>(cam.width) * cam.height, 0.0);
  out.coverage.assign(out.alpha.size(), 0);
  out.owner.assign(out.alpha.size(), kInvalidId);
  SplatContext ctx = preprocess(set, cam);
  // owner ids must be global ids, not indices; remap after rendering rows
  if (parallel) {
    for_each_block(static_cast<std::size_t>(cam.height), 1,
                   [&](std::size_t, std::size_t y, std::size_t) {
                     render_row(ctx, static_cast<int>(y), cam.width, out);
                   });
  } else {
    for (int y = 0; y < cam.height; ++y) render_row(ctx, y, cam.width, out);
  }
  for (auto& id : out.owner)
    if (id != kInvalidId) id = set.ids[id];
  return out;
}

// Per-Gaussian accumulators from the pixel loop; everything downstream of
// these chains through per-Gaussian geometry only.
struct PixelGrads {
  // layout per gaussian: color[3], mean2d[2], conic[3], opacity_act[1]
  static constexpr int kStride = 9;
  std::vector<double> acc;
  void resize(std::size_t n) { acc.assign(n * kStride, 0.0); }
  double* at(std::size_t i) { return &acc[i * kStride]; }
};

void backward_row(const SplatContext& ctx, int y, int width, const Image& up,
                  PixelGrads& grads) {
  int ty = y / kTile;
  for (int x = 0; x < width; ++x) {
    const auto& list = ctx.tiles[static_cast<std::size_t>(ty) * ctx.tiles_x + x / kTile];
    double px = x + 0.5, py = y + 0.5;
    double upc[3] = {up.at(x, y, 0), up.at(x, y, 1), up.at(x, y, 2)};
    if (upc[0] == 0 && upc[1] == 0 && upc[2] == 0) continue;

    // forward replay to get the total composited color
    double T = 1.0;
    double total[3] = {0, 0, 0};
    for (uint32_t pos : list) {
      const Splat2D& s = ctx.g[ctx.order[pos]];
      if (x < s.x0 || x >= s.x1 || y < s.y0 || y >= s.y1) continue;
      double alpha = eval_alpha(s, px, py);
      if (alpha <= 0) continue;
      for (int ch = 0; ch < 3; ++ch) total[ch] += s.color[ch] * alpha * T;
      T *= 1.0 - alpha;
      if (T < kStopTransmittance) break;
    }

    T = 1.0;
    double prefix[3] = {0, 0, 0};
    for (uint32_t pos : list) {
      uint32_t gi = ctx.order[pos];
      const Splat2D& s = ctx.g[gi];
      if (x < s.x0 || x >= s.x1 || y < s.y0 || y >= s.y1) continue;
      double dx = px - s.mean[0], dy = py - s.mean[1];
      double power = -0.5 * (s.conic[0] * dx * dx + s.conic[2] * dy * dy) -
                     s.conic[1] * dx * dy;
      if (power > 0) continue;
      double G = std::exp(power);
      double raw_alpha = s.opacity * G;
      bool clamped = raw_alpha > kMaxAlpha;
      double alpha = clamped ? kMaxAlpha : raw_alpha;
      if (alpha < kMinAlpha) continue;

      double w = alpha * T;
      double* a = grads.at(gi);
      double dL_dalpha = 0;
      for (int ch = 0; ch < 3; ++ch) {
        a[ch] += w * upc[ch];
        prefix[ch] += s.color[ch] * w;
        double suffix = total[ch] - prefix[ch];
        dL_dalpha += upc[ch] * (T * s.color[ch] - suffix / (1.0 - alpha));
      }
      if (!clamped) {
        double dL_dpower = dL_dalpha * alpha;
        a[3] += dL_dpower * (s.conic[0] * dx + s.conic[1] * dy);
        a[4] += dL_dpower * (s.conic[1] * dx + s.conic[2] * dy);
        a[5] += dL_dpower * (-0.5 * dx * dx);
        a[6] += dL_dpower * (-dx * dy);
        a[7] += dL_dpower * (-0.5 * dy * dy);
        a[8] += dL_dalpha * G;
      }
      T *= 1.0 - alpha;
      if (T < kStopTransmittance) break;
    }
  }
}

// Chains the accumulated screen-space gradients back to Gaussian attributes.
void finalize_gradients(const GaussianSet& set, const Camera& cam,
                        const SplatContext& ctx, PixelGrads& acc, GaussianGrads& out) {
  int basis_n = sh_coeff_count(set.sh_degree);
  parallel_for(set.size(), [&](std::size_t i) {
    const Splat2D& s = ctx.g[i];
    if (!s.valid) return;
    const double* a = acc.at(i);

    // opacity logit
    double op = s.opacity;
    out.opacity[i] = a[8] * op * (1.0 - op);

    // sh and view-direction chain
    double basis[16];
    Vec3 dbasis[16];
    sh_basis(set.sh_degree, s.dir, basis, dbasis);
    Vec3 dL_ddir{0, 0, 0};
    for (int c = 0; c < 3; ++c) {
      if (s.clamp_lo[c] || s.clamp_hi[c]) continue;
      for (int b = 0; b < basis_n; ++b) {
        out.sh[i * 3 * basis_n + b * 3 + c] += basis[b] * a[c];
        dL_ddir += (a[c] * set.sh[i * 3 * basis_n + b * 3 + c]) * dbasis[b];
      }
    }
    // dir = rel/|rel|: project out the radial component
    Vec3 dL_drel = (1.0 / s.dir_len) * (dL_ddir - dot(dL_ddir, s.dir) * s.dir);
    Vec3 dL_dp = dL_drel;  // rel = p - cam_center

    // conic -> cov2d (dL/dSigma = -C G C with the full symmetric matrices)
    double C[2][2] = {{s.conic[0], s.conic[1]}, {s.conic[1], s.conic[2]}};
    double Gf[2][2] = {{a[5], 0.5 * a[6]}, {0.5 * a[6], a[7]}};
    double CG[2][2], G2[2][2];
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c)
        CG[r][c] = C[r][0] * Gf[0][c] + C[r][1] * Gf[1][c];
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c)
        G2[r][c] = -(CG[r][0] * C[0][c] + CG[r][1] * C[1][c]);

    // cov2d = M S3 M^T with M = J W
    Mat3 R = quat_to_rotmat_normalized(set.rotation(i));
    Vec3 sc = set.scale(i);
    Mat3 S3;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        S3.m[r][c] = R.m[r][0] * R.m[c][0] * sc.x * sc.x +
                     R.m[r][1] * R.m[c][1] * sc.y * sc.y +
                     R.m[r][2] * R.m[c][2] * sc.z * sc.z;
    double tz = s.t.z;
    double J[2][3] = {{cam.fx / tz, 0, -cam.fx * s.t.x / (tz * tz)},
                      {0, cam.fy / tz, -cam.fy * s.t.y / (tz * tz)}};
    double M[2][3];
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 3; ++c)
        M[r][c] = J[r][0] * cam.R.m[0][c] + J[r][1] * cam.R.m[1][c] +
                  J[r][2] * cam.R.m[2][c];

    // dL/dS3 = M^T G2 M
    double G3[3][3];
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        G3[r][c] = M[0][r] * (G2[0][0] * M[0][c] + G2[0][1] * M[1][c]) +
                   M[1][r] * (G2[1][0] * M[0][c] + G2[1][1] * M[1][c]);

    // dL/dM = 2 G2 M S3
    double MS[2][3];
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 3; ++c)
        MS[r][c] = M[r][0] * S3.m[0][c] + M[r][1] * S3.m[1][c] + M[r][2] * S3.m[2][c];
    double dM[2][3];
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 3; ++c)
        dM[r][c] = 2.0 * (G2[r][0] * MS[0][c] + G2[r][1] * MS[1][c]);

    // dL/dJ = dL/dM W^T
    double dJ[2][3];
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 3; ++c)
        dJ[r][c] = dM[r][0] * cam.R.m[c][0] + dM[r][1] * cam.R.m[c][1] +
                   dM[r][2] * cam.R.m[c][2];

    // mean2d -> camera-frame point (dmean/dt = J), plus J's own dependence
    Vec3 dL_dt{
        J[0][0] * a[3] + J[1][0] * a[4],
        J[0][1] * a[3] + J[1][1] * a[4],
        J[0][2] * a[3] + J[1][2] * a[4]};
    double fx = cam.fx, fy = cam.fy;
    double tz2 = tz * tz, tz3 = tz2 * tz;
    dL_dt.x += dJ[0][2] * (-fx / tz2);
    dL_dt.y += dJ[1][2] * (-fy / tz2);
    dL_dt.z += dJ[0][0] * (-fx / tz2) + dJ[0][2] * (2 * fx * s.t.x / tz3) +
               dJ[1][1] * (-fy / tz2) + dJ[1][2] * (2 * fy * s.t.y / tz3);
    dL_dp += cam.R.transposed_mul(dL_dt);
    out.pos[3 * i] += dL_dp.x;
    out.pos[3 * i + 1] += dL_dp.y;
    out.pos[3 * i + 2] += dL_dp.z;

    // dL/dR = 2 G3 R S^2, dL/ds_a = 2 s_a r_a^T G3 r_a
    double s2[3] = {sc.x * sc.x, sc.y * sc.y, sc.z * sc.z};
    double dR[3][3];
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        dR[r][c] = 2.0 * (G3[r][0] * R.m[0][c] + G3[r][1] * R.m[1][c] +
                          G3[r][2] * R.m[2][c]) * s2[c];
    for (int axis = 0; axis < 3; ++axis) {
      double r0 = R.m[0][axis], r1 = R.m[1][axis], r2 = R.m[2][axis];
      double quad = r0 * (G3[0][0] * r0 + G3[0][1] * r1 + G3[0][2] * r2) +
                    r1 * (G3[1][0] * r0 + G3[1][1] * r1 + G3[1][2] * r2) +
                    r2 * (G3[2][0] * r0 + G3[2][1] * r1 + G3[2][2] * r2);
      double s_a = axis == 0 ? sc.x : (axis == 1 ? sc.y : sc.z);
      out.log_scale[3 * i + axis] += 2.0 * s_a * quad * s_a;  // d(exp)/dlog = s
    }

    // dL/dq through R(q/|q|)
    Quat q = set.rotation(i);
    double qn = qnorm(q);
    Quat u{q.w / qn, q.x / qn, q.y / qn, q.z / qn};
    double w = u.w, x = u.x, yq = u.y, z = u.z;
    double dRdq[4][3][3] = {
        {{0, -2 * z, 2 * yq}, {2 * z, 0, -2 * x}, {-2 * yq, 2 * x, 0}},
        {{0, 2 * yq, 2 * z}, {2 * yq, -4 * x, -2 * w}, {2 * z, 2 * w, -4 * x}},
        {{-4 * yq, 2 * x, 2 * w}, {2 * x, 0, 2 * z}, {-2 * w, 2 * z, -4 * yq}},
        {{-4 * z, -2 * w, 2 * x}, {2 * w, -4 * z, 2 * yq}, {2 * x, 2 * yq, 0}}};
    double gu[4];
    for (int k = 0; k < 4; ++k) {
      double acc_k = 0;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) acc_k += dR[r][c] * dRdq[k][r][c];
      gu[k] = acc_k;
    }
    double udot = gu[0] * w + gu[1] * x + gu[2] * yq + gu[3] * z;
    out.rot[4 * i + 0] += (gu[0] - udot * w) / qn;
    out.rot[4 * i + 1] += (gu[1] - udot * x) / qn;
    out.rot[4 * i + 2] += (gu[2] - udot * yq) / qn;
    out.rot[4 * i + 3] += (gu[3] - udot * z) / qn;
  });
}

GaussianGrads splat_backward_impl(const GaussianSet& set, const Camera& cam,
                                  const Image& up, bool parallel) {
  if (up.width != cam.width || up.height != cam.height || up.channels != 3)
    throw invalid_input("splat_backward: upstream image shape mismatch");
  GaussianGrads out;
  out.resize_like(set);
  SplatContext ctx = preprocess(set, cam);

  std::size_t n = set.size();
  if (parallel) {
    // fixed row blocks with private accumulators, merged in block order
    std::size_t nblocks = block_count(static_cast<std::size_t>(cam.height), kRowsPerBlock);
    std::vector<PixelGrads> partial(nblocks);
    for_each_block(static_cast<std::size_t>(cam.height), kRowsPerBlock,
                   [&](std::size_t b, std::size_t ylo, std::size_t yhi) {
                     partial[b].resize(n);
                     for (std::size_t y = ylo; y < yhi; ++y)
                       backward_row(ctx, static_cast<int>(y), cam.width, partial[b]);
                   });
    PixelGrads total;
    total.resize(n);
    for (const auto& pb : partial)
      for (std::size_t k = 0; k < total.acc.size(); ++k) total.acc[k] += pb.acc[k];
    finalize_gradients(set, cam, ctx, total, out);
  } else {
    PixelGrads total;
    total.resize(n);
    for (int y = 0; y < cam.height; ++y) backward_row(ctx, y, cam.width, total);
    finalize_gradients(set, cam, ctx, total, out);
  }
  return out;
}

}  // namespace

RenderedFrame splat(const GaussianSet& set, const Camera& cam) {
  return splat_impl(set, cam, true);
}

RenderedFrame splat_serial(const GaussianSet& set, const Camera& cam) {
  return splat_impl(set, cam, false);
}

GaussianGrads splat_backward(const GaussianSet& set, const Camera& cam,
                             const Image& dL_dcolor) {
  return splat_backward_impl(set, cam, dL_dcolor, true);
}

GaussianGrads splat_backward_serial(const GaussianSet& set, const Camera& cam,
                                    const Image& dL_dcolor) {
  return splat_backward_impl(set, cam, dL_dcolor, false);
}

}  // namespace tgs
