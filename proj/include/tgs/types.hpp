#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tgs {

// Error taxonomy. The CLI maps these to exit codes (config 2, stage order 3,
// divergence 4); everything else surfaces as a generic failure.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct stage_order_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct divergence_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct format_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct invalid_input : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- math ----

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, Vec3 v) { return {s * v.x, s * v.y, s * v.z}; }
inline Vec3 operator*(Vec3 v, double s) { return s * v; }
inline Vec3& operator+=(Vec3& a, Vec3 b) { a = a + b; return a; }
inline Vec3& operator-=(Vec3& a, Vec3 b) { a = a - b; return a; }
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm2(Vec3 v) { return dot(v, v); }
inline double norm(Vec3 v) { return std::sqrt(norm2(v)); }
inline Vec3 normalized(Vec3 v) {
  double n = norm(v);
  return n > 0 ? (1.0 / n) * v : Vec3{0, 0, 0};
}

// Unit quaternion, scalar-first (w, x, y, z).
struct Quat {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;
};

inline Quat operator*(Quat a, Quat b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}
// Conjugate; equals the inverse for unit quaternions.
inline Quat conj(Quat q) { return {q.w, -q.x, -q.y, -q.z}; }
inline double qnorm(Quat q) {
  return std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
}
inline Quat normalized(Quat q) {
  double n = qnorm(q);
  if (n == 0) return {1, 0, 0, 0};
  return {q.w / n, q.x / n, q.y / n, q.z / n};
}

// Row-major 3x3 matrix.
struct Mat3 {
  double m[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

  Vec3 operator*(Vec3 v) const {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
  }
  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        r.m[i][j] = 0;
        for (int k = 0; k < 3; ++k) r.m[i][j] += m[i][k] * o.m[k][j];
      }
    return r;
  }
  Mat3 transposed() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
    return r;
  }
  Vec3 transposed_mul(Vec3 v) const {
    return {m[0][0] * v.x + m[1][0] * v.y + m[2][0] * v.z,
            m[0][1] * v.x + m[1][1] * v.y + m[2][1] * v.z,
            m[0][2] * v.x + m[1][2] * v.y + m[2][2] * v.z};
  }
};

// Converts a unit quaternion to a rotation matrix. Inputs must be within
// 1e-6 of unit norm; non-finite components are rejected.
Mat3 quat_to_rotmat(Quat q);

// R(q / |q|) for arbitrary nonzero q; used by energies so gradients on the
// raw 4-vector stay consistent with finite differences.
Mat3 quat_to_rotmat_normalized(Quat q);

// Rotate v by unit quaternion q without forming the matrix.
inline Vec3 rotate(Quat q, Vec3 v) {
  Vec3 t = 2.0 * cross({q.x, q.y, q.z}, v);
  return v + q.w * t + cross({q.x, q.y, q.z}, t);
}

inline Quat axis_angle(Vec3 axis, double angle) {
  Vec3 u = normalized(axis);
  double s = std::sin(angle / 2);
  return {std::cos(angle / 2), s * u.x, s * u.y, s * u.z};
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

// ------------------------------------------------------------- cameras ----

// Pinhole camera. Extrinsics map world to camera frame: x_cam = R x + t.
struct Camera {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  Mat3 R;
  Vec3 t;
  int width = 0, height = 0;

  Vec3 to_camera(Vec3 p) const { return R * p + t; }
  Vec3 center() const { return -1.0 * R.transposed_mul(t); }  // camera origin in world
};

constexpr double kNearPlane = 1e-4;

struct Projection {
  double px = 0, py = 0;
  double depth = 0;
  bool in_front = false;  // depth > near plane
};

Projection project(const Camera& cam, Vec3 p);
// Inverse of project at a known camera-frame depth.
Vec3 unproject(const Camera& cam, double px, double py, double depth);

// ------------------------------------------------------- gaussian sets ----

constexpr uint32_t kInvalidId = 0xffffffffu;

inline int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

// Struct-of-arrays Gaussian collection. Entries are kept in ascending
// global-id order; packing and serialization depend on that order.
//
// Layouts per entry:
//   pos        3  (x, y, z) world meters
//   rot        4  (w, x, y, z) unit quaternion
//   log_scale  3  per-axis log meters
//   opacity    1  logit; sigmoid-activated at render
//   sh         3*(degree+1)^2, band-major: sh[band*3 + channel]
struct GaussianSet {
  int sh_degree = 3;
  std::vector<uint32_t> ids;
  std::vector<double> pos;
  std::vector<double> rot;
  std::vector<double> log_scale;
  std::vector<double> opacity;
  std::vector<double> sh;

  std::size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
  int sh_per_gaussian() const { return 3 * sh_coeff_count(sh_degree); }

  Vec3 position(std::size_t i) const { return {pos[3 * i], pos[3 * i + 1], pos[3 * i + 2]}; }
  void set_position(std::size_t i, Vec3 p) {
    pos[3 * i] = p.x; pos[3 * i + 1] = p.y; pos[3 * i + 2] = p.z;
  }
  Quat rotation(std::size_t i) const {
    return {rot[4 * i], rot[4 * i + 1], rot[4 * i + 2], rot[4 * i + 3]};
  }
  void set_rotation(std::size_t i, Quat q) {
    rot[4 * i] = q.w; rot[4 * i + 1] = q.x; rot[4 * i + 2] = q.y; rot[4 * i + 3] = q.z;
  }
  Vec3 scale(std::size_t i) const {  // activated (exp) scales
    return {std::exp(log_scale[3 * i]), std::exp(log_scale[3 * i + 1]),
            std::exp(log_scale[3 * i + 2])};
  }
  double activated_opacity(std::size_t i) const { return sigmoid(opacity[i]); }

  void resize(std::size_t n) {
    ids.resize(n, kInvalidId);
    pos.resize(3 * n, 0.0);
    rot.resize(4 * n, 0.0);
    log_scale.resize(3 * n, 0.0);
    opacity.resize(n, 0.0);
    sh.resize(static_cast<std::size_t>(sh_per_gaussian()) * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      if (rot[4 * i] == 0 && rot[4 * i + 1] == 0 && rot[4 * i + 2] == 0 && rot[4 * i + 3] == 0)
        rot[4 * i] = 1.0;
  }

  // Appends one entry; id must exceed the current maximum to keep ordering.
  std::size_t append(uint32_t id);
  // Removes the listed entry indices (not ids); keeps relative order.
  // Returns old-index -> new-index map with kInvalidId for removed entries.
  std::vector<uint32_t> remove_indices(const std::vector<uint32_t>& indices);
  // Index of a global id, or npos.
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t index_of(uint32_t id) const;

  // Renormalizes every rotation in place (post-optimizer-step projection).
  void renormalize_rotations();

  // Axis-aligned bounds over positions; zero extent when empty.
  void bounds(Vec3& lo, Vec3& hi) const;
  double bbox_diagonal() const;
};

// Per-attribute-class gradients, same layout as the set.
struct GaussianGrads {
  std::vector<double> pos, rot, log_scale, opacity, sh;

  void resize_like(const GaussianSet& s) {
    pos.assign(s.pos.size(), 0.0);
    rot.assign(s.rot.size(), 0.0);
    log_scale.assign(s.log_scale.size(), 0.0);
    opacity.assign(s.opacity.size(), 0.0);
    sh.assign(s.sh.size(), 0.0);
  }
  void add(const GaussianGrads& o);
  void scale(double s);
};

// -------------------------------------------------------- deform graph ----

// Directed KNN graph over a GaussianSet. Neighbor entries are positional
// indices into the set. Degree can drop below k after pruning; it is
// restored at the next (re)build.
struct DeformGraph {
  int k = 0;
  double influence_radius = 0;  // l
  std::vector<std::vector<uint32_t>> neighbors;
  std::vector<std::vector<double>> weights;

  std::size_t size() const { return neighbors.size(); }
};

// --------------------------------------------------------------- glut -----

constexpr uint32_t kDeathOpen = 0xffffffffu;

enum class GaussianOrigin : uint8_t { Initial = 0, Candidate = 1, Densified = 2 };

struct GlutEntry {
  uint32_t id = 0;
  uint32_t birth = 0;               // first live frame (1-based)
  uint32_t death = kDeathOpen;      // first dead frame; lifespan is [birth, death)
  GaussianOrigin origin = GaussianOrigin::Initial;
  Vec3 birth_position;

  bool alive_at(uint32_t frame) const { return frame >= birth && frame < death; }
};

// Gaussian lookup table: global id -> lifespan + origin. Entries are stored
// in ascending id order; ids are never reused and lifespans never reopen.
struct Glut {
  std::vector<GlutEntry> entries;

  std::size_t size() const { return entries.size(); }
  const GlutEntry* find(uint32_t id) const;
  GlutEntry* find(uint32_t id);
  void add(GlutEntry e);  // id must exceed current max
  uint32_t next_id() const { return entries.empty() ? 0 : entries.back().id + 1; }
  std::size_t alive_count(uint32_t frame) const;
};

}  // namespace tgs
