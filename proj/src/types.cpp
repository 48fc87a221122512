#include "tgs/types.hpp"

#include <algorithm>

namespace tgs {

Mat3 quat_to_rotmat(Quat q) {
  if (!std::isfinite(q.w) || !std::isfinite(q.x) || !std::isfinite(q.y) ||
      !std::isfinite(q.z))
    throw invalid_input("quat_to_rotmat: non-finite quaternion component");
  double n = qnorm(q);
  if (std::abs(n - 1.0) > 1e-6)
    throw invalid_input("quat_to_rotmat: quaternion norm " + std::to_string(n) +
                        " not within 1e-6 of 1");
  Mat3 r;
  double w = q.w, x = q.x, y = q.y, z = q.z;
  r.m[0][0] = 1 - 2 * (y * y + z * z);
  r.m[0][1] = 2 * (x * y - w * z);
  r.m[0][2] = 2 * (x * z + w * y);
  r.m[1][0] = 2 * (x * y + w * z);
  r.m[1][1] = 1 - 2 * (x * x + z * z);
  r.m[1][2] = 2 * (y * z - w * x);
  r.m[2][0] = 2 * (x * z - w * y);
  r.m[2][1] = 2 * (y * z + w * x);
  r.m[2][2] = 1 - 2 * (x * x + y * y);
  return r;
}

Mat3 quat_to_rotmat_normalized(Quat q) {
  double n = qnorm(q);
  if (!(n > 0) || !std::isfinite(n))
    throw invalid_input("quat_to_rotmat_normalized: zero or non-finite quaternion");
  return quat_to_rotmat({q.w / n, q.x / n, q.y / n, q.z / n});
}

Projection project(const Camera& cam, Vec3 p) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
    throw invalid_input("project: non-finite point");
  Vec3 c = cam.to_camera(p);
  Projection out;
  out.depth = c.z;
  out.in_front = c.z > kNearPlane;
  if (out.in_front) {
    out.px = cam.fx * c.x / c.z + cam.cx;
    out.py = cam.fy * c.y / c.z + cam.cy;
  }
  return out;
}

Vec3 unproject(const Camera& cam, double px, double py, double depth) {
  Vec3 c{(px - cam.cx) / cam.fx * depth, (py - cam.cy) / cam.fy * depth, depth};
  return cam.R.transposed_mul(c - cam.t);
}

std::size_t GaussianSet::append(uint32_t id) {
  if (!ids.empty() && id <= ids.back())
    throw invalid_input("GaussianSet::append: id must be strictly increasing");
  std::size_t i = ids.size();
  ids.push_back(id);
  pos.insert(pos.end(), {0, 0, 0});
  rot.insert(rot.end(), {1, 0, 0, 0});
  log_scale.insert(log_scale.end(), {0, 0, 0});
  opacity.push_back(0);
  sh.insert(sh.end(), static_cast<std::size_t>(sh_per_gaussian()), 0.0);
  return i;
}

std::vector<uint32_t> GaussianSet::remove_indices(const std::vector<uint32_t>& indices) {
  std::size_t n = size();
  std::vector<char> dead(n, 0);
  for (uint32_t i : indices) dead[i] = 1;
  std::vector<uint32_t> remap(n, kInvalidId);
  int shp = sh_per_gaussian();
  std::size_t w = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (dead[i]) continue;
    remap[i] = static_cast<uint32_t>(w);
    if (w != i) {
      ids[w] = ids[i];
      std::copy_n(&pos[3 * i], 3, &pos[3 * w]);
      std::copy_n(&rot[4 * i], 4, &rot[4 * w]);
      std::copy_n(&log_scale[3 * i], 3, &log_scale[3 * w]);
      opacity[w] = opacity[i];
      std::copy_n(&sh[static_cast<std::size_t>(shp) * i], shp,
                  &sh[static_cast<std::size_t>(shp) * w]);
    }
    ++w;
  }
  ids.resize(w);
  pos.resize(3 * w);
  rot.resize(4 * w);
  log_scale.resize(3 * w);
  opacity.resize(w);
  sh.resize(static_cast<std::size_t>(shp) * w);
  return remap;
}

std::size_t GaussianSet::index_of(uint32_t id) const {
  auto it = std::lower_bound(ids.begin(), ids.end(), id);
  if (it == ids.end() || *it != id) return npos;
  return static_cast<std::size_t>(it - ids.begin());
}

void GaussianSet::renormalize_rotations() {
  for (std::size_t i = 0; i < size(); ++i) set_rotation(i, normalized(rotation(i)));
}

void GaussianSet::bounds(Vec3& lo, Vec3& hi) const {
  if (empty()) {
    lo = hi = {0, 0, 0};
    return;
  }
  lo = hi = position(0);
  for (std::size_t i = 1; i < size(); ++i) {
    Vec3 p = position(i);
    lo.x = std::min(lo.x, p.x); lo.y = std::min(lo.y, p.y); lo.z = std::min(lo.z, p.z);
    hi.x = std::max(hi.x, p.x); hi.y = std::max(hi.y, p.y); hi.z = std::max(hi.z, p.z);
  }
}

double GaussianSet::bbox_diagonal() const {
  Vec3 lo, hi;
  bounds(lo, hi);
  return norm(hi - lo);
}

void GaussianGrads::add(const GaussianGrads& o) {
  auto acc = [](std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  };
  acc(pos, o.pos);
  acc(rot, o.rot);
  acc(log_scale, o.log_scale);
  acc(opacity, o.opacity);
  acc(sh, o.sh);
}

void GaussianGrads::scale(double s) {
  for (auto* v : {&pos, &rot, &log_scale, &opacity, &sh})
    for (double& x : *v) x *= s;
}

const GlutEntry* Glut::find(uint32_t id) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), id,
                             [](const GlutEntry& e, uint32_t v) { return e.id < v; });
  if (it == entries.end() || it->id != id) return nullptr;
  return &*it;
}

GlutEntry* Glut::find(uint32_t id) {
  return const_cast<GlutEntry*>(static_cast<const Glut*>(this)->find(id));
}

void Glut::add(GlutEntry e) {
  if (!entries.empty() && e.id <= entries.back().id)
    throw invalid_input("Glut::add: id must be strictly increasing");
  entries.push_back(e);
}

std::size_t Glut::alive_count(uint32_t frame) const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.alive_at(frame) ? 1 : 0;
  return n;
}

}  // namespace tgs
