#include "tgs/scenegen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "json.hpp"
#include "tgs/io.hpp"
#include "tgs/rng.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace tgs {

namespace {

constexpr double kSH0 = 0.28209479177387814;

// ----------------------------------------------------------- templates ----

struct TemplatePoint {
  Vec3 base;            // rest position
  Vec3 color;           // activated rgb in (0,1)
  double scale = 0.01;  // isotropic, meters
  int part = 0;         // rigid part id (0 = non-rigid/static field)
  bool aux = false;     // member of the template's auxiliary region
};

struct SceneTemplate {
  std::vector<TemplatePoint> points;
  std::string aux_name;
  // rigid motion of part `part` at frame t (1-based): rotation about a pivot
  // plus translation. part 0 deforms via `field` instead.
  struct PartMotion {
    Vec3 pivot;
    Vec3 axis{0, 0, 1};
    double angle_per_frame = 0;  // radians
    Vec3 velocity;               // meters / frame
  };
  std::vector<PartMotion> parts;  // indexed by part id (entry 0 unused)
  // non-rigid displacement field for part 0
  double wave_amp = 0, wave_rate = 0;
};

Vec3 palette(Rng& rng, double u, double v) {
  // bright, high-frequency pattern: checker + per-point hue noise
  double checker = (static_cast<int>(std::floor(u * 8)) +
                    static_cast<int>(std::floor(v * 8))) % 2
                       ? 0.25
                       : 0.0;
  double r = 0.35 + 0.55 * std::fabs(std::sin(9.0 * u + 3.0 * v)) - checker * 0.3;
  double g = 0.35 + 0.55 * std::fabs(std::cos(5.0 * v + 2.0 * u)) - checker * 0.2;
  double b = 0.30 + 0.5 * std::fabs(std::sin(7.0 * (u + v)));
  Vec3 c{r + 0.1 * (rng.uniform() - 0.5), g + 0.1 * (rng.uniform() - 0.5),
         b + 0.1 * (rng.uniform() - 0.5)};
  c.x = std::clamp(c.x, 0.15, 0.95);
  c.y = std::clamp(c.y, 0.15, 0.95);
  c.z = std::clamp(c.z, 0.15, 0.95);
  return c;
}

SceneTemplate make_sheet(const SceneConfig& cfg, Rng& rng) {
  SceneTemplate t;
  t.aux_name = "patch";
  t.wave_amp = 0.06 * cfg.amplitude;
  t.wave_rate = 0.4;
  const int n = 40;
  double spacing = 1.1 / (n - 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      TemplatePoint p;
      double u = i / double(n - 1), v = j / double(n - 1);
      p.base = {-0.55 + 1.1 * u, -0.55 + 1.1 * v, 0.0};
      p.color = palette(rng, u, v);
      p.scale = spacing * 0.7;
      t.points.push_back(p);
    }
  // auxiliary raised patch: a corner block of the grid area
  double frac = cfg.aux_fraction > 0 ? cfg.aux_fraction : 0.08;
  int m = std::max(2, static_cast<int>(std::lround(std::sqrt(frac * n * n))));
  double pspacing = 0.36 / (m - 1);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      TemplatePoint p;
      double u = i / double(m - 1), v = j / double(m - 1);
      p.base = {0.08 + 0.36 * u, 0.08 + 0.36 * v, 0.1};
      p.color = {0.9, std::clamp(0.2 + 0.6 * u, 0.15, 0.95), 0.25};
      p.scale = pspacing * 0.7;
      p.aux = true;
      t.points.push_back(p);
    }
  if (cfg.with_occluder) {
    // opaque foreground square sweeping across the sheet (part 1)
    t.parts.resize(2);
    t.parts[1].velocity = {0.028 * cfg.amplitude, 0.0, 0.0};
    const int k = 16;
    double ospacing = 0.5 / (k - 1);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        TemplatePoint p;
        double u = i / double(k - 1), v = j / double(k - 1);
        p.base = {-0.95 + 0.5 * u, -0.25 + 0.5 * v, 0.45};
        p.color = {0.2, 0.25, 0.75};
        p.scale = ospacing * 0.8;
        p.part = 1;
        t.points.push_back(p);
      }
  }
  return t;
}

SceneTemplate make_two_link(const SceneConfig& cfg, Rng& rng) {
  SceneTemplate t;
  t.aux_name = "tool";
  t.parts.resize(3);
  t.parts[1].velocity = {0.0, 0.008 * cfg.amplitude, 0.0};  // link 1 drifts
  t.parts[2].pivot = {0, 0, 0};                             // link 2 swings
  t.parts[2].axis = {0, 0, 1};
  t.parts[2].angle_per_frame = 0.035 * cfg.amplitude;

  auto cylinder = [&](Vec3 a, Vec3 b, double radius, int count, int part) {
    Vec3 axis = b - a;
    Vec3 ref = std::fabs(axis.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
    Vec3 u = normalized(cross(axis, ref));
    Vec3 v = normalized(cross(axis, u));
    for (int i = 0; i < count; ++i) {
      double s = rng.uniform();
      double phi = rng.uniform(0, 2 * M_PI);
      TemplatePoint p;
      p.base = a + s * axis + radius * (std::cos(phi) * u + std::sin(phi) * v);
      p.color = palette(rng, s, phi / (2 * M_PI));
      p.scale = 0.022;
      p.part = part;
      t.points.push_back(p);
    }
  };
  cylinder({-0.55, 0, 0}, {0, 0, 0}, 0.09, 500, 1);
  cylinder({0, 0, 0}, {0.5, 0, 0}, 0.08, 450, 2);
  // auxiliary blob riding the end of link 2
  double frac = cfg.aux_fraction > 0 ? cfg.aux_fraction : 0.08;
  int blob = std::max(8, static_cast<int>(std::lround(frac * 950)));
  for (int i = 0; i < blob; ++i) {
    TemplatePoint p;
    double phi = rng.uniform(0, 2 * M_PI), cz = rng.uniform(-1, 1);
    double r = 0.07 * std::cbrt(rng.uniform());
    double sz = std::sqrt(1 - cz * cz);
    p.base = Vec3{0.56, 0, 0} + r * Vec3{sz * std::cos(phi), sz * std::sin(phi), cz};
    p.color = {0.85, 0.8, 0.2};
    p.scale = 0.02;
    p.part = 2;
    p.aux = true;
    t.points.push_back(p);
  }
  return t;
}

SceneTemplate make_sphere_cap(const SceneConfig& cfg, Rng& rng) {
  SceneTemplate t;
  t.aux_name = "cap";
  t.parts.resize(2);
  t.parts[1].pivot = {0, 0, 0};
  t.parts[1].axis = {0, 0, 1};
  t.parts[1].angle_per_frame = 0.03 * cfg.amplitude;

  double frac = cfg.aux_fraction > 0 ? cfg.aux_fraction : 0.15;
  // z > z_cut holds `frac` of a uniform sphere: frac = (1 - z_cut) / 2
  double z_cut = 1.0 - 2.0 * frac;
  const int n = 1200;
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    double z = 1.0 - 2.0 * (i + 0.5) / n;
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    double phi = golden * i;
    TemplatePoint p;
    Vec3 d{r * std::cos(phi), r * std::sin(phi), z};
    p.base = 0.5 * d;
    p.color = palette(rng, phi / (2 * M_PI) - std::floor(phi / (2 * M_PI)), (z + 1) / 2);
    p.scale = 0.028;
    p.part = 1;
    p.aux = z > z_cut;
    t.points.push_back(p);
  }
  return t;
}

Vec3 apply_motion(const SceneTemplate& t, const TemplatePoint& p, uint32_t frame,
                  Quat* rotation) {
  *rotation = Quat{};
  double time = static_cast<double>(frame - 1);
  if (p.part == 0) {
    double z = t.wave_amp * std::sin(2 * M_PI * 1.4 * p.base.x + t.wave_rate * time) *
               std::cos(2 * M_PI * 1.1 * p.base.y + 0.7 * t.wave_rate * time);
    return {p.base.x, p.base.y, p.base.z + z};
  }
  const auto& m = t.parts[p.part];
  Quat q = axis_angle(m.axis, m.angle_per_frame * time);
  *rotation = q;
  return m.pivot + rotate(q, p.base - m.pivot) + time * m.velocity;
}

Camera make_camera(int view, int views, int width, int height) {
  double phi = 2 * M_PI * view / views;
  Vec3 pos{2.0 * std::cos(phi), 2.0 * std::sin(phi), 1.1};
  Vec3 forward = normalized(Vec3{0, 0, 0} - pos);
  Vec3 up{0, 0, 1};
  Vec3 xc = normalized(cross(forward, up));
  Vec3 yc = cross(forward, xc);
  Camera cam;
  cam.fx = cam.fy = 1.1 * width;
  cam.cx = width / 2.0;
  cam.cy = height / 2.0;
  cam.width = width;
  cam.height = height;
  cam.R.m[0][0] = xc.x; cam.R.m[0][1] = xc.y; cam.R.m[0][2] = xc.z;
  cam.R.m[1][0] = yc.x; cam.R.m[1][1] = yc.y; cam.R.m[1][2] = yc.z;
  cam.R.m[2][0] = forward.x; cam.R.m[2][1] = forward.y; cam.R.m[2][2] = forward.z;
  cam.t = -1.0 * (cam.R * pos);
  return cam;
}

}  // namespace

SyntheticSequence generate(const SceneConfig& cfg) {
  if (cfg.frames < 1) throw config_error("scene config: frames must be >= 1");
  if (cfg.views < 2) throw config_error("scene config: need at least 2 views");
  Rng rng(seed_combine(cfg.seed, 0x7367656eull));  // scene substream

  SceneTemplate tmpl;
  if (cfg.template_name == "sheet") tmpl = make_sheet(cfg, rng);
  else if (cfg.template_name == "two_link") tmpl = make_two_link(cfg, rng);
  else if (cfg.template_name == "sphere_cap") tmpl = make_sphere_cap(cfg, rng);
  else throw config_error("scene config: unknown template '" + cfg.template_name + "'");
  if (cfg.with_occluder && cfg.template_name != "sheet")
    throw config_error("scene config: with_occluder applies to the sheet template only");

  SyntheticSequence seq;
  seq.config = cfg;
  for (int v = 0; v < cfg.views; ++v)
    seq.cameras.push_back(make_camera(v, cfg.views, cfg.width, cfg.height));

  // resolve events against the template's region
  std::vector<uint32_t> aux_ids;
  for (uint32_t i = 0; i < tmpl.points.size(); ++i)
    if (tmpl.points[i].aux) aux_ids.push_back(i);
  uint32_t birth = 1, death = kDeathOpen;
  for (const auto& ev : cfg.events) {
    if (ev.region != tmpl.aux_name)
      throw config_error("event references unknown region '" + ev.region +
                         "' (template '" + cfg.template_name + "' defines '" +
                         tmpl.aux_name + "')");
    if (ev.frame < 1 || ev.frame > cfg.frames)
      throw config_error("event frame " + std::to_string(ev.frame) + " out of range");
    TopologyEvent resolved;
    resolved.frame = ev.frame;
    resolved.region = aux_ids;
    if (ev.kind == "appear") {
      resolved.kind = TopologyEvent::Kind::Appear;
      birth = ev.frame;
    } else if (ev.kind == "disappear") {
      resolved.kind = TopologyEvent::Kind::Disappear;
      death = ev.frame;
    } else {
      throw config_error("event kind must be appear|disappear, got '" + ev.kind + "'");
    }
    seq.events.push_back(resolved);
  }
  if (death != kDeathOpen && death <= birth)
    throw config_error("disappear event must come after the appear event");

  // per-point SH with a dash of band-1 detail
  const int sh_degree = 3;
  const int shp = 3 * sh_coeff_count(sh_degree);
  std::vector<double> point_sh(tmpl.points.size() * shp, 0.0);
  for (std::size_t i = 0; i < tmpl.points.size(); ++i) {
    const Vec3 c = tmpl.points[i].color;
    point_sh[i * shp + 0] = (c.x - 0.5) / kSH0;
    point_sh[i * shp + 1] = (c.y - 0.5) / kSH0;
    point_sh[i * shp + 2] = (c.z - 0.5) / kSH0;
    for (int b = 1; b < 4; ++b)
      for (int ch = 0; ch < 3; ++ch)
        point_sh[i * shp + 3 * b + ch] = 0.04 * (rng.uniform() - 0.5);
  }

  // lifespans: aux region honors the events, everything else lives throughout
  auto alive = [&](uint32_t id, uint32_t frame) {
    if (!tmpl.points[id].aux) return true;
    return frame >= birth && frame < death;
  };

  std::vector<Vec3> prev_positions(tmpl.points.size());
  double bbox_diag = 0;
  for (uint32_t t = 1; t <= cfg.frames; ++t) {
    GaussianSet set;
    set.sh_degree = sh_degree;
    for (uint32_t id = 0; id < tmpl.points.size(); ++id) {
      Quat q;
      Vec3 p = apply_motion(tmpl, tmpl.points[id], t, &q);
      if (t > 1 && alive(id, t) && alive(id, t - 1)) {
        double step = norm(p - prev_positions[id]);
        if (bbox_diag > 0 && step > 0.02 * bbox_diag)
          throw config_error("template motion exceeds 2% of bbox diagonal per frame");
      }
      prev_positions[id] = p;
      if (!alive(id, t)) continue;
      std::size_t gi = set.append(id);
      set.set_position(gi, p);
      set.set_rotation(gi, q);
      double ls = std::log(tmpl.points[id].scale);
      set.log_scale[3 * gi] = ls;
      set.log_scale[3 * gi + 1] = ls;
      set.log_scale[3 * gi + 2] = ls;
      set.opacity[gi] = logit(0.92);
      std::copy_n(&point_sh[id * shp], shp, &set.sh[gi * shp]);
    }
    if (t == 1) {
      GaussianSet full = set;  // bbox over frame-1 content
      bbox_diag = full.bbox_diagonal();
    }
    seq.frames.push_back(std::move(set));
  }

  // ground-truth lookup table
  for (uint32_t id = 0; id < tmpl.points.size(); ++id) {
    GlutEntry e;
    e.id = id;
    e.birth = tmpl.points[id].aux ? birth : 1;
    e.death = tmpl.points[id].aux ? death : kDeathOpen;
    e.origin = e.birth == 1 ? GaussianOrigin::Initial : GaussianOrigin::Candidate;
    Quat q;
    e.birth_position = apply_motion(tmpl, tmpl.points[id], e.birth, &q);
    seq.glut.add(e);
  }
  return seq;
}

// ------------------------------------------------------------- oracles ----

const RenderedFrame& OracleCache::render(uint32_t frame, int view) {
  auto key = std::make_pair(frame, view);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  auto [ins, ok] = cache_.emplace(key, splat(seq_.frame(frame), seq_.cameras.at(view)));
  return ins->second;
}

Correspondences oracle_spatial_match(OracleCache& cache, uint32_t frame, int view_a,
                                     int view_b, double density) {
  const SyntheticSequence& seq = cache.sequence();
  const RenderedFrame& ra = cache.render(frame, view_a);
  const RenderedFrame& rb = cache.render(frame, view_b);

  uint32_t max_id = 0;
  for (const auto& e : seq.glut.entries) max_id = std::max(max_id, e.id);
  std::vector<uint8_t> vis_a(max_id + 1, 0), vis_b(max_id + 1, 0);
  std::size_t covered = 0;
  for (std::size_t p = 0; p < ra.owner.size(); ++p) {
    if (ra.owner[p] != kInvalidId) {
      vis_a[ra.owner[p]] = 1;
      ++covered;
    }
    if (rb.owner[p] != kInvalidId) vis_b[rb.owner[p]] = 1;
  }

  const GaussianSet& gt = seq.frame(frame);
  std::vector<uint32_t> mutual;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    uint32_t id = gt.ids[i];
    if (vis_a[id] && vis_b[id]) mutual.push_back(static_cast<uint32_t>(i));
  }

  std::size_t target =
      static_cast<std::size_t>(std::lround(density * static_cast<double>(covered)));
  Rng rng(seed_combine(seq.config.seed, 0x6d617463ull, frame,
                       static_cast<uint64_t>(view_a), static_cast<uint64_t>(view_b)));
  // seeded Fisher-Yates, then take the first `target`
  for (std::size_t i = mutual.size(); i > 1; --i)
    std::swap(mutual[i - 1], mutual[rng.below(i)]);
  if (mutual.size() > target) mutual.resize(target);
  std::sort(mutual.begin(), mutual.end());

  Correspondences out;
  out.view_a = view_a;
  out.view_b = view_b;
  double sigma = seq.config.noise.jitter_px;
  for (uint32_t gi : mutual) {
    Vec3 p = gt.position(gi);
    Projection pa = project(seq.cameras[view_a], p);
    Projection pb = project(seq.cameras[view_b], p);
    if (!pa.in_front || !pb.in_front) continue;
    PixelPair pair;
    pair.ax = pa.px + (sigma > 0 ? sigma * rng.normal() : 0.0);
    pair.ay = pa.py + (sigma > 0 ? sigma * rng.normal() : 0.0);
    pair.bx = pb.px + (sigma > 0 ? sigma * rng.normal() : 0.0);
    pair.by = pb.py + (sigma > 0 ? sigma * rng.normal() : 0.0);
    out.pairs.push_back(pair);
  }
  return out;
}

TemporalWarp oracle_temporal_track(OracleCache& cache, uint32_t frame, int view) {
  if (frame < 2) throw invalid_input("oracle_temporal_track: frame must be >= 2");
  const SyntheticSequence& seq = cache.sequence();
  const RenderedFrame& cur = cache.render(frame, view);
  const RenderedFrame& prev = cache.render(frame - 1, view);
  const Camera& cam = seq.cameras.at(view);
  int w = cam.width, h = cam.height;

  uint32_t max_id = 0;
  for (const auto& e : seq.glut.entries) max_id = std::max(max_id, e.id);
  std::vector<uint8_t> vis_prev(max_id + 1, 0);
  // per-identity pixel lists at t-1 (for snapping warp targets onto the
  // identity's own footprint)
  std::vector<std::vector<std::pair<int, int>>> prev_pixels(max_id + 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      uint32_t id = prev.owner[static_cast<std::size_t>(y) * w + x];
      if (id == kInvalidId) continue;
      vis_prev[id] = 1;
      prev_pixels[id].emplace_back(x, y);
    }

  const GaussianSet& gt_cur = seq.frame(frame);
  const GaussianSet& gt_prev = seq.frame(frame - 1);

  TemporalWarp out;
  out.width = w;
  out.height = h;
  out.warp.assign(static_cast<std::size_t>(w) * h * 2, 0.0);
  out.mask.assign(static_cast<std::size_t>(w) * h, 1);

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      std::size_t p = static_cast<std::size_t>(y) * w + x;
      uint32_t id = cur.owner[p];
      out.warp[2 * p] = x + 0.5;
      out.warp[2 * p + 1] = y + 0.5;
      if (id == kInvalidId) continue;  // no surface: mask stays 1, identity warp
      std::size_t gi_prev = gt_prev.index_of(id);
      if (gi_prev == GaussianSet::npos || !vis_prev[id]) {
        out.mask[p] = 0;  // newly observed (event or full disocclusion)
        continue;
      }
      std::size_t gi_cur = gt_cur.index_of(id);
      Projection pc = project(cam, gt_cur.position(gi_cur));
      Projection pp = project(cam, gt_prev.position(gi_prev));
      double tx = x + 0.5 + (pp.px - pc.px);
      double ty = y + 0.5 + (pp.py - pc.py);
      // keep the target on the identity's own previous-frame footprint
      int ix = std::clamp(static_cast<int>(tx), 0, w - 1);
      int iy = std::clamp(static_cast<int>(ty), 0, h - 1);
      if (prev.owner[static_cast<std::size_t>(iy) * w + ix] != id) {
        double best = 1e30;
        for (auto [qx, qy] : prev_pixels[id]) {
          double d = (qx + 0.5 - tx) * (qx + 0.5 - tx) + (qy + 0.5 - ty) * (qy + 0.5 - ty);
          if (d < best) {
            best = d;
            tx = qx + 0.5;
            ty = qy + 0.5;
          }
        }
      }
      out.warp[2 * p] = tx;
      out.warp[2 * p + 1] = ty;
    }

  if (seq.config.noise.mask_flip > 0) {
    Rng rng(seed_combine(seq.config.seed, 0x666c6970ull, frame, static_cast<uint64_t>(view)));
    for (auto& m : out.mask)
      if (rng.uniform() < seq.config.noise.mask_flip) m = m ? 0 : 1;
  }
  return out;
}

// ------------------------------------------------------------ file io -----

namespace {

ordered_json camera_to_json(const Camera& c) {
  ordered_json j;
  j["fx"] = c.fx;
  j["fy"] = c.fy;
  j["cx"] = c.cx;
  j["cy"] = c.cy;
  j["width"] = c.width;
  j["height"] = c.height;
  j["R"] = {c.R.m[0][0], c.R.m[0][1], c.R.m[0][2], c.R.m[1][0], c.R.m[1][1],
            c.R.m[1][2], c.R.m[2][0], c.R.m[2][1], c.R.m[2][2]};
  j["t"] = {c.t.x, c.t.y, c.t.z};
  return j;
}

Camera camera_from_json(const ordered_json& j) {
  Camera c;
  c.fx = j.at("fx");
  c.fy = j.at("fy");
  c.cx = j.at("cx");
  c.cy = j.at("cy");
  c.width = j.at("width");
  c.height = j.at("height");
  auto r = j.at("R");
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) c.R.m[i][k] = r.at(3 * i + k);
  c.t = {j.at("t").at(0), j.at("t").at(1), j.at("t").at(2)};
  return c;
}

ordered_json scene_config_to_json(const SceneConfig& cfg) {
  ordered_json j;
  j["template"] = cfg.template_name;
  j["frames"] = cfg.frames;
  j["views"] = cfg.views;
  j["resolution"] = {cfg.width, cfg.height};
  j["seed"] = cfg.seed;
  j["amplitude"] = cfg.amplitude;
  j["aux_fraction"] = cfg.aux_fraction;
  j["with_occluder"] = cfg.with_occluder;
  j["events"] = ordered_json::array();
  for (const auto& ev : cfg.events)
    j["events"].push_back({{"frame", ev.frame}, {"kind", ev.kind}, {"region", ev.region}});
  j["noise"] = {{"jitter_px", cfg.noise.jitter_px}, {"mask_flip", cfg.noise.mask_flip}};
  return j;
}

SceneConfig scene_config_from_json(const ordered_json& j, const std::string& where) {
  static const std::set<std::string> known = {
      "template", "frames", "views", "resolution", "seed",
      "amplitude", "aux_fraction", "with_occluder", "events", "noise"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw config_error(where + ": unknown key '" + it.key() + "'");
  SceneConfig cfg;
  cfg.template_name = j.value("template", cfg.template_name);
  cfg.frames = j.value("frames", cfg.frames);
  cfg.views = j.value("views", cfg.views);
  if (j.contains("resolution")) {
    cfg.width = j.at("resolution").at(0);
    cfg.height = j.at("resolution").at(1);
  }
  cfg.seed = j.value("seed", cfg.seed);
  cfg.amplitude = j.value("amplitude", cfg.amplitude);
  cfg.aux_fraction = j.value("aux_fraction", cfg.aux_fraction);
  cfg.with_occluder = j.value("with_occluder", cfg.with_occluder);
  if (j.contains("events"))
    for (const auto& ev : j.at("events")) {
      SceneEventSpec spec;
      spec.frame = ev.at("frame");
      spec.kind = ev.at("kind");
      spec.region = ev.at("region");
      cfg.events.push_back(spec);
    }
  if (j.contains("noise")) {
    cfg.noise.jitter_px = j.at("noise").value("jitter_px", 0.0);
    cfg.noise.mask_flip = j.at("noise").value("mask_flip", 0.0);
  }
  return cfg;
}

std::string frame_name(uint32_t t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%04u.tgs", t);
  return buf;
}

}  // namespace

SceneConfig load_scene_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw config_error("cannot open scene config: " + path);
  ordered_json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw config_error("scene config parse error in " + path + ": " + e.what());
  }
  return scene_config_from_json(j, path);
}

void save_scene_config(const std::string& path, const SceneConfig& cfg) {
  std::ofstream os(path);
  if (!os) throw format_error("cannot write scene config: " + path);
  os << scene_config_to_json(cfg).dump(2) << "\n";
}

void save_sequence(const std::string& dir, const SyntheticSequence& seq) {
  fs::create_directories(dir);
  for (uint32_t t = 1; t <= seq.frame_count(); ++t)
    write_gaussians(dir + "/" + frame_name(t), seq.frame(t));
  ordered_json cams = ordered_json::array();
  for (const auto& c : seq.cameras) cams.push_back(camera_to_json(c));
  std::ofstream(dir + "/cameras.json") << cams.dump(2) << "\n";
  ordered_json evs = ordered_json::array();
  for (const auto& e : seq.events) {
    ordered_json ev;
    ev["frame"] = e.frame;
    ev["kind"] = e.kind == TopologyEvent::Kind::Appear ? "appear" : "disappear";
    ev["region"] = e.region;
    evs.push_back(ev);
  }
  std::ofstream(dir + "/events.json") << evs.dump(2) << "\n";
  write_glut(dir + "/glut.tgl", seq.glut);
  save_scene_config(dir + "/scene_config.json", seq.config);
}

SyntheticSequence load_sequence(const std::string& dir) {
  if (!fs::exists(dir + "/scene_config.json"))
    throw stage_order_error("not a sequence directory (missing scene_config.json): " + dir);
  SyntheticSequence seq;
  seq.config = load_scene_config(dir + "/scene_config.json");
  ordered_json cams;
  std::ifstream cis(dir + "/cameras.json");
  if (!cis) throw stage_order_error("missing cameras.json in " + dir);
  cis >> cams;
  for (const auto& cj : cams) seq.cameras.push_back(camera_from_json(cj));
  for (uint32_t t = 1; t <= seq.config.frames; ++t)
    seq.frames.push_back(read_gaussians(dir + "/" + frame_name(t)));
  std::ifstream eis(dir + "/events.json");
  if (eis) {
    ordered_json evs;
    eis >> evs;
    for (const auto& ej : evs) {
      TopologyEvent e;
      e.frame = ej.at("frame");
      e.kind = ej.at("kind") == "appear" ? TopologyEvent::Kind::Appear
                                         : TopologyEvent::Kind::Disappear;
      for (const auto& id : ej.at("region")) e.region.push_back(id);
      seq.events.push_back(e);
    }
  }
  seq.glut = read_glut(dir + "/glut.tgl");
  return seq;
}

}  // namespace tgs
