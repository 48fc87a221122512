#include "tgs/registration.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "tgs/io.hpp"
#include "tgs/knn.hpp"
#include "tgs/rng.hpp"
#include "tgs/splat.hpp"

namespace fs = std::filesystem;

namespace tgs {

namespace {

constexpr double kSH0 = 0.28209479177387814;
constexpr double kReprojGate = 1.0;  // px
constexpr double kInitOpacity = 0.1;
constexpr int kDivergenceWindow = 500;

Vec3 sample_pixel(const Image& img, double px, double py) {
  int x = std::clamp(static_cast<int>(px), 0, img.width - 1);
  int y = std::clamp(static_cast<int>(py), 0, img.height - 1);
  return {img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2)};
}

void set_dc_color(GaussianSet& set, std::size_t i, Vec3 rgb) {
  int shp = set.sh_per_gaussian();
  std::size_t base = static_cast<std::size_t>(shp) * i;
  set.sh[base + 0] = (rgb.x - 0.5) / kSH0;
  set.sh[base + 1] = (rgb.y - 0.5) / kSH0;
  set.sh[base + 2] = (rgb.z - 0.5) / kSH0;
}

// mean distance to the 3 nearest points, per point; the overall mean is the
// fallback for tiny clouds
std::vector<double> local_spacing(const std::vector<Vec3>& pts) {
  std::vector<double> out(pts.size(), 0.01);
  if (pts.size() < 2) return out;
  KnnIndex index(pts);
  int k = std::min<int>(3, static_cast<int>(pts.size()) - 1);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    auto nb = index.query(pts[i], k, static_cast<uint32_t>(i));
    double s = 0;
    for (uint32_t j : nb) s += norm(pts[i] - pts[j]);
    out[i] = std::max(1e-5, s / nb.size());
  }
  return out;
}

double reprojection_error(const Camera& cam, Vec3 p, double px, double py) {
  Projection pr = project(cam, p);
  if (!pr.in_front) return 1e30;
  double dx = pr.px - px, dy = pr.py - py;
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

std::vector<std::pair<int, int>> pair_views(const std::vector<Camera>& cams) {
  std::vector<std::pair<int, int>> pairs;
  std::vector<uint8_t> used(cams.size(), 0);
  for (std::size_t i = 0; i < cams.size(); ++i) {
    if (used[i]) continue;
    used[i] = 1;
    int best = -1;
    double best_d = 1e300;
    for (std::size_t j = i + 1; j < cams.size(); ++j) {
      if (used[j]) continue;
      double d = norm(cams[i].center() - cams[j].center());
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(j);
      }
    }
    if (best < 0) break;  // odd leftover view
    used[best] = 1;
    pairs.emplace_back(static_cast<int>(i), best);
  }
  return pairs;
}

bool triangulate_pair(const Camera& cam_a, double ax, double ay, const Camera& cam_b,
                      double bx, double by, Vec3* out) {
  // two rows per view: (R_x - u R_z) X = u t_z - t_x, in normalized coords
  double A[4][3], c[4];
  auto fill = [&](const Camera& cam, double px, double py, int row) {
    double u = (px - cam.cx) / cam.fx;
    double v = (py - cam.cy) / cam.fy;
    for (int k = 0; k < 3; ++k) {
      A[row][k] = cam.R.m[0][k] - u * cam.R.m[2][k];
      A[row + 1][k] = cam.R.m[1][k] - v * cam.R.m[2][k];
    }
    c[row] = u * cam.t.z - cam.t.x;
    c[row + 1] = v * cam.t.z - cam.t.y;
  };
  fill(cam_a, ax, ay, 0);
  fill(cam_b, bx, by, 2);

  // normal equations, 3x3 Gaussian elimination with partial pivoting
  double N[3][4];
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double s = 0;
      for (int r = 0; r < 4; ++r) s += A[r][i] * A[r][j];
      N[i][j] = s;
    }
    double s = 0;
    for (int r = 0; r < 4; ++r) s += A[r][i] * c[r];
    N[i][3] = s;
  }
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(N[r][col]) > std::abs(N[piv][col])) piv = r;
    if (std::abs(N[piv][col]) < 1e-12) return false;
    if (piv != col)
      for (int k = 0; k < 4; ++k) std::swap(N[piv][k], N[col][k]);
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      double f = N[r][col] / N[col][col];
      for (int k = col; k < 4; ++k) N[r][k] -= f * N[col][k];
    }
  }
  Vec3 p{N[0][3] / N[0][0], N[1][3] / N[1][1], N[2][3] / N[2][2]};
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) return false;
  *out = p;
  return true;
}

std::vector<Candidate> propose_candidates(OracleCache& cache, uint32_t frame,
                                          const std::vector<std::pair<int, int>>& pairs,
                                          double density) {
  const auto& cams = cache.sequence().cameras;
  std::vector<Candidate> out;
  for (auto [va, vb] : pairs) {
    Correspondences corr = oracle_spatial_match(cache, frame, va, vb, density);
    const Image& img_a = cache.render(frame, va).color;
    const Image& img_b = cache.render(frame, vb).color;
    for (const auto& pr : corr.pairs) {
      Vec3 p;
      if (!triangulate_pair(cams[va], pr.ax, pr.ay, cams[vb], pr.bx, pr.by, &p)) continue;
      if (reprojection_error(cams[va], p, pr.ax, pr.ay) > kReprojGate) continue;
      if (reprojection_error(cams[vb], p, pr.bx, pr.by) > kReprojGate) continue;
      Candidate cand;
      cand.position = p;
      cand.view_a = va;
      cand.view_b = vb;
      cand.ax = pr.ax; cand.ay = pr.ay;
      cand.bx = pr.bx; cand.by = pr.by;
      cand.color = 0.5 * (sample_pixel(img_a, pr.ax, pr.ay) +
                          sample_pixel(img_b, pr.bx, pr.by));
      out.push_back(cand);
    }
  }
  return out;
}

std::vector<Candidate> filter_w1(const std::vector<Candidate>& cands,
                                 const std::vector<TemporalWarp>& warps_by_view,
                                 std::size_t* discarded_oob) {
  std::vector<Candidate> kept;
  std::size_t oob = 0;
  for (const auto& c : cands) {
    const TemporalWarp& wa = warps_by_view.at(c.view_a);
    const TemporalWarp& wb = warps_by_view.at(c.view_b);
    int ax = static_cast<int>(c.ax), ay = static_cast<int>(c.ay);
    int bx = static_cast<int>(c.bx), by = static_cast<int>(c.by);
    if (ax < 0 || ax >= wa.width || ay < 0 || ay >= wa.height || bx < 0 ||
        bx >= wb.width || by < 0 || by >= wb.height) {
      ++oob;
      continue;
    }
    int w1 = (1 - wa.mask_at(ax, ay)) * (1 - wb.mask_at(bx, by));
    if (w1 == 1) kept.push_back(c);
  }
  if (discarded_oob) *discarded_oob += oob;
  return kept;
}

std::vector<Candidate> filter_w2(const std::vector<Candidate>& cands,
                                 const std::vector<Image>& errmaps_by_view,
                                 double epsilon) {
  std::vector<Candidate> kept;
  for (const auto& c : cands) {
    const Image& ea = errmaps_by_view.at(c.view_a);
    const Image& eb = errmaps_by_view.at(c.view_b);
    int ax = std::clamp(static_cast<int>(c.ax), 0, ea.width - 1);
    int ay = std::clamp(static_cast<int>(c.ay), 0, ea.height - 1);
    int bx = std::clamp(static_cast<int>(c.bx), 0, eb.width - 1);
    int by = std::clamp(static_cast<int>(c.by), 0, eb.height - 1);
    double w2 = ea.at(ax, ay, 0) + eb.at(bx, by, 0);
    if (w2 >= epsilon) kept.push_back(c);
  }
  return kept;
}

// ------------------------------------------------------- frame training ---

namespace {

// Working state for one frame of optimization. `ref` freezes the rigidity
// reference: previous-frame attributes for carried entries, creation values
// for entries born this frame.
struct FrameWork {
  GaussianSet work;
  GaussianSet ref;
  DeformGraph graph;
  std::vector<uint8_t> cand_flag;  // candidate-origin (this frame)
  AdamState adam;
  std::vector<double> grad_norm_accum;
  std::vector<int> grad_norm_count;

  void append_entry(uint32_t id, Vec3 p, Quat q, Vec3 log_scale3, double opacity_logit,
                    Vec3 dc_color) {
    std::size_t i = work.append(id);
    work.set_position(i, p);
    work.set_rotation(i, q);
    work.log_scale[3 * i] = log_scale3.x;
    work.log_scale[3 * i + 1] = log_scale3.y;
    work.log_scale[3 * i + 2] = log_scale3.z;
    work.opacity[i] = opacity_logit;
    set_dc_color(work, i, dc_color);
    std::size_t r = ref.append(id);
    ref.set_position(r, p);
    ref.set_rotation(r, q);
    cand_flag.push_back(1);
    grad_norm_accum.push_back(0);
    grad_norm_count.push_back(0);
    graph.neighbors.emplace_back();
    graph.weights.emplace_back();
  }
};

double divergence_ratio(const std::vector<double>& hist, int views) {
  int n = static_cast<int>(hist.size());
  if (n < kDivergenceWindow + views) return 0.0;
  double now = 0, then = 0;
  for (int i = 0; i < views; ++i) {
    now += hist[n - 1 - i];
    then += hist[n - 1 - i - kDivergenceWindow];
  }
  if (then <= 0) return 0.0;
  return now / then;
}

// prune entries below the opacity threshold; stamps deaths, drops
// born-and-died-this-frame entries from the lookup table entirely
std::size_t prune_low_opacity(FrameWork& fw, Glut& glut, uint32_t frame,
                              double tau_opacity) {
  std::vector<uint32_t> dead;
  for (std::size_t i = 0; i < fw.work.size(); ++i)
    if (fw.work.activated_opacity(i) < tau_opacity)
      dead.push_back(static_cast<uint32_t>(i));
  if (dead.empty()) return 0;

  for (uint32_t i : dead) {
    uint32_t id = fw.work.ids[i];
    GlutEntry* e = glut.find(id);
    if (e->birth == frame) {
      // never alive in any output frame; remove the record
      auto it = std::find_if(glut.entries.begin(), glut.entries.end(),
                             [id](const GlutEntry& g) { return g.id == id; });
      glut.entries.erase(it);
    } else {
      e->death = frame;
    }
  }

  std::vector<uint32_t> remap = fw.work.remove_indices(dead);
  fw.ref.remove_indices(dead);
  fw.adam.remove_entries(remap, fw.work.sh_per_gaussian());

  auto compact_flags = [&](auto& v) {
    using T = typename std::remove_reference_t<decltype(v)>::value_type;
    std::vector<T> nv;
    nv.reserve(fw.work.size());
    for (std::size_t i = 0; i < remap.size(); ++i)
      if (remap[i] != kInvalidId) nv.push_back(v[i]);
    v = std::move(nv);
  };
  compact_flags(fw.cand_flag);
  compact_flags(fw.grad_norm_accum);
  compact_flags(fw.grad_norm_count);

  // drop edges to removed nodes, remap the rest
  DeformGraph ng;
  ng.k = fw.graph.k;
  ng.influence_radius = fw.graph.influence_radius;
  for (std::size_t i = 0; i < remap.size(); ++i) {
    if (remap[i] == kInvalidId) continue;
    std::vector<uint32_t> nb;
    std::vector<double> wt;
    for (std::size_t e = 0; e < fw.graph.neighbors[i].size(); ++e) {
      uint32_t j = fw.graph.neighbors[i][e];
      if (remap[j] == kInvalidId) continue;
      nb.push_back(remap[j]);
      wt.push_back(fw.graph.weights[i][e]);
    }
    ng.neighbors.push_back(std::move(nb));
    ng.weights.push_back(std::move(wt));
  }
  fw.graph = std::move(ng);
  if (fw.work.empty()) throw std::runtime_error("prune removed every Gaussian");
  return dead.size();
}

}  // namespace

MotionState init_first_frame(OracleCache& cache, const RegistrationConfig& cfg,
                             FrameLog* log) {
  const SyntheticSequence& seq = cache.sequence();
  if (seq.cameras.size() < 2)
    throw invalid_input("init_first_frame: need at least 2 views");
  auto pairs = pair_views(seq.cameras);
  std::vector<Candidate> points = propose_candidates(cache, 1, pairs, cfg.match_density);
  if (points.size() < 8)
    throw std::runtime_error("initialization failure: only " +
                             std::to_string(points.size()) + " points triangulated");

  GaussianSet set;
  set.sh_degree = 3;
  std::vector<Vec3> positions(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) positions[i] = points[i].position;
  std::vector<double> spacing = local_spacing(positions);
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::size_t gi = set.append(static_cast<uint32_t>(i));
    set.set_position(gi, points[i].position);
    double ls = std::log(spacing[i]);
    set.log_scale[3 * gi] = ls;
    set.log_scale[3 * gi + 1] = ls;
    set.log_scale[3 * gi + 2] = ls;
    set.opacity[gi] = logit(kInitOpacity);
    set_dc_color(set, gi, points[i].color);
  }

  double s_max = cfg.s_max_fraction * set.bbox_diagonal();
  DeformGraph lap_graph = knn_build(set, cfg.knn_k);
  AdamState adam;
  std::vector<uint8_t> train_all;  // empty = all attributes trainable
  int views = static_cast<int>(seq.cameras.size());

  for (int iter = 1; iter <= cfg.schedule.init_iters; ++iter) {
    if (iter > 1 && (iter - 1) % cfg.schedule.maintenance_period == 0)
      lap_graph = knn_build(set, cfg.knn_k);

    int v = (iter - 1) % views;
    RenderedFrame rendered = splat(set, seq.cameras[v]);
    Image upstream;
    double e_color = color_loss(rendered.color, cache.render(1, v).color,
                                cfg.weights.lambda_dssim, &upstream);
    GaussianGrads grads = splat_backward(set, seq.cameras[v], upstream);

    std::vector<double> g_lap, g_iso, g_size;
    double e_lap = laplacian_energy(set, lap_graph, &g_lap);
    double e_iso = iso_energy(set, &g_iso);
    double e_size = size_energy(set, s_max, &g_size);
    for (std::size_t k = 0; k < grads.pos.size(); ++k)
      grads.pos[k] += cfg.weights.lambda_lap * g_lap[k];
    for (std::size_t k = 0; k < grads.log_scale.size(); ++k)
      grads.log_scale[k] += cfg.weights.lambda_iso * g_iso[k] +
                            cfg.weights.lambda_size * g_size[k];

    // exponential position-rate decay over the init schedule
    double decay = std::pow(0.01, static_cast<double>(iter) / cfg.schedule.init_iters);
    adam.step(set, grads, cfg.schedule.lr, train_all, decay);

    if (log)
      log->rows.push_back({iter, e_color,
                           cfg.weights.lambda_lap * e_lap +
                               cfg.weights.lambda_iso * e_iso +
                               cfg.weights.lambda_size * e_size,
                           0.0, set.size()});
  }

  // prune by opacity to the budget
  std::vector<uint32_t> order(set.size());
  for (uint32_t i = 0; i < set.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
    double oa = set.activated_opacity(a), ob = set.activated_opacity(b);
    if (oa != ob) return oa > ob;
    return a < b;
  });
  std::vector<uint32_t> dead;
  for (std::size_t r = 0; r < order.size(); ++r)
    if (r >= cfg.budget || set.activated_opacity(order[r]) < cfg.tau_opacity)
      dead.push_back(order[r]);
  set.remove_indices(dead);
  if (set.size() < 8)
    throw std::runtime_error("initialization failure: budget prune left " +
                             std::to_string(set.size()) + " Gaussians");

  // survivors get compact final ids
  MotionState state;
  state.frame = 1;
  state.set = std::move(set);
  for (uint32_t i = 0; i < state.set.size(); ++i) state.set.ids[i] = i;
  state.graph = knn_build(state.set, cfg.knn_k);
  for (uint32_t i = 0; i < state.set.size(); ++i) {
    GlutEntry e;
    e.id = i;
    e.birth = 1;
    e.origin = GaussianOrigin::Initial;
    e.birth_position = state.set.position(i);
    state.glut.add(e);
  }
  return state;
}

FrameLog track_frame(MotionState& state, OracleCache& cache, uint32_t frame,
                     const RegistrationConfig& cfg) {
  if (frame != state.frame + 1)
    throw stage_order_error("track_frame: expected frame " +
                            std::to_string(state.frame + 1) + ", got " +
                            std::to_string(frame));
  const SyntheticSequence& seq = cache.sequence();
  int views = static_cast<int>(seq.cameras.size());
  const TrainSchedule& sched = cfg.schedule;
  FrameLog log;

  FrameWork fw;
  fw.work = state.set;
  fw.ref = state.set;
  fw.graph = state.graph;
  fw.cand_flag.assign(fw.work.size(), 0);
  fw.grad_norm_accum.assign(fw.work.size(), 0.0);
  fw.grad_norm_count.assign(fw.work.size(), 0);

  Rng densify_rng(seed_combine(cfg.seed, 0x64656e73ull, frame));
  std::vector<double> color_hist;
  double bbox_diag = fw.work.bbox_diagonal();

  for (int iter = 1; iter <= sched.track_iters; ++iter) {
    int v = (iter - 1) % views;
    RenderedFrame rendered = splat(fw.work, seq.cameras[v]);
    Image upstream;
    double e_color = color_loss(rendered.color, cache.render(frame, v).color,
                                cfg.weights.lambda_dssim, &upstream);
    GaussianGrads grads = splat_backward(fw.work, seq.cameras[v], upstream);

    GaussianGrads arap_grads;
    double e_smooth = arap_energy(fw.ref, fw.work, fw.graph, &arap_grads);
    for (std::size_t k = 0; k < grads.pos.size(); ++k)
      grads.pos[k] += cfg.weights.lambda_smooth * arap_grads.pos[k];
    for (std::size_t k = 0; k < grads.rot.size(); ++k)
      grads.rot[k] += cfg.weights.lambda_smooth * arap_grads.rot[k];

    for (std::size_t i = 0; i < fw.work.size(); ++i) {
      Vec3 g{grads.pos[3 * i], grads.pos[3 * i + 1], grads.pos[3 * i + 2]};
      fw.grad_norm_accum[i] += norm(g);
      fw.grad_norm_count[i] += 1;
    }

    fw.adam.step(fw.work, grads, sched.lr, fw.cand_flag);

    color_hist.push_back(e_color);
    double ratio = divergence_ratio(color_hist, views);
    if (ratio > 1.5)
      throw divergence_error("color loss rose " + std::to_string(ratio) +
                             "x over a " + std::to_string(kDivergenceWindow) +
                             "-iteration window at frame " + std::to_string(frame));
    log.rows.push_back({iter, e_color,
                        cfg.weights.lambda_smooth * e_smooth, 0.0, fw.work.size()});
    log.rows.back().e_total = e_color + cfg.weights.lambda_smooth * e_smooth;

    // ---- candidate insertion --------------------------------------------
    if (iter == sched.candidate_insert_iter) {
      auto pairs = pair_views(seq.cameras);
      std::vector<Candidate> cands =
          propose_candidates(cache, frame, pairs, cfg.match_density);

      std::vector<uint8_t> view_used(views, 0);
      for (auto [va, vb] : pairs) view_used[va] = view_used[vb] = 1;
      std::vector<TemporalWarp> warps(views);
      std::vector<Image> errmaps(views);
      for (int w = 0; w < views; ++w) {
        if (!view_used[w]) continue;
        warps[w] = oracle_temporal_track(cache, frame, w);
        RenderedFrame model = splat(fw.work, seq.cameras[w]);
        errmaps[w] = error_map(model.color, cache.render(frame, w).color);
      }

      std::size_t before = cands.size();
      cands = filter_w1(cands, warps, &log.discarded_oob);
      log.discarded_w1 = before - cands.size() - log.discarded_oob;
      before = cands.size();
      cands = filter_w2(cands, errmaps, cfg.epsilon_w2);
      log.discarded_w2 = before - cands.size();

      if (!cands.empty()) {
        std::vector<Vec3> cpos(cands.size());
        for (std::size_t i = 0; i < cands.size(); ++i) cpos[i] = cands[i].position;
        std::vector<double> spacing = local_spacing(cpos);
        std::vector<uint32_t> new_nodes;
        for (std::size_t i = 0; i < cands.size(); ++i) {
          uint32_t id = state.glut.next_id();
          double ls = std::log(spacing[i]);
          new_nodes.push_back(static_cast<uint32_t>(fw.work.size()));
          fw.append_entry(id, cands[i].position, Quat{}, {ls, ls, ls}, 0.0,
                          cands[i].color);
          GlutEntry e;
          e.id = id;
          e.birth = frame;
          e.origin = GaussianOrigin::Candidate;
          e.birth_position = cands[i].position;
          state.glut.add(e);
        }
        fw.adam.ensure_size(fw.work);
        knn_update_local(fw.graph, fw.work, new_nodes);
        log.inserted = cands.size();
      }
    }

    // ---- maintenance ----------------------------------------------------
    if (iter > sched.candidate_insert_iter && iter % sched.maintenance_period == 0 &&
        iter < sched.track_iters) {
      // densify candidate-origin entries with large accumulated gradients
      std::vector<uint32_t> new_nodes;
      std::size_t before_count = fw.work.size();
      for (std::size_t i = 0; i < before_count; ++i) {
        if (!fw.cand_flag[i] || fw.grad_norm_count[i] == 0) continue;
        double mean_grad = fw.grad_norm_accum[i] / fw.grad_norm_count[i];
        if (mean_grad <= cfg.tau_grad) continue;
        Vec3 sc = fw.work.scale(i);
        double max_scale = std::max({sc.x, sc.y, sc.z});
        uint32_t id = state.glut.next_id();
        Vec3 p = fw.work.position(i);
        Quat q = fw.work.rotation(i);
        Vec3 ls{fw.work.log_scale[3 * i], fw.work.log_scale[3 * i + 1],
                fw.work.log_scale[3 * i + 2]};
        int shp = fw.work.sh_per_gaussian();
        std::vector<double> sh_copy(fw.work.sh.begin() + static_cast<long>(shp * i),
                                    fw.work.sh.begin() + static_cast<long>(shp * (i + 1)));
        double op = fw.work.opacity[i];
        Vec3 new_p = p;
        if (max_scale > 0.01 * bbox_diag) {
          // split: shrink in place, spawn a sampled sibling
          Vec3 offset{sc.x * densify_rng.normal(), sc.y * densify_rng.normal(),
                      sc.z * densify_rng.normal()};
          new_p = p + rotate(q, offset);
          const double shrink = std::log(1.6);
          for (int a = 0; a < 3; ++a) fw.work.log_scale[3 * i + a] -= shrink;
          ls = {ls.x - shrink, ls.y - shrink, ls.z - shrink};
        }
        new_nodes.push_back(static_cast<uint32_t>(fw.work.size()));
        fw.append_entry(id, new_p, q, ls, op, {0.5, 0.5, 0.5});
        std::copy(sh_copy.begin(), sh_copy.end(),
                  fw.work.sh.end() - static_cast<long>(shp));
        GlutEntry e;
        e.id = id;
        e.birth = frame;
        e.origin = GaussianOrigin::Densified;
        e.birth_position = new_p;
        state.glut.add(e);
      }
      log.densified += new_nodes.size();
      fw.adam.ensure_size(fw.work);
      if (!new_nodes.empty()) knn_update_local(fw.graph, fw.work, new_nodes);

      log.pruned += prune_low_opacity(fw, state.glut, frame, cfg.tau_opacity);

      // refresh local connectivity around candidate-origin nodes
      std::vector<uint32_t> seeds;
      for (uint32_t i = 0; i < fw.work.size(); ++i)
        if (fw.cand_flag[i]) seeds.push_back(i);
      if (!seeds.empty()) {
        std::vector<uint32_t> marked = two_ring(fw.graph, seeds);
        knn_update_local(fw.graph, fw.work, marked);
      }

      std::fill(fw.grad_norm_accum.begin(), fw.grad_norm_accum.end(), 0.0);
      std::fill(fw.grad_norm_count.begin(), fw.grad_norm_count.end(), 0);
    }
  }

  // ---- merge and finalize ------------------------------------------------
  for (auto& e : state.glut.entries)
    if (e.birth == frame) {
      std::size_t i = fw.work.index_of(e.id);
      if (i != GaussianSet::npos) e.birth_position = fw.work.position(i);
    }
  state.set = std::move(fw.work);
  state.graph = knn_build(state.set, cfg.knn_k);
  state.frame = frame;
  return log;
}

// --------------------------------------------------------- checkpoints ----

namespace {

std::string frame_dir(const std::string& dir, uint32_t frame) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "/frames/%04u", frame);
  return dir + buf;
}

}  // namespace

void save_motion_checkpoint(const std::string& dir, const MotionState& state,
                            const FrameLog& log) {
  std::string fdir = frame_dir(dir, state.frame);
  fs::create_directories(fdir);
  write_gaussians(fdir + "/motion.tgs", state.set);
  write_graph(fdir + "/graph.tgg", state.graph);
  write_glut(dir + "/glut.tgl", state.glut);  // always the latest
  std::ofstream os(fdir + "/log.csv");
  os << "iter,e_color,e_smooth,e_total,count\n";
  char buf[160];
  for (const auto& r : log.rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%zu\n", r.iter, r.e_color,
                  r.e_smooth, r.e_total, r.count);
    os << buf;
  }
  std::snprintf(buf, sizeof(buf), "# inserted=%zu pruned=%zu densified=%zu w1=%zu w2=%zu oob=%zu\n",
                log.inserted, log.pruned, log.densified, log.discarded_w1,
                log.discarded_w2, log.discarded_oob);
  os << buf;
}

MotionState load_motion_checkpoint(const std::string& dir, uint32_t frame) {
  std::string fdir = frame_dir(dir, frame);
  if (!fs::exists(fdir + "/motion.tgs"))
    throw stage_order_error("missing motion checkpoint for frame " +
                            std::to_string(frame) + " under " + dir);
  MotionState state;
  state.frame = frame;
  state.set = read_gaussians(fdir + "/motion.tgs");
  state.graph = read_graph(fdir + "/graph.tgg");
  state.glut = read_glut(dir + "/glut.tgl");
  return state;
}

}  // namespace tgs
