#pragma once

#include <string>
#include <vector>

#include "tgs/adam.hpp"
#include "tgs/energy.hpp"
#include "tgs/scenegen.hpp"
#include "tgs/types.hpp"

namespace tgs {

struct TrainSchedule {
  int init_iters = 6000;
  int track_iters = 6000;
  int candidate_insert_iter = 3000;
  int maintenance_period = 300;
  LearningRates lr;
};

struct RegistrationConfig {
  TrainSchedule schedule;
  LossWeights weights;          // lambda_smooth = 0.05 in the motion stage
  int knn_k = 9;
  double match_density = 0.25;  // oracle correspondence density
  double epsilon_w2 = 0.46;     // photometric gate threshold
  double tau_opacity = 0.05;    // prune below this activated opacity
  double tau_grad = 2e-4;       // densify above this mean positional gradient
  std::size_t budget = 2000;    // motion Gaussian budget after init
  double s_max_fraction = 0.05; // size hinge ceiling, fraction of bbox diagonal
  uint64_t seed = 1;
};

// Motion state carried frame to frame. The graph's weights were evaluated
// when it was (re)built at the end of the previous frame, which is exactly
// the w^{t-1} the rigidity term wants.
struct MotionState {
  uint32_t frame = 0;
  GaussianSet set;
  DeformGraph graph;
  Glut glut;
};

struct FrameLogRow {
  int iter = 0;
  double e_color = 0, e_smooth = 0, e_total = 0;
  std::size_t count = 0;
};

struct FrameLog {
  std::vector<FrameLogRow> rows;
  std::size_t inserted = 0, pruned = 0, densified = 0;
  std::size_t discarded_w1 = 0, discarded_w2 = 0, discarded_oob = 0;
};

// Greedy nearest-center view pairing: repeatedly pair the lowest-index
// unpaired camera with its nearest unpaired neighbor. An odd leftover view
// is unused.
std::vector<std::pair<int, int>> pair_views(const std::vector<Camera>& cams);

// Two-view DLT through normal equations. Returns false for degenerate rays.
bool triangulate_pair(const Camera& cam_a, double ax, double ay, const Camera& cam_b,
                      double bx, double by, Vec3* out);

// Candidate Gaussian proposal, annotated with its source pixel pair for the
// downstream gates.
struct Candidate {
  Vec3 position;
  int view_a = 0, view_b = 0;
  double ax = 0, ay = 0, bx = 0, by = 0;
  Vec3 color;  // mean of the two source pixels in the observed images
};

std::vector<Candidate> propose_candidates(OracleCache& cache, uint32_t frame,
                                          const std::vector<std::pair<int, int>>& pairs,
                                          double density);

// w1 = (1 - M^{v1}(u1)) (1 - M^{v2}(u2)); keep only w1 == 1. Candidates with
// out-of-bounds source pixels are discarded and counted.
std::vector<Candidate> filter_w1(const std::vector<Candidate>& cands,
                                 const std::vector<TemporalWarp>& warps_by_view,
                                 std::size_t* discarded_oob = nullptr);

// w2 = E^{v1}(u1) + E^{v2}(u2); discard below epsilon.
std::vector<Candidate> filter_w2(const std::vector<Candidate>& cands,
                                 const std::vector<Image>& errmaps_by_view,
                                 double epsilon);

// First-frame initialization: pair views, match, triangulate (reprojection
// gate at 1 px), optimize the init loss, prune to budget, build graph and
// lookup table. Throws when fewer than 8 points triangulate.
MotionState init_first_frame(OracleCache& cache, const RegistrationConfig& cfg,
                             FrameLog* log = nullptr);

// Tracks one frame: phase A optimizes position/rotation/opacity of the
// carried set; at the insertion iteration filtered candidates join with all
// attributes trainable; densify/prune/graph maintenance runs on the
// maintenance cadence; the frame ends with a merge and a full graph rebuild.
FrameLog track_frame(MotionState& state, OracleCache& cache, uint32_t frame,
                     const RegistrationConfig& cfg);

// Per-frame checkpoint directory helpers (motion.tgs, graph.tgg, glut.tgl,
// log.csv under <dir>/frames/NNNN/).
void save_motion_checkpoint(const std::string& dir, const MotionState& state,
                            const FrameLog& log);
MotionState load_motion_checkpoint(const std::string& dir, uint32_t frame);

}  // namespace tgs
