#pragma once

#include <map>
#include <string>
#include <vector>

#include "tgs/splat.hpp"
#include "tgs/types.hpp"

namespace tgs {

// ------------------------------------------------------------- configs ----

struct SceneNoise {
  double jitter_px = 0.0;   // Gaussian pixel jitter on spatial matches
  double mask_flip = 0.0;   // per-pixel temporal-mask flip probability
};

struct SceneEventSpec {
  uint32_t frame = 0;
  std::string kind;    // "appear" | "disappear"
  std::string region;  // template region name
};

// Scene template names: "sheet" (deforming sheet, optional moving occluder),
// "two_link" (articulated two-link body), "sphere_cap" (sphere with a
// detachable cap). Each template defines one auxiliary region that events
// may reference: sheet -> "patch", two_link -> "tool", sphere_cap -> "cap".
struct SceneConfig {
  std::string template_name = "sheet";
  uint32_t frames = 20;
  int views = 8;
  int width = 128, height = 128;
  uint64_t seed = 1;
  double amplitude = 1.0;      // motion scale; 0 = static
  double aux_fraction = -1.0;  // aux region share of points; <0 = template default
  bool with_occluder = false;  // sheet only: foreground square sweeping across
  std::vector<SceneEventSpec> events;
  SceneNoise noise;
};

SceneConfig load_scene_config(const std::string& path);
void save_scene_config(const std::string& path, const SceneConfig& cfg);

// --------------------------------------------------------------- types ----

struct TopologyEvent {
  uint32_t frame = 0;
  enum class Kind { Appear, Disappear } kind = Kind::Appear;
  std::vector<uint32_t> region;  // affected ground-truth identities
};

// Deterministic multi-view ground truth. Frames are 1-based throughout the
// pipeline; frames[t-1] is the live set at frame t. Identities are stable
// across frames and are born/killed only at the declared events.
struct SyntheticSequence {
  SceneConfig config;
  std::vector<Camera> cameras;
  std::vector<GaussianSet> frames;
  std::vector<TopologyEvent> events;
  Glut glut;  // ground-truth lifespans (birth positions included)

  uint32_t frame_count() const { return static_cast<uint32_t>(frames.size()); }
  const GaussianSet& frame(uint32_t t) const { return frames.at(t - 1); }
};

SyntheticSequence generate(const SceneConfig& cfg);

// Sequence directory: frame_%04d.tgs + cameras.json + events.json + glut.tgl
// + scene_config.json.
void save_sequence(const std::string& dir, const SyntheticSequence& seq);
SyntheticSequence load_sequence(const std::string& dir);

// ------------------------------------------------------------- oracles ----

// Ground-truth renders double as the "captured" footage: observed images are
// produced by the same splatter from the ground-truth sets. The cache keeps
// one render per (frame, view).
class OracleCache {
 public:
  explicit OracleCache(const SyntheticSequence& seq) : seq_(seq) {}
  const RenderedFrame& render(uint32_t frame, int view);
  const SyntheticSequence& sequence() const { return seq_; }

 private:
  const SyntheticSequence& seq_;
  std::map<std::pair<uint32_t, int>, RenderedFrame> cache_;
};

struct PixelPair {
  double ax = 0, ay = 0;  // pixel in view A
  double bx = 0, by = 0;  // pixel in view B
};

struct Correspondences {
  int view_a = 0, view_b = 0;
  std::vector<PixelPair> pairs;
};

// Samples correspondences between two views from mutually visible surface
// identities; pair count targets density * (covered pixels in view A).
// Stands in for a pretrained dense matcher. Noise-free unless jitter is set.
Correspondences oracle_spatial_match(OracleCache& cache, uint32_t frame, int view_a,
                                     int view_b, double density);

struct TemporalWarp {
  int width = 0, height = 0;
  std::vector<double> warp;    // 2 channels, absolute target pixel (x, y)
  std::vector<uint8_t> mask;   // 1 = correspondence exists, 0 = newly observed

  double warp_x(int x, int y) const { return warp[2 * (static_cast<std::size_t>(y) * width + x)]; }
  double warp_y(int x, int y) const { return warp[2 * (static_cast<std::size_t>(y) * width + x) + 1]; }
  uint8_t mask_at(int x, int y) const { return mask[static_cast<std::size_t>(y) * width + x]; }
};

// Per-pixel map from frame t to frame t-1 in one view. mask is 0 exactly
// where the pixel's front-most identity is absent or owns no pixel in the
// previous frame (appear events and full disocclusions alike); pixels with
// no surface identity keep mask 1 and an identity warp. Stands in for a
// temporal tracker. Requires frame >= 2.
TemporalWarp oracle_temporal_track(OracleCache& cache, uint32_t frame, int view);

}  // namespace tgs
