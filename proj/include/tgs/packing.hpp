#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tgs/types.hpp"

namespace tgs {

// classify: persistent = alive for the whole sequence (birth 1, never died);
// everything else is transient.
void classify(const Glut& glut, uint32_t total_frames, std::vector<uint32_t>* persistent,
              std::vector<uint32_t>* transient_ids);

// Interleaved z-order code: per quantization bit (most significant first)
// the triple (z, y, x) is emitted with x in the least significant position.
// Coordinates outside the bbox clamp (callers may count via `clamped`).
uint64_t morton_encode(Vec3 position, Vec3 bbox_lo, Vec3 bbox_hi, int bits_per_axis,
                       bool* clamped = nullptr);

enum class LayoutMode { Combined, LifespanOnly, MortonOnly };

// Slot layout shared by every frame of a sequence. Persistent ids come
// first, Morton-ordered by birth position; transient ids follow in
// (birth, Morton, id) order. Row-major grid, width rounded up to a multiple
// of 8. LifespanOnly and MortonOnly are the ablation orderings.
struct LayoutPlan {
  int rows = 0, cols = 0;
  uint32_t total_slots = 0;       // = ids.size(); grid may pad beyond this
  uint32_t persistent_count = 0;
  std::vector<uint32_t> slot_ids;  // slot -> global id
  uint64_t hash = 0;

  uint32_t slot_of(uint32_t id) const;  // kInvalidId when absent

 private:
  friend LayoutPlan build_layout(const Glut&, uint32_t, int, LayoutMode);
  friend LayoutPlan induced_appearance_plan(const LayoutPlan&, int);
  std::vector<std::pair<uint32_t, uint32_t>> id_to_slot_;  // sorted by id
  void finish();
};

LayoutPlan build_layout(const Glut& glut, uint32_t total_frames, int bits_per_axis = 10,
                        LayoutMode mode = LayoutMode::Combined);

// Appearance layout induced from the motion plan: appearance slot =
// anchor_slot * K + link_slot, preserving anchor order.
LayoutPlan induced_appearance_plan(const LayoutPlan& motion_plan, int k_slots);

// The appearance lookup table induced from the motion one: each anchor id
// spawns K entries with the anchor's lifespan.
Glut induced_appearance_glut(const Glut& motion, int k_slots);

// ------------------------------------------------------ attribute maps ----

struct ChannelGroup {
  std::string name;
  int channels = 0;
  std::vector<double> lo, hi;        // dequantization range per channel
  std::vector<uint16_t> samples;     // channels * rows * cols, plane-major
};

struct AttributeMaps {
  uint32_t frame = 0;
  int rows = 0, cols = 0;
  uint64_t plan_hash = 0;
  int sh_degree = 3;
  std::vector<ChannelGroup> groups;  // position, rotation, log_scale, opacity, sh

  const ChannelGroup& group(const std::string& name) const;
};

// Per-sequence quantization ranges, computed over every live attribute value.
struct AttributeRanges {
  int sh_degree = 3;
  std::vector<double> lo[5], hi[5];  // indexed by group
};

AttributeRanges compute_ranges(const std::vector<const GaussianSet*>& frames);

// Attributes an entry carries at its first live frame; pre-birth slots are
// backward-filled from these so frame-1 maps are dense.
struct BirthAttributes {
  std::vector<uint32_t> ids;  // sorted
  GaussianSet attrs;          // aligned with ids
};

BirthAttributes collect_birth_attributes(const std::vector<const GaussianSet*>& frames,
                                         const Glut& glut);

// Packs one frame. Live entries write their slots; every other slot copies
// the prior frame's quantized value (or, at frame 1, the entry's birth
// attributes), which keeps out-of-lifespan temporal diffs exactly zero.
// Returns the number of values clamped to the recorded ranges.
AttributeMaps pack_frame(uint32_t frame, const GaussianSet& live, const LayoutPlan& plan,
                         const AttributeRanges& ranges, const AttributeMaps* prior,
                         const BirthAttributes& births, std::size_t* clamped = nullptr);

// Dequantized per-slot attributes.
struct UnpackedFrame {
  int rows = 0, cols = 0;
  int sh_degree = 3;
  std::vector<double> pos, rot, log_scale, opacity, sh;  // per slot
};

UnpackedFrame unpack_frame(const AttributeMaps& maps, const LayoutPlan& plan);

// Live-slot reconstruction as a renderable set (liveness from the Glut).
GaussianSet decoded_set(const AttributeMaps& maps, const LayoutPlan& plan,
                        const Glut& glut);

// "TGM1" container, one file per frame.
void write_maps(const std::string& path, const AttributeMaps& maps);
AttributeMaps read_maps(const std::string& path);

}  // namespace tgs
