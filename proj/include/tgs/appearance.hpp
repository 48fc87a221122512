#pragma once

#include <cstdint>
#include <vector>

#include "tgs/types.hpp"

namespace tgs {

// One appearance Gaussian tied to its anchor motion Gaussian. The offset and
// rotation are the creation-frame values; activation replays them through the
// anchor's relative rotation since birth.
struct AnchorLink {
  uint32_t appearance_id = 0;  // anchor_id * K + slot
  uint32_t anchor_id = 0;
  uint32_t slot = 0;  // [0, K)
  Vec3 local_offset;
  Quat local_rotation;
};

// Derives K appearance Gaussians for one anchor by sampling along its
// outgoing graph edges: slot k sits at u in [1/3, 1/2] of the way toward
// neighbor k (u seeded from (seed, anchor id, slot)), with isotropic scale
// beta * |offset| and the remaining attributes inherited from the anchor.
// Anchors with fewer than K edges cycle their edge list to fill all slots.
// Appends the derived entries to `out` and their links to `links`.
void derive_appearance(const GaussianSet& motion, std::size_t anchor_index,
                       const DeformGraph& graph, int k_slots, double beta,
                       uint64_t seed, GaussianSet& out, std::vector<AnchorLink>& links);

// Carried appearance attributes: last optimized non-positional state per
// appearance id, inherited across frames.
struct AppearanceCarry {
  std::vector<uint32_t> ids;
  std::vector<double> log_scale;  // 3 per id
  std::vector<double> opacity;    // 1 per id
  std::vector<double> sh;         // sh_per_gaussian per id
};

// Activates every link whose anchor is alive at `frame` and warps it rigidly
// by its anchor's rotation since the anchor's birth:
//   p_t = anchor_p_t + R(anchor_q_t * anchor_q_birth^-1) * local_offset
//   q_t = (anchor_q_t * anchor_q_birth^-1) * local_rotation
// Non-positional attributes come from `carry` when present, otherwise from
// the link's derivation values stored in `derived`.
// `birth_state` maps anchor id -> (position, rotation) at the anchor's birth
// frame; `motion` is the solved motion state at `frame`.
struct AnchorBirthState {
  std::vector<uint32_t> ids;
  std::vector<Vec3> pos;
  std::vector<Quat> rot;

  std::size_t index_of(uint32_t id) const;
  void add(uint32_t id, Vec3 p, Quat q);
};

GaussianSet activate_and_warp(uint32_t frame, const GaussianSet& motion,
                              const Glut& glut, const std::vector<AnchorLink>& links,
                              const GaussianSet& derived,
                              const AnchorBirthState& birth_state,
                              const AppearanceCarry& carry);

// Stores the non-positional attributes of `active` into `carry`.
void update_carry(AppearanceCarry& carry, const GaussianSet& active);

}  // namespace tgs
