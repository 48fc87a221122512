#pragma once

#include <cstdint>
#include <vector>

#include "tgs/types.hpp"

namespace tgs {

struct LearningRates {
  double pos = 2e-4;
  double rot = 1e-3;
  double log_scale = 5e-3;
  double opacity = 5e-2;
  double sh = 2.5e-3;
};

// Adam over the struct-of-arrays Gaussian attributes. Entries appended to
// the set start with zero moments; removals remap the moment arrays.
class AdamState {
 public:
  void ensure_size(const GaussianSet& set) {
    grow(m_pos_, v_pos_, set.pos.size());
    grow(m_rot_, v_rot_, set.rot.size());
    grow(m_ls_, v_ls_, set.log_scale.size());
    grow(m_op_, v_op_, set.opacity.size());
    grow(m_sh_, v_sh_, set.sh.size());
  }

  // One Adam step. `train_all` flags entries whose scale and sh update too
  // (position, rotation and opacity always update, with lr scales applied).
  // `pos_lr_scale` multiplies the position rate (used for decay schedules).
  void step(GaussianSet& set, const GaussianGrads& g, const LearningRates& lr,
            const std::vector<uint8_t>& train_all, double pos_lr_scale = 1.0);

  void remove_entries(const std::vector<uint32_t>& remap, int sh_per_gaussian);
  void reset() {
    t_ = 0;
    m_pos_.clear(); v_pos_.clear();
    m_rot_.clear(); v_rot_.clear();
    m_ls_.clear(); v_ls_.clear();
    m_op_.clear(); v_op_.clear();
    m_sh_.clear(); v_sh_.clear();
  }

 private:
  static void grow(std::vector<double>& m, std::vector<double>& v, std::size_t n) {
    if (m.size() < n) {
      m.resize(n, 0.0);
      v.resize(n, 0.0);
    }
  }

  uint64_t t_ = 0;
  std::vector<double> m_pos_, v_pos_, m_rot_, v_rot_, m_ls_, v_ls_, m_op_, v_op_,
      m_sh_, v_sh_;
};

}  // namespace tgs
