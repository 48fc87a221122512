#include "tgs/adam.hpp"

#include <cmath>

#include "tgs/parallel.hpp"

namespace tgs {

namespace {

inline void adam_update(double& x, const double g, double& m, double& v, double lr,
                        double bc1, double bc2) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  m = beta1 * m + (1 - beta1) * g;
  v = beta2 * v + (1 - beta2) * g * g;
  x -= lr * (m / bc1) / (std::sqrt(v / bc2) + eps);
}

}  // namespace

void AdamState::step(GaussianSet& set, const GaussianGrads& g, const LearningRates& lr,
                     const std::vector<uint8_t>& train_all, double pos_lr_scale) {
  ensure_size(set);
  ++t_;
  double bc1 = 1.0 - std::pow(0.9, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(0.999, static_cast<double>(t_));
  int shp = set.sh_per_gaussian();

  parallel_for(set.size(), [&](std::size_t i) {
    for (int a = 0; a < 3; ++a)
      adam_update(set.pos[3 * i + a], g.pos[3 * i + a], m_pos_[3 * i + a],
                  v_pos_[3 * i + a], lr.pos * pos_lr_scale, bc1, bc2);
    for (int a = 0; a < 4; ++a)
      adam_update(set.rot[4 * i + a], g.rot[4 * i + a], m_rot_[4 * i + a],
                  v_rot_[4 * i + a], lr.rot, bc1, bc2);
    adam_update(set.opacity[i], g.opacity[i], m_op_[i], v_op_[i], lr.opacity, bc1, bc2);
    if (!train_all.empty() && !train_all[i]) return;
    for (int a = 0; a < 3; ++a)
      adam_update(set.log_scale[3 * i + a], g.log_scale[3 * i + a], m_ls_[3 * i + a],
                  v_ls_[3 * i + a], lr.log_scale, bc1, bc2);
    for (int s = 0; s < shp; ++s) {
      std::size_t k = static_cast<std::size_t>(shp) * i + s;
      adam_update(set.sh[k], g.sh[k], m_sh_[k], v_sh_[k], lr.sh, bc1, bc2);
    }
  });
  set.renormalize_rotations();
}

void AdamState::remove_entries(const std::vector<uint32_t>& remap, int sh_per_gaussian) {
  auto compact = [&](std::vector<double>& arr, int width) {
    for (std::size_t old_i = 0; old_i < remap.size(); ++old_i) {
      uint32_t new_i = remap[old_i];
      if (new_i == kInvalidId || new_i == old_i) continue;
      for (int a = 0; a < width; ++a)
        arr[static_cast<std::size_t>(new_i) * width + a] =
            arr[old_i * static_cast<std::size_t>(width) + a];
    }
    std::size_t live = 0;
    for (uint32_t v : remap) live += v != kInvalidId;
    arr.resize(live * width);
  };
  for (auto* p : {&m_pos_, &v_pos_}) compact(*p, 3);
  for (auto* p : {&m_rot_, &v_rot_}) compact(*p, 4);
  for (auto* p : {&m_ls_, &v_ls_}) compact(*p, 3);
  for (auto* p : {&m_op_, &v_op_}) compact(*p, 1);
  for (auto* p : {&m_sh_, &v_sh_}) compact(*p, sh_per_gaussian);
}

}  // namespace tgs
