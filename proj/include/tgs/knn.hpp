#pragma once

#include <cstddef>
#include <vector>

#include "tgs/types.hpp"

namespace tgs {

// Exact k-nearest-neighbor queries over a fixed point set, backed by a
// median-split kd-tree. Ties in distance break toward the lower point index,
// so results are independent of tree layout.
class KnnIndex {
 public:
  KnnIndex(const double* xyz, std::size_t n);
  explicit KnnIndex(const std::vector<Vec3>& pts);

  // k nearest points to `query`, excluding `exclude` (pass kInvalidId to keep
  // all). Returned indices are sorted by (distance^2, index) ascending.
  std::vector<uint32_t> query(Vec3 query, int k, uint32_t exclude) const;

  std::size_t size() const { return n_; }
  Vec3 point(std::size_t i) const {
    return {xyz_[3 * i], xyz_[3 * i + 1], xyz_[3 * i + 2]};
  }

 private:
  struct Node {
    uint32_t lo, hi;       // range in order_
    uint32_t left, right;  // child node ids, kInvalidId for leaf
    uint8_t axis;
    double split;
  };

  uint32_t build(uint32_t lo, uint32_t hi);

  std::vector<double> xyz_;
  std::size_t n_ = 0;
  std::vector<uint32_t> order_;
  std::vector<Node> nodes_;
  uint32_t root_ = kInvalidId;
};

// Per-edge blend weight exp(-d^2 / l^2).
inline double edge_weight(Vec3 a, Vec3 b, double l) {
  double d2 = norm2(a - b);
  return std::exp(-d2 / (l * l));
}

// Builds the directed KNN deformation graph over `set` positions.
// influence_radius <= 0 selects the default: twice the mean edge length of
// the freshly built graph. Requires at least k+1 points.
DeformGraph knn_build(const GaussianSet& set, int k, double influence_radius = 0.0);
DeformGraph knn_build(const std::vector<Vec3>& positions, int k,
                      double influence_radius = 0.0);

// Recomputes neighbor lists (and weights) for `marked` nodes only, against
// all current positions. Unmarked nodes keep their lists.
void knn_update_local(DeformGraph& graph, const GaussianSet& set,
                      const std::vector<uint32_t>& marked);

// Undirected 2-ring neighborhood of `seeds` (seeds included).
std::vector<uint32_t> two_ring(const DeformGraph& graph,
                               const std::vector<uint32_t>& seeds);

}  // namespace tgs
