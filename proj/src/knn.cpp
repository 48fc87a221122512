#include "tgs/knn.hpp"

#include <algorithm>
#include <queue>

#include "tgs/parallel.hpp"

namespace tgs {

namespace {

struct Cand {
  double d2;
  uint32_t idx;
  bool operator<(const Cand& o) const {  // max-heap order: worst on top
    if (d2 != o.d2) return d2 < o.d2;
    return idx < o.idx;
  }
};

}  // namespace

KnnIndex::KnnIndex(const double* xyz, std::size_t n)
    : xyz_(xyz, xyz + 3 * n), n_(n) {
  order_.resize(n);
  for (std::size_t i = 0; i < n; ++i) order_[i] = static_cast<uint32_t>(i);
  if (n > 0) root_ = build(0, static_cast<uint32_t>(n));
}

KnnIndex::KnnIndex(const std::vector<Vec3>& pts)
    : KnnIndex(reinterpret_cast<const double*>(pts.data()), pts.size()) {
  static_assert(sizeof(Vec3) == 3 * sizeof(double));
}

uint32_t KnnIndex::build(uint32_t lo, uint32_t hi) {
  Node node;
  node.lo = lo;
  node.hi = hi;
  node.left = node.right = kInvalidId;
  node.axis = 0;
  node.split = 0;
  uint32_t id = static_cast<uint32_t>(nodes_.size());
  nodes_.push_back(node);
  if (hi - lo <= 8) return id;  // leaf bucket

  // split on the widest axis at the median
  double lo3[3] = {1e300, 1e300, 1e300}, hi3[3] = {-1e300, -1e300, -1e300};
  for (uint32_t i = lo; i < hi; ++i)
    for (int a = 0; a < 3; ++a) {
      double v = xyz_[3 * order_[i] + a];
      lo3[a] = std::min(lo3[a], v);
      hi3[a] = std::max(hi3[a], v);
    }
  int axis = 0;
  for (int a = 1; a < 3; ++a)
    if (hi3[a] - lo3[a] > hi3[axis] - lo3[axis]) axis = a;

  uint32_t mid = (lo + hi) / 2;
  std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                   [&](uint32_t a, uint32_t b) {
                     double va = xyz_[3 * a + axis], vb = xyz_[3 * b + axis];
                     if (va != vb) return va < vb;
                     return a < b;
                   });
  nodes_[id].axis = static_cast<uint8_t>(axis);
  nodes_[id].split = xyz_[3 * order_[mid] + axis];
  uint32_t l = build(lo, mid);
  uint32_t r = build(mid, hi);
  nodes_[id].left = l;
  nodes_[id].right = r;
  return id;
}

std::vector<uint32_t> KnnIndex::query(Vec3 q, int k, uint32_t exclude) const {
  std::priority_queue<Cand> heap;  // worst candidate on top
  auto consider = [&](uint32_t idx) {
    if (idx == exclude) return;
    Vec3 p = point(idx);
    double d2 = norm2(p - q);
    Cand c{d2, idx};
    if (static_cast<int>(heap.size()) < k) {
      heap.push(c);
    } else if (c < heap.top()) {
      heap.pop();
      heap.push(c);
    }
  };

  // iterative depth-first descent, near child first
  std::vector<uint32_t> stack;
  if (root_ != kInvalidId) stack.push_back(root_);
  while (!stack.empty()) {
    uint32_t id = stack.back();
    stack.pop_back();
    const Node& node = nodes_[id];
    if (node.left == kInvalidId) {
      for (uint32_t i = node.lo; i < node.hi; ++i) consider(order_[i]);
      continue;
    }
    double qv = node.axis == 0 ? q.x : (node.axis == 1 ? q.y : q.z);
    double delta = qv - node.split;
    uint32_t near = delta < 0 ? node.left : node.right;
    uint32_t far = delta < 0 ? node.right : node.left;
    // the far side is prunable only when it cannot beat the current worst,
    // including the index tie-break (equal distance must still be explored)
    bool prune = static_cast<int>(heap.size()) == k && delta * delta > heap.top().d2;
    if (!prune) stack.push_back(far);
    stack.push_back(near);
  }

  std::vector<Cand> out;
  out.reserve(heap.size());
  while (!heap.empty()) {
    out.push_back(heap.top());
    heap.pop();
  }
  std::sort(out.begin(), out.end());
  std::vector<uint32_t> idx(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) idx[i] = out[i].idx;
  return idx;
}

namespace {

DeformGraph build_graph(const KnnIndex& index, int k, double influence_radius) {
  std::size_t n = index.size();
  if (n < static_cast<std::size_t>(k) + 1)
    throw invalid_input("knn_build: need at least k+1 points, got " +
                        std::to_string(n));
  DeformGraph g;
  g.k = k;
  g.neighbors.resize(n);
  g.weights.resize(n);

  parallel_for(n, [&](std::size_t i) {
    g.neighbors[i] = index.query(index.point(i), k, static_cast<uint32_t>(i));
  });

  double l = influence_radius;
  if (l <= 0) {
    double total = reduce_sum(n, [&](std::size_t i) {
      double s = 0;
      for (uint32_t j : g.neighbors[i]) s += norm(index.point(i) - index.point(j));
      return s;
    });
    double edges = static_cast<double>(n) * k;
    l = 2.0 * total / edges;
    if (!(l > 0)) l = 1.0;  // all points coincident
  }
  g.influence_radius = l;

  parallel_for(n, [&](std::size_t i) {
    g.weights[i].resize(g.neighbors[i].size());
    for (std::size_t e = 0; e < g.neighbors[i].size(); ++e)
      g.weights[i][e] = edge_weight(index.point(i), index.point(g.neighbors[i][e]), l);
  });
  return g;
}

}  // namespace

DeformGraph knn_build(const GaussianSet& set, int k, double influence_radius) {
  KnnIndex index(set.pos.data(), set.size());
  return build_graph(index, k, influence_radius);
}

DeformGraph knn_build(const std::vector<Vec3>& positions, int k, double influence_radius) {
  KnnIndex index(positions);
  return build_graph(index, k, influence_radius);
}

void knn_update_local(DeformGraph& graph, const GaussianSet& set,
                      const std::vector<uint32_t>& marked) {
  KnnIndex index(set.pos.data(), set.size());
  double l = graph.influence_radius;
  parallel_for(marked.size(), [&](std::size_t m) {
    uint32_t i = marked[m];
    graph.neighbors[i] = index.query(index.point(i), graph.k, i);
    graph.weights[i].resize(graph.neighbors[i].size());
    for (std::size_t e = 0; e < graph.neighbors[i].size(); ++e)
      graph.weights[i][e] =
          edge_weight(index.point(i), index.point(graph.neighbors[i][e]), l);
  });
}

std::vector<uint32_t> two_ring(const DeformGraph& graph,
                               const std::vector<uint32_t>& seeds) {
  std::size_t n = graph.size();
  std::vector<std::vector<uint32_t>> undirected(n);
  for (std::size_t i = 0; i < n; ++i)
    for (uint32_t j : graph.neighbors[i]) {
      undirected[i].push_back(j);
      undirected[j].push_back(static_cast<uint32_t>(i));
    }
  std::vector<uint8_t> mark(n, 0);
  std::vector<uint32_t> frontier = seeds;
  for (uint32_t s : seeds) mark[s] = 1;
  for (int ring = 0; ring < 2; ++ring) {
    std::vector<uint32_t> next;
    for (uint32_t u : frontier)
      for (uint32_t v : undirected[u])
        if (!mark[v]) {
          mark[v] = 1;
          next.push_back(v);
        }
    frontier = std::move(next);
  }
  std::vector<uint32_t> out;
  for (uint32_t i = 0; i < n; ++i)
    if (mark[i]) out.push_back(i);
  return out;
}

}  // namespace tgs
