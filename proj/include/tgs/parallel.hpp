#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace tgs {

// Fixed-block OpenMP helpers. The block structure depends only on the
// problem size, never on the thread count, and block partials are combined
// in index order — so every reduction is bit-reproducible for any value of
// OMP_NUM_THREADS.

constexpr std::size_t kDefaultBlock = 64;

inline std::size_t block_count(std::size_t n, std::size_t block) {
  return (n + block - 1) / block;
}

// body(block_index, lo, hi)
template <class Body>
void for_each_block(std::size_t n, std::size_t block, const Body& body) {
  std::ptrdiff_t nb = static_cast<std::ptrdiff_t>(block_count(n, block));
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t b = 0; b < nb; ++b) {
    std::size_t lo = static_cast<std::size_t>(b) * block;
    std::size_t hi = std::min(n, lo + block);
    body(static_cast<std::size_t>(b), lo, hi);
  }
}

// body(i) over [0, n)
template <class Body>
void parallel_for(std::size_t n, const Body& body) {
  for_each_block(n, kDefaultBlock, [&](std::size_t, std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) body(i);
  });
}

// Ordered block reduction of term(i) over [0, n).
template <class Term>
double reduce_sum(std::size_t n, const Term& term, std::size_t block = kDefaultBlock) {
  std::vector<double> partial(block_count(n, block), 0.0);
  for_each_block(n, block, [&](std::size_t b, std::size_t lo, std::size_t hi) {
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += term(i);
    partial[b] = acc;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace tgs
