#pragma once

#include <cassert>
#include <span>
#include <vector>

#include "hsbm/error.hpp"

namespace hsbm {

// Posterior and aggregate statistics attached to one dendrogram node.
struct node_state_t {
  double alpha = 1.0;          // posterior shape, > 0
  double beta = 1.0;           // posterior rate / second shape, > 0
  double edge_stat = 0.0;      // E_r: expected edge mass with LCA at r
  double exposure_stat = 0.0;  // W_r: expected pair exposure with LCA at r
  double vol = 0.0;            // membership-weighted vertex mass under r
};

// Complete binary dendrogram of depth D with K = 2^D leaves, heap indexed:
// root 1, children of r are 2r and 2r+1, leaves occupy [2^D, 2^{D+1}).
// Leaf labels are 1-based: label k sits at heap index k + 2^D - 1.
struct tree_t {
  int depth = 0;
  int leaf_count = 0;
  std::vector<node_state_t> nodes;  // heap indexed, slot 0 unused

  static constexpr int max_depth = 20;

  static tree_t build(int depth, double a0 = 1.0, double b0 = 1.0) {
    if (depth < 1 || depth > max_depth)
      throw data_error("tree depth must lie in [1, 20]");
    if (!(a0 > 0.0) || !(b0 > 0.0)) throw data_error("prior parameters must be positive");
    tree_t t;
    t.depth = depth;
    t.leaf_count = 1 << depth;
    node_state_t init;
    init.alpha = a0;
    init.beta = b0;
    t.nodes.assign(static_cast<std::size_t>(2 * t.leaf_count), init);
    return t;
  }

  int node_count() const { return 2 * leaf_count - 1; }

  static int parent(int r) { return r >> 1; }
  static int left(int r) { return 2 * r; }
  static int right(int r) { return 2 * r + 1; }
  static int sibling(int r) { return r ^ 1; }

  bool is_leaf(int r) const { return r >= leaf_count; }
  int leaf_heap(int label) const {
    assert(1 <= label && label <= leaf_count);
    return label + leaf_count - 1;
  }
  int leaf_label(int heap) const {
    assert(is_leaf(heap));
    return heap - leaf_count + 1;
  }

  node_state_t& at(int r) { return nodes[static_cast<std::size_t>(r)]; }
  const node_state_t& at(int r) const { return nodes[static_cast<std::size_t>(r)]; }

  // Heap index of the lowest common ancestor of two leaf labels.
  int lca(int a, int b) const {
    int u = leaf_heap(a), v = leaf_heap(b);
    while (u != v) {
      u >>= 1;
      v >>= 1;
    }
    return u;
  }

  // Heap indices from leaf(label) up to the root; length depth + 1.
  std::vector<int> path_to_root(int label) const {
    std::vector<int> path;
    path.reserve(static_cast<std::size_t>(depth + 1));
    for (int r = leaf_heap(label); r >= 1; r >>= 1) path.push_back(r);
    return path;
  }

  // Smallest subtree covering every leaf in U plus the current label.
  // U empty means the traversal degenerates to the current leaf itself.
  int restriction_root(std::span<const int> U, int current) const {
    int lo = current, hi = current;
    for (int k : U) {
      lo = k < lo ? k : lo;
      hi = k > hi ? k : hi;
    }
    return lca(lo, hi);
  }
};

// Per-vertex tree statistics: d[r] = edge mass from the vertex into leaves
// under r, n[r] = the vertex's own membership mass under r.
struct vertex_tree_stats_t {
  std::vector<double> d;  // heap indexed, slot 0 unused
  std::vector<double> n;
};

// Upward additive accumulation of leaf-level stats; every internal value is
// the sum over its subtree's leaves.
inline vertex_tree_stats_t accumulate_vertex_stats(const tree_t& t,
                                                   std::span<const double> leaf_d,
                                                   std::span<const double> leaf_n) {
  const int K = t.leaf_count;
  if (static_cast<int>(leaf_d.size()) != K || static_cast<int>(leaf_n.size()) != K)
    throw data_error("leaf stat vectors must have one entry per leaf");
  vertex_tree_stats_t s;
  s.d.assign(static_cast<std::size_t>(2 * K), 0.0);
  s.n.assign(static_cast<std::size_t>(2 * K), 0.0);
  for (int k = 1; k <= K; ++k) {
    const double dv = leaf_d[k - 1];
    const double nv = leaf_n[k - 1];
    if (dv == 0.0 && nv == 0.0) continue;
    for (int r = t.leaf_heap(k); r >= 1; r >>= 1) {
      s.d[static_cast<std::size_t>(r)] += dv;
      s.n[static_cast<std::size_t>(r)] += nv;
    }
  }
  return s;
}

}  // namespace hsbm
