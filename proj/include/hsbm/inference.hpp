#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "hsbm/graph.hpp"
#include "hsbm/kernels.hpp"
#include "hsbm/tree.hpp"

namespace hsbm {

enum class model_t { hdsb, hsb };
enum class local_rule_t { mf, collapsed };
enum class update_mode_t { deterministic, probabilistic };
enum class sweep_order_t { ascending, shuffled };
enum class init_rule_t { bisect, random };

struct fit_config_t {
  model_t model = model_t::hdsb;
  local_rule_t rule = local_rule_t::collapsed;
  update_mode_t mode = update_mode_t::deterministic;
  bool restricted = true;
  int depth = 0;  // 0 = derive from vertex count
  double a0 = 1.0;
  double b0 = 1.0;
  int max_sweeps = 0;  // 0 = mode default (20 deterministic, 100 probabilistic)
  double tol = 1e-6;
  std::uint64_t seed = 1;
  sweep_order_t order = sweep_order_t::ascending;
  init_rule_t init = init_rule_t::bisect;
  double prune_threshold = 0.0;
  // Evidence a bisection split must clear, in nats per unit of subgraph edge
  // mass. Greedy cut search inflates structureless splits by roughly 0.04-0.11
  // per edge (selection over cuts), while genuine two-block structure is worth
  // 0.18+ even on a 6-vertex barbell, so 0.15 separates the two.
  double split_gate = 0.15;

  prior_t prior() const { return {a0, b0}; }
  int sweeps_cap() const {
    if (max_sweeps > 0) return max_sweeps;
    return mode == update_mode_t::deterministic ? 20 : 100;
  }
};

// Smallest depth whose leaf count reaches n/10, clamped to [1, 20].
inline int auto_tree_depth(int n) {
  int d = 1;
  while (d < tree_t::max_depth && (1 << d) * 10 < n) ++d;
  return d;
}

// Group assignments: `hard` always holds a 1-based leaf label per vertex;
// `soft` is empty in hard mode, otherwise rows of length K summing to 1 with
// hard[i] = argmax of row i.
struct membership_t {
  std::vector<int> hard;
  std::vector<std::vector<double>> soft;

  int size() const { return static_cast<int>(hard.size()); }
  bool has_soft() const { return !soft.empty(); }

  double mu(int i, int k) const {
    if (has_soft()) return soft[static_cast<std::size_t>(i)][static_cast<std::size_t>(k - 1)];
    return hard[static_cast<std::size_t>(i)] == k ? 1.0 : 0.0;
  }

  void set_hard(int i, int k) {
    hard[static_cast<std::size_t>(i)] = k;
    if (has_soft()) {
      auto& row = soft[static_cast<std::size_t>(i)];
      std::fill(row.begin(), row.end(), 0.0);
      row[static_cast<std::size_t>(k - 1)] = 1.0;
    }
  }

  void ensure_soft(int K) {
    if (has_soft()) return;
    soft.assign(hard.size(), std::vector<double>(static_cast<std::size_t>(K), 0.0));
    for (std::size_t i = 0; i < hard.size(); ++i)
      soft[i][static_cast<std::size_t>(hard[i] - 1)] = 1.0;
  }

  static membership_t from_hard(std::vector<int> labels) {
    membership_t m;
    m.hard = std::move(labels);
    return m;
  }
};

// Per-kernel pair exposure: the weight a pair (i, j) contributes to W is
// scale * mass(i) * mass(j), matching rho for Poisson and 1 for Bernoulli.
template <class Kernel>
struct kernel_traits;

template <>
struct kernel_traits<poisson_kernel_t> {
  static constexpr bool requires_binary = false;
  static double mass(const graph_t& g, int i) { return g.degree[static_cast<std::size_t>(i)]; }
  static double scale(const graph_t& g) {
    return g.total_degree > 0.0 ? 1.0 / g.total_degree : 0.0;
  }
};

template <>
struct kernel_traits<bernoulli_kernel_t> {
  static constexpr bool requires_binary = true;
  static double mass(const graph_t&, int) { return 1.0; }
  static double scale(const graph_t&) { return 1.0; }
};

struct op_counters_t {
  std::uint64_t edge_scans = 0;     // neighbor entries read
  std::uint64_t node_updates = 0;   // per-node statistic add/remove steps
  std::uint64_t nodes_scored = 0;   // traversal node visits
  std::uint64_t dense_row_ops = 0;  // O(K) membership row maintenance (soft mode)

  void reset() { *this = op_counters_t{}; }
  std::uint64_t total() const { return edge_scans + node_updates + nodes_scored + dense_row_ops; }
};

// Exponentiates log weights in place and normalizes them to sum to 1.
inline void softmax_in_place(std::span<double> logw) {
  if (logw.empty()) return;
  double mx = logw[0];
  for (double v : logw) mx = std::max(mx, v);
  double z = 0.0;
  for (double& v : logw) {
    v = std::exp(v - mx);
    z += v;
  }
  for (double& v : logw) v /= z;
}

// Gauss-Seidel sweep engine over one tree.  Node statistics (E, W, vol and
// the derived posteriors) are kept exact across single-vertex moves by
// removing the vertex's pair contributions, scoring, and re-inserting them.
template <class Kernel>
struct sweep_engine_t {
  using traits = kernel_traits<Kernel>;

  const graph_t& g;
  tree_t& t;
  membership_t& mu;
  prior_t prior;
  local_rule_t rule;
  bool restricted;
  int forced_root = 0;  // nonzero pins the traversal root (full/restricted comparisons)
  // Restricted traversals descend only into branches holding a touched leaf;
  // an untouched sibling enters as one aggregate (0, exposure) statistic, so
  // a vertex costs O(D·|touched|) instead of O(K). Full traversals (and any
  // pinned root) keep every leaf as a candidate.
  bool span_dp = false;
  op_counters_t ops;

  double scale;
  std::vector<double> mass;

  // Scratch, cleared between vertices through the touched lists.
  std::vector<double> leaf_d;  // d_ik by leaf label
  std::vector<int> touched_labels;
  std::vector<char> label_mark;
  std::vector<double> nd, nn;  // per-node d_ir, n_ir
  std::vector<int> touched_nodes;
  std::vector<char> node_mark;
  std::vector<double> dleft, dright;  // per-node branch increments (soft pass)
  std::vector<std::pair<int, double>> leaf_logw;
  std::vector<double> row_scratch, aux;

  sweep_engine_t(const graph_t& graph, tree_t& tree, membership_t& memb, prior_t p,
                 local_rule_t r, bool restrict_traversal)
      : g(graph), t(tree), mu(memb), prior(p), rule(r), restricted(restrict_traversal) {
    const int n = g.vertex_count();
    const int K = t.leaf_count;
    assert(mu.size() == n);
    scale = traits::scale(g);
    mass.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) mass[static_cast<std::size_t>(i)] = traits::mass(g, i);
    leaf_d.assign(static_cast<std::size_t>(K + 1), 0.0);
    label_mark.assign(static_cast<std::size_t>(K + 1), 0);
    nd.assign(static_cast<std::size_t>(2 * K), 0.0);
    nn.assign(static_cast<std::size_t>(2 * K), 0.0);
    node_mark.assign(static_cast<std::size_t>(2 * K), 0);
    dleft.assign(static_cast<std::size_t>(2 * K), 0.0);
    dright.assign(static_cast<std::size_t>(2 * K), 0.0);
    row_scratch.assign(static_cast<std::size_t>(K), 0.0);
    aux.assign(static_cast<std::size_t>(2 * K), 0.0);
  }

  void refresh_posterior(node_state_t& s) const {
    posterior_t p = Kernel::posterior_update(prior, s.edge_stat, s.exposure_stat);
    s.alpha = p.alpha;
    s.beta = p.beta;
  }

  double score_node(int r, suff_stat_t s) {
    ++ops.nodes_scored;
    const node_state_t& st = t.at(r);
    if (rule == local_rule_t::mf)
      return Kernel::mf_log_score(Kernel::expected_nat_param(st.alpha, st.beta), s);
    return Kernel::collapsed_log_score(st.alpha, st.beta, s);
  }

  // --- per-vertex scratch -------------------------------------------------

  void add_leaf_mass(int k, double v) {
    if (!label_mark[static_cast<std::size_t>(k)]) {
      label_mark[static_cast<std::size_t>(k)] = 1;
      leaf_d[static_cast<std::size_t>(k)] = 0.0;
      touched_labels.push_back(k);
    }
    leaf_d[static_cast<std::size_t>(k)] += v;
  }

  // leaf_d entries are reset lazily on first touch; unmarked labels are 0.
  double leaf_mass_of(int k) const {
    return label_mark[static_cast<std::size_t>(k)] ? leaf_d[static_cast<std::size_t>(k)] : 0.0;
  }

  // nd/nn entries are reset lazily when a node is first touched; reads of a
  // possibly untouched node (the opposite child of a path node) go through
  // these guards so stale values from an earlier vertex never leak.
  double nd_of(int r) const {
    return node_mark[static_cast<std::size_t>(r)] ? nd[static_cast<std::size_t>(r)] : 0.0;
  }
  double nn_of(int r) const {
    return node_mark[static_cast<std::size_t>(r)] ? nn[static_cast<std::size_t>(r)] : 0.0;
  }

  void touch_path(int leaf_heap_index) {
    for (int r = leaf_heap_index; r >= 1; r >>= 1) {
      if (!node_mark[static_cast<std::size_t>(r)]) {
        node_mark[static_cast<std::size_t>(r)] = 1;
        nd[static_cast<std::size_t>(r)] = 0.0;
        nn[static_cast<std::size_t>(r)] = 0.0;
        touched_nodes.push_back(r);
      }
    }
  }

  void compute_leaf_masses(int i) {
    auto nb = g.neighbors(i);
    auto ww = g.edge_weights(i);
    const int K = t.leaf_count;
    for (std::size_t p = 0; p < nb.size(); ++p) {
      ++ops.edge_scans;
      const int j = nb[p];
      const double w = ww[p];
      if (!mu.has_soft()) {
        add_leaf_mass(mu.hard[static_cast<std::size_t>(j)], w);
      } else {
        const auto& row = mu.soft[static_cast<std::size_t>(j)];
        ops.dense_row_ops += static_cast<std::uint64_t>(K);
        for (int k = 1; k <= K; ++k) {
          const double v = w * row[static_cast<std::size_t>(k - 1)];
          if (v > 0.0) add_leaf_mass(k, v);
        }
      }
    }
  }

  void accumulate_node_stats(int i) {
    for (int k : touched_labels) {
      const int h = t.leaf_heap(k);
      touch_path(h);
      const double v = leaf_d[static_cast<std::size_t>(k)];
      for (int r = h; r >= 1; r >>= 1) {
        nd[static_cast<std::size_t>(r)] += v;
        ++ops.node_updates;
      }
    }
    add_membership_mass(i);
  }

  void add_membership_mass(int i) {
    if (!mu.has_soft()) {
      const int h = t.leaf_heap(mu.hard[static_cast<std::size_t>(i)]);
      touch_path(h);
      for (int r = h; r >= 1; r >>= 1) {
        nn[static_cast<std::size_t>(r)] += 1.0;
        ++ops.node_updates;
      }
      return;
    }
    const auto& row = mu.soft[static_cast<std::size_t>(i)];
    for (int k = 1; k <= t.leaf_count; ++k) {
      const double v = row[static_cast<std::size_t>(k - 1)];
      if (v <= 0.0) continue;
      const int h = t.leaf_heap(k);
      touch_path(h);
      for (int r = h; r >= 1; r >>= 1) {
        nn[static_cast<std::size_t>(r)] += v;
        ++ops.node_updates;
      }
    }
  }

  void clear_membership_mass() {
    for (int r : touched_nodes) nn[static_cast<std::size_t>(r)] = 0.0;
  }

  void clear_scratch() {
    for (int k : touched_labels) label_mark[static_cast<std::size_t>(k)] = 0;
    touched_labels.clear();
    for (int r : touched_nodes) node_mark[static_cast<std::size_t>(r)] = 0;
    touched_nodes.clear();
  }

  // --- exact single-vertex stat maintenance -------------------------------

  // Subtracts vertex i's pair contributions from every touched node.
  // E/W deltas read pre-removal (inclusive) volumes, so they run first.
  void remove_vertex(int i) {
    const double mi = mass[static_cast<std::size_t>(i)];
    for (int r : touched_nodes) {
      node_state_t& s = t.at(r);
      if (t.is_leaf(r)) {
        const double m_ik = mu.mu(i, t.leaf_label(r));
        if (m_ik <= 0.0) continue;
        const double x = mi * m_ik;
        s.edge_stat -= leaf_mass_of(t.leaf_label(r)) * m_ik;
        s.exposure_stat -= scale * x * (s.vol - x);
      } else {
        const double nl = nn_of(tree_t::left(r));
        const double nr = nn_of(tree_t::right(r));
        if (nl <= 0.0 && nr <= 0.0) continue;
        const double dl = nd_of(tree_t::left(r));
        const double dr = nd_of(tree_t::right(r));
        const double vl = t.at(tree_t::left(r)).vol;
        const double vr = t.at(tree_t::right(r)).vol;
        s.edge_stat -= nl * dr + nr * dl;
        s.exposure_stat -= scale * mi * (nl * (vr - mi * nr) + nr * (vl - mi * nl));
      }
      refresh_posterior(s);
      ++ops.node_updates;
    }
    for (int r : touched_nodes) t.at(r).vol -= mi * nn[static_cast<std::size_t>(r)];
  }

  // Re-adds vertex i under its current membership row; volumes go first so
  // the E/W increments see inclusive values, mirroring remove_vertex.
  void insert_vertex(int i) {
    const double mi = mass[static_cast<std::size_t>(i)];
    clear_membership_mass();
    add_membership_mass(i);
    for (int r : touched_nodes) t.at(r).vol += mi * nn[static_cast<std::size_t>(r)];
    for (int r : touched_nodes) {
      node_state_t& s = t.at(r);
      if (t.is_leaf(r)) {
        const double m_ik = mu.mu(i, t.leaf_label(r));
        if (m_ik <= 0.0) continue;
        const double x = mi * m_ik;
        s.edge_stat += leaf_mass_of(t.leaf_label(r)) * m_ik;
        s.exposure_stat += scale * x * (s.vol - x);
      } else {
        const double nl = nn_of(tree_t::left(r));
        const double nr = nn_of(tree_t::right(r));
        if (nl <= 0.0 && nr <= 0.0) continue;
        const double dl = nd_of(tree_t::left(r));
        const double dr = nd_of(tree_t::right(r));
        const double vl = t.at(tree_t::left(r)).vol;
        const double vr = t.at(tree_t::right(r)).vol;
        s.edge_stat += nl * dr + nr * dl;
        s.exposure_stat += scale * mi * (nl * (vr - mi * nr) + nr * (vl - mi * nl));
      }
      refresh_posterior(s);
      ++ops.node_updates;
    }
  }

  // --- traversals ---------------------------------------------------------

  // Statistic of vertex i against leaf `heap` with i's own mass excluded:
  // edge mass into the leaf and exposure to the leaf's remaining volume.
  suff_stat_t leaf_stat(int i, int heap) {
    return {leaf_mass_of(t.leaf_label(heap)),
            scale * mass[static_cast<std::size_t>(i)] * t.at(heap).vol};
  }

  // Aggregate statistic of an entire untouched subtree: no edge mass, and
  // exposure against its total volume (equal to the sum over its leaves).
  suff_stat_t skipped_stat(int i, int r) {
    return {0.0, scale * mass[static_cast<std::size_t>(i)] * t.at(r).vol};
  }

  struct champion_t {
    double m = 0.0;
    int label = 0;
    suff_stat_t s;
  };

  // Best root-to-leaf path score under node r; ties prefer the left branch,
  // which carries the smaller leaf labels.
  champion_t max_grad_path(int i, int r) {
    if (t.is_leaf(r)) {
      suff_stat_t s = leaf_stat(i, r);
      return {score_node(r, s), t.leaf_label(r), s};
    }
    if (span_dp) {
      const int lc = tree_t::left(r);
      const int rc = tree_t::right(r);
      if (!node_mark[static_cast<std::size_t>(rc)]) {
        champion_t l = max_grad_path(i, lc);
        const suff_stat_t sr = skipped_stat(i, rc);
        return {l.m + score_node(r, sr), l.label, l.s + sr};
      }
      if (!node_mark[static_cast<std::size_t>(lc)]) {
        champion_t rr = max_grad_path(i, rc);
        const suff_stat_t sl = skipped_stat(i, lc);
        return {rr.m + score_node(r, sl), rr.label, rr.s + sl};
      }
    }
    champion_t l = max_grad_path(i, tree_t::left(r));
    champion_t rr = max_grad_path(i, tree_t::right(r));
    const double ml = l.m + score_node(r, rr.s);
    const double mr = rr.m + score_node(r, l.s);
    champion_t out;
    out.s = l.s + rr.s;
    if (mr > ml) {
      out.m = mr;
      out.label = rr.label;
    } else {
      out.m = ml;
      out.label = l.label;
    }
    return out;
  }

  suff_stat_t calc_grad_path(int i, int r) {
    if (t.is_leaf(r)) return leaf_stat(i, r);
    const int lc = tree_t::left(r);
    const int rc = tree_t::right(r);
    if (span_dp && !node_mark[static_cast<std::size_t>(rc)]) {
      suff_stat_t sl = calc_grad_path(i, lc);
      suff_stat_t sr = skipped_stat(i, rc);
      dleft[static_cast<std::size_t>(r)] = score_node(r, sr);
      return sl + sr;
    }
    if (span_dp && !node_mark[static_cast<std::size_t>(lc)]) {
      suff_stat_t sr = calc_grad_path(i, rc);
      suff_stat_t sl = skipped_stat(i, lc);
      dright[static_cast<std::size_t>(r)] = score_node(r, sl);
      return sl + sr;
    }
    suff_stat_t sl = calc_grad_path(i, lc);
    suff_stat_t sr = calc_grad_path(i, rc);
    dleft[static_cast<std::size_t>(r)] = score_node(r, sr);
    dright[static_cast<std::size_t>(r)] = score_node(r, sl);
    return sl + sr;
  }

  void sum_grad_path(int i, int r, double acc) {
    if (t.is_leaf(r)) {
      leaf_logw.emplace_back(t.leaf_label(r), acc + score_node(r, leaf_stat(i, r)));
      return;
    }
    const int lc = tree_t::left(r);
    const int rc = tree_t::right(r);
    if (!span_dp || node_mark[static_cast<std::size_t>(lc)])
      sum_grad_path(i, lc, acc + dleft[static_cast<std::size_t>(r)]);
    if (!span_dp || node_mark[static_cast<std::size_t>(rc)])
      sum_grad_path(i, rc, acc + dright[static_cast<std::size_t>(r)]);
  }

  int traversal_root(int i) {
    span_dp = restricted && forced_root == 0;
    if (forced_root > 0) return forced_root;
    if (!restricted) return 1;
    return t.restriction_root(touched_labels, mu.hard[static_cast<std::size_t>(i)]);
  }

  // --- local updates ------------------------------------------------------

  // Champion path for vertex i without changing its membership.
  champion_t inspect_vertex_det(int i) {
    compute_leaf_masses(i);
    accumulate_node_stats(i);
    remove_vertex(i);
    champion_t c = max_grad_path(i, traversal_root(i));
    insert_vertex(i);
    clear_scratch();
    return c;
  }

  // Per-leaf path-sum gradients for vertex i without changing its membership;
  // pairs of (leaf label, log weight) over the traversal subtree's leaves.
  std::vector<std::pair<int, double>> inspect_vertex_grad(int i) {
    compute_leaf_masses(i);
    accumulate_node_stats(i);
    remove_vertex(i);
    const int root = traversal_root(i);
    leaf_logw.clear();
    calc_grad_path(i, root);
    sum_grad_path(i, root, 0.0);
    std::vector<std::pair<int, double>> out = leaf_logw;
    insert_vertex(i);
    clear_scratch();
    return out;
  }

  // Hard reassignment of vertex i to its best leaf.  Returns the new label.
  int update_vertex_det(int i) {
    compute_leaf_masses(i);
    accumulate_node_stats(i);
    remove_vertex(i);
    const int root = traversal_root(i);
    champion_t c = max_grad_path(i, root);
    mu.set_hard(i, c.label);
    insert_vertex(i);
    clear_scratch();
    return c.label;
  }

  struct soft_update_t {
    double delta = 0.0;  // max absolute membership change
    bool moved = false;  // argmax label changed
  };

  // Soft reassignment of vertex i: path-sum gradients over the traversal
  // subtree, softmax over its leaves, zero elsewhere.
  soft_update_t update_vertex_prob(int i) {
    assert(mu.has_soft());
    const int K = t.leaf_count;
    compute_leaf_masses(i);
    accumulate_node_stats(i);
    remove_vertex(i);
    const int root = traversal_root(i);
    leaf_logw.clear();
    calc_grad_path(i, root);
    sum_grad_path(i, root, 0.0);

    const std::size_t L = leaf_logw.size();
    for (std::size_t p = 0; p < L; ++p) row_scratch[p] = leaf_logw[p].second;
    softmax_in_place(std::span<double>(row_scratch.data(), L));

    auto& row = mu.soft[static_cast<std::size_t>(i)];
    soft_update_t out;
    int best = 1;
    double best_p = -1.0;
    double delta = 0.0;
    std::size_t q = 0;
    ops.dense_row_ops += static_cast<std::uint64_t>(K);
    for (int k = 1; k <= K; ++k) {
      double v = 0.0;
      if (q < L && leaf_logw[q].first == k) v = row_scratch[q++];
      delta = std::max(delta, std::abs(v - row[static_cast<std::size_t>(k - 1)]));
      row[static_cast<std::size_t>(k - 1)] = v;
      if (v > best_p) {
        best_p = v;
        best = k;
      }
    }
    out.delta = delta;
    out.moved = best != mu.hard[static_cast<std::size_t>(i)];
    mu.hard[static_cast<std::size_t>(i)] = best;
    insert_vertex(i);
    clear_scratch();
    return out;
  }

  // --- global recomputation ----------------------------------------------

  // Rebuilds every node's (E, W, vol) and posterior from the graph and the
  // current membership in one pass over vertices.
  void recompute_global() {
    const int K = t.leaf_count;
    const int n = g.vertex_count();
    for (int r = 1; r < 2 * K; ++r) {
      node_state_t& s = t.at(r);
      s.edge_stat = s.exposure_stat = s.vol = 0.0;
      aux[static_cast<std::size_t>(r)] = 0.0;
    }
    for (int i = 0; i < n; ++i) {
      const double mi = mass[static_cast<std::size_t>(i)];
      if (!mu.has_soft()) {
        t.at(t.leaf_heap(mu.hard[static_cast<std::size_t>(i)])).vol += mi;
      } else {
        const auto& row = mu.soft[static_cast<std::size_t>(i)];
        for (int k = 1; k <= K; ++k) t.at(t.leaf_heap(k)).vol += mi * row[static_cast<std::size_t>(k - 1)];
      }
    }
    for (int r = K - 1; r >= 1; --r)
      t.at(r).vol = t.at(tree_t::left(r)).vol + t.at(tree_t::right(r)).vol;

    // aux holds the within-leaf squared mass and the internal cross products
    // that the closed-form W expressions subtract.
    for (int i = 0; i < n; ++i) {
      const double mi = mass[static_cast<std::size_t>(i)];
      compute_leaf_masses(i);
      accumulate_node_stats(i);
      for (int r : touched_nodes) {
        if (t.is_leaf(r)) {
          const int k = t.leaf_label(r);
          const double m_ik = mu.mu(i, k);
          t.at(r).edge_stat += 0.5 * leaf_mass_of(k) * m_ik;
          aux[static_cast<std::size_t>(r)] += (mi * m_ik) * (mi * m_ik);
        } else {
          const double nl = nn_of(tree_t::left(r));
          const double nr = nn_of(tree_t::right(r));
          const double dr = nd_of(tree_t::right(r));
          t.at(r).edge_stat += nl * dr;  // counts each cross pair once, via i on the left
          aux[static_cast<std::size_t>(r)] += mi * mi * nl * nr;
        }
        ++ops.node_updates;
      }
      clear_scratch();
    }
    for (int r = 1; r < 2 * K; ++r) {
      node_state_t& s = t.at(r);
      if (t.is_leaf(r))
        s.exposure_stat = scale * 0.5 * (s.vol * s.vol - aux[static_cast<std::size_t>(r)]);
      else
        s.exposure_stat =
            scale * (t.at(tree_t::left(r)).vol * t.at(tree_t::right(r)).vol -
                     aux[static_cast<std::size_t>(r)]);
      refresh_posterior(s);
    }
  }

  double collapsed_objective() const {
    double acc = 0.0;
    for (int r = 1; r <= t.node_count(); ++r)
      acc += Kernel::log_marginal(prior, t.at(r).edge_stat, t.at(r).exposure_stat);
    return acc;
  }
};

// --- free-function entry points used by callers and tests ------------------

template <class Kernel>
void global_update(const graph_t& g, membership_t& mu, tree_t& t, prior_t prior) {
  sweep_engine_t<Kernel> e(g, t, mu, prior, local_rule_t::collapsed, false);
  e.recompute_global();
}

// One deterministic update of vertex i against current tree statistics.
template <class Kernel>
int local_update_deterministic(const graph_t& g, membership_t& mu, tree_t& t, int i,
                               prior_t prior, local_rule_t rule, bool restricted) {
  sweep_engine_t<Kernel> e(g, t, mu, prior, rule, restricted);
  return e.update_vertex_det(i);
}

template <class Kernel>
double local_update_probabilistic(const graph_t& g, membership_t& mu, tree_t& t, int i,
                                  prior_t prior, local_rule_t rule, bool restricted) {
  sweep_engine_t<Kernel> e(g, t, mu, prior, rule, restricted);
  return e.update_vertex_prob(i).delta;
}

// Collapsed model evidence proxy: sum of per-node log marginals.
template <class Kernel>
double score_proxy(const tree_t& t, prior_t prior) {
  double acc = 0.0;
  for (int r = 1; r <= t.node_count(); ++r)
    acc += Kernel::log_marginal(prior, t.at(r).edge_stat, t.at(r).exposure_stat);
  return acc;
}

template <class Kernel>
double score_proxy(const graph_t& g, membership_t& mu, tree_t& t, prior_t prior) {
  global_update<Kernel>(g, mu, t, prior);
  return score_proxy<Kernel>(t, prior);
}

}  // namespace hsbm
