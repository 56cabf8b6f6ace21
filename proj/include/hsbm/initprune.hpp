#pragma once

#include <cassert>
#include <cstdint>
#include <numeric>
#include <vector>

#include "hsbm/graph.hpp"
#include "hsbm/inference.hpp"
#include "hsbm/kernels.hpp"
#include "hsbm/rng.hpp"
#include "hsbm/tree.hpp"

namespace hsbm {

struct pruned_model_t {
  std::vector<int> kept_nodes;  // heap indices surviving the collapse, sorted
  std::vector<int> leaf_map;    // 1-based: original leaf label -> merged group
  int group_count = 0;
  int collapses = 0;    // accepted internal collapse decisions
  double score = 0.0;   // sum of log marginals over the pruned structure
};

namespace detail {

inline int node_level(int r) {
  int lv = 0;
  while (r > 1) {
    r >>= 1;
    ++lv;
  }
  return lv;
}

}  // namespace detail

// Collapses every subtree whose pooled single-group evidence beats the sum of
// its parts by at least `threshold` (a log Bayes factor).  Decisions run
// bottom-up, so a parent pools against its children's already-collapsed
// representation.  Leaves whose merged group carries no volume are attached
// to the nearest surviving non-empty group (smallest leaf label on ties);
// if every group is empty, everything maps to group 1.
template <class Kernel>
pruned_model_t prune(const tree_t& t, prior_t prior, double threshold = 0.0) {
  const int K = t.leaf_count;
  const int N = t.node_count();
  std::vector<double> sum_e(static_cast<std::size_t>(2 * K), 0.0);
  std::vector<double> sum_w(static_cast<std::size_t>(2 * K), 0.0);
  std::vector<double> sum_lm(static_cast<std::size_t>(2 * K), 0.0);
  std::vector<char> collapsed(static_cast<std::size_t>(2 * K), 0);
  int accepted = 0;

  for (int r = N; r >= 1; --r) {
    const node_state_t& s = t.at(r);
    if (t.is_leaf(r)) {
      sum_e[static_cast<std::size_t>(r)] = s.edge_stat;
      sum_w[static_cast<std::size_t>(r)] = s.exposure_stat;
      sum_lm[static_cast<std::size_t>(r)] = Kernel::log_marginal(prior, s.edge_stat, s.exposure_stat);
      collapsed[static_cast<std::size_t>(r)] = 1;
      continue;
    }
    const int l = tree_t::left(r), rr = tree_t::right(r);
    sum_e[static_cast<std::size_t>(r)] =
        s.edge_stat + sum_e[static_cast<std::size_t>(l)] + sum_e[static_cast<std::size_t>(rr)];
    sum_w[static_cast<std::size_t>(r)] =
        s.exposure_stat + sum_w[static_cast<std::size_t>(l)] + sum_w[static_cast<std::size_t>(rr)];
    const double pooled =
        Kernel::log_marginal(prior, sum_e[static_cast<std::size_t>(r)], sum_w[static_cast<std::size_t>(r)]);
    const double parts = Kernel::log_marginal(prior, s.edge_stat, s.exposure_stat) +
                         sum_lm[static_cast<std::size_t>(l)] + sum_lm[static_cast<std::size_t>(rr)];
    if (pooled - parts >= threshold) {
      collapsed[static_cast<std::size_t>(r)] = 1;
      sum_lm[static_cast<std::size_t>(r)] = pooled;
      ++accepted;
    } else {
      collapsed[static_cast<std::size_t>(r)] = 0;
      sum_lm[static_cast<std::size_t>(r)] = parts;
    }
  }

  pruned_model_t out;
  out.collapses = accepted;
  out.score = sum_lm[1];
  out.leaf_map.assign(static_cast<std::size_t>(K + 1), 0);

  // Maximal collapsed subtrees become groups; DFS order (left first) lists
  // them by ascending smallest leaf.
  std::vector<int> group_roots;
  std::vector<int> stack{1};
  while (!stack.empty()) {
    int r = stack.back();
    stack.pop_back();
    out.kept_nodes.push_back(r);
    if (collapsed[static_cast<std::size_t>(r)]) {
      group_roots.push_back(r);
      continue;
    }
    stack.push_back(tree_t::right(r));
    stack.push_back(tree_t::left(r));
  }
  std::sort(out.kept_nodes.begin(), out.kept_nodes.end());
  std::sort(group_roots.begin(), group_roots.end(), [&](int a, int b) {
    const int sa = t.depth - detail::node_level(a);
    const int sb = t.depth - detail::node_level(b);
    return (a << sa) < (b << sb);  // order by leftmost descendant leaf
  });

  std::vector<int> label_of(static_cast<std::size_t>(2 * K), 0);
  int next = 0;
  for (int r : group_roots)
    if (t.at(r).vol > 0.0) label_of[static_cast<std::size_t>(r)] = ++next;
  out.group_count = next;

  // first_label[r]: smallest-leaf non-empty group within subtree r.
  std::vector<int> first_label = label_of;
  for (int r = K - 1; r >= 1; --r) {
    if (first_label[static_cast<std::size_t>(r)] != 0) continue;
    const int fl = first_label[static_cast<std::size_t>(tree_t::left(r))];
    first_label[static_cast<std::size_t>(r)] =
        fl != 0 ? fl : first_label[static_cast<std::size_t>(tree_t::right(r))];
  }

  if (out.group_count == 0) {
    for (int k = 1; k <= K; ++k) out.leaf_map[static_cast<std::size_t>(k)] = 1;
    out.group_count = 1;
    return out;
  }

  for (int r : group_roots) {
    int label = label_of[static_cast<std::size_t>(r)];
    if (label == 0) {
      for (int p = r; p > 1; p >>= 1) {
        const int fl = first_label[static_cast<std::size_t>(tree_t::sibling(p))];
        if (fl != 0) {
          label = fl;
          break;
        }
      }
      assert(label != 0);
    }
    const int shift = t.depth - detail::node_level(r);
    const int lo = (r << shift) - K + 1;
    const int hi = lo + (1 << shift) - 1;
    for (int k = lo; k <= hi; ++k) out.leaf_map[static_cast<std::size_t>(k)] = label;
  }
  return out;
}

namespace detail {

// Deterministic two-group fit on a (sub)graph: balanced start, then hard
// sweeps on a depth-1 tree until no vertex moves.  A random balanced cut
// sits on the ridge between the assortative and disassortative optima
// (whichever empirical rate fluctuates above 1 captures the greedy sweeps),
// so restarts alternate random cuts with breadth-first balls and pick the
// basin by collapsed evidence instead of by coin flip.  Past a few thousand
// vertices the ridge tips disassortative for most random cuts while balls
// land assortative from any center and settle in fewer sweeps, so large
// subgraphs spend a halved budget on balls alone.
inline constexpr int two_group_restarts = 8;
inline constexpr int two_group_restarts_large = 4;
inline constexpr int two_group_large_threshold = 2000;

// With only three nodes in play (two leaves and their parent) the collapsed
// evidence is a closed form of seven scalars: per-side edge mass, volume and
// squared mass, plus the cross edge mass.
struct two_group_stats_t {
  double vol[2] = {0.0, 0.0};
  double sq[2] = {0.0, 0.0};
  double within[2] = {0.0, 0.0};
  double cross = 0.0;
};

template <class Kernel>
two_group_stats_t two_group_tally(const graph_t& sub, const std::vector<int>& labels) {
  using traits = kernel_traits<Kernel>;
  const int nv = sub.vertex_count();
  two_group_stats_t st;
  for (int i = 0; i < nv; ++i) {
    const double mi = traits::mass(sub, i);
    const int s = labels[static_cast<std::size_t>(i)] - 1;
    st.vol[s] += mi;
    st.sq[s] += mi * mi;
  }
  for (int i = 0; i < nv; ++i) {
    auto nb = sub.neighbors(i);
    auto ww = sub.edge_weights(i);
    for (std::size_t p = 0; p < nb.size(); ++p) {
      const int j = nb[p];
      if (j <= i) continue;
      if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)])
        st.within[labels[static_cast<std::size_t>(i)] - 1] += ww[p];
      else
        st.cross += ww[p];
    }
  }
  return st;
}

template <class Kernel>
double two_group_objective(const graph_t& sub, const std::vector<int>& labels, prior_t prior) {
  const double scale = kernel_traits<Kernel>::scale(sub);
  const two_group_stats_t st = two_group_tally<Kernel>(sub, labels);
  double acc = 0.0;
  for (int s = 0; s < 2; ++s)
    acc += Kernel::log_marginal(prior, st.within[s],
                                scale * 0.5 * (st.vol[s] * st.vol[s] - st.sq[s]));
  return acc + Kernel::log_marginal(prior, st.cross, scale * st.vol[0] * st.vol[1]);
}

// Incremental two-group sweeps under the collapsed rule: a move evaluates in
// O(deg) plus three log-marginals against cached per-node scores, with no
// per-sweep global recompute.  Moves apply on strict improvement only, which
// guarantees termination; the generic engine's prefer-left tie rule differs
// solely on exact score ties, which carry no evidence either way.
template <class Kernel>
void two_group_sweeps(const graph_t& sub, std::vector<int>& labels, prior_t prior) {
  using traits = kernel_traits<Kernel>;
  const int nv = sub.vertex_count();
  const double scale = traits::scale(sub);
  two_group_stats_t st = two_group_tally<Kernel>(sub, labels);
  std::vector<double> mass(static_cast<std::size_t>(nv));
  for (int i = 0; i < nv; ++i) mass[static_cast<std::size_t>(i)] = traits::mass(sub, i);
  auto lm = [&](double e, double w) { return Kernel::log_marginal(prior, e, w); };
  auto side_w = [&](double v, double q) { return scale * 0.5 * (v * v - q); };
  double sc[3] = {lm(st.within[0], side_w(st.vol[0], st.sq[0])),
                  lm(st.within[1], side_w(st.vol[1], st.sq[1])),
                  lm(st.cross, scale * st.vol[0] * st.vol[1])};
  for (int sweep = 0; sweep < 200; ++sweep) {
    int moved = 0;
    for (int i = 0; i < nv; ++i) {
      const int s = labels[static_cast<std::size_t>(i)] - 1;
      const int o = 1 - s;
      double a_s = 0.0, a_o = 0.0;
      auto nb = sub.neighbors(i);
      auto ww = sub.edge_weights(i);
      for (std::size_t p = 0; p < nb.size(); ++p) {
        if (labels[static_cast<std::size_t>(nb[p])] - 1 == s)
          a_s += ww[p];
        else
          a_o += ww[p];
      }
      const double mi = mass[static_cast<std::size_t>(i)];
      const double vs = st.vol[s] - mi, vo = st.vol[o] + mi;
      const double qs = st.sq[s] - mi * mi, qo = st.sq[o] + mi * mi;
      const double ns = lm(st.within[s] - a_s, side_w(vs, qs));
      const double no = lm(st.within[o] + a_o, side_w(vo, qo));
      const double nx = lm(st.cross + a_s - a_o, scale * vs * vo);
      if (ns + no + nx > sc[0] + sc[1] + sc[2]) {
        st.vol[s] = vs;
        st.vol[o] = vo;
        st.sq[s] = qs;
        st.sq[o] = qo;
        st.within[s] -= a_s;
        st.within[o] += a_o;
        st.cross += a_s - a_o;
        sc[s] = ns;
        sc[o] = no;
        sc[2] = nx;
        labels[static_cast<std::size_t>(i)] = o + 1;
        ++moved;
      }
    }
    if (moved == 0) break;
  }
}

template <class Kernel>
std::vector<int> two_group_split(const graph_t& sub, local_rule_t rule, prior_t prior,
                                 std::uint64_t seed, double split_gate) {
  const int nv = sub.vertex_count();
  const bool collapsed = rule == local_rule_t::collapsed;

  // Mean-field sweeps score moves against frozen gradients, which the closed
  // form cannot reproduce, so that rule keeps the generic engine; the gate
  // currency is the collapsed evidence either way.
  auto objective_of = [&](std::vector<int> labels) {
    membership_t mu = membership_t::from_hard(std::move(labels));
    tree_t t = tree_t::build(1, prior.a0, prior.b0);
    sweep_engine_t<Kernel> eng(sub, t, mu, prior, rule, false);
    eng.recompute_global();
    return eng.collapsed_objective();
  };

  // The no-split configuration is the evidence optimum on structureless
  // subgraphs but unreachable by sweeps from a balanced cut, so it enters
  // the pool explicitly; a split must beat it by the gate (scaled by edge
  // mass) to be kept, which filters the evidence a greedy cut search can
  // manufacture from noise alone.
  std::vector<int> best(static_cast<std::size_t>(nv), 1);
  double best_obj = (collapsed ? two_group_objective<Kernel>(sub, best, prior)
                               : objective_of(best)) +
                    split_gate * 0.5 * sub.total_degree;
  const bool large = nv >= two_group_large_threshold;
  const int restarts = large ? two_group_restarts_large : two_group_restarts;
  rng_t seeder(seed);
  for (int restart = 0; restart < restarts; ++restart) {
    rng_t rng(seeder.next());
    std::vector<int> labels(static_cast<std::size_t>(nv), 1);
    if (!large && restart % 2 == 0) {
      std::vector<int> perm(static_cast<std::size_t>(nv));
      std::iota(perm.begin(), perm.end(), 0);
      rng.shuffle(perm);
      for (int p = (nv + 1) / 2; p < nv; ++p) labels[static_cast<std::size_t>(perm[p])] = 2;
    } else {
      // Breadth-first ball around a random center: an assortative start that
      // escapes the disassortative basin random cuts fall into on large
      // graphs. Vertices beyond the first half, plus unreached components,
      // form side 2.
      std::vector<int> order;
      order.reserve(static_cast<std::size_t>(nv));
      std::vector<char> seen(static_cast<std::size_t>(nv), 0);
      const int center = static_cast<int>(rng.next() % static_cast<std::uint64_t>(nv));
      order.push_back(center);
      seen[static_cast<std::size_t>(center)] = 1;
      for (std::size_t head = 0; head < order.size(); ++head) {
        for (int u : sub.neighbors(order[head]))
          if (!seen[static_cast<std::size_t>(u)]) {
            seen[static_cast<std::size_t>(u)] = 1;
            order.push_back(u);
          }
      }
      for (int v = 0; v < nv; ++v)
        if (!seen[static_cast<std::size_t>(v)]) order.push_back(v);
      for (int p = (nv + 1) / 2; p < nv; ++p) labels[static_cast<std::size_t>(order[p])] = 2;
    }

    if (collapsed) {
      two_group_sweeps<Kernel>(sub, labels, prior);
      const double obj = two_group_objective<Kernel>(sub, labels, prior);
      if (obj > best_obj) {
        best = std::move(labels);
        best_obj = obj;
      }
      continue;
    }

    membership_t mu = membership_t::from_hard(std::move(labels));
    tree_t t = tree_t::build(1, prior.a0, prior.b0);
    sweep_engine_t<Kernel> eng(sub, t, mu, prior, rule, false);
    // Each accepted move strictly raises the objective, so sweeps terminate;
    // the cap only guards against pathological slow drifts on large graphs.
    for (int sweep = 0; sweep < 200; ++sweep) {
      eng.recompute_global();
      int moved = 0;
      for (int i = 0; i < nv; ++i) {
        const int old = mu.hard[static_cast<std::size_t>(i)];
        if (eng.update_vertex_det(i) != old) ++moved;
      }
      if (moved == 0) break;
    }
    eng.recompute_global();
    const double obj = eng.collapsed_objective();
    if (obj > best_obj) {
      best = mu.hard;
      best_obj = obj;
    }
  }
  return best;
}

// Subgraph extraction tuned for the bisection recursion: one full-size map
// buffer (all -1 between calls) lives across the descent, and only the kept
// vertices' adjacency is scanned, so extracting every part of a level costs
// O(n + m) no matter how many parts the level has.
inline graph_t extract_part(const graph_t& g, const std::vector<int>& keep,
                            std::vector<int>& map) {
  std::vector<std::string> names;
  names.reserve(keep.size());
  for (int v : keep) {
    map[static_cast<std::size_t>(v)] = static_cast<int>(names.size());
    names.push_back(g.names[static_cast<std::size_t>(v)]);
  }
  std::vector<edge_t> list;
  for (int v : keep) {
    auto nb = g.neighbors(v);
    auto ww = g.edge_weights(v);
    for (std::size_t p = 0; p < nb.size(); ++p) {
      const int u = nb[p];
      if (u > v && map[static_cast<std::size_t>(u)] >= 0)
        list.push_back({map[static_cast<std::size_t>(v)], map[static_cast<std::size_t>(u)], ww[p]});
    }
  }
  for (int v : keep) map[static_cast<std::size_t>(v)] = -1;
  return graph_t::from_edges(std::move(names), std::move(list));
}

}  // namespace detail

// Recursive bisection down to `depth` levels: each node runs a deterministic
// two-group fit on its induced subgraph and sends the sides to its children.
// Sides with fewer than 2 vertices or no internal edges stop early and keep
// descending leftward, so their vertices land on the leftmost covered leaf.
template <class Kernel>
membership_t bisect_init(const graph_t& g, int depth, const fit_config_t& cfg) {
  const int n = g.vertex_count();
  membership_t mu = membership_t::from_hard(std::vector<int>(static_cast<std::size_t>(n), 1));
  if (n == 0) return mu;

  const int K = 1 << depth;
  std::vector<int> scratch_map(static_cast<std::size_t>(n), -1);
  auto assign_leftmost = [&](const std::vector<int>& ids, int heap, int level) {
    const int label = (heap << (depth - level)) - K + 1;
    for (int id : ids) mu.hard[static_cast<std::size_t>(id)] = label;
  };

  auto rec = [&](auto&& self, const std::vector<int>& ids, int heap, int level) -> void {
    if (level == depth) {
      for (int id : ids) mu.hard[static_cast<std::size_t>(id)] = heap - K + 1;
      return;
    }
    if (static_cast<int>(ids.size()) < 2) {
      assign_leftmost(ids, heap, level);
      return;
    }
    graph_t sub = detail::extract_part(g, ids, scratch_map);
    if (sub.pair_count() == 0) {
      assign_leftmost(ids, heap, level);
      return;
    }
    const std::uint64_t child_seed =
        mix64(cfg.seed ^ (static_cast<std::uint64_t>(heap) * 0x9e3779b97f4a7c15ULL));
    std::vector<int> side = detail::two_group_split<Kernel>(sub, cfg.rule, cfg.prior(), child_seed,
                                                            cfg.split_gate);
    if (std::find(side.begin(), side.end(), 2) == side.end()) {
      // No split cleared the gate: this side is one group, stop descending.
      assign_leftmost(ids, heap, level);
      return;
    }
    std::vector<int> left_ids, right_ids;
    for (std::size_t p = 0; p < ids.size(); ++p)
      (side[p] == 1 ? left_ids : right_ids).push_back(ids[p]);
    self(self, left_ids, 2 * heap, level + 1);
    self(self, right_ids, 2 * heap + 1, level + 1);
  };

  std::vector<int> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  rec(rec, all, 1, 0);
  return mu;
}

}  // namespace hsbm
