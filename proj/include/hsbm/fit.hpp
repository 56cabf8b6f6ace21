#pragma once

#include <chrono>
#include <numeric>
#include <vector>

#include "hsbm/graph.hpp"
#include "hsbm/inference.hpp"
#include "hsbm/initprune.hpp"

namespace hsbm {

struct sweep_trace_t {
  int sweep = 0;    // 1-based
  int moved = 0;    // vertices whose (argmax) label changed
  double score = 0.0;  // collapsed objective after the sweep
  double millis = 0.0;
};

struct fit_result_t {
  membership_t membership;
  tree_t tree;
  pruned_model_t pruned;
  std::vector<sweep_trace_t> trace;
  bool converged = false;
  int depth = 0;
  double wall_ms = 0.0;
};

template <class Kernel>
fit_result_t fit_with_kernel(const graph_t& g, const fit_config_t& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = g.vertex_count();
  const int depth = cfg.depth > 0 ? cfg.depth : auto_tree_depth(n);

  fit_result_t out;
  out.depth = depth;
  out.tree = tree_t::build(depth, cfg.a0, cfg.b0);
  const int K = out.tree.leaf_count;

  if (n == 0) {
    out.pruned = prune<Kernel>(out.tree, cfg.prior(), cfg.prune_threshold);
    out.converged = true;
    return out;
  }

  rng_t master(cfg.seed);
  if (cfg.init == init_rule_t::bisect) {
    out.membership = bisect_init<Kernel>(g, depth, cfg);
  } else {
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      labels[static_cast<std::size_t>(i)] = 1 + static_cast<int>(master.below(static_cast<std::uint64_t>(K)));
    out.membership = membership_t::from_hard(std::move(labels));
  }
  if (cfg.mode == update_mode_t::probabilistic) out.membership.ensure_soft(K);

  sweep_engine_t<Kernel> eng(g, out.tree, out.membership, cfg.prior(), cfg.rule, cfg.restricted);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  for (int sweep = 1; sweep <= cfg.sweeps_cap(); ++sweep) {
    const auto s0 = std::chrono::steady_clock::now();
    eng.recompute_global();
    if (cfg.order == sweep_order_t::shuffled) {
      std::iota(order.begin(), order.end(), 0);
      master.shuffle(order);
    }
    int moved = 0;
    double max_delta = 0.0;
    for (int i : order) {
      if (cfg.mode == update_mode_t::deterministic) {
        const int old = out.membership.hard[static_cast<std::size_t>(i)];
        if (eng.update_vertex_det(i) != old) ++moved;
      } else {
        auto u = eng.update_vertex_prob(i);
        moved += u.moved ? 1 : 0;
        max_delta = std::max(max_delta, u.delta);
      }
    }
    const auto s1 = std::chrono::steady_clock::now();
    sweep_trace_t tr;
    tr.sweep = sweep;
    tr.moved = moved;
    tr.score = eng.collapsed_objective();
    tr.millis = std::chrono::duration<double, std::milli>(s1 - s0).count();
    out.trace.push_back(tr);
    out.converged = cfg.mode == update_mode_t::deterministic ? moved == 0 : max_delta < cfg.tol;
    if (out.converged) break;
  }

  eng.recompute_global();
  out.pruned = prune<Kernel>(out.tree, cfg.prior(), cfg.prune_threshold);
  out.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

inline fit_result_t fit(const graph_t& g, const fit_config_t& cfg) {
  if (cfg.model == model_t::hsb && !g.is_binary())
    throw data_error("the Bernoulli model needs a binary graph (all edge weights 1)");
  if (cfg.model == model_t::hsb) return fit_with_kernel<bernoulli_kernel_t>(g, cfg);
  return fit_with_kernel<poisson_kernel_t>(g, cfg);
}

// Post-prune group label per vertex.
inline std::vector<int> merged_labels(const membership_t& mu, const pruned_model_t& pm) {
  std::vector<int> out(mu.hard.size());
  for (std::size_t i = 0; i < mu.hard.size(); ++i)
    out[i] = pm.leaf_map[static_cast<std::size_t>(mu.hard[i])];
  return out;
}

}  // namespace hsbm
