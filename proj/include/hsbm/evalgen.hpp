#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hsbm/error.hpp"
#include "hsbm/graph.hpp"
#include "hsbm/rng.hpp"

namespace hsbm {

// Hard grouping with labels contiguous from 1.
struct partition_t {
  std::vector<int> labels;

  int size() const { return static_cast<int>(labels.size()); }
  int group_count() const {
    int mx = 0;
    for (int g : labels) mx = std::max(mx, g);
    return mx;
  }

  // Remaps arbitrary labels to 1..G in first-appearance order.
  static partition_t from_labels(const std::vector<int>& raw) {
    partition_t p;
    p.labels.reserve(raw.size());
    std::unordered_map<int, int> map;
    for (int g : raw) {
      auto [it, fresh] = map.try_emplace(g, static_cast<int>(map.size()) + 1);
      p.labels.push_back(it->second);
    }
    return p;
  }
};

// Normalized mutual information 2 I(p,q) / (H(p) + H(q)) with natural logs.
// Two trivial single-group partitions agree perfectly (1); if exactly one
// side carries no information the score is 0.
inline double nmi(const partition_t& p, const partition_t& q) {
  if (p.labels.size() != q.labels.size())
    throw data_error("partitions must cover the same vertices");
  const std::size_t n = p.labels.size();
  if (n == 0) return 1.0;
  const int gp = p.group_count(), gq = q.group_count();
  std::vector<double> cp(static_cast<std::size_t>(gp), 0.0), cq(static_cast<std::size_t>(gq), 0.0);
  std::vector<double> joint(static_cast<std::size_t>(gp) * static_cast<std::size_t>(gq), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const int a = p.labels[i] - 1, b = q.labels[i] - 1;
    cp[static_cast<std::size_t>(a)] += 1.0;
    cq[static_cast<std::size_t>(b)] += 1.0;
    joint[static_cast<std::size_t>(a) * static_cast<std::size_t>(gq) + static_cast<std::size_t>(b)] += 1.0;
  }
  const double nn = static_cast<double>(n);
  double hp = 0.0, hq = 0.0, mi = 0.0;
  for (double c : cp)
    if (c > 0.0) hp -= (c / nn) * std::log(c / nn);
  for (double c : cq)
    if (c > 0.0) hq -= (c / nn) * std::log(c / nn);
  for (int a = 0; a < gp; ++a)
    for (int b = 0; b < gq; ++b) {
      const double c = joint[static_cast<std::size_t>(a) * static_cast<std::size_t>(gq) +
                             static_cast<std::size_t>(b)];
      if (c > 0.0)
        mi += (c / nn) * std::log(nn * c / (cp[static_cast<std::size_t>(a)] *
                                            cq[static_cast<std::size_t>(b)]));
    }
  if (hp + hq == 0.0) return 1.0;
  return std::clamp(2.0 * mi / (hp + hq), 0.0, 1.0);
}

struct scored_pair_t {
  int i = 0, j = 0;
  double score = 0.0;
  bool link = false;
};

// Plug-in block density scores: theta_hat(a, b) = observed link count over
// possible pair count in the train graph, taken per group pair; pairs with
// an unassigned endpoint (label 0) score 0.
inline std::vector<scored_pair_t> theta_hat_scores(const graph_t& train,
                                                   const std::vector<int>& labels,
                                                   const pair_sample_t& sample) {
  const int n = train.vertex_count();
  if (static_cast<int>(labels.size()) != n)
    throw data_error("label vector must cover every train vertex");
  int G = 0;
  for (int g : labels) G = std::max(G, g);
  std::vector<double> size(static_cast<std::size_t>(G + 1), 0.0);
  for (int g : labels)
    if (g > 0) size[static_cast<std::size_t>(g)] += 1.0;

  auto key = [G](int a, int b) {
    if (a > b) std::swap(a, b);
    return static_cast<std::int64_t>(a) * (G + 1) + b;
  };
  std::unordered_map<std::int64_t, double> links;
  for (const edge_t& e : train.edges()) {
    const int a = labels[static_cast<std::size_t>(e.u)], b = labels[static_cast<std::size_t>(e.v)];
    if (a > 0 && b > 0) links[key(a, b)] += 1.0;
  }
  auto theta = [&](int a, int b) {
    const double possible = a == b
                                ? size[static_cast<std::size_t>(a)] * (size[static_cast<std::size_t>(a)] - 1.0) / 2.0
                                : size[static_cast<std::size_t>(a)] * size[static_cast<std::size_t>(b)];
    if (possible <= 0.0) return 0.0;
    auto it = links.find(key(a, b));
    return it == links.end() ? 0.0 : it->second / possible;
  };

  std::vector<scored_pair_t> out;
  out.reserve(sample.pairs.size());
  for (const auto& pr : sample.pairs) {
    scored_pair_t s;
    s.i = pr.i;
    s.j = pr.j;
    s.link = pr.link;
    const int a = labels[static_cast<std::size_t>(pr.i)], b = labels[static_cast<std::size_t>(pr.j)];
    s.score = (a > 0 && b > 0) ? theta(a, b) : 0.0;
    out.push_back(s);
  }
  return out;
}

inline double prevalence(const std::vector<scored_pair_t>& scored) {
  if (scored.empty()) throw data_error("no pairs to evaluate");
  double pos = 0.0;
  for (const auto& s : scored) pos += s.link ? 1.0 : 0.0;
  return pos / static_cast<double>(scored.size());
}

namespace detail {

// Indices sorted by descending score; equal scores form one block.
inline std::vector<std::size_t> score_order(const std::vector<scored_pair_t>& scored) {
  std::vector<std::size_t> idx(scored.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scored[a].score > scored[b].score;
  });
  return idx;
}

}  // namespace detail

// Area under the precision-recall curve as average precision.  Tied scores
// are processed as one block at the block-final precision, so the value is
// independent of ordering within ties.
inline double auprc(const std::vector<scored_pair_t>& scored) {
  if (scored.empty()) throw data_error("no pairs to evaluate");
  auto idx = detail::score_order(scored);
  double total_pos = 0.0;
  for (const auto& s : scored) total_pos += s.link ? 1.0 : 0.0;
  if (total_pos == 0.0) throw data_error("no positive pairs to evaluate");
  double tp = 0.0, seen = 0.0, ap = 0.0;
  std::size_t p = 0;
  while (p < idx.size()) {
    std::size_t q = p;
    double block_pos = 0.0;
    while (q < idx.size() && scored[idx[q]].score == scored[idx[p]].score) {
      block_pos += scored[idx[q]].link ? 1.0 : 0.0;
      ++q;
    }
    tp += block_pos;
    seen += static_cast<double>(q - p);
    ap += block_pos * (tp / seen);
    p = q;
  }
  return ap / total_pos;
}

// One (recall, precision) point per tie block, in descending score order.
inline std::vector<std::pair<double, double>> pr_curve(const std::vector<scored_pair_t>& scored) {
  if (scored.empty()) throw data_error("no pairs to evaluate");
  auto idx = detail::score_order(scored);
  double total_pos = 0.0;
  for (const auto& s : scored) total_pos += s.link ? 1.0 : 0.0;
  if (total_pos == 0.0) throw data_error("no positive pairs to evaluate");
  std::vector<std::pair<double, double>> out;
  double tp = 0.0, seen = 0.0;
  std::size_t p = 0;
  while (p < idx.size()) {
    std::size_t q = p;
    double block_pos = 0.0;
    while (q < idx.size() && scored[idx[q]].score == scored[idx[p]].score) {
      block_pos += scored[idx[q]].link ? 1.0 : 0.0;
      ++q;
    }
    tp += block_pos;
    seen += static_cast<double>(q - p);
    out.emplace_back(tp / total_pos, tp / seen);
    p = q;
  }
  return out;
}

struct gen_config_t {
  int n = 0;
  int k = 0;                    // group count; 0 means use size bounds instead
  int size_min = 0, size_max = 0;
  double mixing = 0.1;          // fraction of degree aimed across groups
  double d_avg = 10.0;
  double d_max = 100.0;
  double gamma_d = 2.5;         // degree power-law exponent
  std::uint64_t seed = 1;
};

struct planted_t {
  graph_t graph;
  partition_t truth;
};

namespace detail {

// Mean of the truncated continuous power law x^-gamma on [a, b].
inline double powerlaw_mean(double a, double b, double gamma) {
  if (std::abs(gamma - 1.0) < 1e-12) return (b - a) / std::log(b / a);
  if (std::abs(gamma - 2.0) < 1e-12) return std::log(b / a) / (1.0 / a - 1.0 / b);
  const double g1 = 1.0 - gamma, g2 = 2.0 - gamma;
  const double norm = (std::pow(b, g1) - std::pow(a, g1)) / g1;
  const double first = (std::pow(b, g2) - std::pow(a, g2)) / g2;
  return first / norm;
}

inline double powerlaw_icdf(double a, double b, double gamma, double u) {
  if (std::abs(gamma - 1.0) < 1e-12) return a * std::pow(b / a, u);
  const double g1 = 1.0 - gamma;
  return std::pow(std::pow(a, g1) + u * (std::pow(b, g1) - std::pow(a, g1)), 1.0 / g1);
}

}  // namespace detail

// Planted-partition benchmark: power-law target degrees, per-group within
// mass and globally corrected cross mass, one Bernoulli draw per vertex pair
// (so the graph is simple).  Fully reproducible from the seed.
inline planted_t generate_planted(const gen_config_t& cfg) {
  if (cfg.n < 1) throw data_error("generator needs n >= 1");
  if (!(cfg.mixing >= 0.0 && cfg.mixing < 1.0)) throw data_error("mixing must lie in [0, 1)");
  if (!(cfg.d_avg > 0.0) || cfg.d_avg > cfg.d_max) throw data_error("need 0 < d_avg <= d_max");
  if (!(cfg.gamma_d > 0.0)) throw data_error("gamma_d must be positive");
  const bool by_count = cfg.k > 0;
  if (by_count && cfg.k > cfg.n) throw data_error("group count exceeds vertex count");
  if (!by_count && !(cfg.size_min >= 1 && cfg.size_max >= cfg.size_min))
    throw data_error("need either k >= 1 or 1 <= size_min <= size_max");

  rng_t rng(cfg.seed);

  std::vector<int> sizes;
  if (by_count) {
    const int base = cfg.n / cfg.k, rem = cfg.n % cfg.k;
    for (int c = 0; c < cfg.k; ++c) sizes.push_back(base + (c < rem ? 1 : 0));
  } else {
    int left = cfg.n;
    while (left > 0) {
      int s = std::min(left, rng.range(cfg.size_min, cfg.size_max));
      sizes.push_back(s);
      left -= s;
    }
  }
  const int Kg = static_cast<int>(sizes.size());

  std::vector<int> group(static_cast<std::size_t>(cfg.n));
  {
    int v = 0;
    for (int c = 0; c < Kg; ++c)
      for (int s = 0; s < sizes[static_cast<std::size_t>(c)]; ++s) group[static_cast<std::size_t>(v++)] = c + 1;
  }

  // Solve the truncation lower bound so the target degree mean hits d_avg.
  double lo = std::min(1e-6, cfg.d_max / 2.0), hi = cfg.d_max;
  if (detail::powerlaw_mean(lo, cfg.d_max, cfg.gamma_d) > cfg.d_avg)
    throw data_error("d_avg is not reachable under the given d_max and gamma_d");
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (detail::powerlaw_mean(mid, cfg.d_max, cfg.gamma_d) < cfg.d_avg)
      lo = mid;
    else
      hi = mid;
  }
  const double x_min = 0.5 * (lo + hi);

  std::vector<double> w(static_cast<std::size_t>(cfg.n));
  for (int i = 0; i < cfg.n; ++i)
    w[static_cast<std::size_t>(i)] = detail::powerlaw_icdf(x_min, cfg.d_max, cfg.gamma_d, rng.u01());

  std::vector<double> within_sum(static_cast<std::size_t>(Kg + 1), 0.0);
  std::vector<double> cross_group_sum(static_cast<std::size_t>(Kg + 1), 0.0);
  double cross_sum = 0.0;
  for (int i = 0; i < cfg.n; ++i) {
    const double a = (1.0 - cfg.mixing) * w[static_cast<std::size_t>(i)];
    const double b = cfg.mixing * w[static_cast<std::size_t>(i)];
    within_sum[static_cast<std::size_t>(group[static_cast<std::size_t>(i)])] += a;
    cross_group_sum[static_cast<std::size_t>(group[static_cast<std::size_t>(i)])] += b;
    cross_sum += b;
  }
  double corr = 0.0;
  if (cfg.mixing > 0.0 && Kg > 1) {
    double sq = 0.0;
    for (int c = 1; c <= Kg; ++c) sq += cross_group_sum[static_cast<std::size_t>(c)] * cross_group_sum[static_cast<std::size_t>(c)];
    const double denom = cross_sum * cross_sum - sq;
    if (denom > 0.0) corr = cross_sum * cross_sum / denom;
  }

  std::vector<edge_t> edges;
  edges.reserve(static_cast<std::size_t>(cfg.n) * static_cast<std::size_t>(cfg.d_avg) / 2);
  for (int i = 0; i < cfg.n; ++i) {
    const int gi = group[static_cast<std::size_t>(i)];
    const double wi = w[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < cfg.n; ++j) {
      double p;
      if (group[static_cast<std::size_t>(j)] == gi) {
        const double s = within_sum[static_cast<std::size_t>(gi)];
        p = s > 0.0 ? (1.0 - cfg.mixing) * wi * (1.0 - cfg.mixing) * w[static_cast<std::size_t>(j)] / s : 0.0;
      } else {
        p = cross_sum > 0.0
                ? cfg.mixing * wi * cfg.mixing * w[static_cast<std::size_t>(j)] * corr / cross_sum
                : 0.0;
      }
      if (rng.u01() < std::min(1.0, p)) edges.push_back({i, j, 1.0});
    }
  }

  planted_t out;
  std::vector<std::string> names(static_cast<std::size_t>(cfg.n));
  for (int i = 0; i < cfg.n; ++i) names[static_cast<std::size_t>(i)] = std::to_string(i);
  out.graph = graph_t::from_edges(std::move(names), std::move(edges));
  out.truth.labels = std::move(group);
  return out;
}

}  // namespace hsbm
