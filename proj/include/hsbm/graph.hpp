#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hsbm/error.hpp"
#include "hsbm/rng.hpp"

namespace hsbm {

struct edge_t {
  int u = 0;
  int v = 0;
  double w = 1.0;
};

// Undirected weighted graph in CSR form.  Neighbor lists are sorted and
// duplicate-free; self-loops are dropped (and counted) at construction.
struct graph_t {
  std::vector<std::int64_t> offset;  // size n+1
  std::vector<int> adj;              // each undirected pair appears in both rows
  std::vector<double> wgt;           // parallel to adj, strictly positive
  std::vector<double> degree;        // weighted degree d_i
  double total_degree = 0.0;         // 2m = sum_i d_i
  std::vector<std::string> names;    // external labels in first-appearance order
  std::int64_t self_loops_dropped = 0;

  int vertex_count() const { return static_cast<int>(names.size()); }
  std::int64_t pair_count() const { return static_cast<std::int64_t>(adj.size()) / 2; }

  std::span<const int> neighbors(int i) const {
    return {adj.data() + offset[i], adj.data() + offset[i + 1]};
  }
  std::span<const double> edge_weights(int i) const {
    return {wgt.data() + offset[i], wgt.data() + offset[i + 1]};
  }

  bool is_binary() const {
    for (double w : wgt)
      if (w != 1.0) return false;
    return true;
  }

  // Stored pairs as u < v, ordered lexicographically.
  std::vector<edge_t> edges() const {
    std::vector<edge_t> out;
    out.reserve(static_cast<std::size_t>(pair_count()));
    for (int u = 0; u < vertex_count(); ++u)
      for (std::int64_t p = offset[u]; p < offset[u + 1]; ++p)
        if (adj[p] > u) out.push_back({u, adj[p], wgt[p]});
    return out;
  }

  double weight_between(int i, int j) const {
    auto row = neighbors(i);
    auto it = std::lower_bound(row.begin(), row.end(), j);
    if (it == row.end() || *it != j) return 0.0;
    return wgt[offset[i] + (it - row.begin())];
  }

  friend bool operator==(const graph_t& a, const graph_t& b) {
    return a.offset == b.offset && a.adj == b.adj && a.wgt == b.wgt && a.names == b.names;
  }

  // Builds a graph from an edge list over named vertices.  Parallel entries
  // for the same pair are merged by summing weights; zero-weight pairs are
  // dropped after merging; self-loops are dropped and counted.
  static graph_t from_edges(std::vector<std::string> vertex_names, std::vector<edge_t> list) {
    graph_t g;
    g.names = std::move(vertex_names);
    const int n = g.vertex_count();

    std::vector<edge_t> kept;
    kept.reserve(list.size());
    for (const edge_t& e : list) {
      assert(0 <= e.u && e.u < n && 0 <= e.v && e.v < n);
      assert(e.w >= 0.0);
      if (e.u == e.v) {
        ++g.self_loops_dropped;
        continue;
      }
      edge_t f = e;
      if (f.u > f.v) std::swap(f.u, f.v);
      kept.push_back(f);
    }
    std::sort(kept.begin(), kept.end(), [](const edge_t& a, const edge_t& b) {
      return a.u != b.u ? a.u < b.u : a.v < b.v;
    });
    std::vector<edge_t> merged;
    merged.reserve(kept.size());
    for (const edge_t& e : kept) {
      if (!merged.empty() && merged.back().u == e.u && merged.back().v == e.v)
        merged.back().w += e.w;
      else
        merged.push_back(e);
    }
    std::erase_if(merged, [](const edge_t& e) { return e.w == 0.0; });

    std::vector<std::int64_t> row_len(n, 0);
    for (const edge_t& e : merged) {
      ++row_len[e.u];
      ++row_len[e.v];
    }
    g.offset.assign(n + 1, 0);
    for (int i = 0; i < n; ++i) g.offset[i + 1] = g.offset[i] + row_len[i];
    g.adj.resize(static_cast<std::size_t>(g.offset[n]));
    g.wgt.resize(static_cast<std::size_t>(g.offset[n]));
    std::vector<std::int64_t> cursor(g.offset.begin(), g.offset.end() - 1);
    // Lexicographic edge order fills every row in ascending neighbor order.
    for (const edge_t& e : merged) {
      g.adj[cursor[e.u]] = e.v;
      g.wgt[cursor[e.u]++] = e.w;
      g.adj[cursor[e.v]] = e.u;
      g.wgt[cursor[e.v]++] = e.w;
    }
    g.degree.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
      double d = 0.0;
      for (std::int64_t p = g.offset[i]; p < g.offset[i + 1]; ++p) d += g.wgt[p];
      g.degree[i] = d;
    }
    g.total_degree = 0.0;
    for (double d : g.degree) g.total_degree += d;
    return g;
  }
};

// Degree-correction weight rho_ij = d_i d_j / 2m; 0 on an edgeless graph.
inline double rho(const graph_t& g, int i, int j) {
  assert(i != j);
  if (g.total_degree <= 0.0) return 0.0;
  return g.degree[i] * g.degree[j] / g.total_degree;
}

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::size_t p = 0;
  while (p < line.size()) {
    while (p < line.size() && (line[p] == ' ' || line[p] == '\t' || line[p] == '\r')) ++p;
    std::size_t q = p;
    while (q < line.size() && line[q] != ' ' && line[q] != '\t' && line[q] != '\r') ++q;
    if (q > p) out.push_back(line.substr(p, q - p));
    p = q;
  }
  return out;
}

inline double parse_double(const std::string& tok, const char* what, std::int64_t line_no) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end != begin + tok.size() || tok.empty() || !std::isfinite(v))
    throw data_error(std::string(what) + " is not a finite number at line " +
                     std::to_string(line_no) + ": '" + tok + "'");
  return v;
}

inline std::int64_t parse_int(const std::string& tok, const char* what, std::int64_t line_no) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  long long v = std::strtoll(begin, &end, 10);
  if (end != begin + tok.size() || tok.empty())
    throw data_error(std::string(what) + " is not an integer at line " +
                     std::to_string(line_no) + ": '" + tok + "'");
  return v;
}

}  // namespace detail

// Reads a whitespace-separated edge list: `src dst [weight]` per line.
// Blank lines and lines starting with '#' are skipped.  Vertex ids are
// assigned in first-appearance order.
inline graph_t load_edge_list(std::istream& in) {
  std::vector<std::string> names;
  std::unordered_map<std::string, int> index;
  auto intern = [&](const std::string& s) {
    auto [it, fresh] = index.try_emplace(s, static_cast<int>(names.size()));
    if (fresh) names.push_back(s);
    return it->second;
  };

  std::vector<edge_t> list;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto tok = detail::split_ws(line);
    if (tok.empty() || tok[0][0] == '#') continue;
    if (tok.size() < 2 || tok.size() > 3)
      throw data_error("expected 'src dst [weight]' at line " + std::to_string(line_no));
    int u = intern(tok[0]);
    int v = intern(tok[1]);
    double w = 1.0;
    if (tok.size() == 3) {
      w = detail::parse_double(tok[2], "edge weight", line_no);
      if (w < 0.0)
        throw data_error("negative edge weight at line " + std::to_string(line_no));
    }
    list.push_back({u, v, w});
  }
  return graph_t::from_edges(std::move(names), std::move(list));
}

inline void save_edge_list(const graph_t& g, std::ostream& out) {
  char buf[64];
  for (const edge_t& e : g.edges()) {
    std::snprintf(buf, sizeof(buf), "%.17g", e.w);
    out << g.names[e.u] << '\t' << g.names[e.v] << '\t' << buf << '\n';
  }
}

// Subgraph on `keep` (ascending original ids), preserving names and weights.
// old_to_new maps original ids to new ids, -1 for dropped vertices.
inline graph_t induced_subgraph(const graph_t& g, const std::vector<int>& keep,
                                std::vector<int>* old_to_new = nullptr) {
  std::vector<int> map(g.vertex_count(), -1);
  std::vector<std::string> names;
  names.reserve(keep.size());
  for (int v : keep) {
    map[v] = static_cast<int>(names.size());
    names.push_back(g.names[v]);
  }
  std::vector<edge_t> list;
  for (const edge_t& e : g.edges())
    if (map[e.u] >= 0 && map[e.v] >= 0) list.push_back({map[e.u], map[e.v], e.w});
  if (old_to_new) *old_to_new = map;
  return graph_t::from_edges(std::move(names), std::move(list));
}

struct degree_prune_result_t {
  graph_t graph;
  std::vector<int> old_to_new;  // -1 for removed vertices
};

// Iteratively removes vertices whose weighted degree falls below min_degree
// until no such vertex remains.
inline degree_prune_result_t prune_low_degree(const graph_t& g, double min_degree = 3.0) {
  const int n = g.vertex_count();
  std::vector<double> deg = g.degree;
  std::vector<char> alive(n, 1);
  std::vector<int> stack;
  for (int i = 0; i < n; ++i)
    if (deg[i] < min_degree) stack.push_back(i);
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    if (!alive[v] || deg[v] >= min_degree) continue;
    alive[v] = 0;
    auto nb = g.neighbors(v);
    auto ww = g.edge_weights(v);
    for (std::size_t p = 0; p < nb.size(); ++p) {
      int u = nb[p];
      if (!alive[u]) continue;
      deg[u] -= ww[p];
      if (deg[u] < min_degree) stack.push_back(u);
    }
  }
  std::vector<int> keep;
  for (int i = 0; i < n; ++i)
    if (alive[i]) keep.push_back(i);
  degree_prune_result_t out;
  out.graph = induced_subgraph(g, keep, &out.old_to_new);
  return out;
}

struct pair_sample_t {
  struct entry_t {
    int i = 0, j = 0;  // i < j, indices into the originating graph
    bool link = false;
  };
  std::vector<entry_t> pairs;
  double source_fraction = 0.0;
};

enum class nonlink_policy_t { equal, preserve_ratio };

struct hold_out_result_t {
  graph_t train;          // same vertex set, held-out edges removed
  pair_sample_t sample;   // held-out links first, then sampled non-links
  std::int64_t removed_links = 0;
  std::int64_t requested_nonlinks = 0;
  std::int64_t sampled_nonlinks = 0;  // < requested only if non-edges ran out
};

// Removes floor(fraction * m) uniformly chosen edges and samples an equal
// (or edge/non-edge ratio preserving) number of non-edges of the original
// graph as negative pairs.  Disconnecting the train graph is allowed.
inline hold_out_result_t hold_out_split(const graph_t& g, double fraction,
                                        nonlink_policy_t policy, std::uint64_t seed) {
  if (!(fraction > 0.0) || !(fraction < 1.0))
    throw data_error("hold-out fraction must lie in (0, 1)");
  const int n = g.vertex_count();
  const std::vector<edge_t> all = g.edges();
  const std::int64_t m = static_cast<std::int64_t>(all.size());
  const std::int64_t cnt = static_cast<std::int64_t>(fraction * static_cast<double>(m));

  rng_t rng(seed);
  std::vector<std::int64_t> perm(m);
  for (std::int64_t i = 0; i < m; ++i) perm[i] = i;
  for (std::int64_t t = 0; t < cnt; ++t) {
    std::int64_t j = t + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(m - t)));
    std::swap(perm[t], perm[j]);
  }
  std::vector<char> held(m, 0);
  for (std::int64_t t = 0; t < cnt; ++t) held[perm[t]] = 1;

  hold_out_result_t out;
  out.removed_links = cnt;
  std::vector<edge_t> train_edges;
  train_edges.reserve(static_cast<std::size_t>(m - cnt));
  out.sample.source_fraction = fraction;
  for (std::int64_t t = 0; t < cnt; ++t) {
    const edge_t& e = all[perm[t]];
    out.sample.pairs.push_back({e.u, e.v, true});
  }
  for (std::int64_t i = 0; i < m; ++i)
    if (!held[i]) train_edges.push_back(all[i]);
  out.train = graph_t::from_edges(g.names, std::move(train_edges));

  const std::int64_t total_pairs = static_cast<std::int64_t>(n) * (n - 1) / 2;
  const std::int64_t nonedges = total_pairs - m;
  std::int64_t target = cnt;
  if (policy == nonlink_policy_t::preserve_ratio)
    target = m > 0 ? std::llround(static_cast<double>(cnt) * static_cast<double>(nonedges) /
                                  static_cast<double>(m))
                   : 0;
  out.requested_nonlinks = target;
  target = std::min(target, nonedges);

  auto key = [n](int a, int b) {
    return static_cast<std::int64_t>(a) * n + b;
  };
  std::unordered_set<std::int64_t> edge_set;
  edge_set.reserve(static_cast<std::size_t>(2 * m));
  for (const edge_t& e : all) edge_set.insert(key(e.u, e.v));

  std::vector<std::pair<int, int>> negatives;
  if (target > 0) {
    const bool enumerate = total_pairs <= (1 << 22) || nonedges <= 4 * target;
    if (enumerate) {
      std::vector<std::pair<int, int>> pool;
      pool.reserve(static_cast<std::size_t>(nonedges));
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          if (!edge_set.count(key(i, j))) pool.emplace_back(i, j);
      for (std::int64_t t = 0; t < target; ++t) {
        std::int64_t j =
            t + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(pool.size() - t)));
        std::swap(pool[t], pool[j]);
        negatives.push_back(pool[t]);
      }
    } else {
      std::unordered_set<std::int64_t> chosen;
      chosen.reserve(static_cast<std::size_t>(2 * target));
      while (static_cast<std::int64_t>(negatives.size()) < target) {
        int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        if (i == j) continue;
        if (i > j) std::swap(i, j);
        std::int64_t k = key(i, j);
        if (edge_set.count(k) || !chosen.insert(k).second) continue;
        negatives.emplace_back(i, j);
      }
    }
  }
  for (auto [i, j] : negatives) out.sample.pairs.push_back({i, j, false});
  out.sampled_nonlinks = static_cast<std::int64_t>(negatives.size());
  return out;
}

}  // namespace hsbm
