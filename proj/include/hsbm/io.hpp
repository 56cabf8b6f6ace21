#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hsbm/error.hpp"
#include "hsbm/evalgen.hpp"
#include "hsbm/fit.hpp"
#include "hsbm/graph.hpp"
#include "hsbm/initprune.hpp"
#include "hsbm/tree.hpp"

namespace hsbm {

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open for reading: " + path);
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open for writing: " + path);
  return out;
}

namespace detail {

// Tokenized non-comment lines with their line numbers.
inline std::vector<std::pair<std::int64_t, std::vector<std::string>>> read_rows(std::istream& in) {
  std::vector<std::pair<std::int64_t, std::vector<std::string>>> rows;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto tok = split_ws(line);
    if (tok.empty() || tok[0][0] == '#') continue;
    rows.emplace_back(line_no, std::move(tok));
  }
  return rows;
}

inline std::unordered_map<std::string, int> name_index(const graph_t& g) {
  std::unordered_map<std::string, int> idx;
  idx.reserve(g.names.size());
  for (int i = 0; i < g.vertex_count(); ++i) idx.emplace(g.names[static_cast<std::size_t>(i)], i);
  return idx;
}

}  // namespace detail

// --- pair samples: `i  j  {1|0}` -------------------------------------------

inline void save_pair_sample(const graph_t& g, const pair_sample_t& s, std::ostream& out) {
  for (const auto& p : s.pairs)
    out << g.names[static_cast<std::size_t>(p.i)] << '\t' << g.names[static_cast<std::size_t>(p.j)]
        << '\t' << (p.link ? 1 : 0) << '\n';
}

inline pair_sample_t load_pair_sample(const graph_t& g, std::istream& in) {
  auto idx = detail::name_index(g);
  pair_sample_t s;
  for (auto& [line_no, tok] : detail::read_rows(in)) {
    if (tok.size() != 3) throw data_error("expected 'i j label' at line " + std::to_string(line_no));
    auto a = idx.find(tok[0]);
    auto b = idx.find(tok[1]);
    if (a == idx.end() || b == idx.end())
      throw data_error("unknown vertex name at line " + std::to_string(line_no));
    const std::int64_t lab = detail::parse_int(tok[2], "pair label", line_no);
    if (lab != 0 && lab != 1)
      throw data_error("pair label must be 0 or 1 at line " + std::to_string(line_no));
    pair_sample_t::entry_t e;
    e.i = std::min(a->second, b->second);
    e.j = std::max(a->second, b->second);
    e.link = lab == 1;
    s.pairs.push_back(e);
  }
  return s;
}

// --- memberships: `vertex  group  probability` ------------------------------

struct membership_row_t {
  std::string name;
  int group = 0;
  double prob = 1.0;
};

inline void save_membership(const std::vector<membership_row_t>& rows, std::ostream& out) {
  for (const auto& r : rows) out << r.name << '\t' << r.group << '\t' << fmt_double(r.prob) << '\n';
}

inline std::vector<membership_row_t> load_membership(std::istream& in) {
  std::vector<membership_row_t> rows;
  for (auto& [line_no, tok] : detail::read_rows(in)) {
    if (tok.size() != 3)
      throw data_error("expected 'vertex group probability' at line " + std::to_string(line_no));
    membership_row_t r;
    r.name = tok[0];
    r.group = static_cast<int>(detail::parse_int(tok[1], "group label", line_no));
    r.prob = detail::parse_double(tok[2], "probability", line_no);
    if (r.group < 1) throw data_error("group label must be >= 1 at line " + std::to_string(line_no));
    if (!(r.prob >= 0.0 && r.prob <= 1.0 + 1e-12))
      throw data_error("probability out of [0, 1] at line " + std::to_string(line_no));
    rows.push_back(std::move(r));
  }
  return rows;
}

// --- hard partitions: `vertex  group` ---------------------------------------

inline void save_partition(const std::vector<std::string>& names, const std::vector<int>& labels,
                           std::ostream& out) {
  for (std::size_t i = 0; i < names.size(); ++i) out << names[i] << '\t' << labels[i] << '\n';
}

inline std::vector<std::pair<std::string, int>> load_partition(std::istream& in) {
  std::vector<std::pair<std::string, int>> rows;
  for (auto& [line_no, tok] : detail::read_rows(in)) {
    if (tok.size() != 2) throw data_error("expected 'vertex group' at line " + std::to_string(line_no));
    const int g = static_cast<int>(detail::parse_int(tok[1], "group label", line_no));
    if (g < 1) throw data_error("group label must be >= 1 at line " + std::to_string(line_no));
    rows.emplace_back(tok[0], g);
  }
  return rows;
}

// --- tree dump: `heap_index  alpha  beta  E  W  vol` ------------------------

inline void save_tree(const tree_t& t, std::ostream& out) {
  for (int r = 1; r <= t.node_count(); ++r) {
    const node_state_t& s = t.at(r);
    out << r << '\t' << fmt_double(s.alpha) << '\t' << fmt_double(s.beta) << '\t'
        << fmt_double(s.edge_stat) << '\t' << fmt_double(s.exposure_stat) << '\t'
        << fmt_double(s.vol) << '\n';
  }
}

inline tree_t load_tree(std::istream& in, double a0 = 1.0, double b0 = 1.0) {
  auto rows = detail::read_rows(in);
  if (rows.empty()) throw data_error("tree dump is empty");
  int max_heap = 0;
  for (auto& [line_no, tok] : rows) {
    if (tok.size() != 6)
      throw data_error("expected 6 tree dump fields at line " + std::to_string(line_no));
    max_heap = std::max(max_heap, static_cast<int>(detail::parse_int(tok[0], "heap index", line_no)));
  }
  int depth = 0;
  while ((2 << (depth + 1)) - 1 < max_heap) ++depth;
  ++depth;
  tree_t t = tree_t::build(depth, a0, b0);
  if (t.node_count() != static_cast<int>(rows.size()))
    throw data_error("tree dump does not list a complete tree");
  for (auto& [line_no, tok] : rows) {
    const int r = static_cast<int>(detail::parse_int(tok[0], "heap index", line_no));
    if (r < 1 || r > t.node_count())
      throw data_error("heap index out of range at line " + std::to_string(line_no));
    node_state_t& s = t.at(r);
    s.alpha = detail::parse_double(tok[1], "alpha", line_no);
    s.beta = detail::parse_double(tok[2], "beta", line_no);
    s.edge_stat = detail::parse_double(tok[3], "E", line_no);
    s.exposure_stat = detail::parse_double(tok[4], "W", line_no);
    s.vol = detail::parse_double(tok[5], "vol", line_no);
    if (!(s.alpha > 0.0) || !(s.beta > 0.0))
      throw data_error("posterior parameters must be positive at line " + std::to_string(line_no));
  }
  return t;
}

// --- sweep trace: `sweep  moved  score  millis` -----------------------------

inline void save_trace(const std::vector<sweep_trace_t>& trace, std::ostream& out) {
  for (const auto& tr : trace)
    out << tr.sweep << '\t' << tr.moved << '\t' << fmt_double(tr.score) << '\t'
        << fmt_double(tr.millis) << '\n';
}

// --- prune map: `original_leaf  merged_group` -------------------------------

inline void save_pruned(const pruned_model_t& pm, std::ostream& out) {
  for (std::size_t k = 1; k < pm.leaf_map.size(); ++k)
    out << k << '\t' << pm.leaf_map[k] << '\n';
}

// --- scored pairs: `i  j  score  label` -------------------------------------

struct scored_row_t {
  std::string i, j;
  double score = 0.0;
  bool link = false;
};

inline void save_scored_pairs(const graph_t& g, const std::vector<scored_pair_t>& scored,
                              std::ostream& out) {
  for (const auto& s : scored)
    out << g.names[static_cast<std::size_t>(s.i)] << '\t' << g.names[static_cast<std::size_t>(s.j)]
        << '\t' << fmt_double(s.score) << '\t' << (s.link ? 1 : 0) << '\n';
}

inline std::vector<scored_row_t> load_scored_pairs(std::istream& in) {
  std::vector<scored_row_t> rows;
  for (auto& [line_no, tok] : detail::read_rows(in)) {
    if (tok.size() != 4)
      throw data_error("expected 'i j score label' at line " + std::to_string(line_no));
    scored_row_t r;
    r.i = tok[0];
    r.j = tok[1];
    r.score = detail::parse_double(tok[2], "score", line_no);
    const std::int64_t lab = detail::parse_int(tok[3], "pair label", line_no);
    if (lab != 0 && lab != 1)
      throw data_error("pair label must be 0 or 1 at line " + std::to_string(line_no));
    r.link = lab == 1;
    rows.push_back(std::move(r));
  }
  return rows;
}

// --- precision-recall curve: `recall  precision` ----------------------------

inline void save_pr_curve(const std::vector<std::pair<double, double>>& curve, std::ostream& out) {
  for (const auto& [recall, precision] : curve)
    out << fmt_double(recall) << '\t' << fmt_double(precision) << '\n';
}

// --- checksums --------------------------------------------------------------

inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open for checksum: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

}  // namespace hsbm
