#include <chrono>
#include <cstdint>
#include <iostream>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hsbm/fit.hpp"
#include "hsbm/io.hpp"

using json = nlohmann::ordered_json;

namespace {

struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using steady_t = std::chrono::steady_clock;

double ms_since(steady_t::time_point t0) {
  return std::chrono::duration<double, std::milli>(steady_t::now() - t0).count();
}

hsbm::graph_t load_graph(const std::string& path) {
  auto in = hsbm::open_input(path);
  return hsbm::load_edge_list(in);
}

// Emits PREFIX.manifest.json once every artifact is on disk.  Outputs listed
// under volatile_keys (wall-clock traces) are exempt from the checksum block,
// which otherwise certifies byte-for-byte reproducibility.
void write_manifest(const std::string& prefix, json manifest, double wall_ms,
                    const std::set<std::string>& volatile_keys = {}) {
  manifest["wall_ms"] = wall_ms;
  json sums = json::object();
  if (manifest.contains("outputs"))
    for (auto& [key, path] : manifest["outputs"].items())
      if (!volatile_keys.count(key)) sums[path.get<std::string>()] = hsbm::file_checksum(path.get<std::string>());
  manifest["checksums"] = sums;
  auto out = hsbm::open_output(prefix + ".manifest.json");
  out << manifest.dump(2) << '\n';
}

// --- generate ----------------------------------------------------------------

struct generate_opts_t {
  int n = 0, k = 0, smin = 0, smax = 0;
  double mixing = 0.1, davg = 10.0, dmax = 100.0, gamma = 2.5;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_generate(const generate_opts_t& o) {
  const auto t0 = steady_t::now();
  if (o.k > 0 && o.smin > 0 && static_cast<std::int64_t>(o.smin) * o.k > o.n)
    throw hsbm::data_error("infeasible group sizes: smin * k exceeds n");

  hsbm::gen_config_t gc;
  gc.n = o.n;
  gc.k = o.k;
  gc.size_min = o.smin;
  gc.size_max = o.smax;
  gc.mixing = o.mixing;
  gc.d_avg = o.davg;
  gc.d_max = o.dmax;
  gc.gamma_d = o.gamma;
  gc.seed = o.seed;
  auto planted = hsbm::generate_planted(gc);

  const std::string edges_path = o.out + ".edges.tsv";
  const std::string truth_path = o.out + ".truth.tsv";
  {
    auto f = hsbm::open_output(edges_path);
    hsbm::save_edge_list(planted.graph, f);
  }
  {
    auto f = hsbm::open_output(truth_path);
    hsbm::save_partition(planted.graph.names, planted.truth.labels, f);
  }

  json m;
  m["subcommand"] = "generate";
  m["config"] = {{"n", o.n},         {"k", o.k},       {"smin", o.smin},
                 {"smax", o.smax},   {"mixing", o.mixing}, {"davg", o.davg},
                 {"dmax", o.dmax},   {"gamma", o.gamma},   {"seed", o.seed}};
  m["outputs"] = {{"edges", edges_path}, {"truth", truth_path}};
  m["results"] = {{"vertices", planted.graph.vertex_count()},
                  {"edges", planted.graph.pair_count()},
                  {"groups", planted.truth.group_count()}};
  write_manifest(o.out, std::move(m), ms_since(t0));
  return 0;
}

// --- split -------------------------------------------------------------------

struct split_opts_t {
  std::string graph;
  double fraction = 0.1;
  std::string policy = "equal";
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_split(const split_opts_t& o) {
  const auto t0 = steady_t::now();
  auto g = load_graph(o.graph);
  const auto policy = o.policy == "ratio" ? hsbm::nonlink_policy_t::preserve_ratio
                                          : hsbm::nonlink_policy_t::equal;
  auto res = hsbm::hold_out_split(g, o.fraction, policy, o.seed);

  const std::string train_path = o.out + ".train.tsv";
  const std::string pairs_path = o.out + ".pairs.tsv";
  {
    auto f = hsbm::open_output(train_path);
    hsbm::save_edge_list(res.train, f);
  }
  {
    auto f = hsbm::open_output(pairs_path);
    hsbm::save_pair_sample(res.train, res.sample, f);
  }

  json m;
  m["subcommand"] = "split";
  m["config"] = {{"fraction", o.fraction}, {"policy", o.policy}, {"seed", o.seed}};
  m["inputs"] = {{"graph", o.graph}};
  m["outputs"] = {{"train", train_path}, {"pairs", pairs_path}};
  m["results"] = {{"removed_links", res.removed_links},
                  {"requested_nonlinks", res.requested_nonlinks},
                  {"sampled_pairs", static_cast<std::int64_t>(res.sample.pairs.size())},
                  {"train_edges", res.train.pair_count()}};
  write_manifest(o.out, std::move(m), ms_since(t0));
  return 0;
}

// --- fit ---------------------------------------------------------------------

struct fit_opts_t {
  std::string graph, out;
  std::string model = "hdsb", rule = "collapsed", mode = "det";
  std::string depth = "auto", restricted = "on", order = "ascending", init = "bisect";
  double a0 = 1.0, b0 = 1.0, tol = 1e-6, prune_threshold = 0.0, split_gate = 0.15;
  double min_degree = 0.0;
  int sweeps = 0;
  std::uint64_t seed = 1;
};

int parse_depth(const std::string& s) {
  if (s == "auto") return 0;
  try {
    std::size_t used = 0;
    const int d = std::stoi(s, &used);
    if (used == s.size() && d >= 1 && d <= hsbm::tree_t::max_depth) return d;
  } catch (const std::exception&) {
  }
  throw usage_error("--depth must be 'auto' or an integer in [1, " +
                    std::to_string(hsbm::tree_t::max_depth) + "]");
}

int cmd_fit(const fit_opts_t& o) {
  const auto t0 = steady_t::now();
  auto g = load_graph(o.graph);
  int removed_vertices = 0;
  if (o.min_degree > 0.0) {
    auto pruned = hsbm::prune_low_degree(g, o.min_degree);
    removed_vertices = g.vertex_count() - pruned.graph.vertex_count();
    g = std::move(pruned.graph);
  }

  hsbm::fit_config_t fc;
  fc.model = o.model == "hsb" ? hsbm::model_t::hsb : hsbm::model_t::hdsb;
  fc.rule = o.rule == "mf" ? hsbm::local_rule_t::mf : hsbm::local_rule_t::collapsed;
  fc.mode = o.mode == "prob" ? hsbm::update_mode_t::probabilistic
                             : hsbm::update_mode_t::deterministic;
  fc.restricted = o.restricted == "on";
  fc.depth = parse_depth(o.depth);
  fc.a0 = o.a0;
  fc.b0 = o.b0;
  fc.max_sweeps = o.sweeps;
  fc.tol = o.tol;
  fc.seed = o.seed;
  fc.order = o.order == "shuffled" ? hsbm::sweep_order_t::shuffled : hsbm::sweep_order_t::ascending;
  fc.init = o.init == "random" ? hsbm::init_rule_t::random : hsbm::init_rule_t::bisect;
  fc.prune_threshold = o.prune_threshold;
  fc.split_gate = o.split_gate;

  auto res = hsbm::fit(g, fc);
  for (const auto& tr : res.trace)
    std::cerr << "sweep " << tr.sweep << ": moved " << tr.moved << " score "
              << hsbm::fmt_double(tr.score) << '\n';

  const auto labels = hsbm::merged_labels(res.membership, res.pruned);
  std::vector<hsbm::membership_row_t> rows;
  rows.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    hsbm::membership_row_t r;
    r.name = g.names[i];
    r.group = labels[i];
    r.prob = 1.0;
    if (res.membership.has_soft()) {
      // Merged-group probability: soft mass over the leaves it absorbed.
      double p = 0.0;
      const auto& row = res.membership.soft[i];
      for (std::size_t leaf = 1; leaf < res.pruned.leaf_map.size(); ++leaf)
        if (res.pruned.leaf_map[leaf] == labels[i]) p += row[leaf - 1];
      r.prob = p;
    }
    rows.push_back(std::move(r));
  }

  const std::string membership_path = o.out + ".membership.tsv";
  const std::string tree_path = o.out + ".tree.tsv";
  const std::string pruned_path = o.out + ".pruned.tsv";
  const std::string trace_path = o.out + ".trace.tsv";
  {
    auto f = hsbm::open_output(membership_path);
    hsbm::save_membership(rows, f);
  }
  {
    auto f = hsbm::open_output(tree_path);
    hsbm::save_tree(res.tree, f);
  }
  {
    auto f = hsbm::open_output(pruned_path);
    hsbm::save_pruned(res.pruned, f);
  }
  {
    auto f = hsbm::open_output(trace_path);
    hsbm::save_trace(res.trace, f);
  }

  json m;
  m["subcommand"] = "fit";
  m["config"] = {{"model", o.model},
                 {"rule", o.rule},
                 {"mode", o.mode},
                 {"depth", o.depth},
                 {"restricted", o.restricted},
                 {"a0", o.a0},
                 {"b0", o.b0},
                 {"sweeps", o.sweeps},
                 {"tol", o.tol},
                 {"seed", o.seed},
                 {"order", o.order},
                 {"init", o.init},
                 {"prune_threshold", o.prune_threshold},
                 {"split_gate", o.split_gate},
                 {"min_degree", o.min_degree}};
  m["inputs"] = {{"graph", o.graph}};
  m["outputs"] = {{"membership", membership_path},
                  {"tree", tree_path},
                  {"pruned", pruned_path},
                  {"trace", trace_path}};
  m["results"] = {{"converged", res.converged},
                  {"sweeps_run", static_cast<int>(res.trace.size())},
                  {"depth", res.depth},
                  {"groups", res.pruned.group_count},
                  {"score", res.pruned.score},
                  {"vertices", g.vertex_count()},
                  {"removed_low_degree", removed_vertices}};
  write_manifest(o.out, std::move(m), ms_since(t0), {"trace"});
  return 0;
}

// --- predict-links -----------------------------------------------------------

struct predict_opts_t {
  std::string graph_train, membership, pairs, out;
};

int cmd_predict(const predict_opts_t& o) {
  const auto t0 = steady_t::now();
  auto g = load_graph(o.graph_train);
  auto index = hsbm::detail::name_index(g);

  std::vector<hsbm::membership_row_t> mrows;
  {
    auto in = hsbm::open_input(o.membership);
    mrows = hsbm::load_membership(in);
  }
  std::vector<int> labels(static_cast<std::size_t>(g.vertex_count()), 0);
  std::unordered_map<std::string, int> seen;
  int foreign_members = 0;
  for (const auto& r : mrows) {
    if (!seen.emplace(r.name, r.group).second)
      throw hsbm::data_error("duplicate vertex in membership: " + r.name);
    auto it = index.find(r.name);
    if (it == index.end()) {
      ++foreign_members;
      continue;
    }
    labels[static_cast<std::size_t>(it->second)] = r.group;
  }
  int unlabeled = 0;
  for (int lab : labels) unlabeled += lab == 0 ? 1 : 0;
  if (foreign_members > 0)
    std::cerr << "warning: " << foreign_members << " membership rows name no train vertex\n";
  if (unlabeled > 0)
    std::cerr << "warning: " << unlabeled << " train vertices lack a membership row; their pairs score 0\n";

  // Pairs whose endpoints exist in the train graph go through the block
  // scorer; the rest keep score 0.  Output preserves the input row order.
  std::vector<hsbm::scored_row_t> out_rows;
  hsbm::pair_sample_t known;
  std::vector<std::size_t> known_pos;
  int unknown_pairs = 0;
  {
    auto in = hsbm::open_input(o.pairs);
    for (auto& [line_no, tok] : hsbm::detail::read_rows(in)) {
      if (tok.size() != 3)
        throw hsbm::data_error("expected 'i j label' at line " + std::to_string(line_no));
      const std::int64_t lab = hsbm::detail::parse_int(tok[2], "pair label", line_no);
      if (lab != 0 && lab != 1)
        throw hsbm::data_error("pair label must be 0 or 1 at line " + std::to_string(line_no));
      hsbm::scored_row_t r;
      r.i = tok[0];
      r.j = tok[1];
      r.score = 0.0;
      r.link = lab == 1;
      auto a = index.find(tok[0]);
      auto b = index.find(tok[1]);
      if (a != index.end() && b != index.end()) {
        hsbm::pair_sample_t::entry_t e;
        e.i = std::min(a->second, b->second);
        e.j = std::max(a->second, b->second);
        e.link = r.link;
        known.pairs.push_back(e);
        known_pos.push_back(out_rows.size());
      } else {
        ++unknown_pairs;
      }
      out_rows.push_back(std::move(r));
    }
  }
  if (unknown_pairs > 0)
    std::cerr << "warning: " << unknown_pairs << " pairs name unknown vertices; they score 0\n";

  auto scored = hsbm::theta_hat_scores(g, labels, known);
  for (std::size_t k = 0; k < scored.size(); ++k) out_rows[known_pos[k]].score = scored[k].score;

  const std::string scored_path = o.out + ".scored.tsv";
  {
    auto f = hsbm::open_output(scored_path);
    for (const auto& r : out_rows)
      f << r.i << '\t' << r.j << '\t' << hsbm::fmt_double(r.score) << '\t' << (r.link ? 1 : 0)
        << '\n';
  }

  json m;
  m["subcommand"] = "predict-links";
  m["config"] = json::object();
  m["inputs"] = {{"graph_train", o.graph_train}, {"membership", o.membership}, {"pairs", o.pairs}};
  m["outputs"] = {{"scored", scored_path}};
  m["results"] = {{"pairs", static_cast<std::int64_t>(out_rows.size())},
                  {"unknown_pairs", unknown_pairs},
                  {"unlabeled_vertices", unlabeled}};
  write_manifest(o.out, std::move(m), ms_since(t0));
  return 0;
}

// --- eval --------------------------------------------------------------------

struct eval_opts_t {
  std::string pred;
  std::vector<std::string> parts;
  std::string pr_out, out;
};

int cmd_eval(const eval_opts_t& o) {
  const auto t0 = steady_t::now();
  if (o.pred.empty() == o.parts.empty())
    throw usage_error("eval needs exactly one of --pred or --parts");

  json m;
  m["subcommand"] = "eval";
  json outputs = json::object();

  if (!o.pred.empty()) {
    std::vector<hsbm::scored_row_t> rows;
    {
      auto in = hsbm::open_input(o.pred);
      rows = hsbm::load_scored_pairs(in);
    }
    std::vector<hsbm::scored_pair_t> sp;
    sp.reserve(rows.size());
    for (const auto& r : rows) sp.push_back({0, 0, r.score, r.link});
    const double ap = hsbm::auprc(sp);
    const double prev = hsbm::prevalence(sp);
    std::cout << "ap\t" << hsbm::fmt_double(ap) << '\n';
    std::cout << "prevalence\t" << hsbm::fmt_double(prev) << '\n';
    if (!o.pr_out.empty()) {
      auto f = hsbm::open_output(o.pr_out);
      hsbm::save_pr_curve(hsbm::pr_curve(sp), f);
      outputs["pr_curve"] = o.pr_out;
    }
    m["config"] = {{"metric", "ap"}};
    m["inputs"] = {{"pred", o.pred}};
    m["outputs"] = outputs;
    m["results"] = {{"ap", ap},
                    {"prevalence", prev},
                    {"pairs", static_cast<std::int64_t>(sp.size())}};
  } else {
    if (o.parts.size() != 2) throw usage_error("--parts takes exactly two partition files");
    // Accepts plain partitions (vertex group) and membership TSVs
    // (vertex group probability); only the first two fields matter here.
    auto load = [](const std::string& path) {
      auto in = hsbm::open_input(path);
      std::vector<std::pair<std::string, int>> rows;
      for (auto& [line_no, tok] : hsbm::detail::read_rows(in)) {
        if (tok.size() != 2 && tok.size() != 3)
          throw hsbm::data_error("expected 'vertex group [probability]' at line " +
                                 std::to_string(line_no));
        const int grp =
            static_cast<int>(hsbm::detail::parse_int(tok[1], "group label", line_no));
        if (grp < 1)
          throw hsbm::data_error("group label must be >= 1 at line " + std::to_string(line_no));
        rows.emplace_back(tok[0], grp);
      }
      return rows;
    };
    const auto rows_a = load(o.parts[0]);
    const auto rows_b = load(o.parts[1]);
    std::unordered_map<std::string, int> in_b;
    for (const auto& [name, grp] : rows_b)
      if (!in_b.emplace(name, grp).second)
        throw hsbm::data_error("duplicate vertex in partition: " + name);
    std::vector<int> ga, gb;
    std::unordered_map<std::string, int> seen_a;
    for (const auto& [name, grp] : rows_a) {
      if (!seen_a.emplace(name, grp).second)
        throw hsbm::data_error("duplicate vertex in partition: " + name);
      auto it = in_b.find(name);
      if (it == in_b.end()) continue;
      ga.push_back(grp);
      gb.push_back(it->second);
    }
    if (ga.empty()) throw hsbm::data_error("partitions share no vertex names");
    const double score = hsbm::nmi(hsbm::partition_t::from_labels(ga),
                                   hsbm::partition_t::from_labels(gb));
    std::cout << "nmi\t" << hsbm::fmt_double(score) << '\n';
    m["config"] = {{"metric", "nmi"}};
    m["inputs"] = {{"parts", json::array({o.parts[0], o.parts[1]})}};
    m["outputs"] = outputs;
    m["results"] = {{"nmi", score}, {"joined_vertices", static_cast<std::int64_t>(ga.size())}};
  }
  write_manifest(o.out, std::move(m), ms_since(t0));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical stochastic block model toolkit"};
  app.require_subcommand(1);

  generate_opts_t gen_o;
  auto* gen = app.add_subcommand("generate", "Sample a planted-partition benchmark graph");
  gen->add_option("--n", gen_o.n, "vertex count")->required();
  gen->add_option("--k", gen_o.k, "equal group count (0 = use --smin/--smax)");
  gen->add_option("--smin", gen_o.smin, "minimum group size");
  gen->add_option("--smax", gen_o.smax, "maximum group size");
  gen->add_option("--mixing", gen_o.mixing, "cross-group degree fraction")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--davg", gen_o.davg, "target mean degree");
  gen->add_option("--dmax", gen_o.dmax, "maximum target degree");
  gen->add_option("--gamma", gen_o.gamma, "degree power-law exponent");
  gen->add_option("--seed", gen_o.seed, "generator seed");
  gen->add_option("--out", gen_o.out, "output path prefix")->required();

  split_opts_t split_o;
  auto* spl = app.add_subcommand("split", "Hold out a fraction of links plus sampled non-links");
  spl->add_option("--graph", split_o.graph, "edge list path")->required();
  spl->add_option("--fraction", split_o.fraction, "fraction of links to hold out");
  spl->add_option("--policy", split_o.policy, "non-link sampling policy")
      ->check(CLI::IsMember({"equal", "ratio"}));
  spl->add_option("--seed", split_o.seed, "sampling seed");
  spl->add_option("--out", split_o.out, "output path prefix")->required();

  fit_opts_t fit_o;
  auto* fit = app.add_subcommand("fit", "Fit the hierarchical block model to an edge list");
  fit->add_option("--graph", fit_o.graph, "edge list path")->required();
  fit->add_option("--model", fit_o.model, "observation model")->check(CLI::IsMember({"hdsb", "hsb"}));
  fit->add_option("--rule", fit_o.rule, "local update rule")->check(CLI::IsMember({"mf", "collapsed"}));
  fit->add_option("--mode", fit_o.mode, "update mode")->check(CLI::IsMember({"det", "prob"}));
  fit->add_option("--depth", fit_o.depth, "tree depth or 'auto'");
  fit->add_option("--restricted", fit_o.restricted, "restricted traversal")
      ->check(CLI::IsMember({"on", "off"}));
  fit->add_option("--a0", fit_o.a0, "prior shape")->check(CLI::PositiveNumber);
  fit->add_option("--b0", fit_o.b0, "prior rate")->check(CLI::PositiveNumber);
  fit->add_option("--sweeps", fit_o.sweeps, "sweep cap (0 = mode default)")
      ->check(CLI::NonNegativeNumber);
  fit->add_option("--tol", fit_o.tol, "probabilistic convergence tolerance");
  fit->add_option("--seed", fit_o.seed, "fit seed");
  fit->add_option("--order", fit_o.order, "sweep order")
      ->check(CLI::IsMember({"ascending", "shuffled"}));
  fit->add_option("--init", fit_o.init, "initialization rule")
      ->check(CLI::IsMember({"bisect", "random"}));
  fit->add_option("--prune-threshold", fit_o.prune_threshold, "log Bayes factor needed to keep a split");
  fit->add_option("--split-gate", fit_o.split_gate, "bisection evidence gate (nats per edge)")
      ->check(CLI::NonNegativeNumber);
  fit->add_option("--min-degree", fit_o.min_degree, "drop vertices below this degree first")
      ->check(CLI::NonNegativeNumber);
  fit->add_option("--out", fit_o.out, "output path prefix")->required();

  predict_opts_t pred_o;
  auto* prd = app.add_subcommand("predict-links", "Score vertex pairs by fitted block densities");
  prd->add_option("--graph-train", pred_o.graph_train, "training edge list path")->required();
  prd->add_option("--membership", pred_o.membership, "membership TSV path")->required();
  prd->add_option("--pairs", pred_o.pairs, "pair sample TSV path")->required();
  prd->add_option("--out", pred_o.out, "output path prefix")->required();

  eval_opts_t eval_o;
  auto* evl = app.add_subcommand("eval", "Report metrics for predictions or partitions");
  evl->add_option("--pred", eval_o.pred, "scored pairs TSV (reports ap, prevalence)");
  evl->add_option("--parts", eval_o.parts, "two partition TSVs (reports nmi)")->expected(2);
  evl->add_option("--pr-out", eval_o.pr_out, "write the precision-recall curve here");
  evl->add_option("--out", eval_o.out, "output path prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_generate(gen_o);
    if (spl->parsed()) return cmd_split(split_o);
    if (fit->parsed()) return cmd_fit(fit_o);
    if (prd->parsed()) return cmd_predict(pred_o);
    if (evl->parsed()) return cmd_eval(eval_o);
  } catch (const usage_error& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const hsbm::io_error& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 2;
  } catch (const hsbm::data_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
