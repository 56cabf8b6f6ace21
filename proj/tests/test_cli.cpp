#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hsbm/io.hpp"

using Catch::Matchers::WithinAbs;
using json = nlohmann::ordered_json;

namespace {

struct run_result_t {
  int code = -1;
  std::string out;
};

// Runs the binary under test with stderr silenced, capturing stdout.
run_result_t run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + HSBM_CLI_PATH + "\" " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  std::size_t got = 0;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
  const int status = pclose(pipe);
  run_result_t r;
  r.out = std::move(out);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

struct scratch_t {
  std::filesystem::path dir;
  scratch_t() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "hsbm_cli_XXXXXX").string();
    dir = mkdtemp(tmpl.data());
  }
  ~scratch_t() {
    std::error_code ec;
    std::filesystem::remove_all(dir, ec);
  }
  std::string p(const std::string& name) const { return (dir / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

double metric_value(const std::string& out, const std::string& name) {
  std::istringstream ss(out);
  std::string line;
  while (std::getline(ss, line)) {
    const auto tab = line.find('\t');
    if (tab != std::string::npos && line.substr(0, tab) == name)
      return std::stod(line.substr(tab + 1));
  }
  FAIL("metric line missing: " + name);
  return 0.0;
}

const std::string barbell_edges = "a b\na c\nb c\nc d\nd e\nd f\ne f\n";

}  // namespace

TEST_CASE("fit on the barbell emits two whole-triangle groups") {
  scratch_t s;
  spit(s.p("g.tsv"), barbell_edges);
  auto r = run_cli("fit --graph " + s.p("g.tsv") + " --out " + s.p("f"));
  REQUIRE(r.code == 0);

  auto in = std::ifstream(s.p("f.membership.tsv"));
  auto rows = hsbm::load_membership(in);
  REQUIRE(rows.size() == 6);
  std::map<std::string, int> grp;
  std::set<int> labels;
  for (const auto& row : rows) {
    grp[row.name] = row.group;
    labels.insert(row.group);
    REQUIRE_THAT(row.prob, WithinAbs(1.0, 1e-12));
  }
  REQUIRE(labels.size() == 2);
  REQUIRE(grp["a"] == grp["b"]);
  REQUIRE(grp["b"] == grp["c"]);
  REQUIRE(grp["d"] == grp["e"]);
  REQUIRE(grp["e"] == grp["f"]);
  REQUIRE(grp["a"] != grp["d"]);

  const json m = json::parse(slurp(s.p("f.manifest.json")));
  REQUIRE(m["subcommand"] == "fit");
  REQUIRE(m["results"]["groups"] == 2);
  REQUIRE(m["results"]["converged"] == true);
  // The manifest certifies each deterministic artifact by checksum.
  for (const auto& key : {"membership", "tree", "pruned"}) {
    const std::string path = m["outputs"][key];
    REQUIRE(m["checksums"][path] == hsbm::file_checksum(path));
  }
  REQUIRE_FALSE(m["checksums"].contains(std::string(m["outputs"]["trace"])));
}

TEST_CASE("exit codes separate usage, io, and data failures") {
  scratch_t s;
  spit(s.p("bad.tsv"), "a b\nb c d e\n");
  spit(s.p("ok.tsv"), barbell_edges);

  REQUIRE(run_cli("--help").code == 0);
  REQUIRE(run_cli("fit --help").code == 0);
  REQUIRE(run_cli("fit --out " + s.p("x")).code == 1);            // missing --graph
  REQUIRE(run_cli("frobnicate").code == 1);                       // unknown subcommand
  REQUIRE(run_cli("fit --graph " + s.p("ok.tsv") + " --depth zebra --out " + s.p("x")).code == 1);
  REQUIRE(run_cli("fit --graph " + s.p("ok.tsv") + " --model coins --out " + s.p("x")).code == 1);
  REQUIRE(run_cli("eval --out " + s.p("x")).code == 1);           // neither --pred nor --parts
  REQUIRE(run_cli("fit --graph " + s.p("missing.tsv") + " --out " + s.p("x")).code == 2);
  REQUIRE(run_cli("fit --graph " + s.p("bad.tsv") + " --out " + s.p("x")).code == 3);
  REQUIRE(run_cli("generate --n 1000 --k 200 --smin 10 --smax 12 --out " + s.p("x")).code == 3);
}

TEST_CASE("empty graph fit at depth 1 reports one group") {
  scratch_t s;
  spit(s.p("g.tsv"), "");
  auto r = run_cli("fit --graph " + s.p("g.tsv") + " --depth 1 --mode det --out " + s.p("f"));
  REQUIRE(r.code == 0);
  REQUIRE(slurp(s.p("f.membership.tsv")).empty());
  const json m = json::parse(slurp(s.p("f.manifest.json")));
  REQUIRE(m["results"]["groups"] == 1);
}

TEST_CASE("generate split fit predict eval pipeline holds together") {
  scratch_t s;
  const std::string gen_flags = "--n 300 --k 3 --mixing 0.1 --davg 10 --dmax 30 --seed 1";
  REQUIRE(run_cli("generate " + gen_flags + " --out " + s.p("g")).code == 0);
  REQUIRE(run_cli("split --graph " + s.p("g.edges.tsv") +
                  " --fraction 0.1 --policy equal --seed 7 --out " + s.p("s"))
              .code == 0);
  REQUIRE(run_cli("fit --graph " + s.p("s.train.tsv") + " --seed 3 --out " + s.p("f")).code == 0);
  REQUIRE(run_cli("predict-links --graph-train " + s.p("s.train.tsv") + " --membership " +
                  s.p("f.membership.tsv") + " --pairs " + s.p("s.pairs.tsv") + " --out " + s.p("p"))
              .code == 0);

  auto ev = run_cli("eval --pred " + s.p("p.scored.tsv") + " --pr-out " + s.p("pr.tsv") +
                    " --out " + s.p("e1"));
  REQUIRE(ev.code == 0);
  const double ap = metric_value(ev.out, "ap");
  const double prev = metric_value(ev.out, "prevalence");
  REQUIRE(ap >= 0.5);
  REQUIRE(ap <= 1.0);
  REQUIRE_THAT(prev, WithinAbs(0.5, 1e-12));

  auto ev2 = run_cli("eval --parts " + s.p("f.membership.tsv") + " " + s.p("g.truth.tsv") +
                     " --out " + s.p("e2"));
  REQUIRE(ev2.code == 0);
  REQUIRE(metric_value(ev2.out, "nmi") >= 0.5);

  // Every TSV parses back through its loader and the split books balance.
  auto train_in = std::ifstream(s.p("s.train.tsv"));
  const hsbm::graph_t train = hsbm::load_edge_list(train_in);
  REQUIRE(train.vertex_count() == 300);
  auto pairs_in = std::ifstream(s.p("s.pairs.tsv"));
  const hsbm::pair_sample_t sample = hsbm::load_pair_sample(train, pairs_in);
  const json sm = json::parse(slurp(s.p("s.manifest.json")));
  REQUIRE(static_cast<std::int64_t>(sample.pairs.size()) ==
          sm["results"]["sampled_pairs"].get<std::int64_t>());
  std::int64_t links = 0;
  for (const auto& pr : sample.pairs) links += pr.link ? 1 : 0;
  REQUIRE(links == sm["results"]["removed_links"].get<std::int64_t>());
  REQUIRE(links * 2 == static_cast<std::int64_t>(sample.pairs.size()));  // equal policy

  auto tree_in = std::ifstream(s.p("f.tree.tsv"));
  const hsbm::tree_t tree = hsbm::load_tree(tree_in);
  std::ostringstream tree_round;
  hsbm::save_tree(tree, tree_round);
  REQUIRE(tree_round.str() == slurp(s.p("f.tree.tsv")));

  auto mem_in = std::ifstream(s.p("f.membership.tsv"));
  const auto mrows = hsbm::load_membership(mem_in);
  REQUIRE(mrows.size() == 300);
  std::ostringstream mem_round;
  hsbm::save_membership(mrows, mem_round);
  REQUIRE(mem_round.str() == slurp(s.p("f.membership.tsv")));

  auto truth_in = std::ifstream(s.p("g.truth.tsv"));
  const auto trows = hsbm::load_partition(truth_in);
  REQUIRE(trows.size() == 300);

  auto scored_in = std::ifstream(s.p("p.scored.tsv"));
  const auto srows = hsbm::load_scored_pairs(scored_in);
  REQUIRE(srows.size() == sample.pairs.size());
  for (const auto& row : srows) {
    REQUIRE(row.score >= 0.0);
    REQUIRE(row.score <= 1.0);
  }

  // The held-out links really left the train graph.
  auto orig_in = std::ifstream(s.p("g.edges.tsv"));
  const hsbm::graph_t orig = hsbm::load_edge_list(orig_in);
  REQUIRE(orig.pair_count() == train.pair_count() + links);
}

TEST_CASE("reruns reproduce artifacts byte for byte") {
  scratch_t s;
  const std::string gen_flags = "--n 200 --k 4 --mixing 0.15 --davg 8 --dmax 25 --seed 6";
  REQUIRE(run_cli("generate " + gen_flags + " --out " + s.p("a")).code == 0);
  REQUIRE(run_cli("generate " + gen_flags + " --out " + s.p("b")).code == 0);
  REQUIRE(slurp(s.p("a.edges.tsv")) == slurp(s.p("b.edges.tsv")));
  REQUIRE(slurp(s.p("a.truth.tsv")) == slurp(s.p("b.truth.tsv")));

  const std::string fit_flags = "--graph " + s.p("a.edges.tsv") + " --seed 9 --depth 4";
  REQUIRE(run_cli("fit " + fit_flags + " --out " + s.p("f1")).code == 0);
  REQUIRE(run_cli("fit " + fit_flags + " --out " + s.p("f2")).code == 0);
  for (const auto& part : {"membership", "tree", "pruned"})
    REQUIRE(slurp(s.p(std::string("f1.") + part + ".tsv")) ==
            slurp(s.p(std::string("f2.") + part + ".tsv")));

  // Same checksums in both manifests, in the same artifact order.
  const json m1 = json::parse(slurp(s.p("f1.manifest.json")));
  const json m2 = json::parse(slurp(s.p("f2.manifest.json")));
  std::vector<std::string> c1, c2;
  for (const auto& [path, sum] : m1["checksums"].items()) c1.push_back(sum);
  for (const auto& [path, sum] : m2["checksums"].items()) c2.push_back(sum);
  REQUIRE(c1 == c2);
  REQUIRE(c1.size() == 3);
}

TEST_CASE("predict scores unknown names zero and keeps row order") {
  scratch_t s;
  spit(s.p("train.tsv"), "a b\nb c\n");
  spit(s.p("mem.tsv"), "a\t1\t1\nb\t1\t1\n");  // c has no membership row
  spit(s.p("pairs.tsv"), "a\tz\t0\na\tb\t1\na\tc\t0\n");
  auto r = run_cli("predict-links --graph-train " + s.p("train.tsv") + " --membership " +
                   s.p("mem.tsv") + " --pairs " + s.p("pairs.tsv") + " --out " + s.p("p"));
  REQUIRE(r.code == 0);
  auto in = std::ifstream(s.p("p.scored.tsv"));
  const auto rows = hsbm::load_scored_pairs(in);
  REQUIRE(rows.size() == 3);
  REQUIRE(rows[0].i == "a");
  REQUIRE(rows[0].j == "z");
  REQUIRE_THAT(rows[0].score, WithinAbs(0.0, 1e-12));  // unknown vertex
  REQUIRE_THAT(rows[1].score, WithinAbs(1.0, 1e-12));  // a-b inside the labeled group
  REQUIRE_THAT(rows[2].score, WithinAbs(0.0, 1e-12));  // c is unlabeled
  const json m = json::parse(slurp(s.p("p.manifest.json")));
  REQUIRE(m["results"]["unknown_pairs"] == 1);
  REQUIRE(m["results"]["unlabeled_vertices"] == 1);
}

TEST_CASE("eval reproduces the frozen block-density examples") {
  scratch_t s;
  spit(s.p("pa.tsv"), "a\t1\nb\t1\nc\t2\n");
  spit(s.p("pb.tsv"), "a\t2\nb\t2\nc\t1\n");
  auto r = run_cli("eval --parts " + s.p("pa.tsv") + " " + s.p("pb.tsv") + " --out " + s.p("e"));
  REQUIRE(r.code == 0);
  REQUIRE_THAT(metric_value(r.out, "nmi"), WithinAbs(1.0, 1e-12));

  spit(s.p("train.tsv"), barbell_edges);
  spit(s.p("mem.tsv"), "a\t1\t1\nb\t1\t1\nc\t1\t1\nd\t2\t1\ne\t2\t1\nf\t2\t1\n");
  spit(s.p("pairs.tsv"), "a\tb\t1\na\td\t0\n");
  REQUIRE(run_cli("predict-links --graph-train " + s.p("train.tsv") + " --membership " +
                  s.p("mem.tsv") + " --pairs " + s.p("pairs.tsv") + " --out " + s.p("p"))
              .code == 0);
  auto in = std::ifstream(s.p("p.scored.tsv"));
  const auto rows = hsbm::load_scored_pairs(in);
  REQUIRE_THAT(rows[0].score, WithinAbs(1.0, 1e-12));        // saturated triangle
  REQUIRE_THAT(rows[1].score, WithinAbs(1.0 / 9.0, 1e-12));  // one bridge, nine cross pairs

  // Disjoint name sets cannot be joined.
  spit(s.p("pc.tsv"), "x\t1\ny\t2\n");
  REQUIRE(run_cli("eval --parts " + s.p("pa.tsv") + " " + s.p("pc.tsv") + " --out " + s.p("e2"))
              .code == 3);
}

TEST_CASE("generate with zero mixing keeps groups disconnected in the files") {
  scratch_t s;
  REQUIRE(run_cli("generate --n 60 --k 2 --mixing 0 --davg 6 --dmax 15 --seed 4 --out " + s.p("g"))
              .code == 0);
  auto truth_in = std::ifstream(s.p("g.truth.tsv"));
  std::map<std::string, int> truth;
  for (const auto& [name, grp] : hsbm::load_partition(truth_in)) truth[name] = grp;
  auto edges_in = std::ifstream(s.p("g.edges.tsv"));
  const hsbm::graph_t g = hsbm::load_edge_list(edges_in);
  for (const hsbm::edge_t& e : g.edges())
    REQUIRE(truth.at(g.names[static_cast<std::size_t>(e.u)]) ==
            truth.at(g.names[static_cast<std::size_t>(e.v)]));
}
