#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "mhne/error.hpp"
#include "mhne/eval.hpp"
#include "mhne/log.hpp"

using namespace mhne;

namespace {

// Mann-Whitney U / (P N), ties counted 1/2, by brute force over all pairs.
double mann_whitney(const std::vector<double>& s, const std::vector<bool>& pos) {
  double wins = 0;
  long long p = 0, n = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!pos[i]) continue;
    ++p;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (pos[j]) continue;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  for (bool b : pos) n += b ? 0 : 1;
  return wins / double(p * n);
}

// Per-label set counting, independent of the library's loop structure.
F1Scores f1_oracle(const std::vector<LabelSet>& pred, const std::vector<LabelSet>& gold, int labels) {
  double tp_all = 0, fp_all = 0, fn_all = 0, macro = 0;
  for (int l = 0; l < labels; ++l) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      const std::set<int> p(pred[i].begin(), pred[i].end()), g(gold[i].begin(), gold[i].end());
      const bool in_p = p.count(l) > 0, in_g = g.count(l) > 0;
      tp += in_p && in_g;
      fp += in_p && !in_g;
      fn += !in_p && in_g;
    }
    tp_all += tp;
    fp_all += fp;
    fn_all += fn;
    if (tp + fn > 0) macro += 2 * tp / (2 * tp + fp + fn);
  }
  const double d = 2 * tp_all + fp_all + fn_all;
  return {d > 0 ? 2 * tp_all / d : 0.0, macro / labels};
}

struct Quiet {
  Quiet() { set_log_sink({}); }
};

}  // namespace

TEST_CASE("roc_auc matches Mann-Whitney exactly on random instances") {
  std::mt19937_64 rng(5);
  for (int inst = 0; inst < 100; ++inst) {
    const int n = 2 + int(rng() % 60);
    std::uniform_int_distribution<int> coarse(0, 5);
    std::normal_distribution<double> fine(0, 1);
    std::vector<double> s(n);
    std::vector<bool> pos(n);
    for (int i = 0; i < n; ++i) {
      s[i] = inst % 2 ? double(coarse(rng)) : fine(rng);
      pos[i] = rng() % 2;
    }
    pos[0] = true;
    pos[1] = false;
    CHECK(roc_auc(s, pos).auc == mann_whitney(s, pos));
  }
}

TEST_CASE("roc curve shape and edge cases") {
  std::vector<double> s{0.9, 0.8, 0.7, 0.1};
  std::vector<bool> pos{true, true, false, false};
  auto r = roc_auc(s, pos);
  CHECK(r.auc == 1.0);
  CHECK(r.points.front().fpr == 0.0);
  CHECK(r.points.back().fpr == 1.0);
  CHECK(r.points.back().tpr == 1.0);
  for (std::size_t i = 1; i < r.points.size(); ++i) {
    CHECK(r.points[i].fpr >= r.points[i - 1].fpr);
    CHECK(r.points[i].tpr >= r.points[i - 1].tpr);
  }
  std::vector<bool> flipped{false, false, true, true};
  CHECK(roc_auc(s, flipped).auc == 0.0);
  std::vector<double> flat(4, 0.3);
  auto tied = roc_auc(flat, pos);
  CHECK(tied.auc == 0.5);
  CHECK(tied.points.size() == 2);

  CHECK_THROWS_AS(roc_auc(s, std::vector<bool>(4, true)), Error);
  std::vector<double> with_nan{0.1, std::numeric_limits<double>::quiet_NaN(), 0.2, 0.3};
  CHECK_THROWS_AS(roc_auc(with_nan, pos), Error);
}

TEST_CASE("f1_scores matches the set oracle") {
  std::mt19937_64 rng(6);
  for (int inst = 0; inst < 100; ++inst) {
    const int labels = 1 + int(rng() % 6);
    const int n = 1 + int(rng() % 25);
    std::vector<LabelSet> pred(n), gold(n);
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < labels; ++l) {
        if (rng() % 3 == 0) pred[i].push_back(l);
        if (rng() % 3 == 0) gold[i].push_back(l);
      }
    auto got = f1_scores(pred, gold, labels);
    auto want = f1_oracle(pred, gold, labels);
    CHECK(got.micro == doctest::Approx(want.micro).epsilon(1e-15));
    CHECK(got.macro == doctest::Approx(want.macro).epsilon(1e-15));
  }
}

TEST_CASE("f1 hand examples") {
  std::vector<LabelSet> gold{{0}, {1}, {0, 1}};
  CHECK(f1_scores(gold, gold, 2).micro == 1.0);
  CHECK(f1_scores(gold, gold, 2).macro == 1.0);
  // A third label never seen in gold counts as 0 in the macro average.
  CHECK(f1_scores(gold, gold, 3).macro == doctest::Approx(2.0 / 3.0));
  std::vector<LabelSet> none(3);
  CHECK(f1_scores(none, gold, 2).micro == 0.0);
  CHECK_THROWS_AS(f1_scores(none, std::vector<LabelSet>(2), 2), Error);
}

TEST_CASE("top_k_labels breaks ties toward lower indices") {
  Quiet q;
  Matrix s(3, 4);
  s << 0.1, 0.5, 0.5, 0.2,
       1.0, 1.0, 1.0, 1.0,
       -std::numeric_limits<double>::infinity(), 0.0, -1.0, 3.0;
  const int ks[] = {1, 2, 4};
  auto out = top_k_labels(s, ks);
  CHECK(out[0] == LabelSet{1});
  CHECK(out[1] == LabelSet{0, 1});
  CHECK(out[2] == LabelSet{1, 2, 3});  // -inf is never predicted
  const int big[] = {9, 1, 1};
  CHECK(top_k_labels(s, big)[0] == LabelSet{0, 1, 2, 3});
}

TEST_CASE("sigmoid is stable") {
  CHECK(sigmoid(0) == 0.5);
  CHECK(sigmoid(800) == 1.0);
  CHECK(sigmoid(-800) == 0.0);
  CHECK(std::isfinite(sigmoid(-800)));
  CHECK(sigmoid(2.0) + sigmoid(-2.0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("split_labeled_nodes") {
  std::vector<NodeId> nodes(10);
  std::iota(nodes.begin(), nodes.end(), 0);
  auto a = split_labeled_nodes(nodes, 0.7, 3);
  auto b = split_labeled_nodes(nodes, 0.7, 3);
  CHECK(a.train == b.train);
  CHECK(a.train.size() == 7);
  CHECK(a.test.size() == 3);
  std::set<NodeId> all(a.train.begin(), a.train.end());
  all.insert(a.test.begin(), a.test.end());
  CHECK(all.size() == 10);
  CHECK(split_labeled_nodes(nodes, 0.7, 4).train != a.train);
  CHECK(split_labeled_nodes(nodes, 0.99, 1).test.size() == 1);
  CHECK_THROWS_AS(split_labeled_nodes(nodes, 1.0, 1), Error);
}

TEST_CASE("logistic regression reaches a stationary point") {
  Quiet q;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0, 1);
  const int m = 80, k = 3;
  EmbeddingMatrix emb;
  emb.rows = Matrix::NullaryExpr(m, k, [&] { return n(rng); });
  NodeLabels labels;
  labels.names = {"a", "b"};
  labels.sets.resize(m);
  for (int i = 0; i < m; ++i)
    labels.sets[i] = {emb.rows(i, 0) + 0.5 * n(rng) > 0 ? 0 : 1};
  std::vector<NodeId> train(m);
  std::iota(train.begin(), train.end(), 0);
  LogRegOptions opts;
  auto clf = train_logreg_ovr(emb, labels, train, opts);
  CHECK(clf.trained == std::vector<bool>{true, true});

  // Gradient of the regularised mean log-loss at the solution.
  for (int l = 0; l < 2; ++l) {
    Vector gw = Vector::Zero(k);
    double gb = 0;
    for (int i = 0; i < m; ++i) {
      const double y = labels.sets[i][0] == l ? 1.0 : 0.0;
      const double r = sigmoid(emb.rows.row(i).dot(clf.weights.row(l)) + clf.bias(l)) - y;
      gw += r * emb.rows.row(i).transpose() / m;
      gb += r / m;
    }
    gw += opts.l2 * clf.weights.row(l).transpose();
    CHECK(std::sqrt(gw.squaredNorm() + gb * gb) < 1e-5);
  }
  CHECK(clf.weights(0, 0) > 0);
  CHECK(clf.weights(1, 0) < 0);
}

TEST_CASE("degenerate embeddings predict by train frequency") {
  Quiet q;
  const int m = 30;
  EmbeddingMatrix emb;
  emb.rows = Matrix::Constant(m, 2, 0.25);
  NodeLabels labels;
  labels.names = {"x", "y", "z"};
  labels.sets.resize(m);
  for (int i = 0; i < m; ++i) labels.sets[i] = {i % 5 == 0 ? 2 : (i % 5 < 3 ? 1 : 0)};
  std::vector<NodeId> nodes(m);
  std::iota(nodes.begin(), nodes.end(), 0);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto split = split_labeled_nodes(nodes, 0.6, seed);
    auto clf = train_logreg_ovr(emb, labels, split.train);
    std::vector<int> freq(3, 0);
    for (NodeId u : split.train) ++freq[labels.sets[u][0]];
    int best = 0;
    for (int l = 1; l < 3; ++l)
      if (freq[l] > freq[best]) best = l;
    if (std::count(freq.begin(), freq.end(), freq[best]) > 1) continue;
    Matrix rows = emb.rows.topRows(4);
    const int ones[] = {1, 1, 1, 1};
    for (const auto& p : predict_multilabel(clf, rows, ones)) CHECK(p == LabelSet{best});
  }
}

TEST_CASE("untrained labels are never predicted") {
  Quiet q;
  EmbeddingMatrix emb;
  emb.rows = Matrix::Identity(4, 4);
  NodeLabels labels;
  labels.names = {"a", "b", "c"};
  labels.sets = {{0}, {1}, {0}, {2}};
  const NodeId train[] = {0, 1, 2};
  auto clf = train_logreg_ovr(emb, labels, train);
  CHECK(clf.trained == std::vector<bool>{true, true, false});
  Matrix row = emb.rows.row(3);
  const int k[] = {3};
  CHECK(predict_multilabel(clf, row, k)[0] == LabelSet{0, 1});
}

TEST_CASE("evaluate on perfectly separable embeddings") {
  Quiet q;
  const std::size_t blocks[] = {20, 20};
  auto sbm = generate_sbm(blocks, 0.5, 0.02, 4);
  EmbeddingMatrix emb;
  emb.rows = Matrix::Zero(40, 2);
  for (int i = 0; i < 40; ++i) emb.rows(i, i < 20 ? 0 : 1) = 3.0;
  emb.node_ids = sbm.graph.original_ids();
  auto pairs = sample_link_pairs(sbm.graph, 10, 10, 1, false).sample;

  EvalConfig cfg;
  cfg.runs = 5;
  auto r = evaluate(emb, sbm.graph, &sbm.labels, &pairs, cfg);
  REQUIRE(r.micro_f1.has_value());
  CHECK(r.micro_f1->mean == 1.0);
  CHECK(r.micro_f1->stddev == 0.0);
  CHECK(r.micro_f1->values.size() == 5);
  REQUIRE(r.link.has_value());
  CHECK(r.link->auc == mann_whitney(link_logits(emb, pairs), [&] {
    std::vector<bool> v;
    for (auto& p : pairs.pairs) v.push_back(p.label == PairLabel::Positive);
    return v;
  }()));
  CHECK(r.link_pairs == 20);

  auto again = evaluate(emb, sbm.graph, &sbm.labels, &pairs, cfg);
  CHECK(again.micro_f1->values == r.micro_f1->values);

  std::ostringstream csv;
  write_report_csv(r, csv);
  CHECK(csv.str().rfind("metric,mean,std,runs\nmicro_f1,1,0,5\n", 0) == 0);
  std::ostringstream roc;
  write_roc_csv(*r.link, roc);
  CHECK(roc.str().rfind("fpr,tpr\n0,0\n", 0) == 0);
  std::ostringstream svg;
  const std::pair<std::string, const RocResult*> curves[] = {{"model", &*r.link}};
  write_roc_svg(curves, svg);
  CHECK(svg.str().find("<svg") == 0);
  CHECK(svg.str().find("</svg>") != std::string::npos);

  cfg.classify = false;
  CHECK_FALSE(evaluate(emb, sbm.graph, &sbm.labels, &pairs, cfg).micro_f1.has_value());
}

TEST_CASE("link scores are symmetric") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 1);
  EmbeddingMatrix emb;
  emb.rows = Matrix::NullaryExpr(10, 7, [&] { return n(rng); });
  LinkPairSample fwd, rev;
  for (NodeId u = 0; u < 10; ++u)
    for (NodeId v = 0; v < 10; ++v) {
      fwd.pairs.push_back({u, v, PairLabel::Positive});
      rev.pairs.push_back({v, u, PairLabel::Positive});
    }
  CHECK(link_scores(emb, fwd) == link_scores(emb, rev));
}

TEST_CASE("link_scores closed forms") {
  EmbeddingMatrix emb;
  emb.rows = Matrix::Zero(3, 2);
  emb.rows(1, 0) = emb.rows(2, 0) = std::sqrt(std::log(3.0));
  LinkPairSample pairs;
  pairs.pairs = {{0, 1, PairLabel::Positive}, {1, 2, PairLabel::Positive}};
  auto s = link_scores(emb, pairs);
  CHECK(s[0] == 0.5);
  CHECK(s[1] == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(link_logits(emb, pairs)[1] == doctest::Approx(std::log(3.0)).epsilon(1e-14));
}

TEST_CASE("link AUC keeps its ranking when sigma saturates") {
  Quiet q;
  // Dot products of 100 and 400 both map to sigma = 1.0 in double precision.
  const std::vector<Graph::Edge> edges{{0, 1}, {2, 3}};
  Graph g = Graph::from_edges(4, edges);
  EmbeddingMatrix emb;
  emb.rows = Matrix::Zero(4, 1);
  emb.rows << 20, 20, 10, 10;
  emb.node_ids = g.original_ids();
  LinkPairSample pairs;
  pairs.pairs = {{0, 1, PairLabel::Positive}, {2, 3, PairLabel::Negative}};
  auto sig = link_scores(emb, pairs);
  CHECK(sig[0] == sig[1]);
  EvalConfig cfg;
  cfg.classify = false;
  CHECK(evaluate(emb, g, nullptr, &pairs, cfg).link->auc == 1.0);
}
