// Acceptance checks: one PASS/FAIL line per criterion. Exits nonzero if any
// criterion fails without a documented deviation.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mhne/embedding.hpp"
#include "mhne/eval.hpp"
#include "mhne/graph.hpp"
#include "mhne/hopfield.hpp"
#include "mhne/log.hpp"
#include "mhne/training.hpp"

using namespace mhne;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  // Set when a failure is a documented infeasibility rather than a defect.
  std::string deviation;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---- 1. gradient correctness ------------------------------------------------

Outcome gradient_check() {
  const auto t0 = Clock::now();
  GradcheckConfig cfg;  // m=12, K=4, T in {1,2,3}, alpha in {0.2,1.0}, h=1e-5
  cfg.trials = 24;
  cfg.tolerance = 1e-4;
  const auto report = run_gradcheck(cfg);
  std::set<std::pair<int, double>> combos;
  for (const auto& t : report.trials) combos.emplace(t.steps, t.alpha);
  const double secs = seconds_since(t0);
  const bool ok = report.passed && combos.size() == 6 && secs < 30;
  return {ok, fmt("%zu instances, max rel err %.2e (< 1e-4), %zu (T,alpha) combos, %.1fs (< 30s)",
                  report.trials.size(), report.max_relative_error, combos.size(), secs)};
}

// ---- 2. energy descent --------------------------------------------------------

Outcome energy_descent() {
  const auto t0 = Clock::now();
  const double alphas[] = {0.2, 0.5, 1.0};
  const double betas[] = {0.5, 1.0, 5.0};
  double worst = -std::numeric_limits<double>::infinity();
  std::vector<std::uint64_t> bad_seeds;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    std::mt19937_64 rng(seed);
    const int k = 2 + int(rng() % 15), m = 3 + int(rng() % 30);
    const double scale = 0.2 + 2.0 * std::uniform_real_distribution<double>(0, 1)(rng);
    std::normal_distribution<double> n(0, scale);
    ModelParams p;
    p.phi_target = Matrix::NullaryExpr(k, m, [&] { return n(rng); });
    p.psi_context = Matrix::NullaryExpr(k, m, [&] { return n(rng); });
    p.alpha = alphas[seed % 3];
    p.beta1 = betas[(seed / 3) % 3];
    p.beta2 = 0.5;
    SparseBinaryVector c{std::size_t(m), {}};
    std::bernoulli_distribution coin(0.3);
    for (NodeId j = 0; j < NodeId(m); ++j)
      if (coin(rng)) c.active.push_back(j);
    RetrieveOptions opts;
    opts.steps = 7;
    opts.trace = true;
    const auto e = *retrieve(p, c, opts).energy_trace;
    for (std::size_t t = 0; t + 1 < e.size(); ++t) {
      worst = std::max(worst, e[t + 1] - e[t]);
      if (e[t + 1] > e[t] + 1e-8) {
        bad_seeds.push_back(seed);
        break;
      }
    }
  }
  const double secs = seconds_since(t0);
  std::string detail = fmt("1000 trajectories, max E(t+1)-E(t) = %.3e (<= 1e-8), %.1fs (< 60s)",
                           worst, secs);
  for (std::size_t i = 0; i < bad_seeds.size() && i < 10; ++i)
    detail += fmt("%s violation at seed %llu", i ? "," : ";", (unsigned long long)bad_seeds[i]);
  return {bad_seeds.empty() && secs < 60, detail};
}

// ---- 3. memory retrieval ------------------------------------------------------

// Plain-loop iteration of the update rule, independent of the library.
std::vector<double> iterate_oracle(const ModelParams& p, const std::vector<int>& ctx, int steps) {
  const int k = int(p.memories()), m = int(p.nodes());
  std::vector<double> v(m, 0.0);
  for (int t = 0; t < steps; ++t) {
    std::vector<double> z(k);
    double mx = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < k; ++r) {
      double a = 0, b = 0;
      for (int j = 0; j < m; ++j) a += p.phi_target(r, j) * v[j];
      for (int j : ctx) b += p.psi_context(r, j);
      z[r] = p.beta1 * a + p.beta2 * b;
      mx = std::max(mx, z[r]);
    }
    double s = 0;
    for (double& x : z) s += (x = std::exp(x - mx));
    for (int j = 0; j < m; ++j) {
      double u = 0;
      for (int r = 0; r < k; ++r) u += p.phi_target(r, j) * z[r] / s;
      v[j] += p.alpha * (u - v[j]);
    }
  }
  return v;
}

Outcome memory_retrieval() {
  const int k = 8, m = 64;
  std::mt19937_64 rng(2024);
  ModelParams p;
  // Random +-1 patterns, redrawn until pairwise overlaps stay below m/2.
  for (;;) {
    p.phi_target = Matrix::NullaryExpr(k, m, [&] { return rng() % 2 ? 1.0 : -1.0; });
    const Matrix gram = p.phi_target * p.phi_target.transpose();
    double worst = 0;
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        if (a != b) worst = std::max(worst, std::abs(gram(a, b)));
    if (worst < m / 2) break;
  }
  p.psi_context = p.phi_target;
  p.beta1 = 50.0;
  p.beta2 = 0.5;
  p.alpha = 1.0;

  double worst_target = 0, worst_oracle = 0;
  for (int mu = 0; mu < k; ++mu) {
    // Context: the coordinates where memory mu is +1.
    SparseBinaryVector c{m, {}};
    std::vector<int> ctx;
    for (int j = 0; j < m; ++j)
      if (p.phi_target(mu, j) > 0) {
        c.active.push_back(NodeId(j));
        ctx.push_back(j);
      }
    RetrieveOptions opts;
    opts.steps = 7;
    const Vector v = retrieve(p, c, opts).v_target;
    const auto oracle = iterate_oracle(p, ctx, 7);
    for (int j = 0; j < m; ++j) {
      worst_target = std::max(worst_target, std::abs(v(j) - p.phi_target(mu, j)));
      worst_oracle = std::max(worst_oracle, std::abs(v(j) - oracle[j]));
    }
  }
  return {worst_target < 1e-3 && worst_oracle < 1e-9,
          fmt("K=8, m=64, beta1=50, alpha=1: max Linf to memory %.2e (< 1e-3), to oracle %.2e",
              worst_target, worst_oracle)};
}

// ---- 4. oracle equivalence ----------------------------------------------------

double mann_whitney(const std::vector<double>& s, const std::vector<bool>& pos) {
  long long twice = 0, p = 0, n = 0;
  for (std::size_t i = 0; i < s.size(); ++i) (pos[i] ? p : n) += 1;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (pos[i] && !pos[j]) twice += s[i] > s[j] ? 2 : (s[i] == s[j] ? 1 : 0);
  return double(twice) / (2.0 * double(p) * double(n));
}

F1Scores f1_bruteforce(const std::vector<LabelSet>& pred, const std::vector<LabelSet>& gold,
                       int labels) {
  // Confusion counts per label from membership tables.
  std::vector<std::vector<bool>> P(gold.size(), std::vector<bool>(labels)), G = P;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    for (int l : pred[i]) P[i][l] = true;
    for (int l : gold[i]) G[i][l] = true;
  }
  long long TP = 0, FP = 0, FN = 0;
  double macro = 0;
  for (int l = 0; l < labels; ++l) {
    long long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      tp += P[i][l] && G[i][l];
      fp += P[i][l] && !G[i][l];
      fn += !P[i][l] && G[i][l];
    }
    TP += tp;
    FP += fp;
    FN += fn;
    if (tp + fn > 0) macro += double(2 * tp) / double(2 * tp + fp + fn);
  }
  const long long d = 2 * TP + FP + FN;
  return {d ? double(2 * TP) / double(d) : 0.0, macro / labels};
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(77);
  int roc_ok = 0, f1_ok = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const int n = 2 + int(rng() % 200);
    std::vector<double> s(n);
    std::vector<bool> pos(n);
    const int levels = 1 + int(rng() % 10);
    for (int i = 0; i < n; ++i) {
      s[i] = inst % 3 == 0 ? std::normal_distribution<double>(0, 1)(rng) : double(rng() % levels);
      pos[i] = rng() % 2;
    }
    pos[0] = true;
    pos[1] = false;
    roc_ok += roc_auc(s, pos).auc == mann_whitney(s, pos);
  }
  for (int inst = 0; inst < 100; ++inst) {
    const int labels = 1 + int(rng() % 8), n = 1 + int(rng() % 40);
    std::vector<LabelSet> pred(n), gold(n);
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < labels; ++l) {
        if (rng() % 3 == 0) pred[i].push_back(l);
        if (rng() % 3 == 0) gold[i].push_back(l);
      }
    const auto a = f1_scores(pred, gold, labels);
    const auto b = f1_bruteforce(pred, gold, labels);
    f1_ok += a.micro == b.micro && a.macro == b.macro;
  }
  return {roc_ok == 100 && f1_ok == 100,
          fmt("roc_auc exact on %d/100, f1_scores exact on %d/100", roc_ok, f1_ok)};
}

// ---- 5/6. desk-scale experiment -------------------------------------------------

struct Experiment {
  double micro_f1 = 0, micro_std = 0, macro_f1 = 0;
  double auc = 0, jaccard_auc = 0;
  // AUC of the score 1[same block]: the best any method can do when edges
  // inside and across blocks are independent coin flips given the blocks.
  double block_oracle_auc = 0;
  double seconds = 0;
};

double jaccard_oracle(const Graph& g, NodeId u, NodeId v) {
  std::set<NodeId> a(g.neighbors(u).begin(), g.neighbors(u).end());
  std::set<NodeId> b(g.neighbors(v).begin(), g.neighbors(v).end());
  std::set<NodeId> uni = a, inter;
  uni.insert(b.begin(), b.end());
  for (NodeId x : a)
    if (b.count(x)) inter.insert(x);
  return uni.empty() ? 0.0 : double(inter.size()) / double(uni.size());
}

bool jaccard_matches_everywhere(const Graph& g) {
  for (NodeId u = 0; u < g.node_count(); ++u)
    for (NodeId v = 0; v < g.node_count(); ++v)
      if (jaccard_coefficient(g, u, v) != jaccard_oracle(g, u, v)) return false;
  return true;
}

// 60-node 2-block SBM, default config with K=64 and 200 epochs, 20 runs of
// the 9:1 classification protocol and 50/50 link pairs.
Experiment sbm_experiment(bool holdout) {
  const auto t0 = Clock::now();
  const std::size_t blocks[] = {30, 30};
  const auto sbm = generate_sbm(blocks, 0.5, 0.05, 1);
  const auto split = sample_link_pairs(sbm.graph, 50, 50, 1, holdout);

  TrainConfig cfg;
  cfg.memories = 64;
  cfg.epochs = 200;
  cfg.seed = 1;
  const auto model = train(split.graph, cfg).params;
  const auto emb = embed_all(model, split.graph, 1);

  EvalConfig ecfg;
  ecfg.runs = 20;
  ecfg.train_fraction = 0.9;
  ecfg.seed = 1;
  const auto report = evaluate(emb, split.graph, &sbm.labels, &split.sample, ecfg);

  std::vector<double> same_block;
  for (const auto& p : split.sample.pairs)
    same_block.push_back(sbm.labels.sets[p.u] == sbm.labels.sets[p.v] ? 1.0 : 0.0);

  Experiment e;
  e.micro_f1 = report.micro_f1->mean;
  e.micro_std = report.micro_f1->stddev;
  e.macro_f1 = report.macro_f1->mean;
  e.auc = report.link->auc;
  e.jaccard_auc = report.jaccard->auc;
  e.block_oracle_auc = roc_auc(same_block, split.sample).auc;
  e.seconds = seconds_since(t0);
  return e;
}

Outcome desk_scale() {
  const auto e = sbm_experiment(true);
  const bool f1_ok = e.micro_f1 >= 0.90, auc_ok = e.auc >= 0.90, time_ok = e.seconds < 300;
  Outcome o{f1_ok && auc_ok && time_ok,
            fmt("SBM 60 nodes, K=64, 200 epochs: micro-F1 %.4f +/- %.4f (>= 0.90, macro %.4f), "
                "held-out AUC %.4f (>= 0.90; same-block oracle %.4f), %.1fs (< 300s)",
                e.micro_f1, e.micro_std, e.macro_f1, e.auc, e.block_oracle_auc, e.seconds)};
  if (f1_ok && time_ok && !auc_ok && e.block_oracle_auc < 0.90)
    o.deviation = "held-out AUC threshold lies above the same-block oracle ceiling";
  return o;
}

Outcome baseline_comparison() {
  // Default protocol (no holdout); the holdout run is reported alongside.
  const auto e = sbm_experiment(false);
  const auto h = sbm_experiment(true);
  const std::size_t blocks[] = {30, 30};
  bool exact = jaccard_matches_everywhere(generate_sbm(blocks, 0.5, 0.05, 1).graph);
  const std::string bundled = std::string(MHNE_DATA_DIR) + "/sbm60.edges";
  if (std::filesystem::exists(bundled))
    exact = exact && jaccard_matches_everywhere(load_edge_list_file(bundled));
  return {exact && e.auc > e.jaccard_auc,
          fmt("Jaccard equals brute-force oracle on every pair: %s; model AUC %.4f > Jaccard "
              "AUC %.4f (with --holdout-links: %.4f vs %.4f)",
              exact ? "yes" : "no", e.auc, e.jaccard_auc, h.auc, h.jaccard_auc)};
}

// ---- 7. complexity scaling ------------------------------------------------------

// Wall time of one epoch after a warm-up epoch.
double epoch_ms(const Graph& g, int k, int steps) {
  TrainConfig cfg;
  cfg.memories = k;
  cfg.steps = steps;
  cfg.epochs = 2;
  cfg.batch_size = 128;
  cfg.threads = 1;
  return train(g, cfg).history.at(1).wall_ms;
}

// Least-squares line through (x, y); returns the largest relative residual.
double linear_fit_deviation(const std::vector<double>& x, const std::vector<double>& y,
                            double* slope) {
  const double n = double(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double a = (sy - b * sx) / n;
  double worst = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double fit = a + b * x[i];
    worst = std::max(worst, std::abs(y[i] - fit) / fit);
  }
  *slope = b;
  return worst;
}

Outcome complexity() {
  const std::size_t blocks[] = {100, 100};
  const Graph g = generate_sbm(blocks, 0.1, 0.01, 3).graph;
  std::vector<double> ks{250, 500, 1000}, kt, ts{2, 4, 8}, tt;
  // Rounds interleave all configurations; the per-configuration minimum is kept.
  kt.assign(ks.size(), 1e300);
  tt.assign(ts.size(), 1e300);
  for (int round = 0; round < 5; ++round) {
    for (std::size_t i = 0; i < ks.size(); ++i)
      kt[i] = std::min(kt[i], epoch_ms(g, int(ks[i]), 4));
    for (std::size_t i = 0; i < ts.size(); ++i)
      tt[i] = std::min(tt[i], epoch_ms(g, 500, int(ts[i])));
  }
  double slope_k = 0, slope_t = 0;
  const double dev_k = linear_fit_deviation(ks, kt, &slope_k);
  const double dev_t = linear_fit_deviation(ts, tt, &slope_t);
  const bool ok = dev_k <= 0.25 && dev_t <= 0.25 && slope_k > 0 && slope_t > 0;
  return {ok, fmt("m=200; epoch ms K=250/500/1000: %.1f/%.1f/%.1f (max dev %.1f%%), "
                  "T=2/4/8: %.1f/%.1f/%.1f (max dev %.1f%%), limit 25%%",
                  kt[0], kt[1], kt[2], 100 * dev_k, tt[0], tt[1], tt[2], 100 * dev_t)};
}

// ---- 8. determinism ---------------------------------------------------------------

struct Artifacts {
  std::string checkpoint, embeddings, report, roc;
};

Artifacts run_pipeline(int threads) {
  const std::size_t blocks[] = {20, 20};
  const auto sbm = generate_sbm(blocks, 0.5, 0.05, 5);
  const auto split = sample_link_pairs(sbm.graph, 20, 20, 5, true);
  TrainConfig cfg;
  cfg.memories = 16;
  cfg.epochs = 20;
  cfg.batch_size = 16;
  cfg.seed = 5;
  cfg.threads = threads;
  const auto model = train(split.graph, cfg).params;
  const auto emb = embed_all(model, split.graph, 1);
  EvalConfig ecfg;
  ecfg.runs = 5;
  ecfg.seed = 5;
  const auto report = evaluate(emb, split.graph, &sbm.labels, &split.sample, ecfg);
  Artifacts a;
  std::ostringstream ck, em, rp, rc;
  save_checkpoint(model, ck);
  save_embeddings(emb, em);
  write_report_csv(report, rp);
  write_report_text(report, rp);
  write_roc_csv(*report.link, rc);
  return {ck.str(), em.str(), rp.str(), rc.str()};
}

Outcome determinism() {
  const auto a = run_pipeline(1), b = run_pipeline(1), c = run_pipeline(3);
  auto same = [](const Artifacts& x, const Artifacts& y) {
    return x.checkpoint == y.checkpoint && x.embeddings == y.embeddings && x.report == y.report &&
           x.roc == y.roc;
  };
  return {same(a, b) && same(a, c),
          fmt("two runs bit-identical: %s; 1 vs 3 threads bit-identical: %s",
              same(a, b) ? "yes" : "no", same(a, c) ? "yes" : "no")};
}

}  // namespace

int main() {
  set_log_sink({});
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {1, "gradient correctness", gradient_check},
      {2, "energy descent", energy_descent},
      {3, "memory retrieval", memory_retrieval},
      {4, "oracle equivalence", oracle_equivalence},
      {5, "desk-scale experiment", desk_scale},
      {6, "baseline comparison", baseline_comparison},
      {7, "complexity scaling", complexity},
      {8, "determinism", determinism},
  };
  int failed = 0, unexplained = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what(), ""};
    }
    if (!o.pass) {
      ++failed;
      if (o.deviation.empty()) ++unexplained;
    }
    std::printf("[%s] criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str());
    if (!o.pass && !o.deviation.empty())
      std::printf("       known deviation: %s\n", o.deviation.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/8 criteria passed, %d failed with a known deviation, %d failed otherwise\n",
              8 - failed, failed - unexplained, unexplained);
  return unexplained == 0 ? 0 : 1;
}
