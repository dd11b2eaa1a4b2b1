#include "mhne/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include "mhne/error.hpp"
#include "mhne/log.hpp"

namespace mhne {

namespace {

MetricSummary summarize(std::vector<double> values) {
  MetricSummary s;
  s.values = values;
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(values.size()));
  return s;
}

double f1_from_counts(long long tp, long long fp, long long fn) {
  const long long denom = 2 * tp + fp + fn;
  if (denom == 0) return 0.0;
  return static_cast<double>(2 * tp) / static_cast<double>(denom);
}

}  // namespace

LabeledSplit split_labeled_nodes(std::span<const NodeId> labeled, double train_fraction,
                                 std::uint64_t seed) {
  require(train_fraction > 0 && train_fraction < 1, "train fraction must lie in (0, 1)");
  require(labeled.size() >= 2, "need at least two labeled nodes to split");
  std::vector<NodeId> order(labeled.begin(), labeled.end());
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(order.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, order.size() - 1);
  LabeledSplit split;
  split.seed = seed;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return split;
}

Vector OvrClassifier::scores(const Eigen::Ref<const Vector>& x) const {
  Vector s = weights * x + bias;
  for (Eigen::Index l = 0; l < s.size(); ++l)
    if (!trained[l]) s(l) = -std::numeric_limits<double>::infinity();
  return s;
}

OvrClassifier train_logreg_ovr(const EmbeddingMatrix& emb, const NodeLabels& labels,
                               std::span<const NodeId> train_nodes, const LogRegOptions& opts) {
  require(!train_nodes.empty(), "train split is empty");
  require(opts.l2 >= 0 && opts.max_iter >= 1, "invalid logistic regression options");
  const auto n = static_cast<Eigen::Index>(train_nodes.size());
  const Eigen::Index k = emb.dimension();
  const auto num_labels = static_cast<Eigen::Index>(labels.label_count());

  Matrix x(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    require(train_nodes[i] < emb.node_count(), "train node out of range");
    x.row(i) = emb.rows.row(train_nodes[i]);
  }

  // Lipschitz constant of the mean log-loss gradient in (w, b):
  // lambda_max([X 1]^T [X 1]) / (4n) + l2.
  Matrix aug(n, k + 1);
  aug << x, Vector::Ones(n);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(aug.transpose() * aug, Eigen::EigenvaluesOnly);
  const double lambda_max = std::max(eig.eigenvalues().maxCoeff(), 0.0);
  const double lipschitz = lambda_max / (4.0 * static_cast<double>(n)) + opts.l2;
  const double step = lipschitz > 0 ? 1.0 / lipschitz : 1.0;

  OvrClassifier clf;
  clf.weights = Matrix::Zero(num_labels, k);
  clf.bias = Vector::Zero(num_labels);
  clf.trained.assign(num_labels, false);

  Vector y(n), z(n), r(n), gw(k);
  for (Eigen::Index l = 0; l < num_labels; ++l) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& set = labels.sets[train_nodes[i]];
      y(i) = std::binary_search(set.begin(), set.end(), static_cast<int>(l)) ? 1.0 : 0.0;
    }
    if (y.sum() == 0.0) {
      warn("label '" + labels.names[l] + "' absent from train split; it will never be predicted");
      continue;
    }
    clf.trained[l] = true;
    Vector w = Vector::Zero(k);
    double b = 0.0;
    for (int it = 0; it < opts.max_iter; ++it) {
      z.noalias() = x * w;
      for (Eigen::Index i = 0; i < n; ++i) r(i) = sigmoid(z(i) + b) - y(i);
      gw.noalias() = x.transpose() * r;
      gw /= static_cast<double>(n);
      gw += opts.l2 * w;
      const double gb = r.mean();
      if (std::sqrt(gw.squaredNorm() + gb * gb) < opts.grad_tol) break;
      w -= step * gw;
      b -= step * gb;
    }
    clf.weights.row(l) = w.transpose();
    clf.bias(l) = b;
  }
  return clf;
}

std::vector<LabelSet> top_k_labels(const Matrix& scores, std::span<const int> k_per_row) {
  require(static_cast<Eigen::Index>(k_per_row.size()) == scores.rows(),
          "k list length differs from row count");
  const Eigen::Index num_labels = scores.cols();
  std::vector<LabelSet> out(scores.rows());
  std::vector<int> order(num_labels);
  bool capped = false;
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    require(k_per_row[r] >= 1, "k must be >= 1");
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores(r, a) > scores(r, b); });
    int k = k_per_row[r];
    if (k > num_labels) {
      k = static_cast<int>(num_labels);
      capped = true;
    }
    for (int i = 0; i < k; ++i)
      if (scores(r, order[i]) > -std::numeric_limits<double>::infinity())
        out[r].push_back(order[i]);
    std::sort(out[r].begin(), out[r].end());
  }
  if (capped) warn("k exceeded the label count for some nodes; capped");
  return out;
}

std::vector<LabelSet> predict_multilabel(const OvrClassifier& clf, const Matrix& rows,
                                         std::span<const int> k_per_row) {
  require(rows.cols() == clf.weights.cols(), "embedding dimension differs from classifier");
  Matrix scores(rows.rows(), clf.label_count());
  for (Eigen::Index r = 0; r < rows.rows(); ++r)
    scores.row(r) = clf.scores(rows.row(r).transpose()).transpose();
  return top_k_labels(scores, k_per_row);
}

F1Scores f1_scores(std::span<const LabelSet> predicted, std::span<const LabelSet> gold,
                   int label_count) {
  require(predicted.size() == gold.size(), "predicted and gold lists differ in length");
  require(label_count >= 1, "label count must be >= 1");
  std::vector<long long> tp(label_count, 0), fp(label_count, 0), fn(label_count, 0);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    for (int l : predicted[i]) {
      require(l >= 0 && l < label_count, "predicted label out of range");
      if (std::binary_search(gold[i].begin(), gold[i].end(), l)) ++tp[l];
      else ++fp[l];
    }
    for (int l : gold[i]) {
      require(l >= 0 && l < label_count, "gold label out of range");
      if (!std::binary_search(predicted[i].begin(), predicted[i].end(), l)) ++fn[l];
    }
  }
  long long TP = 0, FP = 0, FN = 0;
  double macro_sum = 0.0;
  for (int l = 0; l < label_count; ++l) {
    TP += tp[l];
    FP += fp[l];
    FN += fn[l];
    if (tp[l] + fn[l] > 0) macro_sum += f1_from_counts(tp[l], fp[l], fn[l]);
  }
  return {f1_from_counts(TP, FP, FN), macro_sum / static_cast<double>(label_count)};
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<double> link_logits(const EmbeddingMatrix& emb, const LinkPairSample& pairs) {
  std::vector<double> out;
  out.reserve(pairs.pairs.size());
  for (const auto& p : pairs.pairs) {
    require(p.u < emb.node_count() && p.v < emb.node_count(), "pair index out of range");
    // Plain loop: same summation order for (u,v) and (v,u).
    double dot = 0.0;
    for (Eigen::Index c = 0; c < emb.dimension(); ++c) dot += emb.rows(p.u, c) * emb.rows(p.v, c);
    out.push_back(dot);
  }
  return out;
}

std::vector<double> link_scores(const EmbeddingMatrix& emb, const LinkPairSample& pairs) {
  std::vector<double> out = link_logits(emb, pairs);
  for (double& x : out) x = sigmoid(x);
  return out;
}

std::vector<double> jaccard_scores(const Graph& g, const LinkPairSample& pairs) {
  std::vector<double> out;
  out.reserve(pairs.pairs.size());
  for (const auto& p : pairs.pairs) out.push_back(jaccard_coefficient(g, p.u, p.v));
  return out;
}

RocResult roc_auc(std::span<const double> scores, const std::vector<bool>& positive) {
  require(scores.size() == positive.size(), "scores and labels differ in length");
  long long n_pos = 0;
  for (bool b : positive) n_pos += b ? 1 : 0;
  const long long n_neg = static_cast<long long>(scores.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0)
    fail(ErrorKind::InvalidArgument, "ROC needs both positive and negative examples");
  for (double s : scores)
    if (std::isnan(s)) fail(ErrorKind::Numeric, "NaN score");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocResult out;
  out.points.push_back({0.0, 0.0});
  // Twice the area in units of 1/(P*N): each group adds neg_g * (2 tp_before + pos_g).
  long long twice_area = 0;
  long long tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    long long pos_g = 0, neg_g = 0;
    const double s = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == s; ++i)
      (positive[order[i]] ? pos_g : neg_g) += 1;
    twice_area += neg_g * (2 * tp + pos_g);
    tp += pos_g;
    fp += neg_g;
    out.points.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                          static_cast<double>(tp) / static_cast<double>(n_pos)});
  }
  out.auc = static_cast<double>(twice_area) / (2.0 * static_cast<double>(n_pos) *
                                               static_cast<double>(n_neg));
  return out;
}

RocResult roc_auc(std::span<const double> scores, const LinkPairSample& pairs) {
  std::vector<bool> positive(pairs.pairs.size());
  for (std::size_t i = 0; i < positive.size(); ++i)
    positive[i] = pairs.pairs[i].label == PairLabel::Positive;
  return roc_auc(scores, positive);
}

EvalReport evaluate(const EmbeddingMatrix& emb, const Graph& graph, const NodeLabels* labels,
                    const LinkPairSample* pairs, const EvalConfig& cfg) {
  require(cfg.runs >= 1, "runs must be >= 1");
  require(static_cast<Eigen::Index>(graph.node_count()) == emb.node_count(),
          "embedding row count differs from graph node count");
  EvalReport report;
  report.runs = cfg.runs;

  if (cfg.classify && labels) {
    const auto labeled = labels->labeled_nodes();
    std::vector<double> micro, macro;
    for (int run = 0; run < cfg.runs; ++run) {
      const auto split = split_labeled_nodes(labeled, cfg.train_fraction,
                                             cfg.seed + static_cast<std::uint64_t>(run));
      const auto clf = train_logreg_ovr(emb, *labels, split.train, cfg.logreg);
      Matrix rows(static_cast<Eigen::Index>(split.test.size()), emb.dimension());
      std::vector<int> ks;
      std::vector<LabelSet> gold;
      for (std::size_t i = 0; i < split.test.size(); ++i) {
        rows.row(static_cast<Eigen::Index>(i)) = emb.rows.row(split.test[i]);
        gold.push_back(labels->sets[split.test[i]]);
        ks.push_back(static_cast<int>(gold.back().size()));
      }
      const auto predicted = predict_multilabel(clf, rows, ks);
      const auto f1 = f1_scores(predicted, gold, static_cast<int>(labels->label_count()));
      micro.push_back(f1.micro);
      macro.push_back(f1.macro);
    }
    report.micro_f1 = summarize(micro);
    report.macro_f1 = summarize(macro);
  }

  if (cfg.link && pairs) {
    report.link_pairs = pairs->pairs.size();
    report.link = roc_auc(link_logits(emb, *pairs), *pairs);
    report.jaccard = roc_auc(jaccard_scores(graph, *pairs), *pairs);
  }
  return report;
}

void write_report_text(const EvalReport& r, std::ostream& out) {
  out << std::fixed << std::setprecision(4);
  if (r.micro_f1) {
    out << "node classification (" << r.runs << " runs)\n";
    out << "  micro-F1: " << r.micro_f1->mean << " +/- " << r.micro_f1->stddev << '\n';
    out << "  macro-F1: " << r.macro_f1->mean << " +/- " << r.macro_f1->stddev << '\n';
  }
  if (r.link) {
    out << "link prediction (" << r.link_pairs << " pairs)\n";
    out << "  auc: " << r.link->auc << '\n';
    out << "  jaccard_auc: " << r.jaccard->auc << '\n';
  }
  out.unsetf(std::ios::floatfield);
}

void write_report_csv(const EvalReport& r, std::ostream& out) {
  out << "metric,mean,std,runs\n" << std::setprecision(17);
  if (r.micro_f1) {
    out << "micro_f1," << r.micro_f1->mean << ',' << r.micro_f1->stddev << ',' << r.runs << '\n';
    out << "macro_f1," << r.macro_f1->mean << ',' << r.macro_f1->stddev << ',' << r.runs << '\n';
  }
  if (r.link) {
    out << "auc," << r.link->auc << ",0,1\n";
    out << "jaccard_auc," << r.jaccard->auc << ",0,1\n";
  }
}

void write_roc_csv(const RocResult& roc, std::ostream& out) {
  out << "fpr,tpr\n" << std::setprecision(17);
  for (const auto& p : roc.points) out << p.fpr << ',' << p.tpr << '\n';
}

void write_roc_svg(std::span<const std::pair<std::string, const RocResult*>> curves,
                   std::ostream& out) {
  constexpr double size = 400, pad = 50;
  static constexpr const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  auto px = [&](double x) { return pad + x * size; };
  auto py = [&](double y) { return pad + (1.0 - y) * size; };
  out << std::fixed << std::setprecision(2);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + 2 * pad
      << "\" height=\"" << size + 2 * pad << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect x=\"" << pad << "\" y=\"" << pad << "\" width=\"" << size << "\" height=\""
      << size << "\" fill=\"none\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\""
      << py(1) << "\" stroke=\"#999\" stroke-dasharray=\"4 4\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = t / 4.0;
    out << "<text x=\"" << px(v) << "\" y=\"" << py(0) + 18 << "\" text-anchor=\"middle\">"
        << v << "</text>\n";
    out << "<text x=\"" << px(0) - 8 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">"
        << v << "</text>\n";
  }
  out << "<text x=\"" << px(0.5) << "\" y=\"" << py(0) + 38
      << "\" text-anchor=\"middle\">false positive rate</text>\n";
  out << "<text transform=\"translate(" << pad - 36 << ',' << py(0.5)
      << ") rotate(-90)\" text-anchor=\"middle\">true positive rate</text>\n";
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const auto& [name, roc] = curves[c];
    const char* color = colors[c % std::size(colors)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : roc->points) out << px(p.fpr) << ',' << py(p.tpr) << ' ';
    out << "\"/>\n";
    out << "<text x=\"" << px(0.55) << "\" y=\"" << py(0.1) + 16.0 * static_cast<double>(c) - 16.0 * static_cast<double>(curves.size() - 1)
        << "\" fill=\"" << color << "\">" << name << " (AUC " << std::setprecision(3)
        << roc->auc << ")</text>\n" << std::setprecision(2);
  }
  out << "</svg>\n";
  out.unsetf(std::ios::floatfield);
}

}  // namespace mhne
