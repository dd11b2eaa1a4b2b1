#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mhne/embedding.hpp"
#include "mhne/graph.hpp"

namespace mhne {

using LabelSet = std::vector<int>;  // sorted label indices

struct LabeledSplit {
  std::vector<NodeId> train;
  std::vector<NodeId> test;
  std::uint64_t seed = 0;
};

/// Uniform (unstratified) shuffle of the labeled nodes; the first
/// round(train_fraction * n) go to train.
LabeledSplit split_labeled_nodes(std::span<const NodeId> labeled, double train_fraction,
                                 std::uint64_t seed);

struct LogRegOptions {
  double l2 = 1e-4;
  double grad_tol = 1e-6;
  int max_iter = 5000;
};

/// One binary logistic model per label: score_l(x) = w_l . x + b_l.
struct OvrClassifier {
  Matrix weights;              // L x K
  Vector bias;                 // L
  std::vector<bool> trained;   // false for labels absent from the train split

  Eigen::Index label_count() const { return weights.rows(); }
  /// Raw decision scores; untrained labels score -inf.
  Vector scores(const Eigen::Ref<const Vector>& x) const;
};

/// Full-batch gradient descent on mean log-loss + l2/2 |w|^2 (bias not
/// penalised) with step 1/L from a Lipschitz bound.
OvrClassifier train_logreg_ovr(const EmbeddingMatrix& emb, const NodeLabels& labels,
                               std::span<const NodeId> train_nodes,
                               const LogRegOptions& opts = {});

/// Top-k labels per row by score, ties broken toward the lower label index.
std::vector<LabelSet> top_k_labels(const Matrix& scores, std::span<const int> k_per_row);

std::vector<LabelSet> predict_multilabel(const OvrClassifier& clf, const Matrix& rows,
                                         std::span<const int> k_per_row);

struct F1Scores {
  double micro = 0.0;
  double macro = 0.0;
};

/// Micro from pooled TP/FP/FN; macro averages per-label F1 over all
/// `label_count` labels, zero-support labels contributing 0.
F1Scores f1_scores(std::span<const LabelSet> predicted, std::span<const LabelSet> gold,
                   int label_count);

double sigmoid(double x);

/// h_u . h_v for each pair.
std::vector<double> link_logits(const EmbeddingMatrix& emb, const LinkPairSample& pairs);
/// sigma(h_u . h_v) for each pair.
std::vector<double> link_scores(const EmbeddingMatrix& emb, const LinkPairSample& pairs);
std::vector<double> jaccard_scores(const Graph& g, const LinkPairSample& pairs);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocResult {
  double auc = 0.0;
  std::vector<RocPoint> points;  // (0,0) ... (1,1)
};

/// Threshold sweep over sorted unique scores with tied scores as one step;
/// trapezoidal AUC, equal to Mann-Whitney with ties counted 1/2.
RocResult roc_auc(std::span<const double> scores, const std::vector<bool>& positive);
RocResult roc_auc(std::span<const double> scores, const LinkPairSample& pairs);

struct EvalConfig {
  int runs = 20;
  double train_fraction = 0.9;
  LogRegOptions logreg;
  std::uint64_t seed = 0;
  bool classify = true;
  bool link = true;
};

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // population (ddof = 0)
  std::vector<double> values;
};

struct EvalReport {
  int runs = 0;
  std::optional<MetricSummary> micro_f1;
  std::optional<MetricSummary> macro_f1;
  std::optional<RocResult> link;
  std::optional<RocResult> jaccard;
  std::size_t link_pairs = 0;
};

/// Classification over `runs` splits (run i uses seed + i) when labels are
/// given, link prediction on `pairs` when given. `graph` feeds the Jaccard
/// baseline. The link ROC ranks pairs by h_u . h_v, which orders them exactly
/// as sigma does but without ties from sigma rounding to 1.
EvalReport evaluate(const EmbeddingMatrix& emb, const Graph& graph,
                    const NodeLabels* labels, const LinkPairSample* pairs,
                    const EvalConfig& cfg);

void write_report_text(const EvalReport& r, std::ostream& out);
/// "metric,mean,std,runs"
void write_report_csv(const EvalReport& r, std::ostream& out);
/// "fpr,tpr"
void write_roc_csv(const RocResult& roc, std::ostream& out);
/// Standalone SVG of one or more ROC curves.
void write_roc_svg(std::span<const std::pair<std::string, const RocResult*>> curves,
                   std::ostream& out);

}  // namespace mhne
