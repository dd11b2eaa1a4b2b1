#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "mhne/graph.hpp"
#include "mhne/hopfield.hpp"

namespace mhne {

struct TrainConfig {
  int memories = 2000;  // K
  int steps = 7;        // T
  double alpha = 0.2;
  double beta1 = 1.0;
  double beta2 = 0.5;
  double learning_rate = 0.01;
  double weight_decay = 1e-5;
  int epochs = 200;
  int batch_size = 128;
  std::uint64_t seed = 0;
  int hops = 1;
  int threads = 0;  // 0: HE_THREADS or hardware concurrency

  void validate() const;
};

/// One masked-node example: clamp `context`, recover `target`.
struct Example {
  SparseBinaryVector context;
  NodeId target = 0;
};

std::vector<Example> make_examples(const Graph& g, int hops);

struct GradientBuffers {
  Matrix d_phi;  // K x m
  Matrix d_psi;  // K x m

  static GradientBuffers zeros(Eigen::Index k, Eigen::Index m);
};

struct OptimizerState {
  Matrix m_phi, v_phi, m_psi, v_psi;
  long long timestep = 0;

  static OptimizerState zeros(Eigen::Index k, Eigen::Index m);
};

/// Intermediates of one example kept for the backward pass.
struct Trajectory {
  std::vector<Vector> v_target;  // v(0)..v(T)
  std::vector<Vector> d_sim;     // D(0)..D(T-1)
  Vector output;                 // softmax over v(T)
};

struct ForwardResult {
  double loss = 0.0;
  std::vector<Trajectory> trajectories;
};

/// N(0, 1/m) entries, Phi_target drawn first. Dynamics constants default to
/// the training defaults.
ModelParams init_params(int k, int m, std::uint64_t seed);

/// Mean over the batch of -log softmax(v(T))[target], with v(T) from T
/// steps of clamped retrieval.
ForwardResult forward_loss(const ModelParams& p, std::span<const Example> batch, int steps,
                           bool keep_trajectories = true);

/// Deliberate defects for exercising the gradient checker.
enum class GradientFault { None, DropSoftmaxCentering };

struct LossAndGradient {
  double loss = 0.0;
  GradientBuffers grad;
};

/// Exact gradient of forward_loss by reverse-mode through the unrolled
/// recurrence. Examples are processed in fixed chunks and reduced in chunk
/// order, so the result does not depend on `threads`.
LossAndGradient backward(const ModelParams& p, std::span<const Example> batch, int steps,
                         int threads = 1, GradientFault fault = GradientFault::None);

/// Central differences of forward_loss, one parameter at a time.
GradientBuffers finite_difference_gradients(const ModelParams& p,
                                            std::span<const Example> batch, int steps,
                                            double h = 1e-5);

/// |a - b|_2 / max(|a|_2, |b|_2) over both matrices stacked; 0 when both vanish.
double gradient_relative_error(const GradientBuffers& a, const GradientBuffers& b);

struct AdamConstants {
  double beta_m = 0.9;
  double beta_v = 0.999;
  double eps = 1e-8;
};

/// Decoupled weight decay (theta -= lr*wd*theta), then a bias-corrected Adam step.
void adam_step(ModelParams& p, const GradientBuffers& g, OptimizerState& s,
               double learning_rate, double weight_decay, const AdamConstants& c = {});

struct EpochStat {
  int epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double wall_ms = 0.0;
};

/// Called after every epoch; return false to stop early.
using EpochCallback = std::function<bool(const EpochStat&, const ModelParams&)>;

struct TrainResult {
  ModelParams params;
  std::vector<EpochStat> history;
};

TrainResult train(const Graph& g, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// "epoch,mean_loss,wall_ms" with a header row.
void write_loss_csv(std::span<const EpochStat> history, std::ostream& out);

struct GradcheckConfig {
  int trials = 20;
  int nodes = 12;
  int memories = 4;
  int batch = 2;
  double h = 1e-5;
  double tolerance = 1e-4;
  std::uint64_t seed = 0;
  GradientFault fault = GradientFault::None;
};

struct GradcheckTrial {
  int steps = 0;
  double alpha = 0.0;
  double relative_error = 0.0;
  bool passed = false;
};

struct GradcheckReport {
  std::vector<GradcheckTrial> trials;
  double max_relative_error = 0.0;
  bool passed = false;
};

/// Random small instances cycling T over {1,2,3} and alpha over {0.2, 1.0}.
GradcheckReport run_gradcheck(const GradcheckConfig& cfg);

}  // namespace mhne
