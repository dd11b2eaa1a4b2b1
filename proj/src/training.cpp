#include "mhne/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include "mhne/error.hpp"
#include "mhne/log.hpp"
#include "mhne/parallel.hpp"

namespace mhne {

namespace {

// Examples per gradient chunk. Fixed so the reduction order, and hence the
// result, does not depend on the worker count.
constexpr std::size_t kChunkSize = 16;

void check_batch(const ModelParams& p, std::span<const Example> batch, int steps) {
  require(!batch.empty(), "batch is empty");
  require(steps >= 1, "retrieval needs at least one step (T >= 1)");
  for (const auto& ex : batch) {
    if (static_cast<Eigen::Index>(ex.context.dimension) != p.nodes())
      fail(ErrorKind::InvalidArgument, "dimension mismatch: context has " +
                                           std::to_string(ex.context.dimension) +
                                           ", model has m=" + std::to_string(p.nodes()));
    require(ex.target < p.nodes(), "target index out of range");
  }
}

// Column-wise stable softmax, in place.
void softmax_columns(Matrix& z) {
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    auto col = z.col(j);
    const double mx = col.maxCoeff();
    col = (col.array() - mx).exp();
    col /= col.sum();
  }
}

// Per-worker scratch for one chunk of examples.
struct ChunkWork {
  Matrix field;               // Psi c, K x b
  std::vector<Matrix> v;      // v(0)..v(T), m x b
  std::vector<Matrix> d;      // D(0)..D(T-1), K x b
  Matrix g, gu, gd, gz;
  GradientBuffers grad;
  double loss_sum = 0.0;
};

void run_chunk(const ModelParams& p, std::span<const Example> chunk, int steps,
               double scale, GradientFault fault, ChunkWork& w) {
  const Eigen::Index k = p.memories();
  const Eigen::Index m = p.nodes();
  const auto b = static_cast<Eigen::Index>(chunk.size());

  w.field.setZero(k, b);
  for (Eigen::Index j = 0; j < b; ++j)
    for (NodeId i : chunk[j].context.active) w.field.col(j) += p.psi_context.col(i);

  w.v.resize(steps + 1);
  w.d.resize(steps);
  w.v[0].setZero(m, b);
  for (int t = 0; t < steps; ++t) {
    Matrix& d = w.d[t];
    if (t == 0) {
      d = p.beta2 * w.field;  // v(0) = 0
    } else {
      d.noalias() = p.beta1 * (p.phi_target * w.v[t]);
      d += p.beta2 * w.field;
    }
    softmax_columns(d);
    w.v[t + 1] = (1.0 - p.alpha) * w.v[t];
    w.v[t + 1].noalias() += p.alpha * (p.phi_target.transpose() * d);
  }

  // Loss head: softmax over the m coordinates of v(T).
  const Matrix& out = w.v[steps];
  w.g.resize(m, b);
  w.loss_sum = 0.0;
  for (Eigen::Index j = 0; j < b; ++j) {
    auto col = out.col(j);
    const double mx = col.maxCoeff();
    Vector e = (col.array() - mx).exp();
    const double z = e.sum();
    w.loss_sum += (mx + std::log(z)) - col(chunk[j].target);
    w.g.col(j) = (e / z) * scale;
    w.g(chunk[j].target, j) -= scale;
  }

  w.grad.d_phi.setZero(k, m);
  w.grad.d_psi.setZero(k, m);
  for (int t = steps - 1; t >= 0; --t) {
    const Matrix& d = w.d[t];
    w.gu = p.alpha * w.g;
    w.grad.d_phi.noalias() += d * w.gu.transpose();
    w.gd.noalias() = p.phi_target * w.gu;
    w.gz = d.cwiseProduct(w.gd);
    if (fault != GradientFault::DropSoftmaxCentering) {
      const Eigen::RowVectorXd centre = w.gz.colwise().sum();
      w.gz -= d * centre.asDiagonal();
    }
    for (Eigen::Index j = 0; j < b; ++j)
      for (NodeId i : chunk[j].context.active) w.grad.d_psi.col(i) += p.beta2 * w.gz.col(j);
    if (t > 0) {
      w.grad.d_phi.noalias() += p.beta1 * (w.gz * w.v[t].transpose());
      w.g *= (1.0 - p.alpha);
      w.g.noalias() += p.beta1 * (p.phi_target.transpose() * w.gz);
    }
  }
}

}  // namespace

void TrainConfig::validate() const {
  require(memories >= 1, "K (memories) must be >= 1");
  require(steps >= 1, "T (steps) must be >= 1");
  require(alpha > 0 && alpha <= 1, "alpha must lie in (0, 1]");
  require(beta1 > 0 && beta2 > 0, "beta1 and beta2 must be positive");
  require(learning_rate > 0, "learning rate must be positive");
  require(weight_decay >= 0, "weight decay must be nonnegative");
  require(epochs >= 1, "epochs must be >= 1");
  require(batch_size >= 1, "batch size must be >= 1");
  require(hops >= 1, "hops must be >= 1");
  require(threads >= 0, "threads must be >= 0");
}

std::vector<Example> make_examples(const Graph& g, int hops) {
  std::vector<Example> out;
  out.reserve(g.node_count());
  for (NodeId u = 0; u < g.node_count(); ++u) out.push_back({context_vector(g, u, hops), u});
  return out;
}

GradientBuffers GradientBuffers::zeros(Eigen::Index k, Eigen::Index m) {
  return {Matrix::Zero(k, m), Matrix::Zero(k, m)};
}

OptimizerState OptimizerState::zeros(Eigen::Index k, Eigen::Index m) {
  return {Matrix::Zero(k, m), Matrix::Zero(k, m), Matrix::Zero(k, m), Matrix::Zero(k, m), 0};
}

ModelParams init_params(int k, int m, std::uint64_t seed) {
  require(k >= 1 && m >= 1, "K and m must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(m)));
  ModelParams p;
  p.phi_target.resize(k, m);
  p.psi_context.resize(k, m);
  for (Eigen::Index r = 0; r < k; ++r)
    for (Eigen::Index c = 0; c < m; ++c) p.phi_target(r, c) = normal(rng);
  for (Eigen::Index r = 0; r < k; ++r)
    for (Eigen::Index c = 0; c < m; ++c) p.psi_context(r, c) = normal(rng);
  return p;
}

ForwardResult forward_loss(const ModelParams& p, std::span<const Example> batch, int steps,
                           bool keep_trajectories) {
  check_batch(p, batch, steps);
  ForwardResult result;
  if (keep_trajectories) result.trajectories.reserve(batch.size());
  double total = 0.0;
  for (const auto& ex : batch) {
    Trajectory tr;
    const Vector field = context_field(p.psi_context, ex.context);
    Vector v = Vector::Zero(p.nodes());
    if (keep_trajectories) tr.v_target.push_back(v);
    for (int t = 0; t < steps; ++t) {
      Vector d = stable_softmax(p.beta1 * (p.phi_target * v) + p.beta2 * field);
      v += p.alpha * (p.phi_target.transpose() * d - v);
      if (keep_trajectories) {
        tr.d_sim.push_back(std::move(d));
        tr.v_target.push_back(v);
      }
    }
    total += log_sum_exp(v) - v(ex.target);
    if (keep_trajectories) {
      tr.output = stable_softmax(v);
      result.trajectories.push_back(std::move(tr));
    }
  }
  result.loss = total / static_cast<double>(batch.size());
  return result;
}

LossAndGradient backward(const ModelParams& p, std::span<const Example> batch, int steps,
                         int threads, GradientFault fault) {
  check_batch(p, batch, steps);
  const std::size_t chunks = (batch.size() + kChunkSize - 1) / kChunkSize;
  const int workers = std::min<int>(resolve_threads(threads), static_cast<int>(chunks));
  const double scale = 1.0 / static_cast<double>(batch.size());

  LossAndGradient out{0.0, GradientBuffers::zeros(p.memories(), p.nodes())};
  std::vector<ChunkWork> scratch(std::max(workers, 1));
  double loss_sum = 0.0;
  for_each_chunk_ordered(
      chunks, workers,
      [&](std::size_t c, int worker) {
        const std::size_t begin = c * kChunkSize;
        const std::size_t len = std::min(kChunkSize, batch.size() - begin);
        run_chunk(p, batch.subspan(begin, len), steps, scale, fault, scratch[worker]);
      },
      [&](std::size_t, int worker) {
        const ChunkWork& w = scratch[worker];
        out.grad.d_phi += w.grad.d_phi;
        out.grad.d_psi += w.grad.d_psi;
        loss_sum += w.loss_sum;
      });
  out.loss = loss_sum * scale;
  return out;
}

GradientBuffers finite_difference_gradients(const ModelParams& p,
                                            std::span<const Example> batch, int steps,
                                            double h) {
  require(h > 0, "finite-difference step must be positive");
  check_batch(p, batch, steps);
  GradientBuffers g = GradientBuffers::zeros(p.memories(), p.nodes());
  ModelParams probe = p;
  auto loss = [&] { return forward_loss(probe, batch, steps, false).loss; };
  auto sweep = [&](Matrix& theta, Matrix& grad) {
    for (Eigen::Index r = 0; r < theta.rows(); ++r)
      for (Eigen::Index c = 0; c < theta.cols(); ++c) {
        const double saved = theta(r, c);
        theta(r, c) = saved + h;
        const double up = loss();
        theta(r, c) = saved - h;
        const double down = loss();
        theta(r, c) = saved;
        grad(r, c) = (up - down) / (2.0 * h);
      }
  };
  sweep(probe.phi_target, g.d_phi);
  sweep(probe.psi_context, g.d_psi);
  return g;
}

double gradient_relative_error(const GradientBuffers& a, const GradientBuffers& b) {
  const double diff = std::sqrt((a.d_phi - b.d_phi).squaredNorm() +
                                (a.d_psi - b.d_psi).squaredNorm());
  const double na = std::sqrt(a.d_phi.squaredNorm() + a.d_psi.squaredNorm());
  const double nb = std::sqrt(b.d_phi.squaredNorm() + b.d_psi.squaredNorm());
  const double denom = std::max(na, nb);
  if (denom == 0.0) return 0.0;
  return diff / denom;
}

void adam_step(ModelParams& p, const GradientBuffers& g, OptimizerState& s,
               double learning_rate, double weight_decay, const AdamConstants& c) {
  auto same = [&](const Matrix& a) {
    return a.rows() == p.memories() && a.cols() == p.nodes();
  };
  require(same(g.d_phi) && same(g.d_psi), "gradient shape does not match parameters");
  require(same(s.m_phi) && same(s.v_phi) && same(s.m_psi) && same(s.v_psi),
          "optimizer state shape does not match parameters");

  s.timestep += 1;
  const double bias_m = 1.0 - std::pow(c.beta_m, static_cast<double>(s.timestep));
  const double bias_v = 1.0 - std::pow(c.beta_v, static_cast<double>(s.timestep));
  auto update = [&](Matrix& theta, const Matrix& grad, Matrix& m1, Matrix& m2) {
    if (weight_decay != 0.0) theta *= (1.0 - learning_rate * weight_decay);
    m1 = c.beta_m * m1 + (1.0 - c.beta_m) * grad;
    m2 = c.beta_v * m2 + (1.0 - c.beta_v) * grad.cwiseAbs2();
    theta.array() -= learning_rate * (m1.array() / bias_m) /
                     ((m2.array() / bias_v).sqrt() + c.eps);
  };
  update(p.phi_target, g.d_phi, s.m_phi, s.v_phi);
  update(p.psi_context, g.d_psi, s.m_psi, s.v_psi);
}

TrainResult train(const Graph& g, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  require(g.node_count() > 0, "graph is empty");
  const int m = static_cast<int>(g.node_count());

  TrainResult result;
  result.params = init_params(cfg.memories, m, cfg.seed);
  result.params.alpha = cfg.alpha;
  result.params.beta1 = cfg.beta1;
  result.params.beta2 = cfg.beta2;
  ModelParams& p = result.params;

  std::vector<Example> examples = make_examples(g, cfg.hops);
  if (auto empty = std::count_if(examples.begin(), examples.end(),
                                 [](const Example& e) { return e.context.empty(); });
      empty > 0)
    warn(std::to_string(empty) + " node(s) have empty contexts");

  OptimizerState opt = OptimizerState::zeros(p.memories(), p.nodes());
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(examples.size());
  std::vector<Example> batch;
  const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
  const int threads = resolve_threads(cfg.threads);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double epoch_sum = 0.0;
    for (std::size_t begin = 0, b = 0; begin < order.size(); begin += batch_size, ++b) {
      const std::size_t end = std::min(order.size(), begin + batch_size);
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) batch.push_back(examples[order[i]]);
      LossAndGradient lg = backward(p, batch, cfg.steps, threads);
      if (!std::isfinite(lg.loss))
        fail(ErrorKind::Numeric, "non-finite loss at epoch " + std::to_string(epoch) +
                                     ", batch " + std::to_string(b) + " (seed " +
                                     std::to_string(cfg.seed) + ")");
      epoch_sum += lg.loss * static_cast<double>(batch.size());
      adam_step(p, lg.grad, opt, cfg.learning_rate, cfg.weight_decay);
    }
    if (!p.phi_target.allFinite() || !p.psi_context.allFinite())
      fail(ErrorKind::Numeric, "parameters became non-finite at epoch " +
                                   std::to_string(epoch) + " (seed " +
                                   std::to_string(cfg.seed) + ")");

    EpochStat stat;
    stat.epoch = epoch;
    stat.mean_loss = epoch_sum / static_cast<double>(examples.size());
    stat.wall_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - start)
                       .count();
    result.history.push_back(stat);
    if (on_epoch && !on_epoch(stat, p)) break;
  }
  return result;
}

void write_loss_csv(std::span<const EpochStat> history, std::ostream& out) {
  out << "epoch,mean_loss,wall_ms\n";
  for (const auto& s : history)
    out << s.epoch << ',' << std::setprecision(17) << s.mean_loss << ','
        << std::setprecision(6) << s.wall_ms << '\n';
}

GradcheckReport run_gradcheck(const GradcheckConfig& cfg) {
  require(cfg.trials >= 1, "gradcheck needs at least one trial");
  require(cfg.nodes >= 1 && cfg.memories >= 1 && cfg.batch >= 1, "gradcheck sizes must be >= 1");
  static constexpr int kSteps[] = {1, 2, 3};
  static constexpr double kAlphas[] = {0.2, 1.0};

  GradcheckReport report;
  report.passed = true;
  for (int i = 0; i < cfg.trials; ++i) {
    std::mt19937_64 rng(cfg.seed + static_cast<std::uint64_t>(i));
    std::normal_distribution<double> normal(0.0, 0.5);
    std::bernoulli_distribution include(0.3);
    std::uniform_int_distribution<NodeId> node(0, static_cast<NodeId>(cfg.nodes - 1));

    ModelParams p;
    p.phi_target.resize(cfg.memories, cfg.nodes);
    p.psi_context.resize(cfg.memories, cfg.nodes);
    for (auto* a : {&p.phi_target, &p.psi_context})
      for (Eigen::Index r = 0; r < a->rows(); ++r)
        for (Eigen::Index c = 0; c < a->cols(); ++c) (*a)(r, c) = normal(rng);
    p.alpha = kAlphas[(i / 3) % 2];

    std::vector<Example> batch(cfg.batch);
    for (auto& ex : batch) {
      ex.context.dimension = static_cast<std::size_t>(cfg.nodes);
      for (NodeId j = 0; j < static_cast<NodeId>(cfg.nodes); ++j)
        if (include(rng)) ex.context.active.push_back(j);
      ex.target = node(rng);
    }

    GradcheckTrial trial;
    trial.steps = kSteps[i % 3];
    trial.alpha = p.alpha;
    const auto analytic = backward(p, batch, trial.steps, 1, cfg.fault).grad;
    const auto numeric = finite_difference_gradients(p, batch, trial.steps, cfg.h);
    trial.relative_error = gradient_relative_error(analytic, numeric);
    trial.passed = trial.relative_error < cfg.tolerance;
    report.max_relative_error = std::max(report.max_relative_error, trial.relative_error);
    report.passed = report.passed && trial.passed;
    report.trials.push_back(trial);
  }
  return report;
}

}  // namespace mhne
