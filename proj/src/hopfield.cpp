#include "mhne/hopfield.hpp"

#include <cmath>
#include <string>

#include "mhne/error.hpp"

namespace mhne {

namespace {

void check_dims(const ModelParams& p, Eigen::Index v_size, const SparseBinaryVector& c) {
  if (v_size != p.nodes() || static_cast<Eigen::Index>(c.dimension) != p.nodes())
    fail(ErrorKind::InvalidArgument,
         "dimension mismatch: model has m=" + std::to_string(p.nodes()) +
             ", target has " + std::to_string(v_size) + ", context has " +
             std::to_string(c.dimension));
}

Vector combined_logits(const ModelParams& p, const Vector& v_target,
                       const Vector& field) {
  return p.beta1 * (p.phi_target * v_target) + p.beta2 * field;
}

}  // namespace

void ModelParams::validate() const {
  require(phi_target.rows() >= 1 && phi_target.cols() >= 1, "memory matrices must be non-empty");
  require(phi_target.rows() == psi_context.rows() && phi_target.cols() == psi_context.cols(),
          "Phi_target and Psi_context shapes differ");
  require(beta1 > 0 && beta2 > 0, "beta1 and beta2 must be positive");
  require(alpha > 0 && alpha <= 1, "alpha must lie in (0, 1]");
  if (!phi_target.allFinite() || !psi_context.allFinite())
    fail(ErrorKind::Numeric, "memory matrices contain non-finite entries");
}

Vector stable_softmax(const Vector& logits) {
  require(logits.size() > 0, "softmax of empty vector");
  if (!logits.allFinite()) fail(ErrorKind::Numeric, "softmax input is not finite");
  Vector e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

double log_sum_exp(const Vector& logits) {
  require(logits.size() > 0, "log-sum-exp of empty vector");
  if (!logits.allFinite()) fail(ErrorKind::Numeric, "log-sum-exp input is not finite");
  const double mx = logits.maxCoeff();
  return mx + std::log((logits.array() - mx).exp().sum());
}

Vector context_field(const Matrix& psi_context, const SparseBinaryVector& context) {
  Vector out = Vector::Zero(psi_context.rows());
  for (NodeId i : context.active) {
    require(i < psi_context.cols(), "context index out of range");
    out += psi_context.col(i);
  }
  return out;
}

Vector similarity(const ModelParams& p, const Vector& v_target,
                  const SparseBinaryVector& context) {
  check_dims(p, v_target.size(), context);
  return stable_softmax(combined_logits(p, v_target, context_field(p.psi_context, context)));
}

RetrievalState initial_state(const ModelParams& p, const SparseBinaryVector& context,
                             int max_steps, bool trace, EnergyForm form) {
  require(max_steps >= 1, "retrieval needs at least one step (T >= 1)");
  RetrievalState s;
  s.v_target = Vector::Zero(p.nodes());
  s.max_steps = max_steps;
  if (trace) s.energy_trace = std::vector<double>{energy(p, s.v_target, context, form)};
  return s;
}

RetrievalState retrieval_step(const ModelParams& p, const RetrievalState& s,
                              const SparseBinaryVector& context, EnergyForm trace_form) {
  require(s.step < s.max_steps, "retrieval already at its step limit");
  Vector d_sim = similarity(p, s.v_target, context);
  Vector update = p.phi_target.transpose() * d_sim;
  RetrievalState next;
  next.v_target = s.v_target + p.alpha * (update - s.v_target);
  if (!next.v_target.allFinite())
    fail(ErrorKind::Internal, "retrieval produced a non-finite state at step " +
                                  std::to_string(s.step + 1));
  next.step = s.step + 1;
  next.max_steps = s.max_steps;
  next.energy_trace = s.energy_trace;
  if (next.energy_trace) next.energy_trace->push_back(energy(p, next.v_target, context, trace_form));
  return next;
}

RetrievalState retrieve(const ModelParams& p, const SparseBinaryVector& context,
                        const RetrieveOptions& opts) {
  RetrievalState s = initial_state(p, context, opts.steps, opts.trace, opts.trace_form);
  check_dims(p, s.v_target.size(), context);
  while (s.step < s.max_steps) {
    RetrievalState next = retrieval_step(p, s, context, opts.trace_form);
    const double delta = (next.v_target - s.v_target).lpNorm<Eigen::Infinity>();
    s = std::move(next);
    if (opts.early_stop_tol > 0 && delta < opts.early_stop_tol) break;
  }
  return s;
}

double energy(const ModelParams& p, const Vector& v_target,
              const SparseBinaryVector& context, EnergyForm form) {
  check_dims(p, v_target.size(), context);
  const Vector field = context_field(p.psi_context, context);
  const double sq = v_target.squaredNorm();
  if (form == EnergyForm::Verbatim)
    return 0.5 * sq - log_sum_exp(p.phi_target * v_target + field);
  return 0.5 * p.beta1 * sq - log_sum_exp(combined_logits(p, v_target, field));
}

}  // namespace mhne
