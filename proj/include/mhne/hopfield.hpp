#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mhne/graph.hpp"

namespace mhne {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Target and context memory matrices plus the fixed dynamics constants.
///
/// Rows of `phi_target` are the K stored target patterns, rows of
/// `psi_context` the K context patterns; both live in R^m.
struct ModelParams {
  Matrix phi_target;   // K x m
  Matrix psi_context;  // K x m
  double beta1 = 1.0;  // inverse temperature on the target block
  double beta2 = 0.5;  // inverse temperature on the context block
  double alpha = 0.2;  // update rate

  Eigen::Index memories() const { return phi_target.rows(); }
  Eigen::Index nodes() const { return phi_target.cols(); }

  /// Throws InvalidArgument on shape or constant violations, Numeric on
  /// non-finite entries.
  void validate() const;
};

/// Which closed form `energy` evaluates.
enum class EnergyForm {
  /// 1/2 |v|^2 - lse(Phi v + Psi c), no inverse temperatures.
  Verbatim,
  /// beta1/2 |v|^2 - lse(beta1 Phi v + beta2 Psi c). Its gradient is
  /// beta1 (v - Phi^T D_sim), so this one is the Lyapunov function of the
  /// implemented update for any 0 < alpha <= 1.
  BetaWeighted,
};

struct RetrievalState {
  Vector v_target;  // dense m-vector
  int step = 0;
  int max_steps = 0;
  std::optional<std::vector<double>> energy_trace;
};

struct RetrieveOptions {
  int steps = 7;
  bool trace = false;
  EnergyForm trace_form = EnergyForm::BetaWeighted;
  /// Stop once |v(t+1) - v(t)|_inf falls below this. 0 disables.
  double early_stop_tol = 0.0;
};

/// Softmax with the max logit subtracted first.
Vector stable_softmax(const Vector& logits);
double log_sum_exp(const Vector& logits);

/// Psi_context * v_context, touching only the active columns.
Vector context_field(const Matrix& psi_context, const SparseBinaryVector& context);

/// D_sim = softmax(beta1 Phi v_target + beta2 Psi v_context).
Vector similarity(const ModelParams& p, const Vector& v_target,
                  const SparseBinaryVector& context);

/// State at step 0: v_target = 0. With `trace`, the trace holds E(0).
RetrievalState initial_state(const ModelParams& p, const SparseBinaryVector& context,
                             int max_steps, bool trace,
                             EnergyForm form = EnergyForm::BetaWeighted);

/// One clamped update: v <- v + alpha (Phi^T D_sim - v).
RetrievalState retrieval_step(const ModelParams& p, const RetrievalState& s,
                              const SparseBinaryVector& context,
                              EnergyForm trace_form = EnergyForm::BetaWeighted);

/// Runs `opts.steps` updates from v_target = 0.
RetrievalState retrieve(const ModelParams& p, const SparseBinaryVector& context,
                        const RetrieveOptions& opts = {});

double energy(const ModelParams& p, const Vector& v_target,
              const SparseBinaryVector& context,
              EnergyForm form = EnergyForm::Verbatim);

// Checkpoint file: "MHNECKPT" + version byte, an ASCII header line
// "K m beta1 beta2 alpha\n", then Phi_target and Psi_context row-major as
// little-endian float64.
inline constexpr char kCheckpointMagic[] = "MHNECKPT";
inline constexpr unsigned char kCheckpointVersion = 1;

void save_checkpoint(const ModelParams& p, std::ostream& out);
ModelParams load_checkpoint(std::istream& in);
void save_checkpoint_file(const ModelParams& p, const std::string& path);
ModelParams load_checkpoint_file(const std::string& path);

}  // namespace mhne
