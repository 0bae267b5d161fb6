#pragma once

#include <optional>

#include "zobilevel/types.hpp"

namespace zobilevel {

/// Operation weights plus momentum buffers. Copying is the snapshot.
struct InnerState {
  VectorXd omega;
  VectorXd momentum;
  long step_count = 0;

  InnerState() = default;
  explicit InnerState(VectorXd w)
      : omega(std::move(w)), momentum(VectorXd::Zero(omega.size())) {}

  friend bool operator==(const InnerState& a, const InnerState& b) {
    return a.step_count == b.step_count && a.omega.size() == b.omega.size() &&
           a.momentum.size() == b.momentum.size() && a.omega == b.omega &&
           a.momentum == b.momentum;
  }
};

/// Evaluation interface of min_alpha L_val(w*(alpha), alpha) s.t.
/// w*(alpha) = argmin_w L_train(w, alpha).
///
/// Implementations are immutable after construction and every method is a
/// pure function of its arguments, so concurrent calls are safe.
class BilevelProblem {
 public:
  virtual ~BilevelProblem() = default;

  virtual Index alpha_dim() const = 0;
  virtual Index omega_dim() const = 0;

  virtual double train_loss(const VectorXd& omega, const VectorXd& alpha) const = 0;
  virtual double val_loss(const VectorXd& omega, const VectorXd& alpha) const = 0;
  virtual VectorXd grad_omega_train(const VectorXd& omega, const VectorXd& alpha) const = 0;
  virtual VectorXd grad_omega_val(const VectorXd& omega, const VectorXd& alpha) const = 0;

  /// False when the problem cannot differentiate w.r.t. alpha.
  virtual bool has_alpha_gradient() const { return true; }
  virtual VectorXd grad_alpha_val(const VectorXd& omega, const VectorXd& alpha) const = 0;
  virtual VectorXd grad_alpha_train(const VectorXd& omega, const VectorXd& alpha) const = 0;

  /// Gradient used by the inner solver at the given state. Defaults to the
  /// full-batch training gradient; minibatch problems key the batch on
  /// state.step_count.
  virtual VectorXd inner_gradient(const InnerState& state, const VectorXd& alpha) const {
    return grad_omega_train(state.omega, alpha);
  }

  virtual InnerState initial_state() const = 0;
  virtual VectorXd initial_alpha() const = 0;

  /// Closed-form outer optimum, when one is known.
  virtual std::optional<VectorXd> known_optimum() const { return std::nullopt; }
};

}  // namespace zobilevel
