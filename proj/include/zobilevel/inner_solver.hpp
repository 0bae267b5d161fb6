#pragma once

#include "zobilevel/problem.hpp"

namespace zobilevel {

/// Raised when the inner descent produces a non-finite loss or gradient.
class InnerSolveError : public NumericError {
 public:
  InnerSolveError(int iteration, const std::string& what)
      : NumericError(what), iteration_(iteration) {}
  /// 0-based index of the offending step (-1: the starting point).
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

struct InnerSolveReport {
  VectorXd omega_star;
  InnerState final_state;
  int iterations_run = 0;
  double initial_train_loss = 0.0;
  double final_train_loss = 0.0;
};

struct InnerSolverSettings {
  int iterations = 10;
  double lr = 0.5;
  double momentum = 0.0;
  /// g <- g * min(1, clip / |g|) before the momentum update; 0 = off.
  double grad_clip = 0.0;
};

/// Runs `iterations` momentum-SGD steps on L_train(., alpha) from a copy of
/// `snapshot`:  v <- momentum * v + g;  w <- w - lr * v.
/// With iterations = 0 the snapshot weights are returned unchanged (the
/// first-order freeze); one step with momentum 0 is the DARTS unrolled w'.
InnerSolveReport solve_inner(const BilevelProblem& problem, const InnerState& snapshot,
                             const VectorXd& alpha, const InnerSolverSettings& settings);

/// In-place variant used to advance the live state.
void advance_inner(const BilevelProblem& problem, InnerState& state, const VectorXd& alpha,
                   const InnerSolverSettings& settings);

struct HvpEstimate {
  VectorXd value;
  /// True when |grad_w' L_val| < 1e-12 and no correction was applied.
  bool degenerate = false;
  double epsilon = 0.0;
};

/// Central-difference estimate of d^2 L_train/(da dw) * grad_w' L_val(w', a):
///
///   [grad_a L_train(w+, a) - grad_a L_train(w-, a)] / (2 eps)
///   w+- = w +- eps * grad_w' L_val(w', a),   eps = scale / |grad_w' L_val(w', a)|
HvpEstimate darts2_hvp_difference(const BilevelProblem& problem, const VectorXd& omega,
                                  const VectorXd& omega_prime, const VectorXd& alpha,
                                  double scale = 0.01);

/// DARTS architecture gradient. order 1: grad_a L_val(w, a). order 2: with
/// w' = w - xi grad_w L_train(w, a),
///   grad_a L_val(w', a) - xi * darts2_hvp_difference(w, w', a).
VectorXd darts_grad(const BilevelProblem& problem, const VectorXd& omega, const VectorXd& alpha,
                    int order, double xi, double hvp_scale = 0.01);

}  // namespace zobilevel
