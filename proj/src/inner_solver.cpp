#include "zobilevel/inner_solver.hpp"

#include <cmath>

namespace zobilevel {

namespace {

void check_state(const BilevelProblem& problem, const InnerState& s) {
  if (s.omega.size() != problem.omega_dim() || s.momentum.size() != s.omega.size())
    throw Error("inner state does not match the problem's omega dimension");
}

}  // namespace

void advance_inner(const BilevelProblem& problem, InnerState& state, const VectorXd& alpha,
                   const InnerSolverSettings& settings) {
  check_state(problem, state);
  if (settings.iterations < 0) throw Error("solve_inner: iterations must be >= 0");
  for (int k = 0; k < settings.iterations; ++k) {
    VectorXd g = problem.inner_gradient(state, alpha);
    if (!g.allFinite())
      throw InnerSolveError(k, "non-finite training gradient at inner iteration " + std::to_string(k));
    if (settings.grad_clip > 0.0) {
      const double n = g.norm();
      if (n > settings.grad_clip) g *= settings.grad_clip / n;
    }
    state.momentum = settings.momentum * state.momentum + g;
    state.omega -= settings.lr * state.momentum;
    ++state.step_count;
    if (!state.omega.allFinite())
      throw InnerSolveError(k, "non-finite weights at inner iteration " + std::to_string(k));
  }
}

InnerSolveReport solve_inner(const BilevelProblem& problem, const InnerState& snapshot,
                             const VectorXd& alpha, const InnerSolverSettings& settings) {
  InnerSolveReport report;
  report.final_state = snapshot;
  report.initial_train_loss = problem.train_loss(snapshot.omega, alpha);
  if (!std::isfinite(report.initial_train_loss))
    throw InnerSolveError(-1, "non-finite training loss at the starting point");
  advance_inner(problem, report.final_state, alpha, settings);
  report.iterations_run = settings.iterations;
  report.final_train_loss = problem.train_loss(report.final_state.omega, alpha);
  if (!std::isfinite(report.final_train_loss))
    throw InnerSolveError(settings.iterations - 1,
                          "non-finite training loss after " + std::to_string(settings.iterations) +
                              " inner iterations");
  report.omega_star = report.final_state.omega;
  return report;
}

HvpEstimate darts2_hvp_difference(const BilevelProblem& problem, const VectorXd& omega,
                                  const VectorXd& omega_prime, const VectorXd& alpha,
                                  double scale) {
  HvpEstimate out;
  const VectorXd v = problem.grad_omega_val(omega_prime, alpha);
  const double norm = v.norm();
  if (!(norm >= 1e-12)) {
    out.value = VectorXd::Zero(problem.alpha_dim());
    out.degenerate = true;
    return out;
  }
  out.epsilon = scale / norm;
  const VectorXd plus = omega + out.epsilon * v;
  const VectorXd minus = omega - out.epsilon * v;
  out.value = (problem.grad_alpha_train(plus, alpha) - problem.grad_alpha_train(minus, alpha)) /
              (2.0 * out.epsilon);
  return out;
}

VectorXd darts_grad(const BilevelProblem& problem, const VectorXd& omega, const VectorXd& alpha,
                    int order, double xi, double hvp_scale) {
  if (!problem.has_alpha_gradient())
    throw Error("darts_grad: problem does not expose grad_alpha_val");
  if (order == 1) return problem.grad_alpha_val(omega, alpha);
  if (order != 2) throw Error("darts_grad: order must be 1 or 2");
  const VectorXd omega_prime = omega - xi * problem.grad_omega_train(omega, alpha);
  VectorXd g = problem.grad_alpha_val(omega_prime, alpha);
  if (xi != 0.0) g -= xi * darts2_hvp_difference(problem, omega, omega_prime, alpha, hvp_scale).value;
  return g;
}

}  // namespace zobilevel
