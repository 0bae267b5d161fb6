#pragma once

#include <cmath>
#include <functional>

#include "zobilevel/types.hpp"

namespace zobilevel::test {

inline double rel_err(const VectorXd& got, const VectorXd& want) {
  return (got - want).norm() / want.norm();
}

/// Central differences of a scalar function, one coordinate at a time.
inline VectorXd fd_gradient(const std::function<double(const VectorXd&)>& f, const VectorXd& x,
                            double h) {
  VectorXd g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    VectorXd p = x, m = x;
    p[i] += h;
    m[i] -= h;
    g[i] = (f(p) - f(m)) / (2 * h);
  }
  return g;
}

/// Largest coordinate violation of |g_i - fd_i| <= max(abs_floor, rel * |g|).
inline double fd_violation(const VectorXd& g, const VectorXd& fd, double abs_floor, double rel) {
  const double tol = std::max(abs_floor, rel * g.norm());
  return ((g - fd).cwiseAbs().maxCoeff()) / tol;
}

}  // namespace zobilevel::test

#include <functional>

#include "zobilevel/problem.hpp"

namespace zobilevel::test {

/// Forwards to a base problem; val_loss can be overridden and the alpha
/// gradient hidden.
class WrappedProblem final : public BilevelProblem {
 public:
  using ValHook = std::function<double(const VectorXd& omega, const VectorXd& alpha, double base_value)>;

  WrappedProblem(const BilevelProblem& base, ValHook hook, bool alpha_gradient = true)
      : base_(base), hook_(std::move(hook)), alpha_gradient_(alpha_gradient) {}

  Index alpha_dim() const override { return base_.alpha_dim(); }
  Index omega_dim() const override { return base_.omega_dim(); }
  double train_loss(const VectorXd& w, const VectorXd& a) const override { return base_.train_loss(w, a); }
  double val_loss(const VectorXd& w, const VectorXd& a) const override {
    const double v = base_.val_loss(w, a);
    return hook_ ? hook_(w, a, v) : v;
  }
  VectorXd grad_omega_train(const VectorXd& w, const VectorXd& a) const override { return base_.grad_omega_train(w, a); }
  VectorXd grad_omega_val(const VectorXd& w, const VectorXd& a) const override { return base_.grad_omega_val(w, a); }
  bool has_alpha_gradient() const override { return alpha_gradient_; }
  VectorXd grad_alpha_val(const VectorXd& w, const VectorXd& a) const override { return base_.grad_alpha_val(w, a); }
  VectorXd grad_alpha_train(const VectorXd& w, const VectorXd& a) const override { return base_.grad_alpha_train(w, a); }
  InnerState initial_state() const override { return base_.initial_state(); }
  VectorXd initial_alpha() const override { return base_.initial_alpha(); }
  std::optional<VectorXd> known_optimum() const override { return base_.known_optimum(); }

 private:
  const BilevelProblem& base_;
  ValHook hook_;
  bool alpha_gradient_;
};

}  // namespace zobilevel::test
