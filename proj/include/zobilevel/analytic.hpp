#pragma once

#include "zobilevel/config.hpp"
#include "zobilevel/problem.hpp"

namespace zobilevel {

/// Quadratic bi-level problem with a closed-form inner optimum.
///
///   L_train(w, a) = 1/2 |w - A a - b|^2          => w*(a) = A a + b
///   L_val(w, a)   = 1/2 |w - t|^2 + reg/2 |a|^2
///
/// so the true outer objective is 1/2 |A a + b - t|^2 + reg/2 |a|^2 and its
/// minimizer solves (A^T A + reg I) a = A^T (t - b).
class AnalyticQuadraticProblem final : public BilevelProblem {
 public:
  /// Throws Error when A^T A + reg I is singular.
  AnalyticQuadraticProblem(MatrixXd A, VectorXd b, VectorXd t, double reg, VectorXd alpha0);

  Index alpha_dim() const override { return A_.cols(); }
  Index omega_dim() const override { return A_.rows(); }

  double train_loss(const VectorXd& omega, const VectorXd& alpha) const override;
  double val_loss(const VectorXd& omega, const VectorXd& alpha) const override;
  VectorXd grad_omega_train(const VectorXd& omega, const VectorXd& alpha) const override;
  VectorXd grad_omega_val(const VectorXd& omega, const VectorXd& alpha) const override;
  VectorXd grad_alpha_val(const VectorXd& omega, const VectorXd& alpha) const override;
  VectorXd grad_alpha_train(const VectorXd& omega, const VectorXd& alpha) const override;

  InnerState initial_state() const override { return InnerState(VectorXd::Zero(omega_dim())); }
  VectorXd initial_alpha() const override { return alpha0_; }
  std::optional<VectorXd> known_optimum() const override { return alpha_star_; }

  /// w*(a) = A a + b.
  VectorXd inner_optimum(const VectorXd& alpha) const { return A_ * alpha + b_; }
  /// Gradient of the true outer objective: A^T (A a + b - t) + reg a.
  VectorXd true_outer_gradient(const VectorXd& alpha) const;
  double true_outer_loss(const VectorXd& alpha) const;

  const MatrixXd& A() const { return A_; }
  const VectorXd& b() const { return b_; }
  const VectorXd& t() const { return t_; }
  double reg() const { return reg_; }
  const VectorXd& alpha_star() const { return alpha_star_; }

 private:
  void check_shapes(const VectorXd& omega, const VectorXd& alpha) const;

  MatrixXd A_;
  VectorXd b_;
  VectorXd t_;
  double reg_;
  VectorXd alpha0_;
  VectorXd alpha_star_;
};

/// Seeded instance: A = U diag(s) V^T with singular values spaced
/// geometrically in [1/spread, 1]; b, t and alpha0 drawn from the same seed.
AnalyticQuadraticProblem make_analytic(const AnalyticConfig& cfg);

/// Problem whose training loss is bilinear in (w, a) up to a quadratic in w:
///
///   L_train(w, a) = w^T B a + 1/2 |w|^2
///   L_val(w, a)   = 1/2 |w - t|^2 + 1/2 |a|^2
///
/// The mixed Hessian d^2 L_train / (da dw) is the constant B^T, so the
/// central difference of grad_a L_train along w is exact.
class BilinearProblem final : public BilevelProblem {
 public:
  BilinearProblem(MatrixXd B, VectorXd t);

  Index alpha_dim() const override { return B_.cols(); }
  Index omega_dim() const override { return B_.rows(); }

  double train_loss(const VectorXd& omega, const VectorXd& alpha) const override;
  double val_loss(const VectorXd& omega, const VectorXd& alpha) const override;
  VectorXd grad_omega_train(const VectorXd& omega, const VectorXd& alpha) const override;
  VectorXd grad_omega_val(const VectorXd& omega, const VectorXd& alpha) const override;
  VectorXd grad_alpha_val(const VectorXd& omega, const VectorXd& alpha) const override;
  VectorXd grad_alpha_train(const VectorXd& omega, const VectorXd& alpha) const override;

  InnerState initial_state() const override { return InnerState(VectorXd::Zero(omega_dim())); }
  VectorXd initial_alpha() const override { return VectorXd::Zero(alpha_dim()); }

  /// d^2 L_train / (da dw), shape alpha_dim x omega_dim.
  MatrixXd mixed_hessian() const { return B_.transpose(); }

 private:
  MatrixXd B_;
  VectorXd t_;
};

BilinearProblem make_bilinear(Index d_alpha, Index d_omega, std::uint64_t seed);

}  // namespace zobilevel
