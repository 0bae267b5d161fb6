#include "zobilevel/analytic.hpp"

#include <Eigen/QR>
#include <cmath>

#include "zobilevel/rng.hpp"

namespace zobilevel {

namespace {

MatrixXd gaussian_matrix(Rng& rng, Index rows, Index cols) {
  MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

VectorXd gaussian_vector(Rng& rng, Index n, double scale) {
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = scale * rng.normal();
  return v;
}

/// First k columns of a random orthogonal matrix.
MatrixXd random_orthonormal(Rng& rng, Index n, Index k) {
  Eigen::HouseholderQR<MatrixXd> qr(gaussian_matrix(rng, n, n));
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(n, n);
  return q.leftCols(k);
}

void require_dims(const VectorXd& v, Index n, const char* what) {
  if (v.size() != n)
    throw Error(std::string("shape mismatch: ") + what + " has size " + std::to_string(v.size()) +
                ", expected " + std::to_string(n));
}

}  // namespace

AnalyticQuadraticProblem::AnalyticQuadraticProblem(MatrixXd A, VectorXd b, VectorXd t, double reg,
                                                   VectorXd alpha0)
    : A_(std::move(A)), b_(std::move(b)), t_(std::move(t)), reg_(reg), alpha0_(std::move(alpha0)) {
  if (A_.rows() < 1 || A_.cols() < 1) throw Error("analytic problem: empty A");
  require_dims(b_, A_.rows(), "b");
  require_dims(t_, A_.rows(), "t");
  require_dims(alpha0_, A_.cols(), "alpha0");
  if (reg_ < 0) throw Error("analytic problem: reg must be >= 0");

  const MatrixXd H = A_.transpose() * A_ + reg_ * MatrixXd::Identity(A_.cols(), A_.cols());
  Eigen::FullPivLU<MatrixXd> lu(H);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) throw Error("analytic problem: A^T A + reg I is singular");
  alpha_star_ = lu.solve(A_.transpose() * (t_ - b_));
}

void AnalyticQuadraticProblem::check_shapes(const VectorXd& omega, const VectorXd& alpha) const {
  require_dims(omega, omega_dim(), "omega");
  require_dims(alpha, alpha_dim(), "alpha");
}

double AnalyticQuadraticProblem::train_loss(const VectorXd& omega, const VectorXd& alpha) const {
  check_shapes(omega, alpha);
  return 0.5 * (omega - A_ * alpha - b_).squaredNorm();
}

double AnalyticQuadraticProblem::val_loss(const VectorXd& omega, const VectorXd& alpha) const {
  check_shapes(omega, alpha);
  return 0.5 * (omega - t_).squaredNorm() + 0.5 * reg_ * alpha.squaredNorm();
}

VectorXd AnalyticQuadraticProblem::grad_omega_train(const VectorXd& omega,
                                                    const VectorXd& alpha) const {
  check_shapes(omega, alpha);
  return omega - A_ * alpha - b_;
}

VectorXd AnalyticQuadraticProblem::grad_omega_val(const VectorXd& omega,
                                                  const VectorXd& alpha) const {
  check_shapes(omega, alpha);
  return omega - t_;
}

VectorXd AnalyticQuadraticProblem::grad_alpha_val(const VectorXd& omega,
                                                  const VectorXd& alpha) const {
  check_shapes(omega, alpha);
  return reg_ * alpha;
}

VectorXd AnalyticQuadraticProblem::grad_alpha_train(const VectorXd& omega,
                                                    const VectorXd& alpha) const {
  check_shapes(omega, alpha);
  return -A_.transpose() * (omega - A_ * alpha - b_);
}

VectorXd AnalyticQuadraticProblem::true_outer_gradient(const VectorXd& alpha) const {
  return A_.transpose() * (A_ * alpha + b_ - t_) + reg_ * alpha;
}

double AnalyticQuadraticProblem::true_outer_loss(const VectorXd& alpha) const {
  return val_loss(inner_optimum(alpha), alpha);
}

AnalyticQuadraticProblem make_analytic(const AnalyticConfig& cfg) {
  if (cfg.d_alpha < 1 || cfg.d_omega < 1) throw Error("make_analytic: dimensions must be >= 1");
  if (cfg.spread < 1) throw Error("make_analytic: spread must be >= 1");
  Rng rng = Rng::split(cfg.seed, streams::kProblemConstruction);

  const Index k = std::min(cfg.d_alpha, cfg.d_omega);
  const MatrixXd U = random_orthonormal(rng, cfg.d_omega, k);
  const MatrixXd V = random_orthonormal(rng, cfg.d_alpha, k);
  VectorXd s(k);
  for (Index i = 0; i < k; ++i) {
    const double frac = k == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(k - 1);
    s[i] = std::pow(cfg.spread, -frac);
  }
  MatrixXd A = U * s.asDiagonal() * V.transpose();
  VectorXd b = gaussian_vector(rng, cfg.d_omega, 0.5);
  VectorXd t = gaussian_vector(rng, cfg.d_omega, 0.5);
  VectorXd alpha0 = gaussian_vector(rng, cfg.d_alpha, 0.25);
  return AnalyticQuadraticProblem(std::move(A), std::move(b), std::move(t), cfg.reg,
                                  std::move(alpha0));
}

BilinearProblem::BilinearProblem(MatrixXd B, VectorXd t) : B_(std::move(B)), t_(std::move(t)) {
  require_dims(t_, B_.rows(), "t");
}

double BilinearProblem::train_loss(const VectorXd& omega, const VectorXd& alpha) const {
  return omega.dot(B_ * alpha) + 0.5 * omega.squaredNorm();
}

double BilinearProblem::val_loss(const VectorXd& omega, const VectorXd& alpha) const {
  return 0.5 * (omega - t_).squaredNorm() + 0.5 * alpha.squaredNorm();
}

VectorXd BilinearProblem::grad_omega_train(const VectorXd& omega, const VectorXd& alpha) const {
  return B_ * alpha + omega;
}

VectorXd BilinearProblem::grad_omega_val(const VectorXd& omega, const VectorXd&) const {
  return omega - t_;
}

VectorXd BilinearProblem::grad_alpha_val(const VectorXd&, const VectorXd& alpha) const {
  return alpha;
}

VectorXd BilinearProblem::grad_alpha_train(const VectorXd& omega, const VectorXd&) const {
  return B_.transpose() * omega;
}

BilinearProblem make_bilinear(Index d_alpha, Index d_omega, std::uint64_t seed) {
  Rng rng = Rng::split(seed, streams::kProblemConstruction);
  MatrixXd B = gaussian_matrix(rng, d_omega, d_alpha);
  VectorXd t = gaussian_vector(rng, d_omega, 1.0);
  return BilinearProblem(std::move(B), std::move(t));
}

}  // namespace zobilevel
