#pragma once

#include <cmath>
#include <span>

#include "zobilevel/config.hpp"
#include "zobilevel/rng.hpp"
#include "zobilevel/sampling.hpp"
#include "zobilevel/types.hpp"

namespace zobilevel {

/// Output of the multi-point random-search estimator.
template <typename Scalar = double>
struct RsEstimate {
  Vector<Scalar> gradient_estimate;
  int samples_used = 0;
  RsDistribution distribution = RsDistribution::Gaussian;
  Scalar phi_d = Scalar(1);
};

/// phi(d): 1 for N(0, I) directions, d for directions on the unit sphere.
template <typename Scalar = double>
Scalar phi_factor(RsDistribution dist, Index d) {
  return dist == RsDistribution::Gaussian ? Scalar(1) : static_cast<Scalar>(d);
}

/// Direction for the random-search estimators drawn from `dist`.
template <typename Scalar = double>
Vector<Scalar> sample_direction(Rng& rng, Index d, RsDistribution dist) {
  return dist == RsDistribution::Gaussian ? sample_gaussian<Scalar>(rng, d).u
                                          : sample_sphere<Scalar>(rng, d, Scalar(1)).u;
}

namespace detail {
template <typename Scalar>
Scalar checked(Scalar v) {
  if (!std::isfinite(v)) throw NumericError("random search: non-finite loss evaluation");
  return v;
}
}  // namespace detail

/// (phi_d / mu) L(alpha + mu u) u
template <typename Scalar, typename LossFn, typename DA, typename DU>
Vector<Scalar> one_point_estimate(LossFn&& loss_at, const Eigen::MatrixBase<DA>& alpha,
                                  const Eigen::MatrixBase<DU>& u, Scalar mu, Scalar phi_d) {
  const Vector<Scalar> probe = alpha + mu * u;
  const Scalar l = detail::checked<Scalar>(loss_at(probe));
  return (phi_d / mu) * (l * u);
}

/// (phi_d / 2mu) [L(alpha + mu u) - L(alpha - mu u)] u
template <typename Scalar, typename LossFn, typename DA, typename DU>
Vector<Scalar> two_point_estimate(LossFn&& loss_at, const Eigen::MatrixBase<DA>& alpha,
                                  const Eigen::MatrixBase<DU>& u, Scalar mu, Scalar phi_d) {
  const Vector<Scalar> plus = alpha + mu * u;
  const Vector<Scalar> minus = alpha - mu * u;
  const Scalar diff = detail::checked<Scalar>(loss_at(plus)) - detail::checked<Scalar>(loss_at(minus));
  return (phi_d / (Scalar(2) * mu)) * (diff * u);
}

/// Averages antithetic pairs given their losses; column i of `directions` is
/// u_i. Pairs with a non-finite loss are dropped.
template <typename Scalar, typename DD>
RsEstimate<Scalar> multi_point_from_losses(const Eigen::MatrixBase<DD>& directions,
                                           std::span<const Scalar> plus_losses,
                                           std::span<const Scalar> minus_losses, Scalar mu,
                                           Scalar phi_d, RsDistribution dist) {
  const Index n = directions.cols();
  if (n < 1) throw Error("multi_point_estimate: need at least one direction");
  if (static_cast<Index>(plus_losses.size()) != n || static_cast<Index>(minus_losses.size()) != n)
    throw Error("multi_point_estimate: loss count does not match direction count");
  if (!(mu > Scalar(0))) throw Error("multi_point_estimate: mu must be positive");

  RsEstimate<Scalar> out;
  out.distribution = dist;
  out.phi_d = phi_d;
  Vector<Scalar> sum = Vector<Scalar>::Zero(directions.rows());
  int used = 0;
  for (Index i = 0; i < n; ++i) {
    const Scalar lp = plus_losses[static_cast<std::size_t>(i)];
    const Scalar lm = minus_losses[static_cast<std::size_t>(i)];
    if (!std::isfinite(lp) || !std::isfinite(lm)) continue;
    const Scalar diff = lp - lm;
    if (used == 0) sum = diff * directions.col(i);
    else sum += diff * directions.col(i);
    ++used;
  }
  if (used == 0) throw NumericError("multi_point_estimate: every candidate pair was non-finite");
  out.samples_used = used;
  out.gradient_estimate = (phi_d / (Scalar(2) * mu * static_cast<Scalar>(used))) * sum;
  return out;
}

/// (phi_d / 2 mu N) sum_i [L(alpha + mu u_i) - L(alpha - mu u_i)] u_i
template <typename Scalar, typename LossFn, typename DA, typename DD>
RsEstimate<Scalar> multi_point_estimate(LossFn&& loss_at, const Eigen::MatrixBase<DA>& alpha,
                                        const Eigen::MatrixBase<DD>& directions, Scalar mu,
                                        Scalar phi_d, RsDistribution dist = RsDistribution::Gaussian) {
  const Index n = directions.cols();
  std::vector<Scalar> plus(static_cast<std::size_t>(n)), minus(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const Vector<Scalar> ap = alpha + mu * directions.col(i);
    const Vector<Scalar> am = alpha - mu * directions.col(i);
    plus[static_cast<std::size_t>(i)] = detail::checked<Scalar>(loss_at(ap));
    minus[static_cast<std::size_t>(i)] = detail::checked<Scalar>(loss_at(am));
  }
  return multi_point_from_losses<Scalar>(directions, std::span<const Scalar>(plus),
                                         std::span<const Scalar>(minus), mu, phi_d, dist);
}

/// Random-search update u* = -xi * estimate.
template <typename Scalar>
Perturbation<Scalar> rs_update(const RsEstimate<Scalar>& est, Scalar xi) {
  return Perturbation<Scalar>(Vector<Scalar>(-xi * est.gradient_estimate));
}

/// Uniform sample from the unit ball B^d.
template <typename Scalar = double>
Vector<Scalar> sample_ball(Rng& rng, Index d) {
  Vector<Scalar> u = sample_sphere<Scalar>(rng, d, Scalar(1)).u;
  return u * static_cast<Scalar>(std::pow(rng.uniform(), 1.0 / static_cast<double>(d)));
}

/// Monte-Carlo estimate of the smoothed loss L_mu(alpha) = E[L(alpha + mu u)]
/// with u ~ N(0, I) (Gaussian) or u ~ B^d (sphere estimators).
template <typename Scalar, typename LossFn, typename DA>
Scalar smoothed_loss(LossFn&& loss_at, const Eigen::MatrixBase<DA>& alpha, Scalar mu,
                     RsDistribution dist, Rng& rng, int samples) {
  const Index d = alpha.size();
  Scalar acc = Scalar(0);
  for (int k = 0; k < samples; ++k) {
    const Vector<Scalar> u = dist == RsDistribution::Gaussian ? sample_gaussian<Scalar>(rng, d).u
                                                              : sample_ball<Scalar>(rng, d);
    const Vector<Scalar> probe = alpha + mu * u;
    acc += loss_at(probe);
  }
  return acc / static_cast<Scalar>(samples);
}

}  // namespace zobilevel
