#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "zobilevel/rng.hpp"
#include "zobilevel/sampling.hpp"
#include "zobilevel/types.hpp"

namespace zobilevel {

/// One sampled update with everything the importance weights need.
template <typename Scalar = double>
struct MgsCandidate {
  Perturbation<Scalar> u;
  /// L(alpha + u) = L_val(w*(alpha + u), alpha + u)
  Scalar val_loss_at_u = Scalar(0);
  /// -[L(alpha + u) - L(alpha)] / tau, filled by mgs_update
  Scalar log_p_tilde = Scalar(0);
  /// Proposal log-density at u.
  Scalar log_q = Scalar(0);
  /// Self-normalized weight c_i, filled by mgs_update.
  Scalar weight_normalized = Scalar(0);
};

template <typename Scalar = double>
struct MgsDiagnostics {
  /// N_e = 1 / sum c_i^2
  Scalar ess = Scalar(0);
  /// R_e = N_e / N
  Scalar esr = Scalar(0);
  Vector<Scalar> weights;
  Scalar max_weight = Scalar(0);
  Scalar min_weight = Scalar(0);
};

template <typename Scalar = double>
struct MgsUpdate {
  Perturbation<Scalar> u_star;
  MgsDiagnostics<Scalar> diagnostics;
};

/// q(u) = (1 - lambda) N(-g, sigma^2 I) + lambda N(0, sigma^2 I).
///
/// Without a gradient hint the mixture collapses to the zero-centered
/// component (lambda is forced to 1).
template <typename Scalar = double>
class GaussianMixtureProposal {
 public:
  GaussianMixtureProposal(Index dim, Scalar sigma)
      : dim_(dim), sigma_(sigma), lambda_(Scalar(1)) {
    check();
  }

  GaussianMixtureProposal(const Vector<Scalar>& grad_hint, Scalar sigma, Scalar lambda)
      : dim_(grad_hint.size()), sigma_(sigma), lambda_(lambda), center_(-grad_hint) {
    check();
    if (!(lambda >= Scalar(0) && lambda <= Scalar(1)))
      throw Error("proposal: lambda must lie in [0, 1]");
  }

  Index dim() const { return dim_; }
  Scalar sigma() const { return sigma_; }
  Scalar lambda() const { return lambda_; }
  bool has_hint() const { return center_.has_value(); }

  /// The component is chosen per sample by a lambda-Bernoulli draw.
  Perturbation<Scalar> sample(Rng& rng) const {
    const bool zero_centered = !center_ || rng.bernoulli(static_cast<double>(lambda_));
    Vector<Scalar> u = sample_gaussian<Scalar>(rng, dim_).u * sigma_;
    if (!zero_centered) u += *center_;
    return Perturbation<Scalar>(std::move(u));
  }

  /// Log of the mixture density, combined with a max-shifted log-sum-exp.
  template <typename Derived>
  Scalar log_density(const Eigen::MatrixBase<Derived>& u) const {
    if (u.size() != dim_) throw Error("proposal: dimension mismatch");
    const Scalar log_zero = component_log_density(u.squaredNorm());
    if (!center_ || lambda_ == Scalar(1)) return log_zero;
    const Scalar log_hint = component_log_density((u - *center_).squaredNorm());
    if (lambda_ == Scalar(0)) return log_hint;
    const Scalar a = std::log1p(-lambda_) + log_hint;
    const Scalar b = std::log(lambda_) + log_zero;
    const Scalar m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
  }

 private:
  void check() const {
    if (dim_ < 1) throw Error("proposal: dimension must be >= 1");
    if (!(sigma_ > Scalar(0))) throw Error("proposal: sigma must be positive");
  }

  Scalar component_log_density(Scalar sq_dist) const {
    const Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
    return Scalar(-0.5) * static_cast<Scalar>(dim_) * std::log(two_pi * sigma_ * sigma_) -
           sq_dist / (Scalar(2) * sigma_ * sigma_);
  }

  Index dim_;
  Scalar sigma_;
  Scalar lambda_;
  std::optional<Vector<Scalar>> center_;
};

/// N draws from the mixture proposal, all from one stream.
template <typename Scalar = double>
std::vector<Perturbation<Scalar>> propose(Rng& rng, const GaussianMixtureProposal<Scalar>& q,
                                          int n) {
  if (n < 1) throw Error("propose: N must be >= 1");
  std::vector<Perturbation<Scalar>> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(q.sample(rng));
  return out;
}

template <typename Scalar = double>
Scalar proposal_log_density(const Vector<Scalar>& u, const std::optional<Vector<Scalar>>& grad_hint,
                            Scalar sigma, Scalar lambda) {
  if (!grad_hint) return GaussianMixtureProposal<Scalar>(u.size(), sigma).log_density(u);
  return GaussianMixtureProposal<Scalar>(*grad_hint, sigma, lambda).log_density(u);
}

/// Self-normalized importance-sampling update
///
///   u* = sum_i c_i u_i,   c_i = c~_i / sum_j c~_j,   c~_i = p~(u_i) / q(u_i)
///   p~(u) = exp(-[L(alpha + u) - L(alpha)] / tau)
///
/// evaluated in log space with a max shift. Candidates with a non-finite loss
/// (or, when support_radius > 0, with |u| > support_radius) get weight 0.
/// Fills log_p_tilde and weight_normalized of every candidate.
template <typename Scalar = double>
MgsUpdate<Scalar> mgs_update(std::span<MgsCandidate<Scalar>> candidates, Scalar base_loss,
                             Scalar tau, Scalar support_radius = Scalar(0)) {
  if (candidates.empty()) throw Error("mgs_update: no candidates");
  if (!(tau > Scalar(0))) throw Error("mgs_update: tau must be positive");
  constexpr Scalar kNegInf = -std::numeric_limits<Scalar>::infinity();
  const std::size_t n = candidates.size();
  const Index d = candidates.front().u.dim();

  std::vector<Scalar> log_w(n, kNegInf);
  Scalar max_log_w = kNegInf;
  for (std::size_t i = 0; i < n; ++i) {
    auto& c = candidates[i];
    if (c.u.dim() != d) throw Error("mgs_update: candidates differ in dimension");
    c.log_p_tilde = -(c.val_loss_at_u - base_loss) / tau;
    const bool inside = support_radius <= Scalar(0) || c.u.radius <= support_radius;
    if (std::isfinite(c.log_p_tilde) && std::isfinite(c.log_q) && inside) {
      log_w[i] = c.log_p_tilde - c.log_q;
      max_log_w = std::max(max_log_w, log_w[i]);
    }
  }
  if (!std::isfinite(max_log_w))
    throw NumericError("mgs_update: every candidate weight is zero (non-finite losses)");

  Vector<Scalar> w(static_cast<Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    w[static_cast<Index>(i)] = log_w[i] == kNegInf ? Scalar(0) : std::exp(log_w[i] - max_log_w);
  w /= w.sum();

  MgsUpdate<Scalar> out;
  Vector<Scalar> u_star = Vector<Scalar>::Zero(d);
  for (std::size_t i = 0; i < n; ++i) {
    candidates[i].weight_normalized = w[static_cast<Index>(i)];
    u_star += w[static_cast<Index>(i)] * candidates[i].u.u;
  }
  out.u_star = Perturbation<Scalar>(std::move(u_star));
  auto& diag = out.diagnostics;
  // clamped to the exact bounds 1 <= N_e <= N against rounding in sum c_i^2
  diag.ess = std::clamp(Scalar(1) / w.squaredNorm(), Scalar(1), static_cast<Scalar>(n));
  diag.esr = diag.ess / static_cast<Scalar>(n);
  diag.max_weight = w.maxCoeff();
  diag.min_weight = w.minCoeff();
  diag.weights = std::move(w);
  return out;
}

/// One MGS update on the linear loss L(alpha) = a^T alpha at alpha = 0 with a
/// zero-centered proposal; returns cos(u*, -a). The target is restricted to
/// the ball |u| <= support_radius (unrestricted when 0), the region on which
/// the first-order expansion behind the SGD limit holds.
template <typename Scalar = double>
Scalar prop1_direction_check(const Vector<Scalar>& a, Scalar tau, Scalar sigma, int n, Rng& rng,
                             Scalar support_radius) {
  const Scalar a_norm = a.norm();
  if (!(a_norm > Scalar(0))) throw Error("prop1_direction_check: a = 0 has no direction");
  const GaussianMixtureProposal<Scalar> q(a.size(), sigma);
  std::vector<MgsCandidate<Scalar>> cands(static_cast<std::size_t>(n));
  for (auto& c : cands) {
    c.u = q.sample(rng);
    c.val_loss_at_u = a.dot(c.u.u);
    c.log_q = q.log_density(c.u.u);
  }
  const auto upd = mgs_update<Scalar>(std::span<MgsCandidate<Scalar>>(cands), Scalar(0), tau,
                                      support_radius);
  const Scalar un = upd.u_star.u.norm();
  if (un == Scalar(0)) return Scalar(0);
  return -upd.u_star.u.dot(a) / (un * a_norm);
}

}  // namespace zobilevel
