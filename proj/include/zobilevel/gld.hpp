#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "zobilevel/rng.hpp"
#include "zobilevel/sampling.hpp"
#include "zobilevel/types.hpp"

namespace zobilevel {

template <typename Scalar = double>
struct GldStep {
  std::vector<Scalar> radii;
  /// Index into the candidate list, or -1 when the current point was kept.
  int chosen = -1;
  Scalar chosen_radius = Scalar(0);
  Scalar loss_before = Scalar(0);
  Scalar loss_after = Scalar(0);
  /// Candidates whose loss was non-finite and therefore ignored.
  int discarded = 0;

  bool stayed() const { return chosen < 0; }
};

template <typename Scalar = double>
struct GldResult {
  Perturbation<Scalar> u_star;
  GldStep<Scalar> step;
};

/// {2^-k R : k = 0..floor(log2(R / r))}, strictly decreasing, smallest >= r.
template <typename Scalar = double>
std::vector<Scalar> gld_radii(Scalar r, Scalar R) {
  if (!(r > Scalar(0)) || !(r <= R)) throw Error("gld: radius bounds must satisfy 0 < r <= R");
  std::vector<Scalar> radii;
  // exact halving, so R / r = 2^k keeps r itself on the ladder
  for (Scalar rad = R; rad >= r; rad /= Scalar(2)) radii.push_back(rad);
  return radii;
}

/// One uniform sphere sample per ladder radius (times samples_per_radius),
/// in ladder order.
template <typename Scalar = double>
std::vector<Perturbation<Scalar>> gld_candidates(Rng& rng, Index d, std::span<const Scalar> radii,
                                                 int samples_per_radius = 1) {
  std::vector<Perturbation<Scalar>> out;
  out.reserve(radii.size() * static_cast<std::size_t>(samples_per_radius));
  for (Scalar rad : radii)
    for (int s = 0; s < samples_per_radius; ++s) out.push_back(sample_sphere<Scalar>(rng, d, rad));
  return out;
}

/// Argmin fold over {current point} U {candidates}. Ties keep the current
/// point; between candidates the earlier ladder entry wins. Non-finite
/// candidate losses count as +inf.
template <typename Scalar = double>
GldResult<Scalar> gld_select(Scalar loss_before, std::span<const Perturbation<Scalar>> candidates,
                             std::span<const Scalar> losses, std::vector<Scalar> radii = {}) {
  if (candidates.size() != losses.size()) throw Error("gld: candidate/loss count mismatch");
  if (candidates.empty()) throw Error("gld: no candidates");
  GldResult<Scalar> out;
  auto& step = out.step;
  step.radii = std::move(radii);
  step.loss_before = loss_before;
  Scalar best = loss_before;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Scalar l = losses[i];
    if (!std::isfinite(l)) {
      ++step.discarded;
      continue;
    }
    if (l < best) {
      best = l;
      step.chosen = static_cast<int>(i);
    }
  }
  step.loss_after = best;
  if (step.stayed()) {
    out.u_star = Perturbation<Scalar>::zero(candidates.front().dim());
  } else {
    out.u_star = candidates[static_cast<std::size_t>(step.chosen)];
    step.chosen_radius = out.u_star.radius;
  }
  return out;
}

/// GradientLess Descent step: u* = argmin over {alpha} U {alpha + u_i} with
/// one sphere sample per radius 2^-k R.
template <typename Scalar, typename LossFn, typename DA>
GldResult<Scalar> gld_step(LossFn&& loss_at, const Eigen::MatrixBase<DA>& alpha, Scalar r, Scalar R,
                           Rng& rng, int samples_per_radius = 1) {
  auto radii = gld_radii<Scalar>(r, R);
  const auto cands =
      gld_candidates<Scalar>(rng, alpha.size(), std::span<const Scalar>(radii), samples_per_radius);
  const Vector<Scalar> a = alpha;
  const Scalar before = loss_at(a);
  if (!std::isfinite(before)) throw NumericError("gld: non-finite loss at the current point");
  std::vector<Scalar> losses;
  losses.reserve(cands.size());
  for (const auto& c : cands) {
    const Vector<Scalar> probe = a + c.u;
    losses.push_back(loss_at(probe));
  }
  return gld_select<Scalar>(before, std::span<const Perturbation<Scalar>>(cands),
                            std::span<const Scalar>(losses), std::move(radii));
}

/// Q = max_i |L(alpha + D_i) - L(alpha)| |alpha| / (|D_i| |L(alpha)|), probes
/// D_i in the columns of `probes`.
template <typename Scalar, typename LossFn, typename DA, typename DP>
Scalar condition_number(LossFn&& loss_at, const Eigen::MatrixBase<DA>& alpha,
                        const Eigen::MatrixBase<DP>& probes) {
  const Vector<Scalar> a = alpha;
  const Scalar base = loss_at(a);
  const Scalar a_norm = a.norm();
  if (base == Scalar(0)) throw Error("condition_number: undefined for L(alpha) = 0");
  if (a_norm == Scalar(0)) throw Error("condition_number: undefined for alpha = 0");
  if (probes.cols() < 1) throw Error("condition_number: need at least one probe");
  Scalar q = Scalar(0);
  for (Index i = 0; i < probes.cols(); ++i) {
    const Scalar pn = probes.col(i).norm();
    if (!(pn > Scalar(0))) throw Error("condition_number: zero-length probe");
    const Vector<Scalar> probe = a + probes.col(i);
    q = std::max(q, std::abs(loss_at(probe) - base) * a_norm / (pn * std::abs(base)));
  }
  return q;
}

}  // namespace zobilevel
