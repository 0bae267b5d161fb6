#pragma once

#include <cmath>
#include <utility>

#include "zobilevel/rng.hpp"
#include "zobilevel/types.hpp"

namespace zobilevel {

/// d iid standard normal entries.
template <typename Scalar = double>
Perturbation<Scalar> sample_gaussian(Rng& rng, Index d) {
  if (d < 1) throw Error("sample_gaussian: dimension must be >= 1");
  Vector<Scalar> u(d);
  for (Index i = 0; i < d; ++i) u[i] = static_cast<Scalar>(rng.normal());
  return Perturbation<Scalar>(std::move(u));
}

/// Uniform direction scaled to `radius` (normalized Gaussian draw).
template <typename Scalar = double>
Perturbation<Scalar> sample_sphere(Rng& rng, Index d, Scalar radius) {
  if (d < 1) throw Error("sample_sphere: dimension must be >= 1");
  if (!(radius > Scalar(0))) throw Error("sample_sphere: radius must be positive");
  for (;;) {
    Vector<Scalar> g = sample_gaussian<Scalar>(rng, d).u;
    const Scalar n = g.norm();
    if (n == Scalar(0)) continue;  // resample the all-zero draw
    Perturbation<Scalar> p;
    // d = 1: the sphere is {-radius, +radius}; skip the rounding of g * (radius / |g|)
    p.u = d == 1 ? Vector<Scalar>::Constant(1, std::copysign(radius, g[0])) : Vector<Scalar>(g * (radius / n));
    p.radius = radius;
    return p;
  }
}

/// Two random orthonormal directions in R^d (Gram-Schmidt on Gaussian draws).
template <typename Scalar = double>
std::pair<Vector<Scalar>, Vector<Scalar>> orthonormal_pair(Rng& rng, Index d) {
  if (d < 2) throw Error("orthonormal_pair: dimension must be >= 2");
  Vector<Scalar> v1 = sample_sphere<Scalar>(rng, d, Scalar(1)).u;
  for (;;) {
    Vector<Scalar> v2 = sample_gaussian<Scalar>(rng, d).u;
    // two passes keep |<v1, v2>| at rounding level
    v2 -= v1.dot(v2) * v1;
    v2 -= v1.dot(v2) * v1;
    const Scalar n = v2.norm();
    if (n <= Scalar(1e-8)) continue;
    v2 /= n;
    return {std::move(v1), std::move(v2)};
  }
}

}  // namespace zobilevel
