#include <doctest.h>

#include <cmath>
#include <numbers>

#include "zobilevel/mgs.hpp"

using namespace zobilevel;

namespace {

std::vector<MgsCandidate<double>> candidates(const std::vector<VectorXd>& us, const std::vector<double>& losses,
                                             const std::vector<double>& log_q) {
  std::vector<MgsCandidate<double>> out(us.size());
  for (std::size_t i = 0; i < us.size(); ++i) {
    out[i].u = Perturbation<double>(us[i]);
    out[i].val_loss_at_u = losses[i];
    out[i].log_q = log_q[i];
  }
  return out;
}

MgsUpdate<double> update(std::vector<MgsCandidate<double>>& c, double base, double tau) {
  return mgs_update<double>(std::span<MgsCandidate<double>>(c), base, tau);
}

VectorXd sample_mean(const GaussianMixtureProposal<double>& q, int n, std::uint64_t seed, VectorXd* se) {
  Rng rng = Rng::split(seed, 0);
  VectorXd sum = VectorXd::Zero(q.dim()), sq = VectorXd::Zero(q.dim());
  for (int k = 0; k < n; ++k) {
    const VectorXd u = q.sample(rng).u;
    sum += u;
    sq += u.cwiseProduct(u);
  }
  const VectorXd mean = sum / n;
  *se = ((sq / n - mean.cwiseProduct(mean)) / n).cwiseSqrt();
  return mean;
}

}  // namespace

TEST_SUITE("mgs") {

TEST_CASE("proposal means") {
  VectorXd se;
  const VectorXd g = Eigen::Vector2d(1.0, 0.0);
  const VectorXd m1 = sample_mean(GaussianMixtureProposal<double>(g, 0.1, 1.0), 100'000, 1, &se);
  CHECK((m1.cwiseAbs().array() <= 3 * se.array()).all());
  const VectorXd m0 = sample_mean(GaussianMixtureProposal<double>(g, 0.1, 0.0), 100'000, 2, &se);
  CHECK(((m0 + g).cwiseAbs().array() <= 3 * se.array()).all());
  const VectorXd mh = sample_mean(GaussianMixtureProposal<double>(g, 0.1, 0.5), 100'000, 3, &se);
  CHECK(((mh + 0.5 * g).cwiseAbs().array() <= 3 * se.array()).all());
}

TEST_CASE("proposal without a hint is zero-centered") {
  const GaussianMixtureProposal<double> q(3, 0.2);
  CHECK(q.lambda() == 1.0);
  CHECK_FALSE(q.has_hint());
  CHECK_THROWS_AS(GaussianMixtureProposal<double>(Eigen::Vector2d(1, 1), 0.1, 1.5), Error);
  CHECK_THROWS_AS(GaussianMixtureProposal<double>(2, 0.0), Error);
}

TEST_CASE("proposal log density examples") {
  const VectorXd zero = VectorXd::Zero(1);
  CHECK(std::abs(proposal_log_density<double>(zero, std::nullopt, 1.0, 1.0) - (-0.9189385332046727)) <= 1e-15);
  const VectorXd g = Eigen::Vector3d(0.3, -0.2, 1.0);
  const double sigma = 0.5;
  const double mode = -1.5 * std::log(2 * std::numbers::pi * sigma * sigma);
  CHECK(std::abs(proposal_log_density<double>(VectorXd(-g), g, sigma, 0.0) - mode) <= 1e-14);
}

TEST_CASE("proposal log density matches a long double evaluation") {
  Rng rng = Rng::split(44, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const Index d = 1 + trial % 5;
    VectorXd u(d), g(d);
    for (Index i = 0; i < d; ++i) {
      u[i] = rng.normal();
      g[i] = rng.normal();
    }
    const double sigma = 0.2 + rng.uniform(), lambda = rng.uniform();
    long double s2 = static_cast<long double>(sigma) * sigma, du = 0, dh = 0;
    for (Index i = 0; i < d; ++i) {
      du += static_cast<long double>(u[i]) * u[i];
      const long double t = static_cast<long double>(u[i]) + g[i];
      dh += t * t;
    }
    const long double norm = std::pow(2 * std::numbers::pi_v<long double> * s2, -0.5L * d);
    const long double dens = lambda * norm * std::exp(-du / (2 * s2)) + (1 - lambda) * norm * std::exp(-dh / (2 * s2));
    const double got = proposal_log_density<double>(u, g, sigma, lambda);
    CHECK(std::abs(got - static_cast<double>(std::log(dens))) <= 1e-12 * std::max(1.0, std::abs(got)));
  }
}

TEST_CASE("log density stays finite far in the tails") {
  const VectorXd g = Eigen::Vector2d(10, 0);
  const double l = proposal_log_density<double>(VectorXd(Eigen::Vector2d(-50, 0)), g, 0.01, 0.5);
  CHECK(std::isfinite(l));
}

TEST_CASE("single candidate is taken whatever its loss") {
  auto c = candidates({Eigen::Vector2d(0.3, -0.4)}, {1e6}, {-2.0});
  const auto u = update(c, 0.0, 0.1);
  CHECK(u.u_star.u == Eigen::Vector2d(0.3, -0.4));
  CHECK(u.diagnostics.ess == 1.0);
  CHECK(u.diagnostics.esr == 1.0);
}

TEST_CASE("symmetric pair averages") {
  auto c = candidates({Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)}, {0.5, 0.5}, {-1.0, -1.0});
  const auto u = update(c, 0.2, 0.1);
  CHECK(u.u_star.u == Eigen::Vector2d(0.5, 0.5));
  CHECK(u.diagnostics.ess == 2.0);
  CHECK(u.diagnostics.esr == 1.0);
}

TEST_CASE("small temperature picks the argmin candidate") {
  std::vector<VectorXd> us;
  Rng rng = Rng::split(3, 0);
  for (int i = 0; i < 6; ++i) us.push_back(sample_gaussian(rng, 3).u);
  const std::vector<double> losses{0.50, 0.31, 0.47, 0.30, 0.90, 0.35};
  auto c = candidates(us, losses, std::vector<double>(6, -1.0));
  const auto u = update(c, 0.4, 1e-6);
  CHECK((u.u_star.u - us[3]).norm() <= 1e-12);
}

TEST_CASE("weights sum to one and lie in [0, 1]") {
  Rng rng = Rng::split(21, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 9;
    std::vector<VectorXd> us;
    std::vector<double> losses, lq;
    for (int i = 0; i < n; ++i) {
      us.push_back(sample_gaussian(rng, 2).u);
      losses.push_back(rng.normal() * 10);
      lq.push_back(rng.normal() * 5);
    }
    auto c = candidates(us, losses, lq);
    const auto u = update(c, 0.0, 0.05);
    const auto& w = u.diagnostics.weights;
    CHECK(std::abs(w.sum() - 1.0) <= 1e-10);
    CHECK(w.minCoeff() >= 0.0);
    CHECK(w.maxCoeff() <= 1.0);
    CHECK(u.diagnostics.ess >= 1.0);
    CHECK(u.diagnostics.ess <= n);
    CHECK(u.diagnostics.esr > 0.0);
    CHECK(u.diagnostics.esr <= 1.0);
  }
}

TEST_CASE("loss offset leaves weights unchanged") {
  // dyadic values keep the subtraction exact
  const std::vector<VectorXd> us{Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1), Eigen::Vector2d(-1, 1)};
  auto c1 = candidates(us, {0.25, 0.5, 0.125}, {-1.0, -1.5, -0.75});
  auto c2 = candidates(us, {64.25, 64.5, 64.125}, {-1.0, -1.5, -0.75});
  const auto u1 = update(c1, 0.0, 0.25), u2 = update(c2, 64.0, 0.25);
  CHECK(u1.diagnostics.weights == u2.diagnostics.weights);
  CHECK(u1.u_star.u == u2.u_star.u);
}

TEST_CASE("temperature monotonicity") {
  double prev_gap = -1;
  for (double tau : {10.0, 1.0, 0.3, 0.1, 0.03}) {
    auto c = candidates({Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)}, {0.1, 0.2}, {-1.0, -1.0});
    const auto u = update(c, 0.0, tau);
    const double gap = c[0].weight_normalized - c[1].weight_normalized;
    CHECK(gap > 0);
    CHECK(gap > prev_gap);
    prev_gap = gap;
  }
}

TEST_CASE("non-finite candidates get zero weight; all non-finite throws") {
  auto c = candidates({Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)}, {NAN, 0.3}, {-1.0, -1.0});
  const auto u = update(c, 0.0, 0.1);
  CHECK(u.u_star.u == Eigen::Vector2d(0, 1));
  CHECK(c[0].weight_normalized == 0.0);
  auto bad = candidates({Eigen::Vector2d(1, 0)}, {INFINITY}, {-1.0});
  CHECK_THROWS_AS(update(bad, 0.0, 0.1), NumericError);
}

TEST_CASE("huge loss ranges do not overflow") {
  auto c = candidates({Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)}, {-1e6, 1e6}, {-1.0, -1.0});
  const auto u = update(c, 0.0, 1e-5);
  CHECK(u.u_star.u == Eigen::Vector2d(1, 0));
}

TEST_CASE("direction check on a linear loss") {
  VectorXd a = VectorXd::Zero(4);
  a[0] = 1;
  for (std::uint64_t s = 0; s < 3; ++s) {
    Rng rng = Rng::split(s, 0);
    CHECK(prop1_direction_check<double>(a, 0.1, 0.1, 10'000, rng, 0.3) >= 0.99);
  }
  Rng rng = Rng::split(1, 1);
  CHECK_THROWS_AS(prop1_direction_check<double>(VectorXd::Zero(3), 0.1, 0.1, 10, rng, 0.0), Error);
}

TEST_CASE("ratio invariance of loss and temperature") {
  VectorXd a = Eigen::Vector3d(0.5, -1.0, 0.25);
  Rng r1 = Rng::split(9, 0), r2 = Rng::split(9, 0), r3 = Rng::split(9, 0), r4 = Rng::split(9, 0);
  CHECK(prop1_direction_check<double>(a, 0.1, 0.1, 500, r1, 0.0) ==
        prop1_direction_check<double>(VectorXd(8 * a), 0.8, 0.1, 500, r2, 0.0));
  const double base = prop1_direction_check<double>(a, 0.1, 0.1, 500, r3, 0.0);
  const double scaled = prop1_direction_check<double>(VectorXd(10 * a), 1.0, 0.1, 500, r4, 0.0);
  CHECK(std::abs(base - scaled) <= 1e-12);
}

TEST_CASE("single sample cosine is the sample's own cosine") {
  const VectorXd a = Eigen::Vector2d(1, 2);
  Rng r1 = Rng::split(5, 5), r2 = Rng::split(5, 5);
  const double c = prop1_direction_check<double>(a, 0.1, 0.1, 1, r1, 0.0);
  const VectorXd u = GaussianMixtureProposal<double>(2, 0.1).sample(r2).u;
  CHECK(std::abs(c - (-u.dot(a) / (u.norm() * a.norm()))) <= 1e-15);
}

}  // TEST_SUITE
