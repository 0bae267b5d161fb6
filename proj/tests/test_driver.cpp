#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <limits>

#include "support.hpp"
#include "zobilevel/analytic.hpp"
#include "zobilevel/driver.hpp"
#include "zobilevel/io.hpp"

using namespace zobilevel;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

SearchConfig analytic_cfg(EstimatorKind e, int budget) {
  SearchConfig cfg;
  cfg.estimator = e;
  cfg.budget = budget;
  return cfg;
}

void check_same(const SearchTrajectory& a, const SearchTrajectory& b) {
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t t = 0; t < a.records.size(); ++t) {
    CHECK(a.records[t].alpha == b.records[t].alpha);
    CHECK(a.records[t].u_star == b.records[t].u_star);
    CHECK(std::bit_cast<std::uint64_t>(a.records[t].val_loss) == std::bit_cast<std::uint64_t>(b.records[t].val_loss));
  }
  CHECK(a.final_state == b.final_state);
}

}  // namespace

TEST_SUITE("driver") {

TEST_CASE("budget 0 keeps only the starting record") {
  const auto p = make_analytic(AnalyticConfig{});
  for (auto e : {EstimatorKind::RS, EstimatorKind::MGS, EstimatorKind::GLD, EstimatorKind::DARTS1}) {
    const auto traj = run_search(p, analytic_cfg(e, 0));
    REQUIRE(traj.records.size() == 1);
    CHECK(traj.final_alpha() == p.initial_alpha());
    CHECK(traj.iterations_run() == 0);
  }
}

TEST_CASE("trajectory algebra holds for every estimator") {
  const auto p = make_analytic(AnalyticConfig{});
  for (auto e : {EstimatorKind::RS, EstimatorKind::MGS, EstimatorKind::GLD, EstimatorKind::DARTS1,
                 EstimatorKind::DARTS2}) {
    const auto traj = run_search(p, analytic_cfg(e, 25));
    REQUIRE(traj.records.size() == 26);
    CHECK_FALSE(traj.error);
    for (std::size_t t = 1; t < traj.records.size(); ++t) {
      CHECK(traj.records[t].iteration == static_cast<int>(t));
      CHECK(traj.records[t].alpha == VectorXd(traj.records[t - 1].alpha + traj.records[t].u_star));
    }
  }
}

TEST_CASE("GLD val losses never increase") {
  const auto p = make_analytic(AnalyticConfig{});
  auto cfg = analytic_cfg(EstimatorKind::GLD, 100);
  for (std::uint64_t seed : {1, 2, 3}) {
    cfg.seed = seed;
    const auto traj = run_search(p, cfg);
    for (std::size_t t = 1; t < traj.records.size(); ++t) CHECK(traj.records[t].val_loss <= traj.records[t - 1].val_loss);
  }
}

TEST_CASE("GLD on the analytic problem closes most of the gap") {
  const auto p = make_analytic(AnalyticConfig{});
  const auto traj = run_search(p, analytic_cfg(EstimatorKind::GLD, 200));
  CHECK((traj.final_alpha() - p.alpha_star()).norm() <= 0.05 * (p.initial_alpha() - p.alpha_star()).norm());
}

TEST_CASE("RS with a small step decreases the loss") {
  const auto p = make_analytic(AnalyticConfig{});
  auto cfg = analytic_cfg(EstimatorKind::RS, 50);
  cfg.xi = 0.05;
  const auto traj = run_search(p, cfg);
  for (std::size_t t = 1; t < traj.records.size(); ++t) CHECK(traj.records[t].val_loss <= traj.records[t - 1].val_loss);
}

TEST_CASE("RS with a frozen inner problem estimates the first-order gradient") {
  // M = 0: candidate losses are L_val(w, alpha +- mu u) at the frozen w
  const auto p = make_analytic(AnalyticConfig{});
  const VectorXd alpha = Eigen::Vector2d(0.6, -0.3);
  const InnerState snap(Eigen::Vector3d(0.2, 0.1, 0.0));
  constexpr int kDirs = 20'000;
  Rng rng = Rng::split(3, 0);
  MatrixXd D(2, kDirs);
  std::vector<VectorXd> offsets;
  for (int i = 0; i < kDirs; ++i) {
    D.col(i) = sample_gaussian(rng, 2).u;
    offsets.push_back(0.01 * D.col(i));
    offsets.push_back(-0.01 * D.col(i));
  }
  const auto losses = evaluate_candidates(p, snap, alpha, offsets, {0, 0.5, 0.0}, 0);
  std::vector<double> plus, minus;
  for (int i = 0; i < kDirs; ++i) {
    plus.push_back(losses[2 * i]);
    minus.push_back(losses[2 * i + 1]);
  }
  const auto e = multi_point_from_losses<double>(D, std::span<const double>(plus), std::span<const double>(minus),
                                                 0.01, 1.0, RsDistribution::Gaussian);
  const VectorXd fd = test::fd_gradient([&](const VectorXd& a) { return p.val_loss(snap.omega, a); }, alpha, 1e-6);
  CHECK(test::rel_err(e.gradient_estimate, fd) <= 0.03);
}

TEST_CASE("threaded evaluation is bit-identical to serial") {
  const auto p = make_analytic(AnalyticConfig{});
  for (auto e : {EstimatorKind::RS, EstimatorKind::MGS, EstimatorKind::GLD}) {
    const auto cfg = analytic_cfg(e, 20);
    RunOptions threaded;
    threaded.threads = 3;
    check_same(run_search(p, cfg), run_search(p, cfg, threaded));
  }
}

TEST_CASE("estimator failure truncates the trajectory") {
  const auto base = make_analytic(AnalyticConfig{});
  const VectorXd a0 = base.initial_alpha();
  // every perturbed point fails
  const test::WrappedProblem p(base, [&](const VectorXd&, const VectorXd& a, double v) { return a == a0 ? v : kNaN; });
  const auto traj = run_search(p, analytic_cfg(EstimatorKind::MGS, 5));
  REQUIRE(traj.error);
  CHECK(traj.error->rfind("iteration 1:", 0) == 0);
  CHECK(traj.records.size() == 1);
}

TEST_CASE("isolated candidate failures do not stop the run") {
  const auto base = make_analytic(AnalyticConfig{});
  // losses fail on half the plane
  const test::WrappedProblem p(base, [](const VectorXd&, const VectorXd& a, double v) { return a[1] > -0.02 ? kNaN : v; });
  for (auto e : {EstimatorKind::RS, EstimatorKind::MGS, EstimatorKind::GLD}) {
    const auto traj = run_search(p, analytic_cfg(e, 30));
    CHECK_FALSE(traj.error);
    CHECK(traj.records.size() == 31);
  }
}

TEST_CASE("MGS without an alpha gradient warns and still runs") {
  const auto base = make_analytic(AnalyticConfig{});
  const test::WrappedProblem p(base, nullptr, false);
  const auto traj = run_search(p, analytic_cfg(EstimatorKind::MGS, 3));
  CHECK(traj.records.size() == 4);
  REQUIRE(traj.warnings.size() == 1);
  CHECK(traj.warnings[0].find("lambda = 1") != std::string::npos);
}

TEST_CASE("cosine decay of the outer step") {
  SearchConfig cfg;
  cfg.xi = 0.2;
  cfg.budget = 10;
  CHECK(outer_lr(cfg, 5) == 0.2);
  cfg.xi_cosine_decay = true;
  CHECK(outer_lr(cfg, 0) == 0.2);
  CHECK(std::abs(outer_lr(cfg, 5) - 0.1) <= 1e-15);
  CHECK(std::abs(outer_lr(cfg, 10)) <= 1e-15);
}

TEST_CASE("thread count from the environment") {
  ::setenv("ZOBILEVEL_THREADS", "4", 1);
  CHECK(threads_from_env() == 4);
  ::setenv("ZOBILEVEL_THREADS", "many", 1);
  CHECK(threads_from_env() == 0);
  ::unsetenv("ZOBILEVEL_THREADS");
  CHECK(threads_from_env() == 0);
}

TEST_CASE("landscape grid shapes") {
  const auto p = make_analytic(AnalyticConfig{});
  const auto base = p.initial_state();
  const auto g = landscape_grid(p, p.initial_alpha(), base, LandscapeMode::Finetuned, {10, 0.5, 0.0}, -1, 1, 0.02, 42);
  CHECK(g.values.rows() == 101);
  CHECK(g.values.cols() == 101);
  CHECK(g.coords.front() == -1.0);
  CHECK(std::abs(g.coords.back() - 1.0) <= 1e-12);
  CHECK(std::abs(g.coords[50]) <= 1e-15);
  CHECK(g.values.allFinite());
  CHECK(g.values(g.argmin_row, g.argmin_col) == g.values.minCoeff());
}

TEST_CASE("degenerate grid is the centre value") {
  const auto p = make_analytic(AnalyticConfig{});
  const auto base = p.initial_state();
  const auto g = landscape_grid(p, p.initial_alpha(), base, LandscapeMode::Finetuned, {10, 0.5, 0.0}, -1, 1, 5.0, 42);
  REQUIRE(g.values.size() == 1);
  const auto rep = solve_inner(p, base, p.initial_alpha(), {10, 0.5, 0.0});
  CHECK(g.values(0, 0) == p.val_loss(rep.omega_star, p.initial_alpha()));
  const auto f = landscape_grid(p, p.initial_alpha(), base, LandscapeMode::FirstOrder, {10, 0.5, 0.0}, -1, 1, 5.0, 42);
  CHECK(f.values(0, 0) == p.val_loss(base.omega, p.initial_alpha()));
}

TEST_CASE("both modes share the direction pair bit-exactly") {
  const auto p = make_analytic(AnalyticConfig{});
  const auto base = p.initial_state();
  const auto a = landscape_grid(p, p.initial_alpha(), base, LandscapeMode::Finetuned, {10, 0.5, 0.0}, -1, 1, 0.5, 7);
  const auto b = landscape_grid(p, p.initial_alpha(), base, LandscapeMode::FirstOrder, {10, 0.5, 0.0}, -1, 1, 0.5, 7);
  CHECK(a.v1 == b.v1);
  CHECK(a.v2 == b.v2);
  CHECK(direction_hash(a.v1, a.v2) == direction_hash(b.v1, b.v2));
  const auto c = landscape_grid(p, p.initial_alpha(), base, LandscapeMode::FirstOrder, {10, 0.5, 0.0}, -1, 1, 0.5, 8);
  CHECK(direction_hash(a.v1, a.v2) != direction_hash(c.v1, c.v2));
}

TEST_CASE("failed cells are NaN and do not win the argmin") {
  const auto base = make_analytic(AnalyticConfig{});
  const test::WrappedProblem p(base, [](const VectorXd&, const VectorXd& a, double v) { return a[0] > 0 ? kNaN : v; });
  const auto g = landscape_grid(p, base.initial_alpha(), base.initial_state(), LandscapeMode::Finetuned, {10, 0.5, 0.0},
                                -1, 1, 0.1, 42);
  CHECK(g.values.array().isNaN().any());
  CHECK(std::isfinite(g.values(g.argmin_row, g.argmin_col)));
}

TEST_CASE("threaded landscape is bit-identical") {
  const auto p = make_analytic(AnalyticConfig{});
  const auto base = p.initial_state();
  const auto a = landscape_grid(p, p.initial_alpha(), base, LandscapeMode::Finetuned, {10, 0.5, 0.0}, -1, 1, 0.1, 3, 0);
  const auto b = landscape_grid(p, p.initial_alpha(), base, LandscapeMode::Finetuned, {10, 0.5, 0.0}, -1, 1, 0.1, 3, 3);
  CHECK(landscape_text(a) == landscape_text(b));
}

TEST_CASE("trace with budget 0 stays at the origin") {
  const auto p = make_analytic(AnalyticConfig{});
  const std::vector<EstimatorKind> ests{EstimatorKind::DARTS1, EstimatorKind::MGS};
  const auto tr = trajectory_trace(p, SearchConfig{}, ests, 0);
  REQUIRE(tr.paths.size() == 2);
  for (const auto& path : tr.paths) {
    REQUIRE(path.points.size() == 1);
    CHECK(path.points[0] == std::pair<double, double>(0.0, 0.0));
  }
}

TEST_CASE("trace is deterministic and MGS/GLD end nearer the optimum than DARTS1") {
  const auto p = make_analytic(AnalyticConfig{});
  const std::vector<EstimatorKind> ests{EstimatorKind::DARTS1, EstimatorKind::RS, EstimatorKind::MGS, EstimatorKind::GLD};
  const auto a = trajectory_trace(p, SearchConfig{}, ests, 10);
  const auto b = trajectory_trace(p, SearchConfig{}, ests, 10);
  REQUIRE(a.projected_optimum);
  auto dist = [&](const EstimatorPath& path) {
    const auto [x, y] = path.points.back();
    return std::hypot(x - a.projected_optimum->first, y - a.projected_optimum->second);
  };
  for (std::size_t i = 0; i < ests.size(); ++i) {
    CHECK(a.paths[i].points == b.paths[i].points);
    CHECK(a.paths[i].points.size() == 11);
  }
  CHECK(dist(a.paths[2]) < dist(a.paths[0]));
  CHECK(dist(a.paths[3]) < dist(a.paths[0]));
}

TEST_CASE("projection recovers plane coordinates") {
  const auto [v1, v2] = landscape_directions(5, 4);
  const VectorXd origin = VectorXd::LinSpaced(4, 0, 1);
  const auto [x, y] = project(origin + 0.3 * v1 - 0.7 * v2, origin, v1, v2);
  CHECK(std::abs(x - 0.3) <= 1e-14);
  CHECK(std::abs(y + 0.7) <= 1e-14);
}

TEST_CASE("grid coordinates") {
  CHECK(grid_coordinates(-1, 1, 0.02).size() == 101);
  CHECK(grid_coordinates(0, 1, 0.25) == std::vector<double>{0, 0.25, 0.5, 0.75, 1.0});
  CHECK(grid_coordinates(-1, 1, 3) == std::vector<double>{0.0});
  CHECK_THROWS_AS(grid_coordinates(1, -1, 0.1), Error);
  CHECK_THROWS_AS(grid_coordinates(-1, 1, 0), Error);
}

}  // TEST_SUITE
