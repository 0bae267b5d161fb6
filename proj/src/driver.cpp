#include "zobilevel/driver.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <numbers>
#include <thread>

#include "zobilevel/analytic.hpp"
#include "zobilevel/sampling.hpp"
#include "zobilevel/supernet.hpp"

namespace zobilevel {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Strided fan-out; `fn` must not throw. Each index is handled by exactly one
/// worker and writes only its own slot, so the output does not depend on the
/// worker count.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  const std::size_t workers =
      threads <= 1 ? 1 : std::min(count, static_cast<std::size_t>(threads));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&fn, w, workers, count] {
      for (std::size_t i = w; i < count; i += workers) fn(i);
    });
}

struct IterationContext {
  int t;
  const VectorXd& alpha;
  const InnerState& live;
  double current_loss;
};

struct RuleOutput {
  VectorXd u_star;
  EstimatorDiagnostics diagnostics;
};

/// Candidate generation plus the phi(.) reduction of one estimator.
class CandidateRule {
 public:
  virtual ~CandidateRule() = default;
  virtual std::vector<VectorXd> propose(const IterationContext& ctx) = 0;
  virtual RuleOutput combine(const IterationContext& ctx, std::span<const double> losses) = 0;
};

std::uint64_t stream_id(int t, int per_iteration, std::size_t i) {
  return static_cast<std::uint64_t>(t) * static_cast<std::uint64_t>(per_iteration) + i;
}

class RsRule final : public CandidateRule {
 public:
  RsRule(const SearchConfig& cfg, Index d) : cfg_(cfg), d_(d) {}

  std::vector<VectorXd> propose(const IterationContext& ctx) override {
    directions_.resize(d_, cfg_.n);
    std::vector<VectorXd> offsets;
    offsets.reserve(2 * static_cast<std::size_t>(cfg_.n));
    for (int i = 0; i < cfg_.n; ++i) {
      Rng rng = Rng::split(cfg_.seed, stream_id(ctx.t, cfg_.n, static_cast<std::size_t>(i)));
      directions_.col(i) = sample_direction<double>(rng, d_, cfg_.rs_distribution);
      offsets.emplace_back(cfg_.mu * directions_.col(i));
      offsets.emplace_back(-cfg_.mu * directions_.col(i));
    }
    return offsets;
  }

  RuleOutput combine(const IterationContext& ctx, std::span<const double> losses) override {
    std::vector<double> plus, minus;
    for (std::size_t i = 0; i < losses.size(); i += 2) {
      plus.push_back(losses[i]);
      minus.push_back(losses[i + 1]);
    }
    auto est = multi_point_from_losses<double>(directions_, std::span<const double>(plus),
                                               std::span<const double>(minus), cfg_.mu,
                                               phi_factor<double>(cfg_.rs_distribution, d_),
                                               cfg_.rs_distribution);
    VectorXd u = rs_update(est, outer_lr(cfg_, ctx.t)).u;
    return {std::move(u), std::move(est)};
  }

 private:
  const SearchConfig& cfg_;
  Index d_;
  MatrixXd directions_;
};

class MgsRule final : public CandidateRule {
 public:
  MgsRule(const SearchConfig& cfg, const BilevelProblem& problem, std::vector<std::string>& warnings)
      : cfg_(cfg), problem_(problem) {
    if (!problem.has_alpha_gradient())
      warnings.emplace_back("mgs: problem has no alpha gradient, proposal uses lambda = 1");
  }

  std::vector<VectorXd> propose(const IterationContext& ctx) override {
    const Index d = ctx.alpha.size();
    if (problem_.has_alpha_gradient())
      q_.emplace(problem_.grad_alpha_val(ctx.live.omega, ctx.alpha), cfg_.sigma, cfg_.lambda);
    else
      q_.emplace(d, cfg_.sigma);
    candidates_.assign(static_cast<std::size_t>(cfg_.n), {});
    std::vector<VectorXd> offsets;
    offsets.reserve(candidates_.size());
    for (std::size_t i = 0; i < candidates_.size(); ++i) {
      Rng rng = Rng::split(cfg_.seed, stream_id(ctx.t, cfg_.n, i));
      candidates_[i].u = q_->sample(rng);
      candidates_[i].log_q = q_->log_density(candidates_[i].u.u);
      offsets.push_back(candidates_[i].u.u);
    }
    return offsets;
  }

  RuleOutput combine(const IterationContext& ctx, std::span<const double> losses) override {
    for (std::size_t i = 0; i < candidates_.size(); ++i) candidates_[i].val_loss_at_u = losses[i];
    auto upd = mgs_update<double>(std::span<MgsCandidate<double>>(candidates_), ctx.current_loss,
                                  cfg_.tau, cfg_.mgs_support_radius);
    return {std::move(upd.u_star.u), std::move(upd.diagnostics)};
  }

 private:
  const SearchConfig& cfg_;
  const BilevelProblem& problem_;
  std::optional<GaussianMixtureProposal<double>> q_;
  std::vector<MgsCandidate<double>> candidates_;
};

class GldRule final : public CandidateRule {
 public:
  GldRule(const SearchConfig& cfg, Index d)
      : cfg_(cfg), d_(d), radii_(gld_radii<double>(cfg.gld_r, cfg.gld_R)) {}

  std::vector<VectorXd> propose(const IterationContext& ctx) override {
    const int per_iteration = static_cast<int>(radii_.size()) * cfg_.samples_per_radius;
    candidates_.clear();
    std::vector<VectorXd> offsets;
    std::size_t j = 0;
    for (double rad : radii_)
      for (int s = 0; s < cfg_.samples_per_radius; ++s, ++j) {
        Rng rng = Rng::split(cfg_.seed, stream_id(ctx.t, per_iteration, j));
        candidates_.push_back(sample_sphere<double>(rng, d_, rad));
        offsets.push_back(candidates_.back().u);
      }
    return offsets;
  }

  RuleOutput combine(const IterationContext& ctx, std::span<const double> losses) override {
    auto res = gld_select<double>(ctx.current_loss,
                                  std::span<const Perturbation<double>>(candidates_), losses,
                                  radii_);
    return {std::move(res.u_star.u), std::move(res.step)};
  }

 private:
  const SearchConfig& cfg_;
  Index d_;
  std::vector<double> radii_;
  std::vector<Perturbation<double>> candidates_;
};

std::unique_ptr<CandidateRule> make_rule(const SearchConfig& cfg, const BilevelProblem& problem,
                                         std::vector<std::string>& warnings) {
  switch (cfg.estimator) {
    case EstimatorKind::RS: return std::make_unique<RsRule>(cfg, problem.alpha_dim());
    case EstimatorKind::MGS: return std::make_unique<MgsRule>(cfg, problem, warnings);
    case EstimatorKind::GLD: return std::make_unique<GldRule>(cfg, problem.alpha_dim());
    case EstimatorKind::DARTS1:
    case EstimatorKind::DARTS2: return nullptr;
  }
  return nullptr;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::unique_ptr<BilevelProblem> make_problem(const SearchConfig& cfg) {
  if (cfg.problem == ProblemKind::Analytic)
    return std::make_unique<AnalyticQuadraticProblem>(make_analytic(cfg.analytic));
  return std::make_unique<ToySupernet>(cfg.supernet);
}

int threads_from_env() {
  const char* raw = std::getenv("ZOBILEVEL_THREADS");
  if (raw == nullptr) return 0;
  int v = 0;
  const char* end = raw + std::strlen(raw);
  const auto [ptr, ec] = std::from_chars(raw, end, v);
  if (ec != std::errc() || ptr != end || v < 0) return 0;
  return v;
}

InnerSolverSettings inner_settings(const SearchConfig& cfg, int iterations) {
  return {iterations, cfg.inner_lr, cfg.inner_momentum, cfg.inner_grad_clip};
}

double outer_lr(const SearchConfig& cfg, int t) {
  if (!cfg.xi_cosine_decay || cfg.budget <= 0) return cfg.xi;
  return cfg.xi * 0.5 *
         (1.0 + std::cos(std::numbers::pi * static_cast<double>(t) / static_cast<double>(cfg.budget)));
}

std::vector<double> evaluate_candidates(const BilevelProblem& problem, const InnerState& snapshot,
                                        const VectorXd& alpha, std::span<const VectorXd> offsets,
                                        const InnerSolverSettings& settings, int threads) {
  std::vector<double> losses(offsets.size(), kNaN);
  parallel_for(offsets.size(), threads, [&](std::size_t i) {
    try {
      const VectorXd probe = alpha + offsets[i];
      const auto rep = solve_inner(problem, snapshot, probe, settings);
      const double l = problem.val_loss(rep.omega_star, probe);
      losses[i] = std::isfinite(l) ? l : kNaN;
    } catch (const Error&) {
      losses[i] = kNaN;
    }
  });
  return losses;
}

SearchTrajectory run_search(const BilevelProblem& problem, const SearchConfig& cfg,
                            const RunOptions& options) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  SearchTrajectory traj;
  traj.estimator = cfg.estimator;

  VectorXd alpha = options.alpha0 ? *options.alpha0 : problem.initial_alpha();
  if (alpha.size() != problem.alpha_dim()) throw Error("run_search: alpha0 has the wrong dimension");
  const auto candidate_settings = inner_settings(cfg, cfg.m);
  const auto post_settings = inner_settings(cfg, cfg.effective_post_update_steps());

  // bring w close to w*(alpha_0) so record 0 is comparable to the rest
  InnerState live = problem.initial_state();
  advance_inner(problem, live, alpha, post_settings);

  IterationRecord first;
  first.alpha = alpha;
  first.u_star = VectorXd::Zero(alpha.size());
  first.val_loss = problem.val_loss(live.omega, alpha);
  first.train_loss = problem.train_loss(live.omega, alpha);
  first.wall_seconds = seconds_since(start);
  if (!std::isfinite(first.val_loss)) throw NumericError("run_search: non-finite loss at alpha_0");
  traj.records.push_back(std::move(first));

  auto rule = make_rule(cfg, problem, traj.warnings);
  const bool is_darts = cfg.estimator == EstimatorKind::DARTS1 || cfg.estimator == EstimatorKind::DARTS2;

  for (int t = 0; t < cfg.budget; ++t) {
    try {
      const InnerState snapshot = live;
      const IterationContext ctx{t, alpha, snapshot, traj.records.back().val_loss};
      RuleOutput step;
      if (is_darts) {
        const int order = cfg.estimator == EstimatorKind::DARTS1 ? 1 : 2;
        const VectorXd g = darts_grad(problem, snapshot.omega, alpha, order, cfg.inner_lr, cfg.hvp_scale);
        if (!g.allFinite()) throw NumericError("darts: non-finite architecture gradient");
        step.u_star = -outer_lr(cfg, t) * g;
        step.diagnostics = DartsInfo{g.norm()};
      } else {
        const auto offsets = rule->propose(ctx);
        const auto losses = evaluate_candidates(problem, snapshot, alpha, offsets,
                                                candidate_settings, options.threads);
        step = rule->combine(ctx, losses);
      }

      VectorXd next = alpha + step.u_star;
      if (!next.allFinite()) throw NumericError("non-finite architecture update");

      InnerState advanced = snapshot;
      if (cfg.estimator == EstimatorKind::GLD) {
        // w is the accepted candidate's own w, so the recorded loss is the
        // one the argmin compared; on a stay w is left alone.
        if (!std::get<GldStep<double>>(step.diagnostics).stayed())
          advanced = solve_inner(problem, snapshot, next, candidate_settings).final_state;
      } else {
        advance_inner(problem, advanced, next, post_settings);
      }

      IterationRecord rec;
      rec.iteration = t + 1;
      rec.val_loss = problem.val_loss(advanced.omega, next);
      rec.train_loss = problem.train_loss(advanced.omega, next);
      if (!std::isfinite(rec.val_loss)) throw NumericError("non-finite validation loss after update");
      rec.alpha = next;
      rec.u_star = std::move(step.u_star);
      rec.diagnostics = std::move(step.diagnostics);
      rec.wall_seconds = seconds_since(start);

      alpha = std::move(next);
      live = std::move(advanced);
      traj.records.push_back(std::move(rec));
    } catch (const Error& e) {
      traj.error = "iteration " + std::to_string(t + 1) + ": " + e.what();
      break;
    }
  }
  traj.final_state = std::move(live);
  return traj;
}

std::vector<double> grid_coordinates(double lo, double hi, double step) {
  if (!(step > 0.0)) throw Error("landscape: step must be positive");
  if (!(lo <= hi)) throw Error("landscape: range bounds must be ordered");
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  if (count == 1) return {0.5 * (lo + hi)};
  std::vector<double> coords(count);
  for (std::size_t i = 0; i < count; ++i) coords[i] = lo + static_cast<double>(i) * step;
  return coords;
}

std::pair<VectorXd, VectorXd> landscape_directions(std::uint64_t seed, Index d) {
  Rng rng = Rng::split(seed, streams::kLandscapeDirections);
  return orthonormal_pair<double>(rng, d);
}

LandscapeGrid landscape_grid(const BilevelProblem& problem, const VectorXd& alpha_center,
                             const InnerState& base, LandscapeMode mode,
                             const InnerSolverSettings& settings, double range_min,
                             double range_max, double step, std::uint64_t seed, int threads) {
  if (alpha_center.size() != problem.alpha_dim())
    throw Error("landscape: center has the wrong dimension");
  LandscapeGrid grid;
  grid.mode = mode;
  grid.inner_iterations = mode == LandscapeMode::FirstOrder ? 0 : settings.iterations;
  grid.seed = seed;
  grid.range_min = range_min;
  grid.range_max = range_max;
  grid.step = step;
  grid.coords = grid_coordinates(range_min, range_max, step);
  grid.center = alpha_center;
  std::tie(grid.v1, grid.v2) = landscape_directions(seed, alpha_center.size());

  const auto n = static_cast<Index>(grid.coords.size());
  grid.values = MatrixXd::Constant(n, n, kNaN);
  InnerSolverSettings tuned = settings;
  tuned.iterations = grid.inner_iterations;
  parallel_for(static_cast<std::size_t>(n * n), threads, [&](std::size_t k) {
    const Index i = static_cast<Index>(k) / n;
    const Index j = static_cast<Index>(k) % n;
    try {
      const VectorXd probe = alpha_center + grid.coords[static_cast<std::size_t>(i)] * grid.v1 +
                             grid.coords[static_cast<std::size_t>(j)] * grid.v2;
      double l;
      if (mode == LandscapeMode::FirstOrder) {
        l = problem.val_loss(base.omega, probe);
      } else {
        const auto rep = solve_inner(problem, base, probe, tuned);
        l = problem.val_loss(rep.omega_star, probe);
      }
      if (std::isfinite(l)) grid.values(i, j) = l;
    } catch (const Error&) {
    }
  });

  double best = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (grid.values(i, j) < best) {
        best = grid.values(i, j);
        grid.argmin_row = i;
        grid.argmin_col = j;
      }
  return grid;
}

std::pair<double, double> project(const VectorXd& alpha, const VectorXd& origin, const VectorXd& v1,
                                  const VectorXd& v2) {
  const VectorXd delta = alpha - origin;
  return {v1.dot(delta), v2.dot(delta)};
}

TraceResult trajectory_trace(const BilevelProblem& problem, const SearchConfig& cfg,
                             std::span<const EstimatorKind> estimators, int budget,
                             const RunOptions& options) {
  TraceResult out;
  out.origin = options.alpha0 ? *options.alpha0 : problem.initial_alpha();
  std::tie(out.v1, out.v2) = landscape_directions(cfg.seed, out.origin.size());
  if (const auto opt = problem.known_optimum())
    out.projected_optimum = project(*opt, out.origin, out.v1, out.v2);

  RunOptions run_opts = options;
  run_opts.alpha0 = out.origin;
  for (EstimatorKind e : estimators) {
    SearchConfig c = cfg;
    c.estimator = e;
    c.budget = budget;
    EstimatorPath path{e, {}, run_search(problem, c, run_opts)};
    for (const auto& rec : path.trajectory.records)
      path.points.push_back(project(rec.alpha, out.origin, out.v1, out.v2));
    out.paths.push_back(std::move(path));
  }
  return out;
}

double evaluate_architecture(const BilevelProblem& problem, const VectorXd& alpha,
                             const InnerSolverSettings& settings) {
  InnerState state = problem.initial_state();
  advance_inner(problem, state, alpha, settings);
  return problem.val_loss(state.omega, alpha);
}

}  // namespace zobilevel
