#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "zobilevel/config.hpp"
#include "zobilevel/gld.hpp"
#include "zobilevel/inner_solver.hpp"
#include "zobilevel/mgs.hpp"
#include "zobilevel/problem.hpp"
#include "zobilevel/random_search.hpp"

namespace zobilevel {

struct DartsInfo {
  double grad_norm = 0.0;
};

using EstimatorDiagnostics =
    std::variant<std::monostate, RsEstimate<double>, MgsDiagnostics<double>, GldStep<double>, DartsInfo>;

struct IterationRecord {
  /// 0 is the starting point; record t holds the state after update t.
  int iteration = 0;
  VectorXd alpha;
  VectorXd u_star;
  double val_loss = 0.0;
  double train_loss = 0.0;
  double wall_seconds = 0.0;
  EstimatorDiagnostics diagnostics;
};

struct SearchTrajectory {
  EstimatorKind estimator = EstimatorKind::MGS;
  std::vector<IterationRecord> records;
  InnerState final_state;
  /// Set when the estimator failed; records stop at the last good iteration.
  std::optional<std::string> error;
  std::vector<std::string> warnings;

  const VectorXd& final_alpha() const { return records.back().alpha; }
  int iterations_run() const { return static_cast<int>(records.size()) - 1; }
};

struct RunOptions {
  /// Cap on concurrent candidate evaluations; 0 = serial.
  int threads = 0;
  /// Overrides problem.initial_alpha() when set.
  std::optional<VectorXd> alpha0;
};

/// Builds the problem selected by cfg.problem.
std::unique_ptr<BilevelProblem> make_problem(const SearchConfig& cfg);

/// Reads ZOBILEVEL_THREADS (unset or invalid = 0, serial).
int threads_from_env();

InnerSolverSettings inner_settings(const SearchConfig& cfg, int iterations);

/// Outer-loop step size at iteration t, with optional cosine decay.
double outer_lr(const SearchConfig& cfg, int t);

/// L(alpha + offset_i) = L_val(w*(alpha + offset_i), alpha + offset_i) where
/// w* comes from solve_inner on a private copy of `snapshot`. Failures
/// yield NaN for that candidate only. Results are index-ordered and identical
/// for every thread count.
std::vector<double> evaluate_candidates(const BilevelProblem& problem, const InnerState& snapshot,
                                        const VectorXd& alpha, std::span<const VectorXd> offsets,
                                        const InnerSolverSettings& settings, int threads);

/// Runs the zero-order loop (or the DARTS baseline) for cfg.budget outer
/// iterations:
///   snapshot w -> sample candidates -> M inner steps per candidate ->
///   u* = phi(candidates) -> alpha += u* -> advance live w at the new alpha.
SearchTrajectory run_search(const BilevelProblem& problem, const SearchConfig& cfg,
                            const RunOptions& options = {});

struct LandscapeGrid {
  LandscapeMode mode = LandscapeMode::Finetuned;
  int inner_iterations = 0;
  std::uint64_t seed = 0;
  double range_min = -1.0;
  double range_max = 1.0;
  double step = 0.02;
  std::vector<double> coords;
  /// values(i, j) = L at alpha_center + coords[i] v1 + coords[j] v2
  MatrixXd values;
  VectorXd center;
  VectorXd v1;
  VectorXd v2;
  Index argmin_row = 0;
  Index argmin_col = 0;

  double argmin_a() const { return coords[static_cast<std::size_t>(argmin_row)]; }
  double argmin_b() const { return coords[static_cast<std::size_t>(argmin_col)]; }
};

/// Grid coordinates lo, lo + step, ... <= hi; a single midpoint when step
/// exceeds the range.
std::vector<double> grid_coordinates(double lo, double hi, double step);

/// The direction pair shared by every landscape and trace for a seed.
std::pair<VectorXd, VectorXd> landscape_directions(std::uint64_t seed, Index d);

/// Evaluates L_val over a 2-D slice through alpha_center. FirstOrder keeps w
/// frozen at `base`; Finetuned runs `inner_iterations` steps from `base` at
/// every grid point. Failed cells are NaN.
LandscapeGrid landscape_grid(const BilevelProblem& problem, const VectorXd& alpha_center,
                             const InnerState& base, LandscapeMode mode,
                             const InnerSolverSettings& settings, double range_min,
                             double range_max, double step, std::uint64_t seed, int threads = 0);

struct EstimatorPath {
  EstimatorKind estimator;
  /// (a, b) coordinates of alpha_t - alpha_0 in the landscape basis.
  std::vector<std::pair<double, double>> points;
  SearchTrajectory trajectory;
};

struct TraceResult {
  VectorXd origin;
  VectorXd v1;
  VectorXd v2;
  std::vector<EstimatorPath> paths;
  /// Projection of the known optimum, when the problem has one.
  std::optional<std::pair<double, double>> projected_optimum;
};

/// Runs every estimator from the same alpha_0 and seed and projects the
/// iterates onto the landscape plane of cfg.seed.
TraceResult trajectory_trace(const BilevelProblem& problem, const SearchConfig& cfg,
                             std::span<const EstimatorKind> estimators, int budget,
                             const RunOptions& options = {});

std::pair<double, double> project(const VectorXd& alpha, const VectorXd& origin, const VectorXd& v1,
                                  const VectorXd& v2);

/// Trains w from problem.initial_state() with alpha fixed and returns
/// L_val at the trained weights.
double evaluate_architecture(const BilevelProblem& problem, const VectorXd& alpha,
                             const InnerSolverSettings& settings);

}  // namespace zobilevel
