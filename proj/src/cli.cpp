#include "zobilevel/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

namespace zobilevel {

namespace fs = std::filesystem;

namespace {

RunManifest start_manifest(const std::string& command, const SearchConfig& cfg) {
  RunManifest m;
  m.command = command;
  m.config = cfg.entries();
  m.started_at = utc_timestamp();
  return m;
}

void finish(RunManifest& m, const fs::path& out_dir) {
  m.checks.emplace_back("artifact_hashes", verify_artifacts(m, out_dir));
  m.finished_at = utc_timestamp();
  const std::string text = manifest_json(m);
  std::ofstream out(out_dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + (out_dir / "manifest.json").string());
  out << text;
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error("cannot create output directory " + dir.string());
}

bool algebra_holds(const SearchTrajectory& traj) {
  for (std::size_t t = 1; t < traj.records.size(); ++t)
    if (!(traj.records[t].alpha == traj.records[t - 1].alpha + traj.records[t].u_star)) return false;
  return true;
}

bool non_increasing(const SearchTrajectory& traj) {
  for (std::size_t t = 1; t < traj.records.size(); ++t)
    if (traj.records[t].val_loss > traj.records[t - 1].val_loss) return false;
  return true;
}

bool esr_bounded(const SearchTrajectory& traj, int n) {
  for (std::size_t t = 1; t < traj.records.size(); ++t) {
    const auto* d = std::get_if<MgsDiagnostics<double>>(&traj.records[t].diagnostics);
    if (d == nullptr) return false;
    if (!(d->ess >= 1.0 && d->ess <= n && d->esr > 0.0 && d->esr <= 1.0)) return false;
  }
  return true;
}

InnerState warm_state(const BilevelProblem& problem, const SearchConfig& cfg, const VectorXd& alpha) {
  InnerState s = problem.initial_state();
  advance_inner(problem, s, alpha, inner_settings(cfg, cfg.effective_post_update_steps()));
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<double> parse_number(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

RunManifest cmd_search(const SearchConfig& cfg, const fs::path& out_dir, int threads) {
  cfg.validate();
  prepare_dir(out_dir);
  auto manifest = start_manifest("search", cfg);
  const auto problem = make_problem(cfg);
  RunOptions opts;
  opts.threads = threads;
  const auto traj = run_search(*problem, cfg, opts);

  write_artifact(out_dir, "trajectory.csv", trajectory_csv(traj, cfg), manifest);
  write_artifact(out_dir, "diagnostics.csv", diagnostics_csv(traj), manifest);
  manifest.error = traj.error;
  if (!traj.error)
    manifest.checks.emplace_back("row_count",
                                 traj.records.size() == static_cast<std::size_t>(cfg.budget) + 1);
  manifest.checks.emplace_back("trajectory_algebra", algebra_holds(traj));
  if (cfg.estimator == EstimatorKind::GLD)
    manifest.checks.emplace_back("val_loss_non_increasing", non_increasing(traj));
  if (cfg.estimator == EstimatorKind::MGS)
    manifest.checks.emplace_back("esr_bounds", esr_bounded(traj, cfg.n));
  finish(manifest, out_dir);
  return manifest;
}

RunManifest cmd_landscape(const SearchConfig& cfg, const fs::path& out_dir, LandscapeMode mode, int m,
                          int threads) {
  cfg.validate();
  if (m < 0) throw ConfigError("m", "m must be >= 0");
  prepare_dir(out_dir);
  auto manifest = start_manifest("landscape", cfg);
  manifest.config.emplace_back("landscape_mode", to_string(mode));
  manifest.config.emplace_back("landscape_inner_iterations", std::to_string(m));
  const auto problem = make_problem(cfg);
  const VectorXd center = problem->initial_alpha();
  const auto grid = landscape_grid(*problem, center, warm_state(*problem, cfg, center), mode,
                                   inner_settings(cfg, m), cfg.landscape_min, cfg.landscape_max,
                                   cfg.landscape_step, cfg.seed, threads);
  write_artifact(out_dir, "landscape_" + to_string(mode) + ".csv", landscape_text(grid), manifest);
  const auto n = grid.coords.size();
  manifest.checks.emplace_back("grid_shape", static_cast<std::size_t>(grid.values.rows()) == n &&
                                                 static_cast<std::size_t>(grid.values.cols()) == n);
  manifest.checks.emplace_back("argmin_finite",
                               std::isfinite(grid.values(grid.argmin_row, grid.argmin_col)));
  finish(manifest, out_dir);
  return manifest;
}

RunManifest cmd_compare(const SearchConfig& cfg, const fs::path& out_dir, int threads) {
  cfg.validate();
  if (cfg.estimators.size() < 2)
    throw ConfigError("estimators", "compare needs at least two entries in 'estimators'");
  prepare_dir(out_dir);
  auto manifest = start_manifest("compare", cfg);
  const auto problem = make_problem(cfg);
  RunOptions opts;
  opts.threads = threads;
  const auto trace = trajectory_trace(*problem, cfg, cfg.estimators, cfg.budget, opts);

  bool shared_start = true;
  for (const auto& p : trace.paths) {
    write_artifact(out_dir, "path_" + to_string(p.estimator) + ".csv", path_csv(p), manifest);
    shared_start = shared_start && p.points.front() == std::make_pair(0.0, 0.0);
    if (p.trajectory.error && !manifest.error)
      manifest.error = to_string(p.estimator) + ": " + *p.trajectory.error;
  }
  write_artifact(out_dir, "compare_summary.csv", compare_summary_csv(trace, *problem), manifest);
  const auto grid = landscape_grid(*problem, trace.origin, warm_state(*problem, cfg, trace.origin),
                                   LandscapeMode::Finetuned, inner_settings(cfg, cfg.m),
                                   cfg.landscape_min, cfg.landscape_max, cfg.landscape_step,
                                   cfg.seed, threads);
  write_artifact(out_dir, "landscape_finetuned.csv", landscape_text(grid), manifest);
  manifest.checks.emplace_back("shared_initial_point", shared_start);
  manifest.checks.emplace_back("shared_directions", grid.v1 == trace.v1 && grid.v2 == trace.v2);
  finish(manifest, out_dir);
  return manifest;
}

DiagnoseSummary cmd_diagnose(const fs::path& csv) {
  std::istringstream in(read_file(csv));
  std::string line;
  std::optional<std::size_t> ess_col, esr_col;
  DiagnoseSummary s;
  s.ess_min = s.esr_min = std::numeric_limits<double>::infinity();
  s.ess_max = s.esr_max = -std::numeric_limits<double>::infinity();
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split_csv_line(line);
    if (!header) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i] == "ess") ess_col = i;
        if (cells[i] == "esr") esr_col = i;
      }
      if (!ess_col || !esr_col) throw Error("diagnose: " + csv.string() + " has no ess/esr columns");
      header = true;
      continue;
    }
    if (cells.size() <= std::max(*ess_col, *esr_col)) continue;
    const auto ess = parse_number(cells[*ess_col]);
    const auto esr = parse_number(cells[*esr_col]);
    if (!ess || !esr) continue;  // the initial record carries no weights
    ++s.rows;
    s.ess_min = std::min(s.ess_min, *ess);
    s.ess_max = std::max(s.ess_max, *ess);
    s.ess_mean += *ess;
    s.esr_min = std::min(s.esr_min, *esr);
    s.esr_max = std::max(s.esr_max, *esr);
    s.esr_mean += *esr;
    if (*esr > 0.0 && *esr <= 1.0) ++s.esr_in_bounds;
  }
  if (!header) throw Error("diagnose: " + csv.string() + " is empty");
  if (s.rows == 0) throw Error("diagnose: no weighted rows in " + csv.string());
  s.ess_mean /= s.rows;
  s.esr_mean /= s.rows;
  return s;
}

std::string summary_csv(const DiagnoseSummary& s) {
  std::ostringstream os;
  os << "rows,ess_min,ess_mean,ess_max,esr_min,esr_mean,esr_max,esr_in_bounds\n"
     << s.rows << ',' << csv_number(s.ess_min) << ',' << csv_number(s.ess_mean) << ','
     << csv_number(s.ess_max) << ',' << csv_number(s.esr_min) << ',' << csv_number(s.esr_mean) << ','
     << csv_number(s.esr_max) << ',' << s.esr_in_bounds << '\n';
  return os.str();
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Zero-order bi-level architecture search experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir, estimator, mode, input;
  std::optional<std::uint64_t> seed;
  std::optional<int> budget, m;

  auto common = [&](CLI::App* sub, bool needs_out) {
    sub->add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
    auto* o = sub->add_option("--out", out_dir, "output directory");
    if (needs_out) o->required();
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--estimator", estimator, "override the estimator (compare: comma list)");
    sub->add_option("--budget", budget, "override the outer iteration budget");
  };
  auto* search = app.add_subcommand("search", "run one search and write its trajectory");
  common(search, true);
  auto* landscape = app.add_subcommand("landscape", "evaluate the loss on a 2-D slice of alpha");
  common(landscape, true);
  landscape->add_option("--mode", mode, "first_order or finetuned (default: config)");
  landscape->add_option("--m", m, "inner iterations per grid point (default: config m)");
  auto* compare = app.add_subcommand("compare", "trace several estimators from one starting point");
  common(compare, true);
  auto* diagnose = app.add_subcommand("diagnose", "summarize ESS/ESR columns of a CSV");
  common(diagnose, false);
  diagnose->add_option("--input", input, "trajectory or diagnostics CSV")->required()->check(
      CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    SearchConfig cfg = config_path.empty() ? SearchConfig{} : load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (budget) cfg.set("budget", std::to_string(*budget));
    if (!estimator.empty()) cfg.set(compare->parsed() ? "estimators" : "estimator", estimator);
    cfg.validate();
    const int threads = threads_from_env();

    RunManifest manifest;
    if (search->parsed()) {
      manifest = cmd_search(cfg, out_dir, threads);
    } else if (landscape->parsed()) {
      const LandscapeMode lm = mode.empty() ? cfg.landscape_mode : parse_landscape_mode(mode);
      manifest = cmd_landscape(cfg, out_dir, lm, m.value_or(cfg.m), threads);
    } else if (compare->parsed()) {
      manifest = cmd_compare(cfg, out_dir, threads);
    } else {
      const auto s = cmd_diagnose(input);
      const std::string text = summary_csv(s);
      out << text;
      if (!out_dir.empty()) {
        prepare_dir(out_dir);
        manifest = start_manifest("diagnose", cfg);
        write_artifact(out_dir, "diagnose_summary.csv", text, manifest);
        manifest.checks.emplace_back("esr_bounds", s.esr_in_bounds == s.rows);
        finish(manifest, out_dir);
      }
      return s.esr_in_bounds == s.rows && manifest.checks_passed() ? 0 : 1;
    }

    for (const auto& a : manifest.artifacts) out << a.sha1 << "  " << a.path << '\n';
    if (manifest.error) {
      err << "error: " << *manifest.error << '\n';
      return 1;
    }
    for (const auto& [name, ok] : manifest.checks)
      if (!ok) err << "check failed: " << name << '\n';
    return manifest.checks_passed() ? 0 : 1;
  } catch (const ConfigError& e) {
    err << "config error [" << e.key() << "]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace zobilevel
