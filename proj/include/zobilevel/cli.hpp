#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>

#include "zobilevel/config.hpp"
#include "zobilevel/io.hpp"

namespace zobilevel {

/// Runs the search; writes trajectory.csv, diagnostics.csv and manifest.json.
/// A failed estimator still flushes the partial trajectory and records the
/// error in the manifest.
RunManifest cmd_search(const SearchConfig& cfg, const std::filesystem::path& out_dir, int threads);

/// Writes landscape_<mode>.csv for the slice through alpha_0 and manifest.json.
RunManifest cmd_landscape(const SearchConfig& cfg, const std::filesystem::path& out_dir,
                          LandscapeMode mode, int m, int threads);

/// Traces every estimator in cfg.estimators (at least two) and writes one
/// path_<name>.csv each, compare_summary.csv, the shared finetuned landscape
/// and manifest.json.
RunManifest cmd_compare(const SearchConfig& cfg, const std::filesystem::path& out_dir, int threads);

struct DiagnoseSummary {
  int rows = 0;
  double ess_min = 0.0;
  double ess_mean = 0.0;
  double ess_max = 0.0;
  double esr_min = 0.0;
  double esr_mean = 0.0;
  double esr_max = 0.0;
  /// Rows with 0 < esr <= 1.
  int esr_in_bounds = 0;
};

/// ESS/ESR summary of a trajectory or diagnostics CSV with ess and esr
/// columns.
DiagnoseSummary cmd_diagnose(const std::filesystem::path& csv);

std::string summary_csv(const DiagnoseSummary& s);

/// Entry point of the zobilevel executable. Exit codes: 0 success, 1 runtime
/// failure or failed check, 2 usage or configuration error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace zobilevel
