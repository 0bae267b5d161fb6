#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "zobilevel/config.hpp"
#include "zobilevel/driver.hpp"

namespace zobilevel {

/// format_double, except that every NaN prints as "nan".
std::string csv_number(double v);

/// Column names of the estimator-specific trajectory columns.
std::vector<std::string> diagnostic_columns(EstimatorKind e);

/// One header comment line, then iter,val_loss,train_loss,alpha_norm,update_norm
/// followed by the estimator's diagnostic columns (empty on row 0).
std::string trajectory_csv(const SearchTrajectory& traj, const SearchConfig& cfg);

/// iteration plus the diagnostic columns, one row per update.
std::string diagnostics_csv(const SearchTrajectory& traj);

/// SHA-1 over the little-endian bytes of v1 then v2.
std::string direction_hash(const VectorXd& v1, const VectorXd& v2);

/// Two header lines (settings, argmin) followed by the row-major matrix.
std::string landscape_text(const LandscapeGrid& grid);

/// iter,a,b,val_loss for one traced estimator.
std::string path_csv(const EstimatorPath& path);

/// Endpoint table of a trace: distances of the final alpha to the optimum,
/// both in the landscape plane and in the full space.
std::string compare_summary_csv(const TraceResult& trace, const BilevelProblem& problem);

/// Git blob id: SHA-1 of "blob <size>\0" + content.
std::string git_blob_sha1(std::string_view content);

struct ArtifactRecord {
  std::string path;
  std::string sha1;
  std::size_t bytes = 0;
};

struct RunManifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> config;
  std::string started_at;
  std::string finished_at;
  std::vector<ArtifactRecord> artifacts;
  /// Invariant checks run on the produced data.
  std::vector<std::pair<std::string, bool>> checks;
  std::optional<std::string> error;

  bool checks_passed() const;
};

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

/// Writes `content` to dir/name and records it in the manifest.
void write_artifact(const std::filesystem::path& dir, const std::string& name,
                    const std::string& content, RunManifest& manifest);

std::string manifest_json(const RunManifest& manifest);

/// True when every listed artifact exists under `dir` with its recorded hash.
bool verify_artifacts(const RunManifest& manifest, const std::filesystem::path& dir);

std::string read_file(const std::filesystem::path& path);

}  // namespace zobilevel
