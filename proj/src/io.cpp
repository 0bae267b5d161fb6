#include "zobilevel/io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <sstream>

namespace zobilevel {

namespace {

std::string hex(const unsigned char* data, unsigned len) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(digits[data[i] >> 4]);
    out.push_back(digits[data[i] & 0xF]);
  }
  return out;
}

std::string sha1_hex(std::string_view a, std::string_view b = {}) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw Error("sha1: out of memory");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, a.data(), a.size()) == 1 &&
                  EVP_DigestUpdate(ctx, b.data(), b.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, md, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw Error("sha1: digest failed");
  return hex(md, len);
}

void append_le(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>(bits & 0xFF));
    bits >>= 8;
  }
}

struct DiagnosticCells {
  void operator()(const std::monostate&) {}
  void operator()(const RsEstimate<double>& e) {
    cells = {std::to_string(e.samples_used), csv_number(e.gradient_estimate.norm())};
  }
  void operator()(const MgsDiagnostics<double>& d) {
    cells = {csv_number(d.ess), csv_number(d.esr), csv_number(d.max_weight), csv_number(d.min_weight)};
  }
  void operator()(const GldStep<double>& s) {
    cells = {std::to_string(s.chosen), csv_number(s.chosen_radius), std::to_string(s.discarded)};
  }
  void operator()(const DartsInfo& d) { cells = {csv_number(d.grad_norm)}; }

  std::vector<std::string> cells;
};

std::vector<std::string> diagnostic_cells(const IterationRecord& rec, std::size_t width) {
  DiagnosticCells v;
  std::visit(v, rec.diagnostics);
  if (v.cells.empty()) v.cells.assign(width, "");
  return v.cells;
}

void join(std::ostringstream& os, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) os << ',';
    os << cells[i];
  }
}

}  // namespace

std::string csv_number(double v) { return std::isnan(v) ? "nan" : format_double(v); }

std::vector<std::string> diagnostic_columns(EstimatorKind e) {
  switch (e) {
    case EstimatorKind::RS: return {"samples_used", "estimate_norm"};
    case EstimatorKind::MGS: return {"ess", "esr", "max_weight", "min_weight"};
    case EstimatorKind::GLD: return {"chosen", "chosen_radius", "discarded"};
    case EstimatorKind::DARTS1:
    case EstimatorKind::DARTS2: return {"grad_norm"};
  }
  return {};
}

std::string trajectory_csv(const SearchTrajectory& traj, const SearchConfig& cfg) {
  const auto extra = diagnostic_columns(traj.estimator);
  std::ostringstream os;
  os << "# trajectory estimator=" << to_string(traj.estimator) << " problem=" << to_string(cfg.problem)
     << " seed=" << cfg.seed << " n=" << cfg.n << " m=" << cfg.m << " budget=" << cfg.budget
     << " rows=" << traj.records.size() << '\n';
  std::vector<std::string> head{"iter", "val_loss", "train_loss", "alpha_norm", "update_norm"};
  head.insert(head.end(), extra.begin(), extra.end());
  join(os, head);
  os << '\n';
  for (const auto& rec : traj.records) {
    std::vector<std::string> row{std::to_string(rec.iteration), csv_number(rec.val_loss),
                                 csv_number(rec.train_loss), csv_number(rec.alpha.norm()),
                                 csv_number(rec.u_star.norm())};
    const auto cells = diagnostic_cells(rec, extra.size());
    row.insert(row.end(), cells.begin(), cells.end());
    join(os, row);
    os << '\n';
  }
  return os.str();
}

std::string diagnostics_csv(const SearchTrajectory& traj) {
  const auto extra = diagnostic_columns(traj.estimator);
  std::ostringstream os;
  std::vector<std::string> head{"iteration"};
  head.insert(head.end(), extra.begin(), extra.end());
  join(os, head);
  os << '\n';
  for (std::size_t t = 1; t < traj.records.size(); ++t) {
    std::vector<std::string> row{std::to_string(traj.records[t].iteration)};
    const auto cells = diagnostic_cells(traj.records[t], extra.size());
    row.insert(row.end(), cells.begin(), cells.end());
    join(os, row);
    os << '\n';
  }
  return os.str();
}

std::string direction_hash(const VectorXd& v1, const VectorXd& v2) {
  std::string bytes;
  bytes.reserve(static_cast<std::size_t>(v1.size() + v2.size()) * 8);
  for (Index i = 0; i < v1.size(); ++i) append_le(bytes, v1[i]);
  for (Index i = 0; i < v2.size(); ++i) append_le(bytes, v2[i]);
  return sha1_hex(bytes);
}

std::string landscape_text(const LandscapeGrid& grid) {
  std::ostringstream os;
  const auto n = grid.values.rows();
  os << "# landscape seed=" << grid.seed << " mode=" << to_string(grid.mode)
     << " inner_iterations=" << grid.inner_iterations << " range_min=" << csv_number(grid.range_min)
     << " range_max=" << csv_number(grid.range_max) << " step=" << csv_number(grid.step)
     << " rows=" << n << " cols=" << grid.values.cols()
     << " directions=" << direction_hash(grid.v1, grid.v2) << '\n';
  os << "# argmin row=" << grid.argmin_row << " col=" << grid.argmin_col
     << " a=" << csv_number(grid.argmin_a()) << " b=" << csv_number(grid.argmin_b())
     << " value=" << csv_number(grid.values(grid.argmin_row, grid.argmin_col)) << '\n';
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < grid.values.cols(); ++j) {
      if (j) os << ',';
      os << csv_number(grid.values(i, j));
    }
    os << '\n';
  }
  return os.str();
}

std::string path_csv(const EstimatorPath& path) {
  std::ostringstream os;
  os << "# path estimator=" << to_string(path.estimator) << '\n';
  os << "iter,a,b,val_loss\n";
  for (std::size_t t = 0; t < path.points.size(); ++t) {
    const auto& rec = path.trajectory.records[t];
    os << rec.iteration << ',' << csv_number(path.points[t].first) << ','
       << csv_number(path.points[t].second) << ',' << csv_number(rec.val_loss) << '\n';
  }
  return os.str();
}

std::string compare_summary_csv(const TraceResult& trace, const BilevelProblem& problem) {
  const auto opt = problem.known_optimum();
  std::ostringstream os;
  os << "estimator,final_a,final_b,plane_distance,distance,final_val_loss\n";
  for (const auto& p : trace.paths) {
    const auto [a, b] = p.points.back();
    os << to_string(p.estimator) << ',' << csv_number(a) << ',' << csv_number(b) << ',';
    if (trace.projected_optimum)
      os << csv_number(std::hypot(a - trace.projected_optimum->first, b - trace.projected_optimum->second));
    else
      os << "nan";
    os << ',';
    os << (opt ? csv_number((p.trajectory.final_alpha() - *opt).norm()) : "nan");
    os << ',' << csv_number(p.trajectory.records.back().val_loss) << '\n';
  }
  return os.str();
}

std::string git_blob_sha1(std::string_view content) {
  const std::string head = "blob " + std::to_string(content.size()) + '\0';
  return sha1_hex(head, content);
}

bool RunManifest::checks_passed() const {
  for (const auto& [name, ok] : checks)
    if (!ok) return false;
  return true;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_artifact(const std::filesystem::path& dir, const std::string& name,
                    const std::string& content, RunManifest& manifest) {
  const auto path = dir / name;
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
    if (!out) throw Error("write failed for " + path.string());
  }
  manifest.artifacts.push_back({name, git_blob_sha1(content), content.size()});
}

std::string manifest_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["command"] = m.command;
  auto& cfg = j["config"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m.config) cfg[k] = v;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  auto& arts = j["artifacts"] = nlohmann::ordered_json::array();
  for (const auto& a : m.artifacts) arts.push_back({{"path", a.path}, {"sha1", a.sha1}, {"bytes", a.bytes}});
  auto& checks = j["checks"] = nlohmann::ordered_json::object();
  for (const auto& [name, ok] : m.checks) checks[name] = ok;
  j["status"] = m.error ? "error" : (m.checks_passed() ? "ok" : "check_failed");
  if (m.error) j["error"] = *m.error;
  return j.dump(2) + '\n';
}

bool verify_artifacts(const RunManifest& manifest, const std::filesystem::path& dir) {
  for (const auto& a : manifest.artifacts) {
    const auto path = dir / a.path;
    if (!std::filesystem::exists(path)) return false;
    if (git_blob_sha1(read_file(path)) != a.sha1) return false;
  }
  return true;
}

}  // namespace zobilevel
