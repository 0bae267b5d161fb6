#include "zobilevel/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace zobilevel {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(std::string(key), "config key '" + std::string(key) + "': not a number: '" +
                                            std::string(v) + "'");
  return out;
}

template <typename Int>
Int to_int(std::string_view key, std::string_view v) {
  Int out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(std::string(key), "config key '" + std::string(key) + "': not an integer: '" +
                                            std::string(v) + "'");
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  const auto s = lower(v);
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw ConfigError(std::string(key), "config key '" + std::string(key) + "': not a boolean");
}

}  // namespace

std::string to_string(EstimatorKind e) {
  switch (e) {
    case EstimatorKind::RS: return "rs";
    case EstimatorKind::MGS: return "mgs";
    case EstimatorKind::GLD: return "gld";
    case EstimatorKind::DARTS1: return "darts1";
    case EstimatorKind::DARTS2: return "darts2";
  }
  return "?";
}

std::string to_string(RsDistribution d) {
  return d == RsDistribution::Gaussian ? "gaussian" : "sphere";
}

std::string to_string(ProblemKind p) { return p == ProblemKind::Analytic ? "analytic" : "supernet"; }

std::string to_string(LandscapeMode m) {
  return m == LandscapeMode::FirstOrder ? "first_order" : "finetuned";
}

EstimatorKind parse_estimator(std::string_view s) {
  const auto v = lower(trim(s));
  if (v == "rs") return EstimatorKind::RS;
  if (v == "mgs") return EstimatorKind::MGS;
  if (v == "gld") return EstimatorKind::GLD;
  if (v == "darts1") return EstimatorKind::DARTS1;
  if (v == "darts2") return EstimatorKind::DARTS2;
  throw ConfigError("estimator", "unknown estimator '" + std::string(s) + "'");
}

LandscapeMode parse_landscape_mode(std::string_view s) {
  const auto v = lower(trim(s));
  if (v == "first_order" || v == "first-order" || v == "firstorder") return LandscapeMode::FirstOrder;
  if (v == "finetuned" || v == "fine_tuned") return LandscapeMode::Finetuned;
  throw ConfigError("landscape_mode", "unknown landscape mode '" + std::string(s) + "'");
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void SearchConfig::set(std::string_view key_in, std::string_view value_in) {
  const std::string key(trim(key_in));
  const std::string_view v = trim(value_in);
  if (key == "estimator") {
    const auto s = lower(v);
    // "darts" defers to darts_order
    estimator = s == "darts" ? EstimatorKind::DARTS1 : parse_estimator(v);
  } else if (key == "darts_order") {
    const int order = to_int<int>(key, v);
    if (order != 1 && order != 2) throw ConfigError(key, "darts_order must be 1 or 2");
    if (estimator == EstimatorKind::DARTS1 || estimator == EstimatorKind::DARTS2)
      estimator = order == 1 ? EstimatorKind::DARTS1 : EstimatorKind::DARTS2;
  } else if (key == "problem") {
    const auto s = lower(v);
    if (s == "analytic") problem = ProblemKind::Analytic;
    else if (s == "supernet") problem = ProblemKind::Supernet;
    else throw ConfigError(key, "problem must be analytic or supernet");
  } else if (key == "n") {
    n = to_int<int>(key, v);
  } else if (key == "m") {
    m = to_int<int>(key, v);
  } else if (key == "budget") {
    budget = to_int<int>(key, v);
  } else if (key == "post_update_inner_steps") {
    post_update_inner_steps = to_int<int>(key, v);
  } else if (key == "mu") {
    mu = to_double(key, v);
  } else if (key == "xi") {
    xi = to_double(key, v);
  } else if (key == "xi_cosine_decay") {
    xi_cosine_decay = to_bool(key, v);
  } else if (key == "rs_distribution") {
    const auto s = lower(v);
    if (s == "gaussian") rs_distribution = RsDistribution::Gaussian;
    else if (s == "sphere") rs_distribution = RsDistribution::Sphere;
    else throw ConfigError(key, "rs_distribution must be gaussian or sphere");
  } else if (key == "tau") {
    tau = to_double(key, v);
  } else if (key == "sigma") {
    sigma = to_double(key, v);
  } else if (key == "lambda_mix" || key == "lambda") {
    lambda = to_double(key, v);
  } else if (key == "mgs_support_radius") {
    mgs_support_radius = to_double(key, v);
  } else if (key == "gld_r") {
    gld_r = to_double(key, v);
  } else if (key == "gld_R") {
    gld_R = to_double(key, v);
  } else if (key == "samples_per_radius") {
    samples_per_radius = to_int<int>(key, v);
  } else if (key == "inner_lr") {
    inner_lr = to_double(key, v);
  } else if (key == "inner_momentum") {
    inner_momentum = to_double(key, v);
  } else if (key == "inner_grad_clip") {
    inner_grad_clip = to_double(key, v);
  } else if (key == "hvp_scale") {
    hvp_scale = to_double(key, v);
  } else if (key == "seed") {
    seed = to_int<std::uint64_t>(key, v);
  } else if (key == "estimators") {
    estimators.clear();
    std::string_view rest = v;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto item = trim(rest.substr(0, comma));
      if (!item.empty()) estimators.push_back(parse_estimator(item));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
  } else if (key == "landscape_mode") {
    landscape_mode = parse_landscape_mode(v);
  } else if (key == "landscape_min") {
    landscape_min = to_double(key, v);
  } else if (key == "landscape_max") {
    landscape_max = to_double(key, v);
  } else if (key == "landscape_step") {
    landscape_step = to_double(key, v);
  } else if (key == "analytic_d_alpha") {
    analytic.d_alpha = to_int<Index>(key, v);
  } else if (key == "analytic_d_omega") {
    analytic.d_omega = to_int<Index>(key, v);
  } else if (key == "analytic_reg") {
    analytic.reg = to_double(key, v);
  } else if (key == "analytic_spread") {
    analytic.spread = to_double(key, v);
  } else if (key == "problem_seed") {
    analytic.seed = to_int<std::uint64_t>(key, v);
  } else if (key == "supernet_nodes") {
    supernet.nodes = to_int<int>(key, v);
  } else if (key == "supernet_width") {
    supernet.width = to_int<int>(key, v);
  } else if (key == "supernet_batch") {
    supernet.batch = to_int<int>(key, v);
  } else if (key == "data_seed") {
    supernet.data_seed = to_int<std::uint64_t>(key, v);
  } else {
    throw ConfigError(key, "unknown config key '" + key + "'");
  }
}

void SearchConfig::validate() const {
  auto require = [](bool ok, const char* key, const char* msg) {
    if (!ok) throw ConfigError(key, std::string("config key '") + key + "': " + msg);
  };
  require(n >= 1, "n", "must be >= 1");
  require(m >= 0, "m", "must be >= 0");
  require(budget >= 0, "budget", "must be >= 0");
  require(mu > 0, "mu", "must be positive");
  require(xi > 0, "xi", "must be positive");
  require(tau > 0, "tau", "must be positive");
  require(sigma > 0, "sigma", "must be positive");
  require(lambda >= 0 && lambda <= 1, "lambda_mix", "must lie in [0, 1]");
  require(mgs_support_radius >= 0, "mgs_support_radius", "must be >= 0");
  require(gld_r > 0, "gld_r", "must be positive");
  require(gld_R > 0, "gld_R", "must be positive");
  require(gld_r <= gld_R, "gld_r", "must not exceed gld_R");
  require(samples_per_radius >= 1, "samples_per_radius", "must be >= 1");
  require(inner_lr > 0, "inner_lr", "must be positive");
  require(inner_momentum >= 0 && inner_momentum < 1, "inner_momentum", "must lie in [0, 1)");
  require(inner_grad_clip >= 0, "inner_grad_clip", "must be >= 0");
  require(hvp_scale > 0, "hvp_scale", "must be positive");
  require(landscape_step > 0, "landscape_step", "must be positive");
  require(landscape_min <= landscape_max, "landscape_min", "must not exceed landscape_max");
  require(analytic.d_alpha >= 1, "analytic_d_alpha", "must be >= 1");
  require(analytic.d_omega >= 1, "analytic_d_omega", "must be >= 1");
  require(analytic.reg >= 0, "analytic_reg", "must be >= 0");
  require(analytic.spread >= 1, "analytic_spread", "must be >= 1");
  require(supernet.nodes >= 2, "supernet_nodes", "must be >= 2");
  require(supernet.width >= 1, "supernet_width", "must be >= 1");
  require(supernet.batch >= 0, "supernet_batch", "must be >= 0");
}

std::vector<std::pair<std::string, std::string>> SearchConfig::entries() const {
  std::string est_list;
  for (std::size_t i = 0; i < estimators.size(); ++i)
    est_list += (i ? "," : "") + to_string(estimators[i]);
  return {
      {"problem", to_string(problem)},
      {"estimator", to_string(estimator)},
      {"n", std::to_string(n)},
      {"m", std::to_string(m)},
      {"budget", std::to_string(budget)},
      {"post_update_inner_steps", std::to_string(effective_post_update_steps())},
      {"mu", format_double(mu)},
      {"xi", format_double(xi)},
      {"xi_cosine_decay", xi_cosine_decay ? "true" : "false"},
      {"rs_distribution", to_string(rs_distribution)},
      {"tau", format_double(tau)},
      {"sigma", format_double(sigma)},
      {"lambda_mix", format_double(lambda)},
      {"mgs_support_radius", format_double(mgs_support_radius)},
      {"gld_r", format_double(gld_r)},
      {"gld_R", format_double(gld_R)},
      {"samples_per_radius", std::to_string(samples_per_radius)},
      {"inner_lr", format_double(inner_lr)},
      {"inner_momentum", format_double(inner_momentum)},
      {"inner_grad_clip", format_double(inner_grad_clip)},
      {"hvp_scale", format_double(hvp_scale)},
      {"seed", std::to_string(seed)},
      {"estimators", est_list},
      {"landscape_mode", to_string(landscape_mode)},
      {"landscape_min", format_double(landscape_min)},
      {"landscape_max", format_double(landscape_max)},
      {"landscape_step", format_double(landscape_step)},
      {"analytic_d_alpha", std::to_string(analytic.d_alpha)},
      {"analytic_d_omega", std::to_string(analytic.d_omega)},
      {"analytic_reg", format_double(analytic.reg)},
      {"analytic_spread", format_double(analytic.spread)},
      {"problem_seed", std::to_string(analytic.seed)},
      {"supernet_nodes", std::to_string(supernet.nodes)},
      {"supernet_width", std::to_string(supernet.width)},
      {"supernet_batch", std::to_string(supernet.batch)},
      {"data_seed", std::to_string(supernet.data_seed)},
  };
}

SearchConfig parse_config(std::istream& in) {
  SearchConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = line;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(std::string(s), "line " + std::to_string(lineno) + ": expected key=value");
    cfg.set(s.substr(0, eq), s.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

SearchConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path + "'");
  return parse_config(in);
}

}  // namespace zobilevel
