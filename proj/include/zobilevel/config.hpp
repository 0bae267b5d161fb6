#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "zobilevel/types.hpp"

namespace zobilevel {

enum class EstimatorKind { RS, MGS, GLD, DARTS1, DARTS2 };
enum class RsDistribution { Gaussian, Sphere };
enum class ProblemKind { Analytic, Supernet };
enum class LandscapeMode { FirstOrder, Finetuned };

std::string to_string(EstimatorKind e);
std::string to_string(RsDistribution d);
std::string to_string(ProblemKind p);
std::string to_string(LandscapeMode m);
EstimatorKind parse_estimator(std::string_view s);
LandscapeMode parse_landscape_mode(std::string_view s);

struct AnalyticConfig {
  Index d_alpha = 2;
  Index d_omega = 3;
  double reg = 0.1;
  /// Ratio between the largest and smallest singular value of A.
  double spread = 2.0;
  std::uint64_t seed = 7;
};

struct SupernetConfig {
  int nodes = 4;
  int width = 4;
  /// 0 = full batch.
  int batch = 0;
  std::uint64_t data_seed = 2024;
};

struct SearchConfig {
  ProblemKind problem = ProblemKind::Analytic;
  EstimatorKind estimator = EstimatorKind::MGS;

  int n = 4;
  int m = 10;
  int budget = 200;
  /// -1 means "same as m".
  int post_update_inner_steps = -1;

  double mu = 0.01;
  double xi = 0.1;
  bool xi_cosine_decay = false;
  RsDistribution rs_distribution = RsDistribution::Gaussian;

  double tau = 1e-5;
  double sigma = 0.006;
  double lambda = 1.0;
  /// Support ball of the MGS target distribution; 0 = unrestricted.
  double mgs_support_radius = 0.0;

  double gld_r = 1e-3;
  double gld_R = 0.5;
  int samples_per_radius = 1;

  double inner_lr = 0.5;
  double inner_momentum = 0.0;
  /// Rescale inner gradients to at most this norm; 0 = off.
  double inner_grad_clip = 0.0;
  double hvp_scale = 0.01;

  std::uint64_t seed = 42;

  std::vector<EstimatorKind> estimators;

  LandscapeMode landscape_mode = LandscapeMode::Finetuned;
  double landscape_min = -1.0;
  double landscape_max = 1.0;
  double landscape_step = 0.02;

  AnalyticConfig analytic;
  SupernetConfig supernet;

  int effective_post_update_steps() const {
    return post_update_inner_steps < 0 ? m : post_update_inner_steps;
  }

  /// Throws ConfigError naming the first offending key.
  void validate() const;

  /// Apply one key=value pair; unknown keys throw ConfigError.
  void set(std::string_view key, std::string_view value);

  /// Canonical key=value listing in a fixed order.
  std::vector<std::pair<std::string, std::string>> entries() const;
};

SearchConfig parse_config(std::istream& in);
SearchConfig load_config(const std::string& path);

/// Locale-independent shortest round-trip formatting.
std::string format_double(double v);

}  // namespace zobilevel
