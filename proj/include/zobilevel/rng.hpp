#pragma once

#include <cstdint>
#include <random>

namespace zobilevel {

/// Deterministic random stream keyed by (seed, stream_id).
///
/// Every logical task (one candidate of one iteration, the landscape
/// directions, problem construction) owns its own stream, so evaluating
/// candidates in parallel draws exactly the numbers a serial run would.
class Rng {
 public:
  static Rng split(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform() { return uniform_(engine_); }
  double normal() { return normal_(engine_); }
  bool bernoulli(double p) { return uniform() < p; }

  std::mt19937_64& engine() { return engine_; }

 private:
  explicit Rng(std::mt19937_64 engine) : engine_(std::move(engine)) {}

  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Stream ids reserved for non-candidate consumers.
namespace streams {
inline constexpr std::uint64_t kLandscapeDirections = 0xFFFF'FFFF'FFFF'FF00ULL;
inline constexpr std::uint64_t kProblemConstruction = 0xFFFF'FFFF'FFFF'FF01ULL;
inline constexpr std::uint64_t kProblemInit = 0xFFFF'FFFF'FFFF'FF02ULL;
inline constexpr std::uint64_t kMinibatchShuffle = 0xFFFF'FFFF'FFFF'FF03ULL;
}  // namespace streams

}  // namespace zobilevel
