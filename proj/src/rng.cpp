#include "zobilevel/rng.hpp"

namespace zobilevel {

Rng Rng::split(std::uint64_t seed, std::uint64_t stream_id) {
  std::seed_seq seq{
      static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
      static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32),
      0x5eedU};
  return Rng(std::mt19937_64(seq));
}

}  // namespace zobilevel
