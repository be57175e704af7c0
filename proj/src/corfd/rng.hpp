#pragma once

#include <cstdint>
#include <random>

namespace corfd {

// A reproducible random stream identified by (seed, id). Streams derived from
// the same seed with different ids are independent for all practical
// purposes; the same pair always replays the same sequence.
class RngStream {
 public:
  using Engine = std::mt19937_64;

  RngStream(std::uint64_t seed, std::uint64_t id);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t id() const noexcept { return id_; }

  // Child stream whose id is a hash of this stream's id and the tag. Deriving
  // does not advance this stream.
  RngStream substream(std::uint64_t tag) const;

  double uniform();           // [0, 1)
  double uniform_open();      // (0, 1]
  double normal();            // standard normal
  std::uint64_t index(std::uint64_t n);  // uniform on [0, n)

  Engine& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t id_;
  Engine engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// Stream-id mixing function (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x) noexcept;

// Tags used to carve substreams out of one replication stream. Indexed tags
// put the index in the low 32 bits so different families never collide.
namespace stream_tag {
inline constexpr std::uint64_t kCoefficients = 1;
inline constexpr std::uint64_t kPilot = 2;
inline constexpr std::uint64_t kBootstrap = 3;
inline constexpr std::uint64_t kFresh = 4;
inline constexpr std::uint64_t kCoordinate = 5;
inline constexpr std::uint64_t kLineSearch = 6;
inline constexpr std::uint64_t kIteration = 7;
inline constexpr std::uint64_t kReplication = 8;
inline constexpr std::uint64_t kGradient = 9;

constexpr std::uint64_t indexed(std::uint64_t family, std::uint64_t index) {
  return (family << 32) | (index & 0xffffffffULL);
}
}  // namespace stream_tag

}  // namespace corfd
