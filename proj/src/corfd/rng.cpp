#include "corfd/rng.hpp"

namespace corfd {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

RngStream::Engine make_engine(std::uint64_t seed, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id),
                    static_cast<std::uint32_t>(id >> 32)};
  return RngStream::Engine(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t id)
    : seed_(seed), id_(id), engine_(make_engine(seed, id)) {}

RngStream RngStream::substream(std::uint64_t tag) const {
  return RngStream(seed_, mix64(id_ ^ mix64(tag)));
}

double RngStream::uniform() {
  return std::generate_canonical<double, 53>(engine_);
}

double RngStream::uniform_open() { return 1.0 - uniform(); }

double RngStream::normal() { return normal_(engine_); }

std::uint64_t RngStream::index(std::uint64_t n) {
  // Lemire's multiply-and-reject; far cheaper than a division per draw, and
  // the bootstrap makes billions of these.
  std::uint64_t x = engine_();
  __uint128_t m = static_cast<__uint128_t>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = -n % n;
    while (low < threshold) {
      x = engine_();
      m = static_cast<__uint128_t>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

}  // namespace corfd
