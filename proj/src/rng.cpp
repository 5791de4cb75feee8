#include "rpi/rng.hpp"

#include <cmath>

namespace rpi {

namespace {

RngStream::Engine seeded_engine(const std::vector<std::uint64_t>& key) {
  std::vector<std::uint32_t> words;
  words.reserve(2 * key.size() + 1);
  // Length prefix keeps (a, b) and (a, b, 0) distinct.
  words.push_back(static_cast<std::uint32_t>(key.size()));
  for (std::uint64_t k : key) {
    words.push_back(static_cast<std::uint32_t>(k & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(k >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return RngStream::Engine(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : RngStream(std::vector<std::uint64_t>{seed, stream_id}) {}

RngStream::RngStream(std::vector<std::uint64_t> key)
    : key_(std::move(key)), engine_(seeded_engine(key_)) {}

RngStream RngStream::child(std::uint64_t id) const {
  auto key = key_;
  key.push_back(id);
  return RngStream(std::move(key));
}

double RngStream::uniform() {
  // 53 random bits mapped to the midpoints of a 2^-53 grid: never 0 or 1.
  const std::uint64_t bits = engine_() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double RngStream::exponential(double rate) {
  return -std::log(uniform()) / rate;
}

}  // namespace rpi
