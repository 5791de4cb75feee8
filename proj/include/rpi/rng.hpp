#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace rpi {

/// Deterministic random stream addressed by a key path (seed, id, id, ...).
///
/// Two streams with different key paths are seeded independently through
/// std::seed_seq, so child streams never depend on how many draws the parent
/// has made. Streams are cheap to copy and not meant to be shared between
/// threads; give each replicate its own child instead.
class RngStream {
 public:
  using Engine = std::mt19937_64;

  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  /// Independent stream keyed by this stream's path extended with `id`.
  RngStream child(std::uint64_t id) const;

  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Exponential with the given rate.
  double exponential(double rate);

  Engine& engine() { return engine_; }
  const std::vector<std::uint64_t>& key() const { return key_; }

 private:
  explicit RngStream(std::vector<std::uint64_t> key);

  std::vector<std::uint64_t> key_;
  Engine engine_;
};

}  // namespace rpi
