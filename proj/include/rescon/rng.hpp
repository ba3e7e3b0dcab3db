#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace rescon {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3"). Stateless: maps (counter, key) to four 32-bit words.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// Stable 64-bit hash of a purpose tag (FNV-1a).
std::uint64_t tag_hash(std::string_view tag);

/// Identifies one independent random stream. Streams with different
/// identities never overlap; the same identity always replays the same
/// sequence on every platform.
struct StreamId {
  std::uint64_t master_seed = 0;
  std::string_view purpose;
  std::uint64_t node = 0;
  std::uint64_t run = 0;
};

/// Counter-based random stream, generator version "philox4x32-10/v1".
///
/// Distributions are implemented here rather than through <random> so that
/// the sampled values do not depend on the standard library vendor.
class RandomStream {
 public:
  static constexpr std::string_view kGeneratorName = "philox4x32-10/v1";

  explicit RandomStream(const StreamId& id);

  std::uint64_t next_u64();

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();

  /// Standard normal via Box-Muller; pairs are cached.
  double normal();

  bool bernoulli(double probability);

  std::uint64_t draws() const { return block_ * 2 + (half_ ? 1 : 0); }

 private:
  std::array<std::uint32_t, 2> key_{};
  std::uint64_t stream_tag_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  bool half_ = false;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace rescon
