#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

namespace rmg {

// Philox4x32-10 counter-based block function. Stateless: the same
// (counter, key) pair always produces the same 128-bit block, which is what
// makes sub-streams keyed by (seed, purpose, id) reproducible regardless of
// evaluation order.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

// A deterministic random stream. Streams are identified by a 64-bit master
// seed, a purpose tag (e.g. "traj", "game"), and a 64-bit sub-stream id;
// distinct identities yield statistically independent streams.
class RandomStream {
 public:
  RandomStream(std::uint64_t master_seed, std::string_view purpose,
               std::uint64_t substream = 0);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double next_double();
  // Uniform on (0, 1]; safe as a log() argument.
  double next_positive_double();
  // Standard normal via Box-Muller.
  double next_gaussian();
  // Gamma(alpha, 1) via Marsaglia-Tsang squeeze.
  double next_gamma(double alpha);
  // Index sampled from an (unnormalized is not allowed) probability vector.
  int next_categorical(std::span<const double> probs);
  // Fills `out` with a symmetric Dirichlet(concentration) draw.
  void fill_dirichlet(std::span<double> out, double concentration);

 private:
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> block_{};
  int block_pos_ = 4;
  bool has_cached_gaussian_ = false;
  double cached_gaussian_ = 0.0;
};

// 64-bit FNV-1a, used to fold purpose tags into stream keys.
std::uint64_t fnv1a64(std::string_view text);

// SplitMix64 finalizer; used to decorrelate raw seeds before keying.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace rmg
