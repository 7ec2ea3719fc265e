#include "rmg/rng.hpp"

#include <cmath>
#include <numbers>

#include "rmg/errors.hpp"

namespace rmg {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline std::array<std::uint32_t, 4> philox_round(
    const std::array<std::uint32_t, 4>& x,
    const std::array<std::uint32_t, 2>& k) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * x[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * x[2];
  const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const auto lo0 = static_cast<std::uint32_t>(p0);
  const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const auto lo1 = static_cast<std::uint32_t>(p1);
  return {hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0};
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    counter = philox_round(counter, key);
  }
  return counter;
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

RandomStream::RandomStream(std::uint64_t master_seed, std::string_view purpose,
                           std::uint64_t substream) {
  const std::uint64_t key64 = splitmix64(splitmix64(master_seed) ^ fnv1a64(purpose));
  key_ = {static_cast<std::uint32_t>(key64),
          static_cast<std::uint32_t>(key64 >> 32)};
  counter_ = {0, 0, static_cast<std::uint32_t>(substream),
              static_cast<std::uint32_t>(substream >> 32)};
}

std::uint32_t RandomStream::next_u32() {
  if (block_pos_ == 4) {
    block_ = philox4x32(counter_, key_);
    block_pos_ = 0;
    if (++counter_[0] == 0) ++counter_[1];
  }
  return block_[block_pos_++];
}

std::uint64_t RandomStream::next_u64() {
  const std::uint64_t lo = next_u32();
  const std::uint64_t hi = next_u32();
  return (hi << 32) | lo;
}

double RandomStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::next_positive_double() {
  return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double RandomStream::next_gaussian() {
  if (has_cached_gaussian_) {
    has_cached_gaussian_ = false;
    return cached_gaussian_;
  }
  const double u1 = next_positive_double();
  const double u2 = next_double();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_gaussian_ = radius * std::sin(angle);
  has_cached_gaussian_ = true;
  return radius * std::cos(angle);
}

double RandomStream::next_gamma(double alpha) {
  if (!(alpha > 0.0)) throw DomainError("next_gamma: alpha must be positive");
  if (alpha < 1.0) {
    const double boost = std::pow(next_positive_double(), 1.0 / alpha);
    return next_gamma(alpha + 1.0) * boost;
  }
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = next_gaussian();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = next_positive_double();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

int RandomStream::next_categorical(std::span<const double> probs) {
  if (probs.empty()) throw DomainError("next_categorical: empty distribution");
  const double u = next_double();
  double cumulative = 0.0;
  int last_positive = -1;
  for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = i;
    cumulative += probs[i];
    if (u < cumulative) return i;
  }
  if (last_positive < 0)
    throw DomainError("next_categorical: no positive mass");
  return last_positive;  // u landed in the float round-off tail
}

void RandomStream::fill_dirichlet(std::span<double> out, double concentration) {
  if (!(concentration > 0.0))
    throw DomainError("fill_dirichlet: concentration must be positive");
  double total = 0.0;
  for (double& v : out) {
    v = next_gamma(concentration);
    total += v;
  }
  for (double& v : out) v /= total;
}

}  // namespace rmg
