#pragma once

#include <cstdint>
#include <string_view>

namespace nst {

// splitmix64 finalizer; bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// Replica seed derivation: strong mix of (master seed, replica index, label).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replica,
                                    std::string_view label) noexcept {
  return mix64(mix64(master + kGolden) ^ mix64(replica + 0xda942042e4dd58b5ULL) ^
               fnv1a64(label));
}

// Counter-based uniform stream. value_at(i) is a pure function of
// (seed, label, i), so the same stream can be read sequentially or by index;
// identical (seed, label) gives bit-identical output on every platform.
// Indexed reads advance the counter to max(counter, i+1), which is how the
// per-leaf U_i get "consumed" on steps whose decision never looks at them.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view label)
      : base_(mix64(seed + kGolden) ^ mix64(fnv1a64(label) + kGolden)) {}

  std::uint64_t value_at(std::uint64_t i) const noexcept {
    return mix64(base_ + (i + 1) * kGolden);
  }
  static double to_unit(std::uint64_t x) noexcept {
    return static_cast<double>(x >> 11) * 0x1.0p-53;  // [0,1)
  }

  std::uint64_t next_u64() noexcept { return value_at(counter_++); }
  double next_unit() noexcept { return to_unit(next_u64()); }

  double unit_at(std::uint64_t i) noexcept {
    if (i >= counter_) counter_ = i + 1;
    return to_unit(value_at(i));
  }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
};

// Stream labels shared by the growth chain and the pruning operator. The
// selection stream and the per-leaf U stream must stay distinct so that a
// pruning pass can replay exactly the U values a coupled run consumed.
inline constexpr std::string_view kSelectLabel = "select";
inline constexpr std::string_view kULabel = "u";

inline RngStream make_stream(std::uint64_t master, std::uint64_t replica,
                             std::string_view label) {
  return RngStream(derive_seed(master, replica, label), label);
}

}  // namespace nst
