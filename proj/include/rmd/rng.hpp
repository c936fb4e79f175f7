#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace rmd {

// Counter-based pseudo-random stream built on the splitmix64 output
// function. A stream is identified by a 64-bit key derived from a master
// seed plus an arbitrary tuple of stream labels, so independent streams can
// be handed to parallel workers by index without any shared state. The i-th
// output of a stream depends only on (key, i), which is what makes results
// reproducible regardless of execution order or thread count.
class Rng {
 public:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

  static std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  explicit Rng(std::uint64_t key) noexcept : key_(key) {}

  // Derives a stream key by folding labels into the seed one at a time.
  static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> labels) noexcept {
    std::uint64_t k = mix(seed + kGolden);
    for (std::uint64_t id : labels) k = mix(k ^ mix(id + kGolden));
    return Rng(k);
  }

  std::uint64_t next_u64() noexcept { return mix(key_ + (++counter_) * kGolden); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1); never returns an endpoint (safe for quantile maps).
  double uniform_open() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via the inverse-CDF map; exactly one draw consumed.
  double normal() noexcept;

  // Unbiased integer on [0, n) by rejection on the top bits.
  std::uint64_t below(std::uint64_t n) noexcept {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Systematic resampling: picks n_out ancestor indices from normalized
// weights using a single uniform offset. Output indices are nondecreasing.
std::vector<std::uint32_t> systematic_resample(const std::vector<double>& weights,
                                               std::size_t n_out, double offset01);

}  // namespace rmd
