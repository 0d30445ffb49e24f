#pragma once

#include <array>
#include <cstdint>

namespace stvel {

/// Reproducible-simulation seed. Equal seeds give bit-identical output.
struct Seed {
  std::uint64_t value = 0;
};

/// Counter-based generator: Philox4x32-10 ("stvel-philox-1").
///
/// The key is (seed, stream): distinct streams under the same seed yield
/// independent sequences, so concurrent samplers split work by stream id
/// without coordination. Stream usage inside this library is fixed:
///   stream 0 - Poisson thinning (candidate count, positions, accept draws)
///   stream 1 - latent Gaussian field draws
/// Draw order is part of the output contract; normal variates come from a
/// Box-Muller pair (cosine first), Poisson counts from chunked uniform
/// products, so results are bit-identical across runs on a given libm.
class CounterRng {
 public:
  explicit CounterRng(Seed seed, std::uint64_t stream = 0);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double next_double();

  /// Standard normal via Box-Muller.
  double next_normal();

  /// Poisson count with the given non-negative mean.
  std::int64_t next_poisson(double mean);

  static constexpr std::uint64_t kThinningStream = 0;
  static constexpr std::uint64_t kFieldStream = 1;

 private:
  void refill();

  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> block_{};
  int block_pos_ = 4;
  bool have_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace stvel
