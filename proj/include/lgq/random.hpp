#pragma once

#include <array>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace lgq {

/**
 * Philox4x32-10 counter-based generator (Salmon et al., "Parallel random
 * numbers: as easy as 1, 2, 3", SC11).
 *
 * The 64-bit seed is the key. The 64-bit stream id occupies the upper half of
 * the 128-bit counter, so every (seed, stream) pair owns an independent
 * sequence of 2^64 blocks. Satisfies UniformRandomBitGenerator.
 */
class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream);

  /// One application of the 10-round bijection, exposed for known-answer tests.
  static Block encrypt(Block counter, Key key);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return 0xffffffffu; }
  result_type operator()();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  Block counter_{};
  Key key_{};
  Block block_{};
  int next_ = 4;
};

/// Standard normal deviates drawn from one Philox stream.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream) : engine_(seed, stream) {}

  double operator()() { return normal_(engine_); }

  /// Fill `out` with independent N(0, 1) samples.
  void fill(Eigen::Ref<Eigen::VectorXd> out) {
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = normal_(engine_);
  }

  const Philox4x32& engine() const { return engine_; }

 private:
  Philox4x32 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace lgq
