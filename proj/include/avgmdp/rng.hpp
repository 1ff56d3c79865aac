#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace avgmdp {

/// One block of the Philox4x32 counter-based generator with 10 rounds.
/// Maps a 128-bit counter and a 64-bit key to 128 bits of output.
/// Reference constants: multipliers 0xD2511F53, 0xCD9E8D57 and Weyl
/// increments 0x9E3779B9, 0xBB67AE85.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// Purpose tag selecting an independent stream for one simulation run.
enum class RngPurpose : std::uint32_t {
  Reward = 0,      ///< Bernoulli reward draws
  Transition = 1,  ///< next-state draws
  Learner = 2,     ///< randomization internal to the learning algorithm
};

/// A deterministic stream of uniform variates backed by Philox4x32-10.
///
/// Stream derivation: key = (lo32(master_seed), hi32(master_seed) XOR run_seed);
/// the n-th draw uses counter = (purpose, lo32(n), hi32(n), 0) and converts
/// output words [0] and [1] into one double in [0,1) via the top 53 bits.
/// Streams with distinct (master_seed, run_seed, purpose) are independent and
/// reproducible across platforms and languages.
class RngStream {
 public:
  RngStream() : RngStream(0, 0, RngPurpose::Learner) {}
  RngStream(std::uint64_t master_seed, std::uint32_t run_seed, RngPurpose purpose);

  /// Uniform double in [0, 1).
  double next_double();

  /// Uniform 32-bit word (word [0] of a fresh block).
  std::uint32_t next_u32();

  /// Bernoulli draw: true with probability p (consumes one double).
  bool bernoulli(double p);

  /// Inverse-CDF draw from a probability vector; returns the lowest index i
  /// with cumsum(probs[0..i]) > u. Entries must be nonnegative; the vector is
  /// treated as normalized (a trailing deficit goes to the last positive entry).
  int sample_index(const std::vector<double>& probs);

  /// Number of blocks consumed so far.
  std::uint64_t draws() const { return draw_; }

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint32_t purpose_;
  std::uint64_t draw_ = 0;
};

}  // namespace avgmdp
