#include "avgmdp/rng.hpp"

namespace avgmdp {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(prod >> 32);
  lo = static_cast<std::uint32_t>(prod);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

RngStream::RngStream(std::uint64_t master_seed, std::uint32_t run_seed, RngPurpose purpose)
    : key_{static_cast<std::uint32_t>(master_seed),
           static_cast<std::uint32_t>(master_seed >> 32) ^ run_seed},
      purpose_(static_cast<std::uint32_t>(purpose)) {}

double RngStream::next_double() {
  const std::array<std::uint32_t, 4> ctr = {purpose_, static_cast<std::uint32_t>(draw_),
                                            static_cast<std::uint32_t>(draw_ >> 32), 0u};
  ++draw_;
  const auto out = philox4x32_10(ctr, key_);
  const std::uint64_t bits = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

std::uint32_t RngStream::next_u32() {
  const std::array<std::uint32_t, 4> ctr = {purpose_, static_cast<std::uint32_t>(draw_),
                                            static_cast<std::uint32_t>(draw_ >> 32), 0u};
  ++draw_;
  return philox4x32_10(ctr, key_)[0];
}

bool RngStream::bernoulli(double p) { return next_double() < p; }

int RngStream::sample_index(const std::vector<double>& probs) {
  const double u = next_double();
  double cum = 0.0;
  int last_positive = -1;
  for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
    if (probs[i] > 0.0) last_positive = i;
    cum += probs[i];
    if (u < cum) return i;
  }
  return last_positive >= 0 ? last_positive : static_cast<int>(probs.size()) - 1;
}

}  // namespace avgmdp
