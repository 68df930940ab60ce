#pragma once

#include <cstdint>
#include <random>

namespace gnarspec {

// Derives an independent stream seed from a master seed. splitmix64 applied to
// seed + stream; good enough to decorrelate replicate streams in Monte-Carlo
// runs while keeping derivation order-free.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// mt19937_64 with an explicit Box-Muller transform. std::normal_distribution
// is implementation-defined, which would break bit-identical replays across
// standard libraries; this keeps output sequences portable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // uniform on (0,1]
  double uniform() {
    return static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53;
  }

  double gaussian();

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gnarspec
