#ifndef MAGNNETO_COMMON_H_
#define MAGNNETO_COMMON_H_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace magnneto {

// Error categories double as CLI exit codes.
enum class ErrorKind : int {
  kParse = 2,
  kValidation = 3,
  kIo = 4,
  kNumeric = 5,
  kDivergence = 6,
  kTooLarge = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// std distributions are implementation-defined, so all sampling goes
// through these helpers on top of the (fully specified) mt19937_64 stream.
using Rng = std::mt19937_64;

// Uniform on [0, 1) with 53 random bits.
inline double Uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform on (0, 1].
inline double UniformOpenClosed(Rng& rng) { return 1.0 - Uniform01(rng); }

// Uniform integer on [lo, hi]; rejection sampling keeps it unbiased.
inline int64_t UniformInt(Rng& rng, int64_t lo, int64_t hi) {
  const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<int64_t>(rng());
  const uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return lo + static_cast<int64_t>(x % span);
}

// SplitMix64 finalizer, used to derive independent stream seeds.
inline uint64_t MixSeed(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline uint64_t DeriveSeed(uint64_t seed, uint64_t stream) {
  return MixSeed(seed ^ MixSeed(stream));
}

}  // namespace magnneto

#endif  // MAGNNETO_COMMON_H_
