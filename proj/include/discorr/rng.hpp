#ifndef DISCORR_RNG_HPP
#define DISCORR_RNG_HPP

#include <cstdint>
#include <random>

namespace discorr {

// Stream derivation phases. A master seed plus (phase, index) names one
// independent stream, so adding columns or pairs never perturbs the draws
// of existing ones.
enum class Phase : std::uint64_t {
  Calibration = 1,
  GenerationLatent = 2,
  GenerationExpand = 3,
  GscBounds = 4,
  Replicate = 5,
  Bootstrap = 6,
};

std::uint64_t mix_seed(std::uint64_t master, std::uint64_t phase, std::uint64_t index);

// Deterministic uniform/normal stream. All randomness in the library flows
// through this class; normals come from the inverse CDF so output is
// bit-identical across standard libraries.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}

  static RngStream derive(std::uint64_t master, Phase phase, std::uint64_t index) {
    return RngStream(mix_seed(master, static_cast<std::uint64_t>(phase), index));
  }

  // uniform in [0, 1), 53-bit resolution
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double normal();

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace discorr

#endif
