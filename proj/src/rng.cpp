#include "discorr/rng.hpp"

#include "discorr/gaussian_core.hpp"

namespace discorr {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t master, std::uint64_t phase, std::uint64_t index) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ phase);
  h = splitmix64(h ^ index);
  return h;
}

double RngStream::normal() {
  // inverse CDF; uniform() never returns exactly 0 or 1 after this clamp
  double u = uniform();
  if (u <= 0.0) u = 0x1.0p-53;
  return std_normal_quantile(u);
}

}  // namespace discorr
