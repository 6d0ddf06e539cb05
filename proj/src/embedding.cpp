#include "spectemp/embedding.hpp"

#include <cmath>

#include "spectemp/common.hpp"

namespace spectemp {

std::vector<float> hash_embed(const std::string& key, std::size_t d, std::uint64_t seed) {
  if (d == 0) throw DimensionMismatch("hash_embed: dimension must be configured");
  std::uint64_t state = fnv1a(key, seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<float> v(d);
  for (std::size_t i = 0; i < d; ++i) {
    std::uint64_t bits = splitmix64(state);
    // top 53 bits -> uniform double in [0,1) -> [-1,1)
    double u = static_cast<double>(bits >> 11) * (1.0 / 9007199254740992.0);
    v[i] = static_cast<float>(2.0 * u - 1.0);
  }
  double norm2 = 0.0;
  for (float x : v) norm2 += static_cast<double>(x) * x;
  double inv = 1.0 / std::sqrt(norm2);
  for (float& x : v) x = static_cast<float>(x * inv);
  return v;
}

}  // namespace spectemp
