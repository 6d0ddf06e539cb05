#include "spectemp/simd.hpp"

#include "spectemp/common.hpp"

namespace spectemp::simd {

float dot_f32_scalar(const float* a, const float* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(a[i]) * b[i];
  return static_cast<float>(acc);
}

float max_dot_f32_scalar(const float* q, const float* rows, std::size_t n_rows,
                         std::size_t dim) {
  float best = dot_f32_scalar(q, rows, dim);
  for (std::size_t r = 1; r < n_rows; ++r) {
    float d = dot_f32_scalar(q, rows + r * dim, dim);
    if (d > best) best = d;
  }
  return best;
}

namespace {

using DotFn = float (*)(const float*, const float*, std::size_t);
using MaxDotFn = float (*)(const float*, const float*, std::size_t, std::size_t);

struct Dispatch {
  DotFn dot = &dot_f32_scalar;
  MaxDotFn max_dot = &max_dot_f32_scalar;
  std::string variant = "scalar";

  Dispatch() {
#if defined(__x86_64__) || defined(_M_X64)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
      dot = &dot_f32_avx2;
      max_dot = &max_dot_f32_avx2;
      variant = "avx2";
    }
#endif
  }
};

const Dispatch& dispatch() {
  static const Dispatch d;
  return d;
}

}  // namespace

float dot_f32(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size())
    throw DimensionMismatch("dot_f32: " + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
  return dispatch().dot(a.data(), b.data(), a.size());
}

float max_dot_f32(std::span<const float> q, const float* rows,
                  std::size_t n_rows, std::size_t dim) {
  if (q.size() != dim) throw DimensionMismatch("max_dot_f32: query dim mismatch");
  if (n_rows == 0) throw EmptyInput("max_dot_f32: no rows");
  return dispatch().max_dot(q.data(), rows, n_rows, dim);
}

const std::string& active_variant() { return dispatch().variant; }

}  // namespace spectemp::simd
