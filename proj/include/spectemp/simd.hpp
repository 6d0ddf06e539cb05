#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace spectemp::simd {

// Scalar reference kernels. Double accumulation keeps the reference
// bit-stable across platforms; hash_embed normalization always uses these.
float dot_f32_scalar(const float* a, const float* b, std::size_t n);
float max_dot_f32_scalar(const float* q, const float* rows, std::size_t n_rows,
                         std::size_t dim);

#if defined(__x86_64__) || defined(_M_X64)
float dot_f32_avx2(const float* a, const float* b, std::size_t n);
float max_dot_f32_avx2(const float* q, const float* rows, std::size_t n_rows,
                       std::size_t dim);
#endif

// Dispatched entry points; the variant is picked once at startup from cpuid.
float dot_f32(std::span<const float> a, std::span<const float> b);

// max over rows (row-major, n_rows x dim) of dot(q, row); -inf-free: returns
// lowest float if n_rows == 0 is NOT allowed, caller guards.
float max_dot_f32(std::span<const float> q, const float* rows,
                  std::size_t n_rows, std::size_t dim);

// Name of the active kernel variant ("scalar" or "avx2").
const std::string& active_variant();

}  // namespace spectemp::simd
