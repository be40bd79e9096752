#pragma once

#include <cstddef>

namespace clinrel::simd::detail {

double dot_scalar(const double* a, const double* b, std::size_t n);
void axpy_scalar(double alpha, const double* x, double* y, std::size_t n);
double squared_distance_scalar(const double* a, const double* b, std::size_t n);
void gemv_scalar(const double* w, std::size_t rows, std::size_t cols, const double* x, double* y);

#if defined(CLINREL_HAVE_AVX2_TU)
double dot_avx2(const double* a, const double* b, std::size_t n);
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n);
double squared_distance_avx2(const double* a, const double* b, std::size_t n);
void gemv_avx2(const double* w, std::size_t rows, std::size_t cols, const double* x, double* y);
#endif

}  // namespace clinrel::simd::detail
