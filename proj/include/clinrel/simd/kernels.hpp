#pragma once

// Data-parallel inner loops used by the recurrent encoder, the relation MLP
// and the SMOTE neighbour search. Each kernel has a scalar reference and an
// AVX2/FMA variant; the variant is picked once at startup from CPUID and can
// be forced with CLINREL_SIMD=scalar|avx2.

#include <cstddef>
#include <span>
#include <string_view>

#include "clinrel/matrix.hpp"

namespace clinrel::simd {

struct KernelTable {
  std::string_view name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  // y[r] = dot(w.row(r), x) for r in [0, rows)
  void (*gemv)(const double* w, std::size_t rows, std::size_t cols, const double* x, double* y);
};

const KernelTable& scalar_kernels() noexcept;

/// nullptr when the variant was not compiled in or the CPU lacks AVX2/FMA.
const KernelTable* avx2_kernels() noexcept;

/// The table selected for this process.
const KernelTable& active_kernels() noexcept;

double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double squared_distance(std::span<const double> a, std::span<const double> b);

/// y = W x
void gemv(const Matrix& w, std::span<const double> x, std::span<double> y);
/// y += W^T x
void gemv_transposed_add(const Matrix& w, std::span<const double> x, std::span<double> y);
/// W += alpha * a b^T
void rank1_add(Matrix& w, double alpha, std::span<const double> a, std::span<const double> b);

}  // namespace clinrel::simd
