#include <cstdlib>
#include <string>

#include "clinrel/simd/kernels.hpp"
#include "kernels_impl.hpp"

namespace clinrel::simd {

namespace {

bool cpu_has_avx2_fma() noexcept {
#if defined(CLINREL_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& select() noexcept {
  const char* forced = std::getenv("CLINREL_SIMD");
  if (forced && std::string(forced) == "scalar") return scalar_kernels();
  if (const KernelTable* t = avx2_kernels()) return *t;
  return scalar_kernels();
}

void check_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": length mismatch " + std::to_string(a) + " vs " +
                     std::to_string(b));
  }
}

}  // namespace

const KernelTable& scalar_kernels() noexcept {
  static const KernelTable table{"scalar", detail::dot_scalar, detail::axpy_scalar,
                                 detail::squared_distance_scalar, detail::gemv_scalar};
  return table;
}

const KernelTable* avx2_kernels() noexcept {
#if defined(CLINREL_HAVE_AVX2_TU)
  static const KernelTable table{"avx2", detail::dot_avx2, detail::axpy_avx2,
                                 detail::squared_distance_avx2, detail::gemv_avx2};
  static const bool supported = cpu_has_avx2_fma();
  return supported ? &table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active_kernels() noexcept {
  static const KernelTable& table = select();
  return table;
}

double dot(std::span<const double> a, std::span<const double> b) {
  check_same_size(a.size(), b.size(), "dot");
  return active_kernels().dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check_same_size(x.size(), y.size(), "axpy");
  active_kernels().axpy(alpha, x.data(), y.data(), x.size());
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  check_same_size(a.size(), b.size(), "squared_distance");
  return active_kernels().squared_distance(a.data(), b.data(), a.size());
}

void gemv(const Matrix& w, std::span<const double> x, std::span<double> y) {
  check_same_size(w.cols(), x.size(), "gemv input");
  check_same_size(w.rows(), y.size(), "gemv output");
  active_kernels().gemv(w.values().data(), w.rows(), w.cols(), x.data(), y.data());
}

void gemv_transposed_add(const Matrix& w, std::span<const double> x, std::span<double> y) {
  check_same_size(w.rows(), x.size(), "gemv_transposed input");
  check_same_size(w.cols(), y.size(), "gemv_transposed output");
  const auto& k = active_kernels();
  for (std::size_t r = 0; r < w.rows(); ++r) {
    if (x[r] != 0.0) k.axpy(x[r], w.row(r).data(), y.data(), y.size());
  }
}

void rank1_add(Matrix& w, double alpha, std::span<const double> a, std::span<const double> b) {
  check_same_size(w.rows(), a.size(), "rank1 rows");
  check_same_size(w.cols(), b.size(), "rank1 cols");
  const auto& k = active_kernels();
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const double s = alpha * a[r];
    if (s != 0.0) k.axpy(s, b.data(), w.row(r).data(), b.size());
  }
}

}  // namespace clinrel::simd
