// Data-parallel quadrature kernels.
//
// Every integral of a product of two sampled families reduces to
//
//   out(i, j) = sum_q  a(i, q) * w(q) * b(j, q)
//
// where rows of `a` and `b` are functions sampled at the quadrature nodes.
// A scalar reference kernel is always built; an AVX2/FMA variant is built
// when the compiler supports it and selected at runtime from CPUID.

#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace sddr::kernels {

enum class Isa { Scalar, Avx2 };

/// Row-major strided view over a block of samples (rows = functions).
struct SampleView {
  const double* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t stride = 0;  // distance between consecutive rows
};

/// Row-major output block.
struct OutputView {
  double* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t stride = 0;
};

namespace scalar {
void weighted_gram(SampleView a, SampleView b, const double* w, OutputView out, bool accumulate);
double weighted_dot(const double* x, const double* y, const double* w, std::size_t n);
}  // namespace scalar

#if defined(SDDR_HAVE_AVX2_KERNELS)
namespace avx2 {
void weighted_gram(SampleView a, SampleView b, const double* w, OutputView out, bool accumulate);
double weighted_dot(const double* x, const double* y, const double* w, std::size_t n);
}  // namespace avx2
#endif

/// Best instruction set available on this CPU among the compiled variants.
Isa detected_isa();

/// Instruction set used by the dispatched entry points. Defaults to
/// detected_isa(); can be pinned (e.g. to Scalar) for reproducibility studies.
Isa active_isa();
void set_active_isa(Isa isa);

std::string_view isa_name(Isa isa);

/// out = a * diag(w) * b^T (or out += ... when accumulate is true).
/// a.cols == b.cols == number of weights.
void weighted_gram(SampleView a, SampleView b, const double* w, OutputView out,
                   bool accumulate = false);

/// sum_q x(q) w(q) y(q)
double weighted_dot(std::span<const double> x, std::span<const double> y,
                    std::span<const double> w);

}  // namespace sddr::kernels
