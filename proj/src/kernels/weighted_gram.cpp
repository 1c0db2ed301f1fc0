#include "sddr/kernels.hpp"

#include <atomic>
#include <cassert>
#include <stdexcept>

namespace sddr::kernels {

namespace scalar {

double weighted_dot(const double* x, const double* y, const double* w, std::size_t n) {
  double s = 0.0;
  for (std::size_t q = 0; q < n; ++q) {
    s += x[q] * w[q] * y[q];
  }
  return s;
}

void weighted_gram(SampleView a, SampleView b, const double* w, OutputView out, bool accumulate) {
  assert(a.cols == b.cols);
  assert(out.rows == a.rows && out.cols == b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* ai = a.data + i * a.stride;
    double* oi = out.data + i * out.stride;
    for (std::size_t j = 0; j < b.rows; ++j) {
      const double v = weighted_dot(ai, b.data + j * b.stride, w, a.cols);
      oi[j] = accumulate ? oi[j] + v : v;
    }
  }
}

}  // namespace scalar

namespace {

bool cpu_has_avx2() {
#if defined(SDDR_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{detected_isa()};
  return isa;
}

}  // namespace

Isa detected_isa() {
  static const Isa isa = cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar;
  return isa;
}

Isa active_isa() { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (isa == Isa::Avx2 && detected_isa() != Isa::Avx2) {
    throw std::runtime_error("AVX2 kernels are not available on this CPU/build");
  }
  active().store(isa, std::memory_order_relaxed);
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

void weighted_gram(SampleView a, SampleView b, const double* w, OutputView out, bool accumulate) {
  if (a.cols != b.cols || out.rows != a.rows || out.cols != b.rows) {
    throw std::invalid_argument("weighted_gram: inconsistent dimensions");
  }
#if defined(SDDR_HAVE_AVX2_KERNELS)
  if (active_isa() == Isa::Avx2) {
    avx2::weighted_gram(a, b, w, out, accumulate);
    return;
  }
#endif
  scalar::weighted_gram(a, b, w, out, accumulate);
}

double weighted_dot(std::span<const double> x, std::span<const double> y,
                    std::span<const double> w) {
  if (x.size() != y.size() || x.size() != w.size()) {
    throw std::invalid_argument("weighted_dot: inconsistent sizes");
  }
#if defined(SDDR_HAVE_AVX2_KERNELS)
  if (active_isa() == Isa::Avx2) {
    return avx2::weighted_dot(x.data(), y.data(), w.data(), x.size());
  }
#endif
  return scalar::weighted_dot(x.data(), y.data(), w.data(), x.size());
}

}  // namespace sddr::kernels
