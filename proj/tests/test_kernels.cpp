#include <doctest.h>

#include "sddr/kernels.hpp"

#include <random>
#include <stdexcept>
#include <vector>

using namespace sddr::kernels;

namespace {

struct Block {
  std::size_t rows, cols, stride;
  std::vector<double> data;
  Block(std::size_t r, std::size_t c, std::size_t pad, std::mt19937& rng) : rows(r), cols(c), stride(c + pad) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    data.resize(rows * stride);
    for (double& x : data) x = u(rng);
  }
  SampleView view() const { return {data.data(), rows, cols, stride}; }
};

}  // namespace

TEST_CASE("weighted_gram: scalar kernel against a naive triple loop") {
  std::mt19937 rng(7);
  Block a(5, 13, 0, rng), b(3, 13, 2, rng);
  std::vector<double> w(13);
  for (std::size_t q = 0; q < w.size(); ++q) w[q] = 0.1 * double(q + 1);
  std::vector<double> out(15);
  scalar::weighted_gram(a.view(), b.view(), w.data(), {out.data(), 5, 3, 3}, false);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      double ref = 0.0;
      for (std::size_t q = 0; q < 13; ++q) ref += a.data[i * a.stride + q] * w[q] * b.data[j * b.stride + q];
      CHECK(out[i * 3 + j] == doctest::Approx(ref).epsilon(1e-14));
    }
  }
}

#if defined(SDDR_HAVE_AVX2_KERNELS)
TEST_CASE("weighted_gram: AVX2 variant matches scalar reference") {
  if (detected_isa() != Isa::Avx2) {
    MESSAGE("AVX2 not available on this CPU; equivalence test skipped");
    return;
  }
  std::mt19937 rng(11);
  // sizes chosen to hit every tail of the 8/4-wide loops and the 4-row blocking
  for (std::size_t n : {1u, 3u, 4u, 5u, 8u, 9u, 17u, 64u, 203u}) {
    for (std::size_t ra : {1u, 4u, 7u}) {
      for (std::size_t rb : {1u, 3u, 4u, 6u, 9u}) {
        Block a(ra, n, 1, rng), b(rb, n, 3, rng);
        std::vector<double> w(n);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (double& x : w) x = u(rng);
        std::vector<double> s(ra * rb, 0.5), v(ra * rb, 0.5);
        for (bool acc : {false, true}) {
          scalar::weighted_gram(a.view(), b.view(), w.data(), {s.data(), ra, rb, rb}, acc);
          avx2::weighted_gram(a.view(), b.view(), w.data(), {v.data(), ra, rb, rb}, acc);
          for (std::size_t i = 0; i < s.size(); ++i) {
            CHECK(v[i] == doctest::Approx(s[i]).epsilon(1e-13).scale(double(n)));
          }
        }
        CHECK(avx2::weighted_dot(a.data.data(), b.data.data(), w.data(), n) ==
              doctest::Approx(scalar::weighted_dot(a.data.data(), b.data.data(), w.data(), n)).epsilon(1e-13).scale(double(n)));
      }
    }
  }
}
#endif

TEST_CASE("kernel dispatch: pinning to scalar is honoured and dimension errors are reported") {
  const Isa saved = active_isa();
  set_active_isa(Isa::Scalar);
  CHECK(active_isa() == Isa::Scalar);
  std::vector<double> x = {1, 2, 3}, y = {4, 5, 6}, w = {1, 1, 2};
  CHECK(weighted_dot(x, y, w) == doctest::Approx(4 + 10 + 36));
  std::vector<double> out(1);
  CHECK_THROWS_AS(weighted_gram({x.data(), 1, 3, 3}, {y.data(), 1, 2, 2}, w.data(), {out.data(), 1, 1, 1}),
                  std::invalid_argument);
  set_active_isa(saved);
  if (detected_isa() == Isa::Scalar) CHECK_THROWS(set_active_isa(Isa::Avx2));
}
