#include "doctest.h"

#include <cstring>
#include <random>
#include <vector>

#include "actshuf/kernels.hpp"

namespace k = actshuf::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<double> v(n);
  for (double& x : v) x = nd(rng);
  return v;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("linear_forward matches a naive triple loop") {
  const k::LinearDims d{3, 4, 2};
  const auto x = random_vec(12, 1);
  const auto w = random_vec(8, 2);
  const auto b = random_vec(2, 3);
  std::vector<double> y(6);
  k::serial::linear_forward(d, x, w, b, y);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t o = 0; o < 2; ++o) {
      double s = b[o];
      for (std::size_t i = 0; i < 4; ++i) s += x[r * 4 + i] * w[o * 4 + i];
      CHECK(y[r * 2 + o] == doctest::Approx(s).epsilon(1e-14));
    }
  }
  std::vector<double> nobias(6);
  k::serial::linear_forward(d, x, w, {}, nobias);
  CHECK(nobias[0] == doctest::Approx(y[0] - b[0]).epsilon(1e-12));
}

TEST_CASE("parallel kernels are bit-identical to the serial reference") {
  // Large enough to cross the parallel threshold.
  for (const k::LinearDims d : {k::LinearDims{5, 3, 4}, k::LinearDims{300, 64, 256}}) {
    const auto x = random_vec(d.rows * d.in, 4);
    const auto w = random_vec(d.out * d.in, 5);
    const auto b = random_vec(d.out, 6);
    const auto dy = random_vec(d.rows * d.out, 7);

    std::vector<double> ys(d.rows * d.out), yp(d.rows * d.out);
    k::serial::linear_forward(d, x, w, b, ys);
    k::parallel::linear_forward(d, x, w, b, yp);
    CHECK(bit_equal(ys, yp));

    std::vector<double> dxs(x.size(), 0.5), dxp(x.size(), 0.5);
    k::serial::linear_backward_input(d, dy, w, dxs);
    k::parallel::linear_backward_input(d, dy, w, dxp);
    CHECK(bit_equal(dxs, dxp));

    std::vector<double> dws(w.size(), -1.0), dwp(w.size(), -1.0);
    k::serial::linear_backward_weight(d, dy, x, dws);
    k::parallel::linear_backward_weight(d, dy, x, dwp);
    CHECK(bit_equal(dws, dwp));

    std::vector<double> ps(d.rows * d.out), pp(d.rows * d.out);
    k::serial::row_softmax(d.rows, d.out, ys, ps);
    k::parallel::row_softmax(d.rows, d.out, ys, pp);
    CHECK(bit_equal(ps, pp));

    const auto wt = random_vec(d.rows, 8);
    std::vector<double> ss(d.in), sp(d.in);
    k::serial::weighted_row_sum(d.in, 1, d.rows - 1, x, wt, ss);
    k::parallel::weighted_row_sum(d.in, 1, d.rows - 1, x, wt, sp);
    CHECK(bit_equal(ss, sp));
  }
}

TEST_CASE("backend switch") {
  const k::Backend before = k::backend();
  k::set_backend(k::Backend::kSerial);
  CHECK(k::backend() == k::Backend::kSerial);
  k::set_backend(k::Backend::kOpenMP);
  CHECK(k::backend() == (k::openmp_available() ? k::Backend::kOpenMP : k::Backend::kSerial));
  k::set_backend(before);
}

TEST_CASE("row softmax survives large logits") {
  const std::vector<double> s{1000.0, 0.0, -1000.0, 1.0, 1.0, 1.0};
  std::vector<double> p(6);
  k::serial::row_softmax(2, 3, s, p);
  CHECK(p[0] == 1.0);
  CHECK(p[1] == doctest::Approx(0.0));
  CHECK(p[3] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}
