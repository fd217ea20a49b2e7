#include "doctest.h"

#include <cmath>
#include <numeric>

#include "support.hpp"

using namespace actshuf;
using testing::input_gradient_error;
using testing::random_tensor;

namespace {

// Reduces any op output to a scalar with fixed random weights so every output
// element contributes a distinct gradient.
Var probe(Var y, std::uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  Tape& t = y.tape();
  return ad::sum(ad::mul(y, t.constant(random_tensor(y.shape(), rng))));
}

}  // namespace

TEST_CASE("elementwise and reduction ops pass finite differences") {
  std::mt19937_64 rng(1);
  const Tensor a = random_tensor({7}, rng);
  const Tensor b = random_tensor({7}, rng);
  auto check = [&](const testing::InputObjective& f) { CHECK(input_gradient_error(a, f) < 1e-7); };
  check([&](Tape& t, Var x) { return probe(ad::add(x, t.constant(b))); });
  check([&](Tape& t, Var x) { return probe(ad::sub(t.constant(b), x)); });
  check([&](Tape& t, Var x) { return probe(ad::mul(x, t.constant(b))); });
  check([&](Tape&, Var x) { return probe(ad::mul(x, x)); });
  check([&](Tape&, Var x) { return probe(ad::scale(x, -2.5)); });
  check([&](Tape&, Var x) { return probe(ad::one_minus(x)); });
  check([&](Tape&, Var x) { return probe(ad::abs(x)); });
  check([&](Tape&, Var x) { return probe(ad::clamp_min(x, 0.1)); });
  check([&](Tape&, Var x) { return ad::sum(x); });
  check([&](Tape&, Var x) { return probe(ad::mean(x)); });
  check([&](Tape&, Var x) { return probe(ad::relu(x)); });
  check([&](Tape&, Var x) { return probe(ad::sigmoid(x)); });
  check([&](Tape&, Var x) { return probe(ad::softmax(x)); });
  check([&](Tape& t, Var x) { return probe(ad::concat({x, t.constant(b), x})); });
  check([&](Tape&, Var x) { return probe(ad::gaussian_smooth(x, 1.3)); });
  check([&](Tape&, Var x) { return probe(ad::reshape(x, {7, 1})); });
  const Tensor y = softmax(b);
  check([&](Tape&, Var x) { return ad::cross_entropy(ad::softmax(x), y); });
}

TEST_CASE("matrix ops pass finite differences for every operand") {
  std::mt19937_64 rng(2);
  const Tensor w = random_tensor({4, 5}, rng);
  const Tensor x = random_tensor({5}, rng);
  const Tensor b = random_tensor({4}, rng);
  const Tensor xm = random_tensor({3, 5}, rng);
  CHECK(input_gradient_error(w, [&](Tape& t, Var v) {
    return probe(ad::matvec_add(v, t.constant(x), t.constant(b)));
  }) < 1e-7);
  CHECK(input_gradient_error(x, [&](Tape& t, Var v) {
    return probe(ad::matvec_add(t.constant(w), v, t.constant(b)));
  }) < 1e-7);
  CHECK(input_gradient_error(b, [&](Tape& t, Var v) {
    return probe(ad::matvec_add(t.constant(w), t.constant(x), v));
  }) < 1e-7);
  CHECK(input_gradient_error(xm, [&](Tape& t, Var v) {
    return probe(ad::linear(v, t.constant(w), t.constant(b)));
  }) < 1e-7);
  CHECK(input_gradient_error(w, [&](Tape& t, Var v) { return probe(ad::linear(t.constant(xm), v)); }) <
        1e-7);
  const Tensor weights = testing::random_uniform({3}, rng, 0.1, 1.0);
  CHECK(input_gradient_error(xm, [&](Tape& t, Var v) {
    return probe(ad::weighted_mean_rows(v, t.constant(weights), 0, 2));
  }) < 1e-7);
  CHECK(input_gradient_error(weights, [&](Tape& t, Var v) {
    return probe(ad::weighted_mean_rows(t.constant(xm), v, 1, 2));
  }) < 1e-7);
}

TEST_CASE("gradients accumulate over shared inputs") {
  Tape t;
  Var x = t.watch(Tensor::vector({3.0}));
  Var y = ad::add(ad::mul(x, x), ad::scale(x, 2.0));
  t.backward(ad::sum(y));
  CHECK(t.grad(x)[0] == doctest::Approx(8.0));
}

TEST_CASE("backward rules") {
  Tape t;
  Var x = t.watch(Tensor::vector({1.0, 2.0}));
  CHECK_THROWS_AS(t.backward(x), ShapeError);
  Var s = ad::sum(x);
  t.backward(s);
  CHECK_THROWS_AS(t.backward(s), Error);
  Tape other;
  Var c = other.constant(Tensor::scalar(1.0));
  CHECK_THROWS_AS(t.backward(c), Error);
  CHECK(t.grad(t.constant(Tensor::vector({0.0, 0.0}))) == Tensor::vector({0.0, 0.0}));
}

TEST_CASE("detach blocks the gradient and replays frozen values") {
  Tape t;
  Var x = t.watch(Tensor::vector({1.0, -2.0}));
  Var y = ad::add(ad::mul(x, ad::detach(x)), x);
  t.backward(ad::sum(y));
  CHECK(t.grad(x) == Tensor::vector({2.0, -1.0}));
  REQUIRE(t.frozen().size() == 1);

  Tape r;
  r.replay(t.frozen());
  Var x2 = r.watch(Tensor::vector({5.0, 5.0}));
  Var d = ad::detach(x2);
  CHECK(d.value() == Tensor::vector({1.0, -2.0}));
  CHECK_THROWS_AS(ad::detach(x2), Error);
}

TEST_CASE("softmax with a huge logit gap") {
  const Tensor p = softmax(Tensor::vector({1000.0, 0.0}));
  CHECK(p[0] == 1.0);
  CHECK(p[1] == doctest::Approx(std::exp(-1000.0)));
  CHECK(p.all_finite());
}

TEST_CASE("cross entropy floors the log") {
  Tape t;
  Var p = t.constant(Tensor::vector({1.0, 0.0}));
  const double ce = ad::cross_entropy(p, Tensor::vector({0.0, 1.0})).value().item();
  CHECK(ce == doctest::Approx(-std::log(ad::kLogFloor)));
  CHECK_THROWS_AS(ad::cross_entropy(p, Tensor::vector({1.0})), ShapeError);
}

TEST_CASE("sigmoid is stable at both tails") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(sigmoid(-800.0) == doctest::Approx(0.0));
  CHECK(std::isfinite(sigmoid(-800.0)));
}

TEST_CASE("gaussian kernel") {
  for (double sigma : {0.3, 1.0, 2.5}) {
    const auto k = gaussian_kernel(sigma);
    const auto r = static_cast<int>(std::ceil(3.0 * sigma));
    CHECK(k.size() == static_cast<std::size_t>(2 * r + 1));
    CHECK(std::accumulate(k.begin(), k.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
    for (int i = 0; i < r; ++i) CHECK(k[static_cast<std::size_t>(i)] == k[k.size() - 1 - static_cast<std::size_t>(i)]);
    // Independent oracle: normalized exp(-x^2 / 2 sigma^2).
    double z = 0.0;
    for (int i = -r; i <= r; ++i) z += std::exp(-i * i / (2.0 * sigma * sigma));
    CHECK(k[static_cast<std::size_t>(r + 1)] == doctest::Approx(std::exp(-1.0 / (2.0 * sigma * sigma)) / z).epsilon(1e-13));
  }
  CHECK(gaussian_kernel(0.01) == gaussian_kernel(kMinSmoothingSigma));
  CHECK_THROWS_AS(gaussian_kernel(0.0), Error);
  CHECK_THROWS_AS(gaussian_kernel(-1.0), Error);
}

TEST_CASE("smoothing an impulse returns the kernel") {
  const auto k = gaussian_kernel(1.0);
  Tensor s(Shape{21});
  s[10] = 1.0;
  const Tensor out = gaussian_smooth_1d(s, 1.0);
  for (std::size_t i = 0; i < 21; ++i) {
    const double expect = (i >= 7 && i <= 13) ? k[i - 7] : 0.0;
    CHECK(out[i] == doctest::Approx(expect).epsilon(1e-15));
  }
  // Constant signals are preserved, including at the reflected edges.
  const Tensor flat = gaussian_smooth_1d(Tensor(Shape{5}, 0.7), 2.0);
  for (double v : flat.values()) CHECK(v == doctest::Approx(0.7).epsilon(1e-14));
}

TEST_CASE("reflect index mirrors about the end samples") {
  CHECK(reflect_index(-1, 5) == 1);
  CHECK(reflect_index(-2, 5) == 2);
  CHECK(reflect_index(5, 5) == 3);
  CHECK(reflect_index(6, 5) == 2);
  CHECK(reflect_index(-9, 5) == 1);
  CHECK(reflect_index(3, 1) == 0);
  for (std::ptrdiff_t i = -20; i < 25; ++i) CHECK(reflect_index(i, 4) < 4);
}

TEST_CASE("degenerate pooling window") {
  Tape t;
  Var x = t.constant(Tensor::matrix(2, 1, {1.0, 2.0}));
  Var w = t.constant(Tensor::vector({0.0, 0.0}));
  CHECK_THROWS_AS(ad::weighted_mean_rows(x, w, 0, 1), DegenerateWindowError);
  CHECK(ad::weighted_mean_rows(x, w, 0, 1, 1e-10).value()[0] == 0.0);
}
