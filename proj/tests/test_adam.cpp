#include "doctest.h"

#include <cmath>
#include <limits>

#include "actshuf/adam.hpp"

using namespace actshuf;

TEST_CASE("three steps follow the bias-corrected recurrence") {
  Tensor p = Tensor::vector({1.0, -2.0});
  std::vector<ParamRef> params{{"p", &p}};
  AdamConfig cfg{0.1, 0.9, 0.999, 1e-8};
  AdamState state = make_adam_state(params, cfg);
  const double grads[3][2] = {{0.5, -1.0}, {0.2, 0.0}, {-0.3, 4.0}};

  double ref[2] = {1.0, -2.0}, m[2] = {0, 0}, v[2] = {0, 0};
  for (int step = 1; step <= 3; ++step) {
    adam_step(params, {Tensor::vector({grads[step - 1][0], grads[step - 1][1]})}, state);
    for (int i = 0; i < 2; ++i) {
      const double g = grads[step - 1][i];
      m[i] = 0.9 * m[i] + 0.1 * g;
      v[i] = 0.999 * v[i] + 0.001 * g * g;
      const double mh = m[i] / (1 - std::pow(0.9, step));
      const double vh = v[i] / (1 - std::pow(0.999, step));
      ref[i] -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
      CHECK(p[static_cast<std::size_t>(i)] == doctest::Approx(ref[i]).epsilon(1e-14));
    }
  }
  CHECK(state.step == 3);
}

TEST_CASE("the first step moves each coordinate by about the learning rate") {
  Tensor p = Tensor::vector({0.0, 0.0, 0.0});
  std::vector<ParamRef> params{{"p", &p}};
  AdamState state = make_adam_state(params, {});
  adam_step(params, {Tensor::vector({3.0, -1e-3, 0.0})}, state);
  CHECK(p[0] == doctest::Approx(-1e-4).epsilon(1e-6));
  CHECK(p[1] == doctest::Approx(1e-4).epsilon(1e-4));
  CHECK(p[2] == 0.0);
}

TEST_CASE("non-finite gradients leave parameters untouched") {
  Tensor a = Tensor::vector({1.0});
  Tensor b = Tensor::vector({2.0});
  std::vector<ParamRef> params{{"a", &a}, {"b", &b}};
  AdamState state = make_adam_state(params, {});
  const AdamState before = state;
  try {
    adam_step(params, {Tensor::vector({1.0}), Tensor::vector({std::numeric_limits<double>::quiet_NaN()})},
              state);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("b") != std::string::npos);
  }
  CHECK(a[0] == 1.0);
  CHECK(b[0] == 2.0);
  CHECK(state == before);
}

TEST_CASE("shape mismatches are rejected") {
  Tensor a = Tensor::vector({1.0, 2.0});
  std::vector<ParamRef> params{{"a", &a}};
  AdamState state = make_adam_state(params, {});
  CHECK_THROWS_AS(adam_step(params, {Tensor::vector({1.0})}, state), ShapeError);
  CHECK_THROWS(adam_step(params, {}, state));
}
