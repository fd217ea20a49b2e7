#pragma once

// Shared helpers for the test binaries: random inputs and central-difference
// gradient checks that replay the tape's stop-gradient constants.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "actshuf/trainer.hpp"

namespace testing {

using namespace actshuf;

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = nd(rng);
  return t;
}

inline Tensor random_uniform(Shape shape, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = u(rng);
  return t;
}

inline double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// ||a - n|| / max(||a||, ||n||, floor)
inline double relative_error(const Tensor& analytic, const Tensor& numeric, double floor = 1e-7) {
  std::vector<double> diff(analytic.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = analytic[i] - numeric[i];
  const double denom = std::max({norm(analytic.values()), norm(numeric.values()), floor});
  return norm(diff) / denom;
}

using ModelObjective = std::function<Var(Tape&, const ModelVars&)>;

/// Worst per-tensor relative error between the analytic parameter gradients
/// of `f` and central differences with step h.
inline double model_gradient_error(Model& model, const ModelObjective& f, double h = 1e-5) {
  Tape tape;
  const ModelVars vars = bind(tape, model, true);
  const Var loss = f(tape, vars);
  tape.backward(loss);
  const std::vector<Tensor> frozen = tape.frozen();
  auto eval = [&]() {
    Tape t;
    t.replay(frozen);
    const ModelVars v = bind(t, model, false);
    return f(t, v).value().item();
  };
  std::vector<ParamRef> params = model.params();
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k].value;
    Tensor numeric = Tensor::zeros_like(p);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double old = p[i];
      p[i] = old + h;
      const double up = eval();
      p[i] = old - h;
      const double down = eval();
      p[i] = old;
      numeric[i] = (up - down) / (2.0 * h);
    }
    worst = std::max(worst, relative_error(tape.grad(vars.all[k]), numeric));
  }
  return worst;
}

using InputObjective = std::function<Var(Tape&, Var)>;

/// Same check for the gradient with respect to one input tensor.
inline double input_gradient_error(const Tensor& x, const InputObjective& f, double h = 1e-5) {
  Tape tape;
  const Var xv = tape.watch(x);
  tape.backward(f(tape, xv));
  const std::vector<Tensor> frozen = tape.frozen();
  Tensor numeric = Tensor::zeros_like(x);
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double old = probe[i];
    double vals[2];
    for (int s = 0; s < 2; ++s) {
      probe[i] = old + (s == 0 ? h : -h);
      Tape t;
      t.replay(frozen);
      vals[s] = f(t, t.constant(probe)).value().item();
    }
    probe[i] = old;
    numeric[i] = (vals[0] - vals[1]) / (2.0 * h);
  }
  return relative_error(tape.grad(xv), numeric);
}

/// Small model for gradient checks.
inline Model small_model(int d, int num_classes, std::uint64_t seed, int num_clips = 3) {
  Model m = Model::init({d, num_classes, 6, 4, num_clips}, seed);
  // A zero classifier makes every class gradient identical; perturb it.
  std::mt19937_64 rng(seed + 101);
  m.classifier.weights = random_tensor(m.classifier.weights.shape(), rng, 0.3);
  m.attention.b2 = random_tensor({1}, rng, 0.5);
  return m;
}

/// One synthetic video with clearly separated action and background rows.
inline Dataset small_dataset(int d, int num_classes, int videos, int frames, std::uint64_t seed,
                             int max_actions = 2) {
  SynthConfig sc;
  sc.num_classes = num_classes;
  sc.dim = d;
  sc.num_videos = videos;
  sc.min_frames = frames;
  sc.max_frames = frames;
  sc.max_actions = max_actions;
  sc.min_action_frames = 4;
  sc.action_density = 0.4;
  sc.margin = 2.0;
  sc.noise = 1.0;
  return generate_synthetic(sc, seed);
}

}  // namespace testing
