#pragma once

// FGSM perturbations and the global/local adversarial losses.
//
// Every perturbation is computed on its own scratch tape and enters the main
// objective as a frozen constant: no second-order terms flow through delta.

#include <functional>
#include <vector>

#include "actshuf/attention.hpp"

namespace actshuf {

struct Perturbation {
  Tensor delta;  // entries in {-eps, 0, +eps}
  double epsilon = 0.0;
};

/// Objective evaluated on a scratch tape at a watched input.
using ScratchLoss = std::function<Var(Tape& scratch, Var x)>;

/// delta = epsilon * sign(grad_x f(x)), sign(0) = 0. Throws on a non-finite
/// gradient.
Perturbation fgsm(const Tensor& x, const ScratchLoss& loss_fn, double epsilon);

/// CE(p(x_a + d_a), y) + alpha * CE(p(x_b + d_b), background); each d is the
/// FGSM ascent step of its own term. With epsilon = 0 this is exactly the
/// plain classification loss.
Var global_adv_loss(Var action_feature, Var background_feature, const Tensor& target,
                    double alpha, Var classifier_weights, double epsilon);

struct LocalAdvOptions {
  double epsilon = 0.001;
  /// Lower clamp on every pair term; minimizing -CE is otherwise unbounded.
  double pair_floor = -10.0;
  double stabilizer = 0.0;
};

/// One adjacent action/background pair: -CE(p(prediction), p(target)) with
/// the target distribution detached.
struct LocalPair {
  Interval prediction;
  Interval target;
  Var value;
};

/// Pair terms for every action i: (background before -> action) and
/// (action -> background after). All segments use attention pooling.
/// Zero-length edge backgrounds contribute no pair.
std::vector<LocalPair> local_adv_pairs(const SegmentSet& segments, Var frames, Var lambda,
                                       Var classifier_weights, const LocalAdvOptions& options);

/// Sum of local_adv_pairs; a constant 0 when there are no actions.
Var local_adv_loss(const SegmentSet& segments, Var frames, Var lambda, Var classifier_weights,
                   const LocalAdvOptions& options);

/// global + beta * local.
Var adv_loss(Var global, Var local, double beta);

}  // namespace actshuf
