#include "actshuf/adversarial.hpp"

#include <algorithm>
#include <cmath>

namespace actshuf {

Perturbation fgsm(const Tensor& x, const ScratchLoss& loss_fn, double epsilon) {
  Perturbation out{Tensor::zeros_like(x), epsilon};
  if (epsilon == 0.0) return out;
  Tape scratch;
  Var xv = scratch.watch(x);
  scratch.backward(loss_fn(scratch, xv));
  const Tensor g = scratch.grad(xv);
  if (!g.all_finite()) throw Error("fgsm: non-finite input gradient");
  for (std::size_t i = 0; i < g.size(); ++i) {
    out.delta[i] = g[i] > 0 ? epsilon : (g[i] < 0 ? -epsilon : 0.0);
  }
  return out;
}

namespace {

// x + frozen delta on the main tape.
Var perturbed(Var x, const Perturbation& p) {
  if (p.epsilon == 0.0) return x;
  Tape& tape = x.tape();
  return ad::add(x, tape.constant(tape.freeze(p.delta)));
}

Var perturbed_ce(Var x, const Tensor& target, Var classifier_weights, double epsilon) {
  const Tensor w = classifier_weights.value();
  const Perturbation p = fgsm(
      x.value(),
      [&](Tape& t, Var xs) {
        return ad::cross_entropy(class_probabilities(xs, t.constant(w)), target);
      },
      epsilon);
  return ad::cross_entropy(class_probabilities(perturbed(x, p), classifier_weights), target);
}

}  // namespace

Var global_adv_loss(Var action_feature, Var background_feature, const Tensor& target,
                    double alpha, Var classifier_weights, double epsilon) {
  const int num_classes = static_cast<int>(target.size()) - 1;
  Var la = perturbed_ce(action_feature, target, classifier_weights, epsilon);
  if (alpha == 0.0) return la;
  Var lb = perturbed_ce(background_feature, VideoLabel::background(num_classes),
                        classifier_weights, epsilon);
  return ad::add(la, ad::scale(lb, alpha));
}

namespace {

// -CE(p(u + du), stopgrad p(v + dv)); du and dv ascend f = -CE with respect to
// their own argument, the other one held fixed.
Var pair_term(Var u, Var v, Var classifier_weights, const LocalAdvOptions& opt) {
  const Tensor w = classifier_weights.value();
  const Tensor u0 = u.value();
  const Tensor v0 = v.value();
  Perturbation du{Tensor::zeros_like(u0), 0.0};
  Perturbation dv{Tensor::zeros_like(v0), 0.0};
  if (opt.epsilon != 0.0) {
    du = fgsm(
        u0,
        [&](Tape& t, Var us) {
          Var wc = t.constant(w);
          const Tensor target = class_probabilities(t.constant(v0), wc).value();
          return ad::scale(ad::cross_entropy(class_probabilities(us, wc), target), -1.0);
        },
        opt.epsilon);
    dv = fgsm(
        v0,
        [&](Tape& t, Var vs) {
          Var wc = t.constant(w);
          Var pu = class_probabilities(t.constant(u0), wc);
          Var pv = class_probabilities(vs, wc);
          // -CE(pu, pv) = sum_c pv_c log pu_c, differentiated through pv.
          Tensor log_pu = Tensor::zeros_like(pu.value());
          for (std::size_t i = 0; i < log_pu.size(); ++i) {
            log_pu[i] = std::log(std::max(pu.value()[i], ad::kLogFloor));
          }
          return ad::sum(ad::mul(pv, t.constant(log_pu)));
        },
        opt.epsilon);
  }
  Var target = ad::detach(class_probabilities(perturbed(v, dv), classifier_weights));
  Var pred = class_probabilities(perturbed(u, du), classifier_weights);
  Var neg_ce = ad::scale(ad::cross_entropy(pred, target.value()), -1.0);
  return ad::clamp_min(neg_ce, opt.pair_floor);
}

}  // namespace

std::vector<LocalPair> local_adv_pairs(const SegmentSet& segments, Var frames, Var lambda,
                                       Var classifier_weights, const LocalAdvOptions& options) {
  std::vector<LocalPair> out;
  const std::size_t m = segments.actions.size();
  if (segments.backgrounds.size() != m + 1) throw Error("segment set is not tiled");
  for (std::size_t i = 0; i < m; ++i) {
    const Interval act = segments.actions[i];
    const Interval before = segments.backgrounds[i];
    const Interval after = segments.backgrounds[i + 1];
    Var xa = pool_action(frames, lambda, act, options.stabilizer);
    if (before.end > before.start) {
      Var xb = pool_action(frames, lambda, before, options.stabilizer);
      out.push_back({before, act, pair_term(xb, xa, classifier_weights, options)});
    }
    if (after.end > after.start) {
      Var xb = pool_action(frames, lambda, after, options.stabilizer);
      out.push_back({act, after, pair_term(xa, xb, classifier_weights, options)});
    }
  }
  return out;
}

Var local_adv_loss(const SegmentSet& segments, Var frames, Var lambda, Var classifier_weights,
                   const LocalAdvOptions& options) {
  const std::vector<LocalPair> pairs =
      local_adv_pairs(segments, frames, lambda, classifier_weights, options);
  if (pairs.empty()) return frames.tape().constant(Tensor::scalar(0.0));
  Var total = pairs.front().value;
  for (std::size_t i = 1; i < pairs.size(); ++i) total = ad::add(total, pairs[i].value);
  return total;
}

Var adv_loss(Var global, Var local, double beta) {
  return ad::add(global, ad::scale(local, beta));
}

}  // namespace actshuf
