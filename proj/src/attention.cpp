#include "actshuf/attention.hpp"

#include <algorithm>
#include <cmath>

#include "actshuf/kernels.hpp"

namespace actshuf {

Var compute_attention(Var frames, const AttentionVars& net) {
  Var hidden = ad::relu(ad::linear(frames, net.w1, net.b1));
  Var logits = ad::linear(hidden, net.w2, net.b2);  // T x 1
  return ad::sigmoid(ad::reshape(logits, Shape{frames.value().rows()}));
}

Tensor compute_attention(const Tensor& frames, const AttentionNetParams& net) {
  const std::size_t t = frames.rows();
  const std::size_t d = frames.cols();
  const std::size_t h = net.w1.rows();
  if (net.w1.cols() != d) {
    throw ShapeError("attention: W1 is " + shape_to_string(net.w1.shape()) + " but frames have d=" +
                     std::to_string(d));
  }
  Tensor hidden(Shape{t, h});
  kernels::linear_forward({t, d, h}, frames.values(), net.w1.values(), net.b1.values(),
                          hidden.values());
  for (double& v : hidden.values()) v = v > 0 ? v : 0.0;
  Tensor logits(Shape{t});
  kernels::linear_forward({t, h, 1}, hidden.values(), net.w2.values(), net.b2.values(),
                          logits.values());
  for (double& v : logits.values()) v = sigmoid(v);
  return logits;
}

namespace {

std::pair<std::size_t, std::size_t> window_rows(Interval w, std::size_t length) {
  if (w.start < 1 || w.end < w.start || static_cast<std::size_t>(w.end) > length) {
    throw ShapeError("pooling window [" + std::to_string(w.start) + ", " + std::to_string(w.end) +
                     "] outside a video of " + std::to_string(length) + " frames");
  }
  return {static_cast<std::size_t>(w.start - 1), static_cast<std::size_t>(w.end - 1)};
}

}  // namespace

Var pool_action(Var frames, Var lambda, Interval window, double stabilizer) {
  const auto [first, last] = window_rows(window, frames.value().rows());
  return ad::weighted_mean_rows(frames, lambda, first, last, stabilizer);
}

Var pool_background(Var frames, Var lambda, Interval window, double stabilizer) {
  const auto [first, last] = window_rows(window, frames.value().rows());
  return ad::weighted_mean_rows(frames, ad::one_minus(lambda), first, last, stabilizer);
}

Var class_probabilities(Var feature, Var classifier_weights) {
  return ad::softmax(ad::matvec(classifier_weights, feature));
}

Var classification_loss(Var action_feature, Var background_feature, const Tensor& target,
                        double alpha, Var classifier_weights) {
  const int num_classes = static_cast<int>(target.size()) - 1;
  Var la = ad::cross_entropy(class_probabilities(action_feature, classifier_weights), target);
  if (alpha == 0.0) return la;
  Var lb = ad::cross_entropy(class_probabilities(background_feature, classifier_weights),
                             VideoLabel::background(num_classes));
  return ad::add(la, ad::scale(lb, alpha));
}

Tensor frame_class_probabilities(const Tensor& frames, const Tensor& classifier_weights) {
  const std::size_t t = frames.rows();
  const std::size_t d = frames.cols();
  const std::size_t k = classifier_weights.rows();
  if (classifier_weights.cols() != d) {
    throw ShapeError("classifier is " + shape_to_string(classifier_weights.shape()) +
                     " but frames have d=" + std::to_string(d));
  }
  Tensor scores(Shape{t, k});
  kernels::linear_forward({t, d, k}, frames.values(), classifier_weights.values(), {},
                          scores.values());
  Tensor probs(Shape{t, k});
  kernels::row_softmax(t, k, scores.values(), probs.values());
  return probs;
}

Tcam compute_tcam(const Tensor& frames, const Tensor& classifier_weights,
                  const std::vector<int>& classes, double sigma_s) {
  const Tensor probs = frame_class_probabilities(frames, classifier_weights);
  const std::size_t t = probs.rows();
  const std::size_t k = probs.cols();
  const std::size_t num_actions = k - 1;
  Tensor action(Shape{t});
  Tensor background(Shape{t});
  for (std::size_t i = 0; i < t; ++i) {
    double labeled = 0.0;
    for (int c : classes) {
      if (c < 1 || static_cast<std::size_t>(c) > num_actions) {
        throw Error("TCAM class " + std::to_string(c) + " outside [1, " +
                    std::to_string(num_actions) + "]");
      }
      labeled += probs.at(i, static_cast<std::size_t>(c - 1));
    }
    double all = 0.0;
    for (std::size_t c = 0; c < num_actions; ++c) all += probs.at(i, c);
    action[i] = labeled;
    background[i] = all;
  }
  return {gaussian_smooth_1d(action, sigma_s), gaussian_smooth_1d(background, sigma_s)};
}

std::vector<int> predicted_classes(const Tensor& video_probabilities) {
  const std::size_t k = video_probabilities.size();
  const double cutoff = 1.0 / static_cast<double>(k);
  std::vector<int> out;
  for (std::size_t c = 0; c + 1 < k; ++c) {
    if (video_probabilities[c] > cutoff) out.push_back(static_cast<int>(c + 1));
  }
  return out;
}

Var self_guided_loss(Var lambda, const Tensor& tcam_action, const Tensor& tcam_background) {
  if (tcam_action.shape() != lambda.shape() || tcam_background.shape() != lambda.shape()) {
    throw ShapeError("self-guided loss: attention " + shape_to_string(lambda.shape()) +
                     ", TCAMs " + shape_to_string(tcam_action.shape()) + " and " +
                     shape_to_string(tcam_background.shape()));
  }
  Tape& tape = lambda.tape();
  Var a = tape.constant(tcam_action);
  Var b = tape.constant(tcam_background);
  Var per_frame = ad::add(ad::abs(ad::sub(lambda, a)), ad::abs(ad::sub(lambda, b)));
  return ad::mean(per_frame);
}

SegmentSet segment_by_attention(std::span<const double> lambda, double tau_att, int min_len) {
  SegmentSet out;
  out.length = static_cast<int>(lambda.size());
  const int keep = std::max(min_len, 2);
  const int t = out.length;
  int i = 0;
  while (i < t) {
    if (lambda[static_cast<std::size_t>(i)] < tau_att) {
      ++i;
      continue;
    }
    int j = i;
    while (j + 1 < t && lambda[static_cast<std::size_t>(j + 1)] >= tau_att) ++j;
    if (j - i + 1 >= keep) out.actions.push_back({i + 1, j + 1});
    i = j + 1;
  }
  int prev_end = 1;
  for (const Interval& a : out.actions) {
    out.backgrounds.push_back({prev_end, a.start});
    prev_end = a.end;
  }
  out.backgrounds.push_back({prev_end, std::max(t, 1)});
  return out;
}

}  // namespace actshuf
