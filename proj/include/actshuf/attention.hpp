#pragma once

// Attention-based representation learning: per-frame attention, action and
// background pooling, the video classifier and its loss, temporal class
// activation maps (TCAM), the self-guided loss and attention segmentation.

#include <span>
#include <vector>

#include "actshuf/data.hpp"
#include "actshuf/model.hpp"

namespace actshuf {

/// lambda_t = sigmoid(MLP(x_t)) for every frame; returns a length-T vector.
Var compute_attention(Var frames, const AttentionVars& net);
/// Tape-free evaluation of the same network.
Tensor compute_attention(const Tensor& frames, const AttentionNetParams& net);

/// Attention-weighted mean of frames in `window` (1-based, inclusive).
/// Throws DegenerateWindowError when the weights sum to zero and
/// `stabilizer` is 0; a positive stabilizer is added to the denominator.
Var pool_action(Var frames, Var lambda, Interval window, double stabilizer = 0.0);
/// Same with weights 1 - lambda_t.
Var pool_background(Var frames, Var lambda, Interval window, double stabilizer = 0.0);

/// softmax(W x) over the C+1 classes.
Var class_probabilities(Var feature, Var classifier_weights);

/// CE(p(x_a), y) + alpha * CE(p(x_b), background). `target` is the normalized
/// video label distribution.
Var classification_loss(Var action_feature, Var background_feature, const Tensor& target,
                        double alpha, Var classifier_weights);

struct TcamConfig {
  double sigma_s = 1.0;
  double tau_loc = 0.5;
  double tau_att = 0.5;
};

struct Tcam {
  Tensor action;      // smoothed softmax mass of the selected classes
  Tensor background;  // smoothed softmax mass of all C action classes
};

/// Row-wise softmax(W x_t); T x (C+1).
Tensor frame_class_probabilities(const Tensor& frames, const Tensor& classifier_weights);
/// `classes` are 1-based action ids (ground truth while training, predicted
/// classes at test time).
Tcam compute_tcam(const Tensor& frames, const Tensor& classifier_weights,
                  const std::vector<int>& classes, double sigma_s);
/// Action classes whose video-level probability exceeds 1/(C+1).
std::vector<int> predicted_classes(const Tensor& video_probabilities);

/// (1/T) sum_t |lambda_t - a_t| + |lambda_t - b_t|; the TCAMs are constants.
Var self_guided_loss(Var lambda, const Tensor& tcam_action, const Tensor& tcam_background);

/// Actions are maximal runs of lambda_t >= tau of at least max(min_len, 2)
/// frames. Backgrounds are [e_{i-1}, s_i] with e_0 = 1 and s_{m+1} = T, so
/// consecutive intervals share their boundary frame.
struct SegmentSet {
  int length = 0;
  std::vector<Interval> actions;
  std::vector<Interval> backgrounds;
};

SegmentSet segment_by_attention(std::span<const double> lambda, double tau_att, int min_len);

}  // namespace actshuf
