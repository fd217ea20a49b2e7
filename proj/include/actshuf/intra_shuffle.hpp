#pragma once

// Self-supervised clip order prediction inside action segments.

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "actshuf/attention.hpp"

namespace actshuf {

/// N equal-length clips spread across a segment with gaps of at least one
/// frame between neighbours; the first clip starts at the segment start and
/// the last one ends at the segment end.
struct ClipLayout {
  Interval source;
  int clip_len = 0;
  std::vector<Interval> clips;
};

/// max(2, floor(segment_frames / (2N - 1))).
int default_clip_len(int segment_frames, int num_clips);

/// Returns nullopt when the segment is shorter than N * clip_len + (N - 1).
std::optional<ClipLayout> layout_clips(Interval segment, int num_clips, int clip_len);

/// Attention-pooled feature of every clip, in temporal order.
std::vector<Var> clip_features(Var frames, Var lambda, const ClipLayout& layout,
                               double stabilizer = 0.0);

/// A shuffled clip order: position j of the tuple holds clip order[j].
struct Permutation {
  std::vector<int> order;
  std::uint64_t label = 0;
};

/// Lehmer-code rank in [0, N!); the identity maps to 0.
std::uint64_t perm_encode(const std::vector<int>& order);
std::vector<int> perm_decode(std::uint64_t index, int n);
Permutation random_permutation(int n, std::mt19937_64& rng);

/// Clip features arranged as the shuffled tuple.
std::vector<Var> shuffle_clips(const std::vector<Var>& clips, const Permutation& perm);

/// softmax(W2 (concat over tuple positions k < j of ReLU(W1 (x_k || x_j) + b1)) + b2).
Var predict_order(const std::vector<Var>& tuple, const OrderVars& net);

/// Mean cross-entropy of each prediction against its one-hot order label.
Var intra_loss(const std::vector<Var>& predictions, const std::vector<std::uint64_t>& labels);

}  // namespace actshuf
