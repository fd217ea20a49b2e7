#include "actshuf/intra_shuffle.hpp"

#include <algorithm>
#include <numeric>

namespace actshuf {

int default_clip_len(int segment_frames, int num_clips) {
  return std::max(2, segment_frames / (2 * num_clips - 1));
}

std::optional<ClipLayout> layout_clips(Interval segment, int num_clips, int clip_len) {
  if (num_clips < 1 || clip_len < 1) throw Error("clip layout needs N >= 1 and clip_len >= 1");
  const int frames = segment.frames();
  if (frames < num_clips * clip_len + (num_clips - 1)) return std::nullopt;
  ClipLayout out{segment, clip_len, {}};
  const int spare = frames - num_clips * clip_len;
  const int gaps = std::max(num_clips - 1, 1);
  for (int k = 0; k < num_clips; ++k) {
    const int start = segment.start + k * clip_len + (k * spare) / gaps;
    out.clips.push_back({start, start + clip_len - 1});
  }
  return out;
}

std::vector<Var> clip_features(Var frames, Var lambda, const ClipLayout& layout,
                               double stabilizer) {
  std::vector<Var> out;
  out.reserve(layout.clips.size());
  for (const Interval& clip : layout.clips) {
    out.push_back(pool_action(frames, lambda, clip, stabilizer));
  }
  return out;
}

std::uint64_t perm_encode(const std::vector<int>& order) {
  const int n = static_cast<int>(order.size());
  std::vector<bool> seen(order.size(), false);
  for (int v : order) {
    if (v < 0 || v >= n || seen[static_cast<std::size_t>(v)]) {
      throw Error("perm_encode: not a permutation of 0.." + std::to_string(n - 1));
    }
    seen[static_cast<std::size_t>(v)] = true;
  }
  std::uint64_t index = 0;
  for (int i = 0; i < n; ++i) {
    int smaller_after = 0;
    for (int j = i + 1; j < n; ++j) {
      if (order[static_cast<std::size_t>(j)] < order[static_cast<std::size_t>(i)]) ++smaller_after;
    }
    index = index * static_cast<std::uint64_t>(n - i) + static_cast<std::uint64_t>(smaller_after);
  }
  return index;
}

std::vector<int> perm_decode(std::uint64_t index, int n) {
  if (n < 1) throw Error("perm_decode: n must be >= 1");
  if (index >= factorial(n)) {
    throw Error("perm_decode: index " + std::to_string(index) + " outside [0, " +
                std::to_string(n) + "!)");
  }
  std::vector<int> digits(static_cast<std::size_t>(n));
  for (int i = n - 1; i >= 0; --i) {
    const auto radix = static_cast<std::uint64_t>(n - i);
    digits[static_cast<std::size_t>(i)] = static_cast<int>(index % radix);
    index /= radix;
  }
  std::vector<int> items(static_cast<std::size_t>(n));
  std::iota(items.begin(), items.end(), 0);
  std::vector<int> order;
  order.reserve(items.size());
  for (int d : digits) {
    order.push_back(items[static_cast<std::size_t>(d)]);
    items.erase(items.begin() + d);
  }
  return order;
}

Permutation random_permutation(int n, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::uint64_t> pick(0, factorial(n) - 1);
  const std::uint64_t label = pick(rng);
  return {perm_decode(label, n), label};
}

std::vector<Var> shuffle_clips(const std::vector<Var>& clips, const Permutation& perm) {
  if (perm.order.size() != clips.size()) throw Error("permutation size does not match clip count");
  std::vector<Var> tuple;
  tuple.reserve(clips.size());
  for (int idx : perm.order) tuple.push_back(clips[static_cast<std::size_t>(idx)]);
  return tuple;
}

Var predict_order(const std::vector<Var>& tuple, const OrderVars& net) {
  if (static_cast<int>(tuple.size()) != net.num_clips) {
    throw Error("order prediction expects " + std::to_string(net.num_clips) + " clips, got " +
                std::to_string(tuple.size()));
  }
  std::vector<Var> relations;
  for (std::size_t k = 0; k < tuple.size(); ++k) {
    for (std::size_t j = k + 1; j < tuple.size(); ++j) {
      relations.push_back(
          ad::relu(ad::matvec_add(net.w1, ad::concat({tuple[k], tuple[j]}), net.b1)));
    }
  }
  return ad::softmax(ad::matvec_add(net.w2, ad::concat(relations), net.b2));
}

Var intra_loss(const std::vector<Var>& predictions, const std::vector<std::uint64_t>& labels) {
  if (predictions.empty()) throw Error("intra_loss over zero clip sets");
  if (predictions.size() != labels.size()) throw Error("intra_loss: predictions/labels length mismatch");
  Var total;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    Tensor target(Shape{predictions[i].size()});
    if (labels[i] >= target.size()) throw Error("order label outside the prediction range");
    target[labels[i]] = 1.0;
    Var ce = ad::cross_entropy(predictions[i], target);
    total = total.valid() ? ad::add(total, ce) : ce;
  }
  return ad::scale(total, 1.0 / static_cast<double>(predictions.size()));
}

}  // namespace actshuf
