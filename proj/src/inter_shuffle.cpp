#include "actshuf/inter_shuffle.hpp"

#include <algorithm>
#include <numeric>

namespace actshuf {

std::size_t ActionPool::size() const {
  std::size_t n = 0;
  for (const auto& [cls, entries] : by_class) n += entries.size();
  return n;
}

Interval inflate(Interval segment, int delta, int length) {
  return {std::max(1, segment.start - delta), std::min(length, segment.end + delta)};
}

ActionPool build_pool(const Dataset& dataset, const AttentionNetParams& attention,
                      const PoolOptions& options) {
  std::vector<Tensor> lambdas(dataset.videos.size());
  const auto n = static_cast<std::ptrdiff_t>(dataset.videos.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const Video& v = dataset.videos[static_cast<std::size_t>(i)];
    if (v.label.single_class()) lambdas[static_cast<std::size_t>(i)] = compute_attention(v.features.frames, attention);
  }
  return build_pool(dataset, lambdas, options);
}

ActionPool build_pool(const Dataset& dataset, const std::vector<Tensor>& attention,
                      const PoolOptions& options) {
  if (attention.size() != dataset.videos.size()) {
    throw Error("build_pool: one attention vector per video is required");
  }
  ActionPool pool;
  pool.delta = options.delta;
  for (std::size_t i = 0; i < dataset.videos.size(); ++i) {
    const Video& v = dataset.videos[i];
    if (!v.label.single_class()) continue;
    const int length = static_cast<int>(v.features.length());
    const SegmentSet segs =
        segment_by_attention(attention[i].values(), options.tau_att, options.min_len);
    auto& entries = pool.by_class[v.label.classes.front()];
    for (const Interval& a : segs.actions) {
      entries.push_back({i, v.features.video_id, inflate(a, options.delta, length)});
    }
  }
  return pool;
}

GeneratedVideo synthesize_video(const ActionPool& pool, const Dataset& dataset, int class_id,
                                int num_segments, std::mt19937_64& rng, std::string video_id) {
  const auto it = pool.by_class.find(class_id);
  if (it == pool.by_class.end() || it->second.empty()) {
    throw Error("no pooled segments for class " + std::to_string(class_id));
  }
  if (num_segments < 1) throw Error("synthesize_video needs at least one segment");
  const auto& entries = it->second;
  std::uniform_int_distribution<std::size_t> pick(0, entries.size() - 1);
  GeneratedVideo out;
  out.class_id = class_id;
  std::vector<FeatureSequence> parts;
  for (int k = 0; k < num_segments; ++k) {
    const PoolEntry& e = entries[pick(rng)];
    parts.push_back(slice_features(dataset.videos.at(e.video_index).features, e.interval.start,
                                   e.interval.end));
    out.provenance.push_back({e.video_id, e.interval});
  }
  out.features = concat_features(parts, std::move(video_id));
  return out;
}

std::vector<GeneratedVideo> augment_training_set(const Dataset& dataset, const ActionPool& pool,
                                                 const AugmentOptions& options,
                                                 std::mt19937_64& rng) {
  if (options.factor < 0) throw Error("augment factor must be >= 0");
  if (options.min_segments < 1 || options.max_segments < options.min_segments) {
    throw Error("augment: bad segments-per-video range");
  }
  std::vector<GeneratedVideo> out;
  const std::size_t wanted = static_cast<std::size_t>(options.factor) * dataset.videos.size();
  if (wanted == 0) return out;
  std::vector<int> classes;
  for (const auto& [cls, entries] : pool.by_class) {
    if (!entries.empty()) classes.push_back(cls);
  }
  if (classes.empty()) throw Error("augment: the action pool is empty");
  std::shuffle(classes.begin(), classes.end(), rng);
  std::uniform_int_distribution<int> pick_k(options.min_segments, options.max_segments);
  out.reserve(wanted);
  for (std::size_t n = 0; n < wanted; ++n) {
    const int cls = classes[n % classes.size()];
    const int k = pick_k(rng);
    out.push_back(synthesize_video(pool, dataset, cls, k, rng, "gen_" + std::to_string(n)));
  }
  return out;
}

Dataset as_dataset(const std::vector<GeneratedVideo>& generated, int num_classes) {
  Dataset ds;
  ds.num_classes = num_classes;
  for (const GeneratedVideo& g : generated) {
    Video v;
    v.features = g.features;
    v.label = VideoLabel{num_classes, {g.class_id}};
    v.provenance = g.provenance;
    ds.videos.push_back(std::move(v));
  }
  return ds;
}

Var inter_loss(Var frames, const AttentionVars& attention, Var classifier_weights, int class_id,
               int num_classes, double alpha, double stabilizer) {
  Var lambda = compute_attention(frames, attention);
  const Interval whole{1, static_cast<int>(frames.value().rows())};
  Var xa = pool_action(frames, lambda, whole, stabilizer);
  Var xb = pool_background(frames, lambda, whole, stabilizer);
  return classification_loss(xa, xb, VideoLabel::one_hot(num_classes, class_id), alpha,
                             classifier_weights);
}

}  // namespace actshuf
