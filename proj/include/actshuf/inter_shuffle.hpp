#pragma once

// Training-set self-augmentation: predicted action segments of one class are
// inflated, pooled per class and concatenated into new labeled videos.

#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "actshuf/attention.hpp"

namespace actshuf {

struct PoolEntry {
  std::size_t video_index = 0;  // index into the source dataset
  std::string video_id;
  Interval interval;  // inflated and clamped to [1, T]
};

struct ActionPool {
  int delta = 0;
  std::map<int, std::vector<PoolEntry>> by_class;

  std::size_t size() const;
  bool empty() const { return size() == 0; }
};

struct PoolOptions {
  int delta = 2;
  double tau_att = 0.5;
  int min_len = 3;
};

/// [s - delta, e + delta] clamped to [1, length].
Interval inflate(Interval segment, int delta, int length);

/// Segments every single-label video with the current attention network and
/// indexes the inflated segments by the video's class. Videos are processed
/// in parallel; entries keep dataset order.
ActionPool build_pool(const Dataset& dataset, const AttentionNetParams& attention,
                      const PoolOptions& options);

/// Same, from precomputed per-video attention (one vector per video).
ActionPool build_pool(const Dataset& dataset, const std::vector<Tensor>& attention,
                      const PoolOptions& options);

/// A synthesized training video: rows copied verbatim from pooled slices.
struct GeneratedVideo {
  FeatureSequence features;
  int class_id = 0;
  std::vector<Provenance> provenance;
};

/// Concatenates `num_segments` pool entries of `class_id`, drawn uniformly with
/// replacement, in draw order.
GeneratedVideo synthesize_video(const ActionPool& pool, const Dataset& dataset, int class_id,
                                int num_segments, std::mt19937_64& rng, std::string video_id);

struct AugmentOptions {
  int factor = 3;
  int min_segments = 2;
  int max_segments = 5;
};

/// factor x |dataset| generated videos. Classes with a non-empty pool are
/// assigned round-robin from a shuffled class order, so class counts differ
/// by at most one.
std::vector<GeneratedVideo> augment_training_set(const Dataset& dataset, const ActionPool& pool,
                                                 const AugmentOptions& options,
                                                 std::mt19937_64& rng);

/// The generated videos as labeled dataset entries with provenance.
Dataset as_dataset(const std::vector<GeneratedVideo>& generated, int num_classes);

/// Classification loss on a generated video with its single-class label.
Var inter_loss(Var frames, const AttentionVars& attention, Var classifier_weights, int class_id,
               int num_classes, double alpha, double stabilizer = 0.0);

}  // namespace actshuf
