#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "actshuf/attention.hpp"

namespace actshuf {

struct LocalizeConfig {
  double sigma_s = 1.0;
  /// Relative mode: threshold = tau_loc * max activation of the class in the
  /// video. Absolute mode: threshold = tau_loc.
  double tau_loc = 0.5;
  bool relative_threshold = true;
  int min_len = 3;
};

struct Detection {
  std::string video_id;
  int start = 1;
  int end = 1;
  int class_id = 1;
  double score = 0.0;
  std::vector<double> probs;  // mean frame class probabilities over the run

  Interval interval() const { return {start, end}; }
};

struct VideoDetections {
  std::string video_id;
  std::vector<Detection> detections;
};

using DetectionSet = std::vector<VideoDetections>;

/// Decodes runs of one video. `frame_probs` is T x (C+1) (unsmoothed);
/// `classes` are the 1-based classes to decode.
VideoDetections decode_from_probabilities(const std::string& video_id, const Tensor& frame_probs,
                                          const std::vector<int>& classes,
                                          const LocalizeConfig& config);

/// Video-level class probabilities softmax(W x_a).
Tensor video_probabilities(const Tensor& frames, const Model& model);

/// Test-time decoding: classes with video probability above 1/(C+1), per-class
/// smoothed activation thresholded into maximal runs.
VideoDetections decode_detections(const FeatureSequence& seq, const Model& model,
                                  const LocalizeConfig& config);

DetectionSet localize(const Dataset& dataset, const Model& model, const LocalizeConfig& config);

/// Smoothed per-class frame activations, T x C (no background column).
Tensor class_activations(const FeatureSequence& seq, const Model& model, double sigma_s);

void write_detections(const DetectionSet& dets, const std::filesystem::path& path);
DetectionSet read_detections(const std::filesystem::path& path);
/// One row per frame: frame, attention, then the activation of each class.
void write_activation_csv(const FeatureSequence& seq, const Model& model, double sigma_s,
                          const std::filesystem::path& path);

}  // namespace actshuf
