#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "actshuf/localize.hpp"

namespace actshuf {

/// Overlap over union with interval measure e - s.
double iou(Interval a, Interval b);

struct GroundTruthRef {
  std::string video_id;
  Interval interval;
};

/// Non-interpolated AP for one class: detections ranked by score (stable on
/// ties), each greedily matched to the unmatched ground truth of its video with
/// the highest IoU; a match counts when IoU >= threshold. Requires at least one
/// ground truth.
double average_precision(const std::vector<Detection>& detections,
                         const std::vector<GroundTruthRef>& ground_truth, double threshold);

std::vector<double> thumos_thresholds();       // 0.1:0.1:0.9
std::vector<double> activitynet_thresholds();  // 0.5:0.05:0.95

struct EvalReport {
  std::vector<double> thresholds;
  std::vector<int> classes;          // classes that entered the mean
  std::vector<int> skipped_classes;  // no ground truth
  std::vector<std::vector<double>> ap;  // [class index][threshold index]
  std::vector<double> map;              // per threshold
  double average_map = 0.0;

  double map_at(double threshold) const;
};

EvalReport evaluate(const DetectionSet& detections, const Dataset& ground_truth,
                    const std::vector<double>& thresholds);
EvalReport evaluate(const DetectionSet& detections, const DatasetManifest& ground_truth,
                    const std::vector<double>& thresholds);

void write_report_json(const EvalReport& report, const std::filesystem::path& path);
void write_report_csv(const EvalReport& report, const std::filesystem::path& path);
std::string format_report(const EvalReport& report);

}  // namespace actshuf
