#include "actshuf/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace actshuf {

double iou(Interval a, Interval b) {
  const double inter = std::max(0, std::min(a.end, b.end) - std::max(a.start, b.start));
  const double uni = (a.end - a.start) + (b.end - b.start) - inter;
  if (uni <= 0.0) return a.start == b.start && a.end == b.end ? 1.0 : 0.0;
  return inter / uni;
}

double average_precision(const std::vector<Detection>& detections,
                         const std::vector<GroundTruthRef>& ground_truth, double threshold) {
  if (ground_truth.empty()) throw Error("average_precision: no ground truth");
  std::map<std::string, std::vector<std::size_t>> by_video;
  for (std::size_t g = 0; g < ground_truth.size(); ++g) {
    by_video[ground_truth[g].video_id].push_back(g);
  }
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].score > detections[b].score;
  });
  std::vector<bool> matched(ground_truth.size(), false);
  double tp = 0.0;
  double sum = 0.0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const Detection& d = detections[order[rank]];
    const auto it = by_video.find(d.video_id);
    if (it == by_video.end()) continue;
    double best = -1.0;
    std::size_t best_g = 0;
    for (std::size_t g : it->second) {
      if (matched[g]) continue;
      const double o = iou(d.interval(), ground_truth[g].interval);
      if (o > best) {
        best = o;
        best_g = g;
      }
    }
    if (best >= threshold) {
      matched[best_g] = true;
      tp += 1.0;
      sum += tp / static_cast<double>(rank + 1);
    }
  }
  return sum / static_cast<double>(ground_truth.size());
}

std::vector<double> thumos_thresholds() {
  std::vector<double> t;
  for (int k = 1; k <= 9; ++k) t.push_back(k / 10.0);
  return t;
}

std::vector<double> activitynet_thresholds() {
  std::vector<double> t;
  for (int k = 0; k < 10; ++k) t.push_back((50 + 5 * k) / 100.0);
  return t;
}

double EvalReport::map_at(double threshold) const {
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (std::abs(thresholds[i] - threshold) < 1e-9) return map[i];
  }
  throw Error("threshold " + std::to_string(threshold) + " not evaluated");
}

namespace {

EvalReport evaluate_impl(const DetectionSet& detections,
                         const std::map<int, std::vector<GroundTruthRef>>& gt, int num_classes,
                         const std::vector<double>& thresholds) {
  if (thresholds.empty()) throw Error("evaluate: no IoU thresholds");
  EvalReport report;
  report.thresholds = thresholds;
  std::map<int, std::vector<Detection>> by_class;
  for (const VideoDetections& v : detections) {
    for (const Detection& d : v.detections) by_class[d.class_id].push_back(d);
  }
  for (int c = 1; c <= num_classes; ++c) {
    const auto it = gt.find(c);
    if (it == gt.end() || it->second.empty()) {
      report.skipped_classes.push_back(c);
      continue;
    }
    const std::vector<Detection>& dets = by_class[c];
    std::vector<double> row;
    for (double t : thresholds) row.push_back(average_precision(dets, it->second, t));
    report.classes.push_back(c);
    report.ap.push_back(std::move(row));
  }
  report.map.assign(thresholds.size(), 0.0);
  if (!report.classes.empty()) {
    for (std::size_t k = 0; k < thresholds.size(); ++k) {
      double s = 0.0;
      for (const auto& row : report.ap) s += row[k];
      report.map[k] = s / static_cast<double>(report.classes.size());
    }
  }
  report.average_map = std::accumulate(report.map.begin(), report.map.end(), 0.0) /
                       static_cast<double>(report.map.size());
  return report;
}

}  // namespace

EvalReport evaluate(const DetectionSet& detections, const Dataset& ground_truth,
                    const std::vector<double>& thresholds) {
  std::map<int, std::vector<GroundTruthRef>> gt;
  for (const Video& v : ground_truth.videos) {
    for (const GroundTruthInterval& g : v.ground_truth) {
      gt[g.class_id].push_back({v.features.video_id, g.interval()});
    }
  }
  return evaluate_impl(detections, gt, ground_truth.num_classes, thresholds);
}

EvalReport evaluate(const DetectionSet& detections, const DatasetManifest& ground_truth,
                    const std::vector<double>& thresholds) {
  std::map<int, std::vector<GroundTruthRef>> gt;
  for (const ManifestEntry& v : ground_truth.videos) {
    for (const GroundTruthInterval& g : v.gt) gt[g.class_id].push_back({v.id, g.interval()});
  }
  return evaluate_impl(detections, gt, ground_truth.num_classes, thresholds);
}

void write_report_json(const EvalReport& report, const std::filesystem::path& path) {
  nlohmann::json j;
  j["thresholds"] = report.thresholds;
  j["map"] = report.map;
  j["average_map"] = report.average_map;
  j["skipped_classes"] = report.skipped_classes;
  nlohmann::json per_class = nlohmann::json::array();
  for (std::size_t i = 0; i < report.classes.size(); ++i) {
    per_class.push_back({{"class", report.classes[i]}, {"ap", report.ap[i]}});
  }
  j["per_class"] = per_class;
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
}

void write_report_csv(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << "class";
  for (double t : report.thresholds) os << ",iou_" << t;
  os << '\n';
  for (std::size_t i = 0; i < report.classes.size(); ++i) {
    os << report.classes[i];
    for (double ap : report.ap[i]) os << ',' << ap;
    os << '\n';
  }
  os << "mAP";
  for (double m : report.map) os << ',' << m;
  os << '\n';
}

std::string format_report(const EvalReport& report) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  for (std::size_t k = 0; k < report.thresholds.size(); ++k) {
    os << "mAP@" << report.thresholds[k] << " = " << report.map[k] << '\n';
  }
  os << "average mAP = " << report.average_map << '\n';
  if (!report.skipped_classes.empty()) {
    os << "skipped classes (no ground truth):";
    for (int c : report.skipped_classes) os << ' ' << c;
    os << '\n';
  }
  return os.str();
}

}  // namespace actshuf
