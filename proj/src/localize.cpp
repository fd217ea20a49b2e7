#include "actshuf/localize.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"

namespace actshuf {

using nlohmann::json;

VideoDetections decode_from_probabilities(const std::string& video_id, const Tensor& frame_probs,
                                          const std::vector<int>& classes,
                                          const LocalizeConfig& config) {
  VideoDetections out{video_id, {}};
  const std::size_t t = frame_probs.rows();
  const std::size_t k = frame_probs.cols();
  const int keep = std::max(config.min_len, 2);
  for (int cls : classes) {
    if (cls < 1 || static_cast<std::size_t>(cls) >= k) {
      throw Error("decode: class " + std::to_string(cls) + " outside [1, " + std::to_string(k - 1) + "]");
    }
    Tensor column(Shape{t});
    for (std::size_t i = 0; i < t; ++i) column[i] = frame_probs.at(i, static_cast<std::size_t>(cls - 1));
    const Tensor act = gaussian_smooth_1d(column, config.sigma_s);
    double threshold = config.tau_loc;
    if (config.relative_threshold) {
      threshold *= *std::max_element(act.values().begin(), act.values().end());
    }
    if (!(threshold > 0.0)) continue;
    std::size_t i = 0;
    while (i < t) {
      if (act[i] < threshold) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j + 1 < t && act[j + 1] >= threshold) ++j;
      if (static_cast<int>(j - i + 1) >= keep) {
        Detection d;
        d.video_id = video_id;
        d.start = static_cast<int>(i) + 1;
        d.end = static_cast<int>(j) + 1;
        d.class_id = cls;
        double score = 0.0;
        d.probs.assign(k, 0.0);
        for (std::size_t r = i; r <= j; ++r) {
          score += act[r];
          for (std::size_t c = 0; c < k; ++c) d.probs[c] += frame_probs.at(r, c);
        }
        const double n = static_cast<double>(j - i + 1);
        d.score = std::clamp(score / n, 0.0, 1.0);
        for (double& p : d.probs) p /= n;
        out.detections.push_back(std::move(d));
      }
      i = j + 1;
    }
  }
  return out;
}

Tensor video_probabilities(const Tensor& frames, const Model& model) {
  Tape tape;
  Var x = tape.constant(frames);
  Var lambda = tape.constant(compute_attention(frames, model.attention));
  Var xa = pool_action(x, lambda, {1, static_cast<int>(frames.rows())}, 1e-12);
  return class_probabilities(xa, tape.constant(model.classifier.weights)).value();
}

VideoDetections decode_detections(const FeatureSequence& seq, const Model& model,
                                  const LocalizeConfig& config) {
  const Tensor probs = video_probabilities(seq.frames, model);
  const Tensor frame_probs = frame_class_probabilities(seq.frames, model.classifier.weights);
  return decode_from_probabilities(seq.video_id, frame_probs, predicted_classes(probs), config);
}

DetectionSet localize(const Dataset& dataset, const Model& model, const LocalizeConfig& config) {
  DetectionSet out(dataset.videos.size());
  const auto n = static_cast<std::ptrdiff_t>(dataset.videos.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] =
        decode_detections(dataset.videos[static_cast<std::size_t>(i)].features, model, config);
  }
  return out;
}

Tensor class_activations(const FeatureSequence& seq, const Model& model, double sigma_s) {
  const Tensor frame_probs = frame_class_probabilities(seq.frames, model.classifier.weights);
  const std::size_t t = frame_probs.rows();
  const std::size_t c = frame_probs.cols() - 1;
  Tensor out(Shape{t, c});
  for (std::size_t k = 0; k < c; ++k) {
    Tensor column(Shape{t});
    for (std::size_t i = 0; i < t; ++i) column[i] = frame_probs.at(i, k);
    const Tensor smooth = gaussian_smooth_1d(column, sigma_s);
    for (std::size_t i = 0; i < t; ++i) out.at(i, k) = smooth[i];
  }
  return out;
}

void write_detections(const DetectionSet& dets, const std::filesystem::path& path) {
  json out = json::array();
  for (const VideoDetections& v : dets) {
    json list = json::array();
    for (const Detection& d : v.detections) {
      list.push_back({{"start", d.start}, {"end", d.end}, {"class", d.class_id}, {"score", d.score},
                      {"probs", d.probs}});
    }
    out.push_back({{"video_id", v.video_id}, {"detections", list}});
  }
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << out.dump(2) << '\n';
}

DetectionSet read_detections(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open detections file " + path.string());
  DetectionSet out;
  try {
    json j;
    is >> j;
    for (const json& v : j) {
      VideoDetections vd;
      vd.video_id = v.at("video_id").get<std::string>();
      for (const json& d : v.at("detections")) {
        Detection det;
        det.video_id = vd.video_id;
        det.start = d.at("start").get<int>();
        det.end = d.at("end").get<int>();
        det.class_id = d.at("class").get<int>();
        det.score = d.at("score").get<double>();
        det.probs = d.value("probs", std::vector<double>{});
        vd.detections.push_back(std::move(det));
      }
      out.push_back(std::move(vd));
    }
  } catch (const json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
  return out;
}

void write_activation_csv(const FeatureSequence& seq, const Model& model, double sigma_s,
                          const std::filesystem::path& path) {
  const Tensor act = class_activations(seq, model, sigma_s);
  const Tensor lambda = compute_attention(seq.frames, model.attention);
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << "frame,attention";
  for (std::size_t c = 0; c < act.cols(); ++c) os << ",class_" << (c + 1);
  os << '\n';
  for (std::size_t i = 0; i < act.rows(); ++i) {
    os << (i + 1) << ',' << lambda[i];
    for (std::size_t c = 0; c < act.cols(); ++c) os << ',' << act.at(i, c);
    os << '\n';
  }
}

}  // namespace actshuf
