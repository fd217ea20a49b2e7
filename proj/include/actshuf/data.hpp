#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "actshuf/tensor.hpp"

namespace actshuf {

/// Frame interval [start, end], 1-based, both ends inclusive for slicing and
/// pooling. Interval measure (IoU, lengths in the evaluator) is end - start.
struct Interval {
  int start = 1;
  int end = 1;

  int frames() const { return end - start + 1; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Per-frame features of one video; row t-1 of `frames` is frame t.
struct FeatureSequence {
  std::string video_id;
  Tensor frames;
  std::optional<double> fps_hint;

  std::size_t length() const { return frames.rows(); }
  std::size_t dim() const { return frames.cols(); }
};

/// Throws ShapeError unless T >= 1, d >= 1 and every value is finite.
void validate_sequence(const FeatureSequence& seq);

/// Video-level multi-label annotation over C action classes (ids 1..C).
/// The indicator vector has C+1 entries; the last one is background.
struct VideoLabel {
  int num_classes = 0;
  std::vector<int> classes;

  Tensor indicator() const;
  /// indicator() normalized to sum 1 over the labeled action classes.
  Tensor distribution() const;
  bool single_class() const { return classes.size() == 1; }

  /// One-hot background target [0, ..., 0, 1].
  static Tensor background(int num_classes);
  static Tensor one_hot(int num_classes, int class_id);
};

struct GroundTruthInterval {
  int start = 1;
  int end = 1;
  int class_id = 1;

  Interval interval() const { return {start, end}; }
  friend bool operator==(const GroundTruthInterval&, const GroundTruthInterval&) = default;
};

/// Where a frame range of a synthesized video came from.
struct Provenance {
  std::string video_id;
  Interval interval;
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct Video {
  FeatureSequence features;
  VideoLabel label;
  std::vector<GroundTruthInterval> ground_truth;
  std::vector<Provenance> provenance;
};

struct Dataset {
  int num_classes = 0;
  std::vector<Video> videos;
};

// ---- Feature files ("ASFV", little-endian, float32 payload) ----

class FormatError : public Error {
 public:
  using Error::Error;
};
class BadMagicError : public FormatError {
 public:
  using FormatError::FormatError;
};
class VersionMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};
class TruncatedError : public FormatError {
 public:
  using FormatError::FormatError;
};

inline constexpr std::uint32_t kFeatureFileVersion = 1;

/// Values are stored as float32; sequences whose values are exactly
/// representable in float32 round-trip bit-exactly.
void write_features(const FeatureSequence& seq, const std::filesystem::path& path);
FeatureSequence read_features(const std::filesystem::path& path);

// ---- Manifests ----

struct ManifestEntry {
  std::string id;
  std::string path;  // relative to the manifest's directory unless absolute
  std::vector<int> labels;
  std::vector<GroundTruthInterval> gt;
  std::vector<Provenance> provenance;
};

struct DatasetManifest {
  int num_classes = 0;
  std::string split;
  std::vector<ManifestEntry> videos;
  std::filesystem::path base_dir;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
/// Reads every referenced feature file. Throws on duplicate ids, bad labels or
/// ground truth outside the video.
Dataset load_dataset(const DatasetManifest& manifest);
Dataset load_dataset(const std::filesystem::path& manifest_path);
/// Writes `<dir>/features/<id>.asfv` for every video and `<dir>/<name>.json`.
DatasetManifest write_dataset(const Dataset& dataset, const std::filesystem::path& dir,
                              const std::string& name, const std::string& split);

// ---- Slicing ----

/// Rows start..end (1-based, inclusive) of `seq`, bit-equal to the source.
FeatureSequence slice_features(const FeatureSequence& seq, int start, int end);
/// Row-wise concatenation; all parts must share d.
FeatureSequence concat_features(const std::vector<FeatureSequence>& parts, std::string video_id);

// ---- Synthetic data ----

struct SynthConfig {
  int num_classes = 5;
  int dim = 16;
  int num_videos = 60;
  int min_frames = 64;
  int max_frames = 128;
  int min_actions = 1;
  int max_actions = 3;
  double action_density = 0.35;
  int min_action_frames = 6;
  int min_gap_frames = 2;
  double margin = 6.0;
  double noise = 1.0;
  std::string id_prefix = "video";
};

/// Videos with background frames around margin * e_{C+1} and action frames of
/// class c around margin * e_c, plus isotropic Gaussian noise. Each video
/// carries one action class. Values are rounded to float32 so in-memory and
/// on-disk datasets are identical. Deterministic per seed.
Dataset generate_synthetic(const SynthConfig& config, std::uint64_t seed);
void validate_synth_config(const SynthConfig& config);

}  // namespace actshuf
