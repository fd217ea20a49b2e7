#include "doctest.h"

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "actshuf/data.hpp"
#include "support.hpp"

using namespace actshuf;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("actshuf_test_data_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

FeatureSequence float_sequence(std::size_t t, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tensor x = testing::random_tensor({t, d}, rng, 3.0);
  for (double& v : x.values()) v = static_cast<float>(v);
  return {"clip", x, std::nullopt};
}

std::string read_bytes(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_bytes(const fs::path& p, const std::string& s) {
  std::ofstream os(p, std::ios::binary);
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

}  // namespace

TEST_CASE("labels") {
  const VideoLabel y{4, {2, 4}};
  CHECK(y.indicator() == Tensor::vector({0, 1, 0, 1, 0}));
  CHECK(y.distribution() == Tensor::vector({0, 0.5, 0, 0.5, 0}));
  CHECK(VideoLabel::background(3) == Tensor::vector({0, 0, 0, 1}));
  CHECK(VideoLabel::one_hot(3, 2) == Tensor::vector({0, 1, 0, 0}));
  CHECK_THROWS(VideoLabel{3, {4}}.indicator());
  CHECK_THROWS(VideoLabel{3, {}}.distribution());
}

TEST_CASE("feature files round-trip float32-representable values bit-exactly") {
  const fs::path dir = scratch_dir("roundtrip");
  const FeatureSequence seq = float_sequence(17, 5, 1);
  write_features(seq, dir / "clip.asfv");
  const FeatureSequence back = read_features(dir / "clip.asfv");
  CHECK(back.video_id == "clip");
  CHECK(back.frames == seq.frames);
  CHECK(read_bytes(dir / "clip.asfv").size() == 16 + 17 * 5 * 4);
}

TEST_CASE("corrupt feature files") {
  const fs::path dir = scratch_dir("corrupt");
  write_features(float_sequence(4, 3, 2), dir / "ok.asfv");
  const std::string good = read_bytes(dir / "ok.asfv");

  write_bytes(dir / "short.asfv", good.substr(0, good.size() - 1));
  CHECK_THROWS_AS(read_features(dir / "short.asfv"), TruncatedError);
  write_bytes(dir / "header.asfv", good.substr(0, 6));
  CHECK_THROWS_AS(read_features(dir / "header.asfv"), TruncatedError);

  std::string magic = good;
  magic[0] = 'X';
  write_bytes(dir / "magic.asfv", magic);
  CHECK_THROWS_AS(read_features(dir / "magic.asfv"), BadMagicError);

  std::string version = good;
  version[4] = 9;
  write_bytes(dir / "version.asfv", version);
  CHECK_THROWS_AS(read_features(dir / "version.asfv"), VersionMismatchError);

  CHECK_THROWS_AS(read_features(dir / "missing.asfv"), Error);
  CHECK_THROWS_AS(write_features({"bad", Tensor(Shape{0, 3}), std::nullopt}, dir / "e.asfv"), ShapeError);
}

TEST_CASE("datasets round-trip through manifests") {
  const fs::path dir = scratch_dir("manifest");
  const Dataset ds = testing::small_dataset(8, 3, 4, 30, 5);
  const DatasetManifest m = write_dataset(ds, dir, "train", "train");
  CHECK(fs::exists(dir / "train.json"));
  const Dataset back = load_dataset(dir / "train.json");
  REQUIRE(back.videos.size() == ds.videos.size());
  CHECK(back.num_classes == 3);
  for (std::size_t i = 0; i < ds.videos.size(); ++i) {
    CHECK(back.videos[i].features.video_id == ds.videos[i].features.video_id);
    CHECK(back.videos[i].features.frames == ds.videos[i].features.frames);
    CHECK(back.videos[i].label.classes == ds.videos[i].label.classes);
    CHECK(back.videos[i].ground_truth == ds.videos[i].ground_truth);
  }
  const DatasetManifest loaded = load_manifest(dir / "train.json");
  CHECK(loaded.split == "train");
  CHECK(loaded.videos.size() == m.videos.size());
}

TEST_CASE("manifest validation") {
  const fs::path dir = scratch_dir("invalid");
  write_features(float_sequence(10, 3, 3), dir / "a.asfv");
  auto manifest = [&](const std::string& body) {
    write_bytes(dir / "m.json", body);
    return dir / "m.json";
  };
  CHECK_THROWS_AS(load_manifest(manifest(R"({"num_classes": 2, "videos": [
      {"id": "a", "path": "a.asfv", "labels": [1]},
      {"id": "a", "path": "a.asfv", "labels": [1]}]})")),
                  FormatError);
  CHECK_THROWS_AS(load_dataset(manifest(R"({"num_classes": 2, "videos": [
      {"id": "a", "path": "a.asfv", "labels": [1], "gt": [{"start": 3, "end": 11, "class": 1}]}]})")),
                  FormatError);
  CHECK_THROWS_AS(load_dataset(manifest(R"({"num_classes": 2, "videos": [
      {"id": "a", "path": "a.asfv", "labels": [1], "gt": [{"start": 4, "end": 4, "class": 1}]}]})")),
                  FormatError);
  CHECK_THROWS(load_dataset(manifest(R"({"num_classes": 2, "videos": [
      {"id": "a", "path": "a.asfv", "labels": [3]}]})")));
  CHECK_THROWS(load_manifest(manifest("{not json")));
  const Dataset ok = load_dataset(manifest(R"({"num_classes": 2, "videos": [
      {"id": "a", "path": "a.asfv", "labels": [1, 2], "gt": [{"start": 1, "end": 10, "class": 2}]}]})"));
  CHECK(ok.videos[0].label.classes == std::vector<int>{1, 2});
}

TEST_CASE("slicing and concatenation") {
  const FeatureSequence seq = float_sequence(12, 3, 4);
  const FeatureSequence s = slice_features(seq, 3, 7);
  CHECK(s.length() == 5);
  for (std::size_t r = 0; r < 5; ++r) {
    for (std::size_t c = 0; c < 3; ++c) CHECK(s.frames.at(r, c) == seq.frames.at(r + 2, c));
  }
  for (int a = 1; a <= 12; ++a) {
    for (int b = a; b < 12; ++b) {
      const FeatureSequence joined =
          concat_features({slice_features(seq, a, b), slice_features(seq, b + 1, 12)}, "j");
      CHECK(joined.frames == slice_features(seq, a, 12).frames);
    }
  }
  CHECK_THROWS_AS(slice_features(seq, 0, 3), ShapeError);
  CHECK_THROWS_AS(slice_features(seq, 5, 13), ShapeError);
  CHECK_THROWS_AS(slice_features(seq, 6, 5), ShapeError);
  CHECK_THROWS_AS(concat_features({seq, float_sequence(2, 4, 5)}, "x"), ShapeError);
}

TEST_CASE("synthetic data is deterministic per seed") {
  SynthConfig c;
  const Dataset a = generate_synthetic(c, 7);
  const Dataset b = generate_synthetic(c, 7);
  const Dataset other = generate_synthetic(c, 8);
  REQUIRE(a.videos.size() == 60);
  bool any_difference = false;
  for (std::size_t i = 0; i < a.videos.size(); ++i) {
    CHECK(a.videos[i].features.frames == b.videos[i].features.frames);
    CHECK(a.videos[i].ground_truth == b.videos[i].ground_truth);
    any_difference |= !(a.videos[i].features.frames == other.videos[i].features.frames);
  }
  CHECK(any_difference);
}

TEST_CASE("synthetic layout honours density, counts and gaps") {
  SynthConfig c;
  const Dataset ds = generate_synthetic(c, 11);
  for (const Video& v : ds.videos) {
    const int t = static_cast<int>(v.features.length());
    CHECK(t >= c.min_frames);
    CHECK(t <= c.max_frames);
    CHECK(v.label.classes.size() == 1);
    CHECK(v.ground_truth.size() >= 1);
    CHECK(v.ground_truth.size() <= 3);
    int action = 0;
    int prev_end = 0;
    for (const GroundTruthInterval& g : v.ground_truth) {
      CHECK(g.class_id == v.label.classes[0]);
      CHECK(g.interval().frames() >= c.min_action_frames);
      CHECK(g.start - prev_end - 1 >= c.min_gap_frames);
      action += g.interval().frames();
      prev_end = g.end;
    }
    CHECK(t - prev_end >= c.min_gap_frames);
    CHECK(action == std::lround(c.action_density * t));
    for (double x : v.features.frames.values()) CHECK(x == static_cast<double>(static_cast<float>(x)));
  }
}

TEST_CASE("synthetic frames are separable by their generating means") {
  SynthConfig c;
  const Dataset ds = generate_synthetic(c, 3);
  std::size_t correct = 0, total = 0;
  for (const Video& v : ds.videos) {
    std::vector<int> truth(v.features.length(), 0);
    for (const auto& g : v.ground_truth) {
      for (int f = g.start; f <= g.end; ++f) truth[static_cast<std::size_t>(f - 1)] = g.class_id;
    }
    for (std::size_t f = 0; f < v.features.length(); ++f) {
      // Nearest mean among margin * e_k, k = 0..C (C is background).
      std::size_t best = 0;
      for (std::size_t k = 1; k <= static_cast<std::size_t>(c.num_classes); ++k) {
        if (v.features.frames.at(f, k) > v.features.frames.at(f, best)) best = k;
      }
      const int predicted = best == static_cast<std::size_t>(c.num_classes) ? 0 : static_cast<int>(best) + 1;
      correct += predicted == truth[f];
      ++total;
    }
  }
  CHECK(static_cast<double>(correct) / static_cast<double>(total) > 0.99);
}

TEST_CASE("synthetic config validation") {
  SynthConfig c;
  c.dim = c.num_classes;
  CHECK_THROWS(generate_synthetic(c, 1));
  c = SynthConfig{};
  c.margin = 0.0;
  CHECK_THROWS(generate_synthetic(c, 1));
  c = SynthConfig{};
  c.min_frames = 20;
  CHECK_THROWS(generate_synthetic(c, 1));
}
