#include "actshuf/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <set>

#include "json.hpp"

namespace actshuf {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "feature files are written with native little-endian layout");

void validate_sequence(const FeatureSequence& seq) {
  if (seq.frames.rank() != 2 || seq.frames.rows() < 1 || seq.frames.cols() < 1) {
    throw ShapeError("feature sequence '" + seq.video_id + "' must be a non-empty T x d matrix, got " +
                     shape_to_string(seq.frames.shape()));
  }
  if (!seq.frames.all_finite()) {
    throw ShapeError("feature sequence '" + seq.video_id + "' contains non-finite values");
  }
}

Tensor VideoLabel::indicator() const {
  Tensor y(Shape{static_cast<std::size_t>(num_classes + 1)});
  for (int c : classes) {
    if (c < 1 || c > num_classes) {
      throw Error("label class " + std::to_string(c) + " outside [1, " +
                  std::to_string(num_classes) + "]");
    }
    y[static_cast<std::size_t>(c - 1)] = 1.0;
  }
  return y;
}

Tensor VideoLabel::distribution() const {
  Tensor y = indicator();
  double total = 0.0;
  for (double v : y.values()) total += v;
  if (total == 0.0) throw Error("video label has no action class");
  for (double& v : y.values()) v /= total;
  return y;
}

Tensor VideoLabel::background(int num_classes) {
  Tensor y(Shape{static_cast<std::size_t>(num_classes + 1)});
  y[static_cast<std::size_t>(num_classes)] = 1.0;
  return y;
}

Tensor VideoLabel::one_hot(int num_classes, int class_id) {
  return VideoLabel{num_classes, {class_id}}.indicator();
}

// ---- Feature files ----

namespace {

constexpr char kMagic[4] = {'A', 'S', 'F', 'V'};

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool get(std::istream& is, T& v) {
  return static_cast<bool>(is.read(reinterpret_cast<char*>(&v), sizeof(T)));
}

}  // namespace

void write_features(const FeatureSequence& seq, const fs::path& path) {
  validate_sequence(seq);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kFeatureFileVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(seq.dim()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(seq.length()));
  std::vector<float> payload(seq.frames.size());
  for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = static_cast<float>(seq.frames[i]);
  os.write(reinterpret_cast<const char*>(payload.data()),
           static_cast<std::streamsize>(payload.size() * sizeof(float)));
  if (!os) throw Error("failed writing " + path.string());
}

FeatureSequence read_features(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open feature file " + path.string());
  char magic[4];
  if (!is.read(magic, 4)) throw TruncatedError(path.string() + ": file shorter than header");
  if (std::memcmp(magic, kMagic, 4) != 0) throw BadMagicError(path.string() + ": not an ASFV file");
  std::uint32_t version = 0, d = 0, t = 0;
  if (!get(is, version)) throw TruncatedError(path.string() + ": file shorter than header");
  if (version != kFeatureFileVersion) {
    throw VersionMismatchError(path.string() + ": unsupported version " + std::to_string(version));
  }
  if (!get(is, d) || !get(is, t)) throw TruncatedError(path.string() + ": file shorter than header");
  if (d == 0 || t == 0) throw FormatError(path.string() + ": empty feature matrix");
  const std::size_t n = static_cast<std::size_t>(d) * t;
  std::vector<float> payload(n);
  is.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(n * sizeof(float)));
  if (static_cast<std::size_t>(is.gcount()) != n * sizeof(float)) {
    throw TruncatedError(path.string() + ": header declares " + std::to_string(t) + " x " +
                         std::to_string(d) + " values but the payload is shorter");
  }
  std::vector<double> values(payload.begin(), payload.end());
  FeatureSequence seq{path.stem().string(), Tensor::matrix(t, d, std::move(values)), std::nullopt};
  validate_sequence(seq);
  return seq;
}

// ---- Manifests ----

namespace {

json provenance_to_json(const std::vector<Provenance>& prov) {
  json out = json::array();
  for (const Provenance& p : prov) {
    out.push_back({{"video_id", p.video_id}, {"start", p.interval.start}, {"end", p.interval.end}});
  }
  return out;
}

}  // namespace

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open manifest " + path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  DatasetManifest m;
  m.base_dir = path.parent_path();
  try {
    m.num_classes = j.at("num_classes").get<int>();
    m.split = j.value("split", std::string{});
    std::set<std::string> ids;
    for (const json& v : j.at("videos")) {
      ManifestEntry e;
      e.id = v.at("id").get<std::string>();
      e.path = v.at("path").get<std::string>();
      e.labels = v.at("labels").get<std::vector<int>>();
      for (const json& g : v.value("gt", json::array())) {
        e.gt.push_back({g.at("start").get<int>(), g.at("end").get<int>(), g.at("class").get<int>()});
      }
      for (const json& p : v.value("provenance", json::array())) {
        e.provenance.push_back(
            {p.at("video_id").get<std::string>(), {p.at("start").get<int>(), p.at("end").get<int>()}});
      }
      if (!ids.insert(e.id).second) throw FormatError(path.string() + ": duplicate video id '" + e.id + "'");
      m.videos.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (m.num_classes < 1) throw FormatError(path.string() + ": num_classes must be >= 1");
  return m;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  json videos = json::array();
  for (const ManifestEntry& e : manifest.videos) {
    json gt = json::array();
    for (const GroundTruthInterval& g : e.gt) {
      gt.push_back({{"start", g.start}, {"end", g.end}, {"class", g.class_id}});
    }
    json v = {{"id", e.id}, {"path", e.path}, {"labels", e.labels}, {"gt", gt}};
    if (!e.provenance.empty()) v["provenance"] = provenance_to_json(e.provenance);
    videos.push_back(std::move(v));
  }
  json j = {{"num_classes", manifest.num_classes}, {"videos", videos}};
  if (!manifest.split.empty()) j["split"] = manifest.split;
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
}

Dataset load_dataset(const DatasetManifest& manifest) {
  Dataset ds;
  ds.num_classes = manifest.num_classes;
  std::set<std::string> ids;
  for (const ManifestEntry& e : manifest.videos) {
    if (!ids.insert(e.id).second) throw FormatError("duplicate video id '" + e.id + "'");
    fs::path p = e.path;
    if (p.is_relative()) p = manifest.base_dir / p;
    Video v;
    v.features = read_features(p);
    v.features.video_id = e.id;
    v.label = VideoLabel{manifest.num_classes, e.labels};
    std::sort(v.label.classes.begin(), v.label.classes.end());
    v.label.indicator();  // range check
    const int t = static_cast<int>(v.features.length());
    for (const GroundTruthInterval& g : e.gt) {
      if (g.start < 1 || g.start >= g.end || g.end > t || g.class_id < 1 ||
          g.class_id > manifest.num_classes) {
        throw FormatError("video '" + e.id + "': invalid ground truth [" + std::to_string(g.start) +
                          ", " + std::to_string(g.end) + "] class " + std::to_string(g.class_id));
      }
    }
    v.ground_truth = e.gt;
    v.provenance = e.provenance;
    ds.videos.push_back(std::move(v));
  }
  return ds;
}

Dataset load_dataset(const fs::path& manifest_path) {
  return load_dataset(load_manifest(manifest_path));
}

DatasetManifest write_dataset(const Dataset& dataset, const fs::path& dir, const std::string& name,
                              const std::string& split) {
  fs::create_directories(dir / "features");
  DatasetManifest m;
  m.num_classes = dataset.num_classes;
  m.split = split;
  m.base_dir = dir;
  for (const Video& v : dataset.videos) {
    const std::string rel = "features/" + v.features.video_id + ".asfv";
    write_features(v.features, dir / rel);
    m.videos.push_back({v.features.video_id, rel, v.label.classes, v.ground_truth, v.provenance});
  }
  save_manifest(m, dir / (name + ".json"));
  return m;
}

// ---- Slicing ----

FeatureSequence slice_features(const FeatureSequence& seq, int start, int end) {
  const int t = static_cast<int>(seq.length());
  if (start < 1 || end < start || end > t) {
    throw ShapeError("slice [" + std::to_string(start) + ", " + std::to_string(end) +
                     "] outside a sequence of " + std::to_string(t) + " frames");
  }
  const std::size_t d = seq.dim();
  const auto first = static_cast<std::size_t>(start - 1);
  const auto rows = static_cast<std::size_t>(end - start + 1);
  const auto src = seq.frames.values().subspan(first * d, rows * d);
  return {seq.video_id, Tensor::matrix(rows, d, std::vector<double>(src.begin(), src.end())),
          seq.fps_hint};
}

FeatureSequence concat_features(const std::vector<FeatureSequence>& parts, std::string video_id) {
  if (parts.empty()) throw ShapeError("concatenating zero sequences");
  const std::size_t d = parts.front().dim();
  std::vector<double> values;
  std::size_t rows = 0;
  for (const FeatureSequence& p : parts) {
    if (p.dim() != d) {
      throw ShapeError("concatenating sequences of dimension " + std::to_string(d) + " and " +
                       std::to_string(p.dim()));
    }
    values.insert(values.end(), p.frames.values().begin(), p.frames.values().end());
    rows += p.length();
  }
  return {std::move(video_id), Tensor::matrix(rows, d, std::move(values)), parts.front().fps_hint};
}

// ---- Synthetic data ----

void validate_synth_config(const SynthConfig& c) {
  if (!(c.margin > 0.0)) throw Error("synthetic config: margin must be > 0");
  if (c.noise < 0.0) throw Error("synthetic config: noise must be >= 0");
  if (c.num_classes < 1) throw Error("synthetic config: need at least one class");
  if (c.dim < c.num_classes + 1) {
    throw Error("synthetic config: dim must be >= num_classes + 1 for orthogonal class means");
  }
  if (c.num_videos < 0) throw Error("synthetic config: negative video count");
  if (c.min_frames < 2 || c.max_frames < c.min_frames) throw Error("synthetic config: bad frame range");
  if (c.min_actions < 1 || c.max_actions < c.min_actions) throw Error("synthetic config: bad action range");
  if (!(c.action_density > 0.0 && c.action_density < 1.0)) {
    throw Error("synthetic config: action_density must be in (0, 1)");
  }
  if (c.min_action_frames < 2 || c.min_gap_frames < 1) throw Error("synthetic config: bad segment minimums");
  const int action_frames = static_cast<int>(std::lround(c.action_density * c.min_frames));
  const int background_frames = c.min_frames - action_frames;
  if (action_frames < c.max_actions * c.min_action_frames ||
      background_frames < (c.max_actions + 1) * c.min_gap_frames) {
    throw Error("synthetic config: " + std::to_string(c.min_frames) + " frames cannot fit " +
                std::to_string(c.max_actions) + " actions at the requested density");
  }
}

namespace {

// Splits `total` into `parts` integers, each >= `minimum`, uniformly over
// compositions of the remainder.
std::vector<int> random_composition(int total, int parts, int minimum, std::mt19937_64& rng) {
  const int rest = total - parts * minimum;
  std::vector<int> cuts(static_cast<std::size_t>(parts - 1));
  std::uniform_int_distribution<int> pick(0, rest);
  for (int& c : cuts) c = pick(rng);
  std::sort(cuts.begin(), cuts.end());
  std::vector<int> out(static_cast<std::size_t>(parts));
  int prev = 0;
  for (int i = 0; i < parts - 1; ++i) {
    out[static_cast<std::size_t>(i)] = minimum + cuts[static_cast<std::size_t>(i)] - prev;
    prev = cuts[static_cast<std::size_t>(i)];
  }
  out.back() = minimum + rest - prev;
  return out;
}

}  // namespace

Dataset generate_synthetic(const SynthConfig& c, std::uint64_t seed) {
  validate_synth_config(c);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_frames(c.min_frames, c.max_frames);
  std::uniform_int_distribution<int> pick_actions(c.min_actions, c.max_actions);
  std::uniform_int_distribution<int> pick_class(1, c.num_classes);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const auto d = static_cast<std::size_t>(c.dim);
  const auto background_axis = static_cast<std::size_t>(c.num_classes);

  Dataset ds;
  ds.num_classes = c.num_classes;
  for (int n = 0; n < c.num_videos; ++n) {
    const int t = pick_frames(rng);
    int k = pick_actions(rng);
    const int cls = pick_class(rng);
    const int action_frames = static_cast<int>(std::lround(c.action_density * t));
    k = std::min(k, action_frames / c.min_action_frames);
    const std::vector<int> lengths = random_composition(action_frames, k, c.min_action_frames, rng);
    const std::vector<int> gaps = random_composition(t - action_frames, k + 1, c.min_gap_frames, rng);

    std::vector<int> frame_class(static_cast<std::size_t>(t), 0);
    Video v;
    int cursor = 1;
    for (int i = 0; i < k; ++i) {
      cursor += gaps[static_cast<std::size_t>(i)];
      const int start = cursor;
      const int end = start + lengths[static_cast<std::size_t>(i)] - 1;
      for (int f = start; f <= end; ++f) frame_class[static_cast<std::size_t>(f - 1)] = cls;
      v.ground_truth.push_back({start, end, cls});
      cursor = end + 1;
    }

    Tensor frames(Shape{static_cast<std::size_t>(t), d});
    for (std::size_t f = 0; f < static_cast<std::size_t>(t); ++f) {
      const int fc = frame_class[f];
      const std::size_t axis = fc > 0 ? static_cast<std::size_t>(fc - 1) : background_axis;
      for (std::size_t j = 0; j < d; ++j) {
        double value = (j == axis ? c.margin : 0.0);
        if (c.noise > 0.0) value += c.noise * gauss(rng);
        frames.at(f, j) = static_cast<double>(static_cast<float>(value));
      }
    }
    char id[64];
    std::snprintf(id, sizeof(id), "%s_%04d", c.id_prefix.c_str(), n);
    v.features = FeatureSequence{id, std::move(frames), std::nullopt};
    v.label = VideoLabel{c.num_classes, {cls}};
    ds.videos.push_back(std::move(v));
  }
  return ds;
}

}  // namespace actshuf
