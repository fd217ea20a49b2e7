#include "actshuf/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "actshuf/adversarial.hpp"
#include "actshuf/intra_shuffle.hpp"
#include "json.hpp"

namespace actshuf {

using nlohmann::json;

// ---- Configuration ----

void validate(const Hyperparams& hp) {
  for (double w : {hp.alpha, hp.beta, hp.epsilon, hp.eta, hp.theta, hp.gamma}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error("loss weights and epsilon must be finite and >= 0");
  }
  if (!(hp.learning_rate > 0.0)) throw Error("learning_rate must be > 0");
  if (hp.epochs < 0) throw Error("epochs must be >= 0");
  if (hp.batch_size < 1) throw Error("batch_size must be >= 1");
  if (hp.num_clips < 2 || hp.num_clips > 8) throw Error("num_clips must be in [2, 8]");
  if (hp.clip_len < 0) throw Error("clip_len must be >= 0 (0 selects the default policy)");
  if (hp.delta_inflate < 0) throw Error("delta_inflate must be >= 0");
  if (hp.augment_factor < 0) throw Error("augment_factor must be >= 0");
  if (hp.min_segments < 1 || hp.max_segments < hp.min_segments) {
    throw Error("need 1 <= min_segments <= max_segments");
  }
  if (!(hp.sigma_s > 0.0)) throw Error("sigma_s must be > 0");
  if (hp.min_len < 1) throw Error("min_len must be >= 1");
  if (hp.warmup_epochs < 0) throw Error("warmup_epochs must be >= 0");
  if (hp.attention_hidden < 1 || hp.relation_hidden < 1) throw Error("hidden sizes must be >= 1");
  if (hp.pool_stabilizer < 0.0) throw Error("pool_stabilizer must be >= 0");
}

namespace {

json hp_json(const Hyperparams& hp) {
  return {
      {"alpha", hp.alpha},
      {"beta", hp.beta},
      {"epsilon", hp.epsilon},
      {"eta", hp.eta},
      {"theta", hp.theta},
      {"gamma", hp.gamma},
      {"learning_rate", hp.learning_rate},
      {"epochs", hp.epochs},
      {"batch_size", hp.batch_size},
      {"num_clips", hp.num_clips},
      {"clip_len", hp.clip_len},
      {"delta_inflate", hp.delta_inflate},
      {"augment_factor", hp.augment_factor},
      {"min_segments", hp.min_segments},
      {"max_segments", hp.max_segments},
      {"tau_att", hp.tau_att},
      {"tau_loc", hp.tau_loc},
      {"tau_loc_relative", hp.tau_loc_relative},
      {"sigma_s", hp.sigma_s},
      {"min_len", hp.min_len},
      {"seed", hp.seed},
      {"warmup_epochs", hp.warmup_epochs},
      {"attention_hidden", hp.attention_hidden},
      {"relation_hidden", hp.relation_hidden},
      {"local_pair_floor", hp.local_pair_floor},
      {"pool_stabilizer", hp.pool_stabilizer},
      {"toggles",
       {{"adv", hp.toggles.adv},
        {"intra", hp.toggles.intra},
        {"inter", hp.toggles.inter},
        {"guide", hp.toggles.guide}}},
  };
}

template <typename T>
void take(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

std::string to_json(const Hyperparams& hp) { return hp_json(hp).dump(2); }

Hyperparams hyperparams_from_json(const std::string& text) {
  Hyperparams hp;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw Error("config must be a JSON object");
    const json known = hp_json(hp);
    for (const auto& [key, value] : j.items()) {
      if (!known.contains(key)) throw Error("unknown config key '" + key + "'");
    }
    take(j, "alpha", hp.alpha);
    take(j, "beta", hp.beta);
    take(j, "epsilon", hp.epsilon);
    take(j, "eta", hp.eta);
    take(j, "theta", hp.theta);
    take(j, "gamma", hp.gamma);
    take(j, "learning_rate", hp.learning_rate);
    take(j, "epochs", hp.epochs);
    take(j, "batch_size", hp.batch_size);
    take(j, "num_clips", hp.num_clips);
    take(j, "clip_len", hp.clip_len);
    take(j, "delta_inflate", hp.delta_inflate);
    take(j, "augment_factor", hp.augment_factor);
    take(j, "min_segments", hp.min_segments);
    take(j, "max_segments", hp.max_segments);
    take(j, "tau_att", hp.tau_att);
    take(j, "tau_loc", hp.tau_loc);
    take(j, "tau_loc_relative", hp.tau_loc_relative);
    take(j, "sigma_s", hp.sigma_s);
    take(j, "min_len", hp.min_len);
    take(j, "seed", hp.seed);
    take(j, "warmup_epochs", hp.warmup_epochs);
    take(j, "attention_hidden", hp.attention_hidden);
    take(j, "relation_hidden", hp.relation_hidden);
    take(j, "local_pair_floor", hp.local_pair_floor);
    take(j, "pool_stabilizer", hp.pool_stabilizer);
    if (j.contains("toggles")) {
      const json& t = j.at("toggles");
      for (const auto& [key, value] : t.items()) {
        if (key != "adv" && key != "intra" && key != "inter" && key != "guide") {
          throw Error("unknown toggle '" + key + "'");
        }
      }
      take(t, "adv", hp.toggles.adv);
      take(t, "intra", hp.toggles.intra);
      take(t, "inter", hp.toggles.inter);
      take(t, "guide", hp.toggles.guide);
    }
  } catch (const json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
  validate(hp);
  return hp;
}

Hyperparams load_hyperparams(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return hyperparams_from_json(ss.str());
}

void save_hyperparams(const Hyperparams& hp, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << to_json(hp) << '\n';
}

std::uint64_t config_hash(const Hyperparams& hp) {
  json j = hp_json(hp);
  j.erase("epochs");
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

LocalizeConfig localize_config(const Hyperparams& hp) {
  return {hp.sigma_s, hp.tau_loc, hp.tau_loc_relative, hp.min_len};
}

// ---- Objective ----

LossResult total_loss(Tape& tape, const ModelVars& vars, std::span<const BatchItem> batch,
                      int num_classes, const Hyperparams& hp, const StepContext& ctx) {
  if (batch.empty()) throw Error("total_loss: empty batch");
  const bool adversarial = hp.toggles.adv && ctx.adversarial_active;
  const Var w = vars.classifier.weights;
  const double stab = hp.pool_stabilizer;
  std::mt19937_64 rng(ctx.shuffle_seed);

  std::vector<Var> weighted;  // per-video contributions, summed then averaged
  std::vector<Var> order_predictions;
  std::vector<std::uint64_t> order_labels;
  LossBreakdown sums;

  for (const BatchItem& item : batch) {
    if (item.generated != nullptr) {
      if (!hp.toggles.inter) continue;
      Var x = tape.constant(item.generated->features.frames);
      Var l = inter_loss(x, vars.attention, w, item.generated->class_id, num_classes, hp.alpha, stab);
      sums.inter += l.value().item();
      weighted.push_back(ad::scale(l, hp.theta));
      continue;
    }
    const Video& v = *item.original;
    const Tensor& frames = v.features.frames;
    const Interval whole{1, static_cast<int>(frames.rows())};
    Var x = tape.constant(frames);
    Var lambda = compute_attention(x, vars.attention);
    Var xa = pool_action(x, lambda, whole, stab);
    Var xb = pool_background(x, lambda, whole, stab);
    const Tensor y = v.label.distribution();

    Var global = adversarial ? global_adv_loss(xa, xb, y, hp.alpha, w, hp.epsilon)
                             : classification_loss(xa, xb, y, hp.alpha, w);
    sums.global += global.value().item();
    weighted.push_back(global);

    const bool need_segments = adversarial || hp.toggles.intra;
    SegmentSet segments;
    if (need_segments) {
      const Tensor frozen = tape.freeze(lambda.value());
      segments = segment_by_attention(frozen.values(), hp.tau_att, hp.min_len);
    }
    if (adversarial) {
      LocalAdvOptions opt{hp.epsilon, hp.local_pair_floor, stab};
      Var local = local_adv_loss(segments, x, lambda, w, opt);
      sums.local += local.value().item();
      weighted.push_back(ad::scale(local, hp.beta));
    }
    if (hp.toggles.guide) {
      const Tcam tcam = compute_tcam(frames, w.value(), v.label.classes, hp.sigma_s);
      const Tensor a = tape.freeze(tcam.action);
      const Tensor b = tape.freeze(tcam.background);
      Var guide = self_guided_loss(lambda, a, b);
      sums.guide += guide.value().item();
      weighted.push_back(ad::scale(guide, hp.gamma));
    }
    if (hp.toggles.intra) {
      for (const Interval& seg : segments.actions) {
        const int len = hp.clip_len > 0 ? hp.clip_len : default_clip_len(seg.frames(), hp.num_clips);
        const auto layout = layout_clips(seg, hp.num_clips, len);
        if (!layout) continue;
        const std::vector<Var> clips = clip_features(x, lambda, *layout, stab);
        const Permutation perm = random_permutation(hp.num_clips, rng);
        order_predictions.push_back(predict_order(shuffle_clips(clips, perm), vars.order));
        order_labels.push_back(perm.label);
      }
    }
  }

  const double inv_b = 1.0 / static_cast<double>(batch.size());
  Var total;
  if (weighted.empty()) {
    total = tape.constant(Tensor::scalar(0.0));
  } else {
    total = ad::scale(ad::sum(ad::concat(weighted)), inv_b);
  }
  LossResult out;
  out.terms.global = sums.global * inv_b;
  out.terms.local = sums.local * inv_b;
  out.terms.guide = sums.guide * inv_b;
  out.terms.inter = sums.inter * inv_b;
  if (!order_predictions.empty()) {
    Var intra = intra_loss(order_predictions, order_labels);
    out.terms.intra = intra.value().item();
    total = ad::add(total, ad::scale(intra, hp.eta));
  }
  out.total = total;
  out.terms.total = total.value().item();
  return out;
}

// ---- Checkpoints ----

namespace {

constexpr char kCheckpointMagic[4] = {'A', 'S', 'C', 'K'};

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const char* p = reinterpret_cast<const char*>(&v);
    buf_.append(p, sizeof(T));
  }
  void bytes(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    buf_ += s;
  }
  void tensor(const Tensor& t) {
    put<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put<std::uint64_t>(d);
    for (double v : t.values()) put<double>(v);
  }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(const std::string& s) : s_(s) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, s_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string bytes() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string out = s_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  Tensor tensor() {
    const auto rank = get<std::uint32_t>();
    if (rank > 4) throw FormatError("checkpoint: bad tensor rank");
    Shape shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(get<std::uint64_t>());
    Tensor t(shape);
    need(t.size() * sizeof(double));
    std::memcpy(t.values().data(), s_.data() + pos_, t.size() * sizeof(double));
    pos_ += t.size() * sizeof(double);
    return t;
  }
  void need(std::size_t n) const {
    if (pos_ + n > s_.size()) throw TruncatedError("checkpoint truncated");
  }
  bool done() const { return pos_ == s_.size(); }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  for (char c : kCheckpointMagic) w.put<char>(c);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint64_t>(ckpt.config_hash);
  w.put<std::int32_t>(ckpt.epoch);
  const ModelDims& d = ckpt.model.dims;
  for (int v : {d.feature_dim, d.num_classes, d.attention_hidden, d.relation_hidden, d.num_clips}) {
    w.put<std::int32_t>(v);
  }
  w.bytes(ckpt.rng_state);
  const auto params = ckpt.model.params();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  for (const Tensor* t : params) w.tensor(*t);
  const AdamConfig& ac = ckpt.adam.config;
  for (double v : {ac.learning_rate, ac.beta1, ac.beta2, ac.eps}) w.put<double>(v);
  w.put<std::uint64_t>(ckpt.adam.step);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.adam.first_moment.size()));
  for (const Tensor& t : ckpt.adam.first_moment) w.tensor(t);
  for (const Tensor& t : ckpt.adam.second_moment) w.tensor(t);
  return w.take();
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  for (char c : kCheckpointMagic) {
    if (r.get<char>() != c) throw BadMagicError("not a checkpoint (bad magic)");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw VersionMismatchError("checkpoint version " + std::to_string(version) + ", expected " +
                               std::to_string(kCheckpointVersion));
  }
  Checkpoint c;
  c.config_hash = r.get<std::uint64_t>();
  c.epoch = r.get<std::int32_t>();
  ModelDims& d = c.model.dims;
  d.feature_dim = r.get<std::int32_t>();
  d.num_classes = r.get<std::int32_t>();
  d.attention_hidden = r.get<std::int32_t>();
  d.relation_hidden = r.get<std::int32_t>();
  d.num_clips = r.get<std::int32_t>();
  c.model.order.num_clips = d.num_clips;
  c.rng_state = r.bytes();
  auto params = c.model.params();
  if (r.get<std::uint32_t>() != params.size()) throw FormatError("checkpoint: parameter count");
  for (ParamRef& p : params) *p.value = r.tensor();
  AdamConfig& ac = c.adam.config;
  ac.learning_rate = r.get<double>();
  ac.beta1 = r.get<double>();
  ac.beta2 = r.get<double>();
  ac.eps = r.get<double>();
  c.adam.step = r.get<std::uint64_t>();
  const auto n = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n; ++i) c.adam.first_moment.push_back(r.tensor());
  for (std::uint32_t i = 0; i < n; ++i) c.adam.second_moment.push_back(r.tensor());
  if (!r.done()) throw FormatError("checkpoint: trailing bytes");
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  const std::string bytes = serialize_checkpoint(ckpt);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw Error("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open checkpoint " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return deserialize_checkpoint(ss.str());
}

// ---- Training ----

void write_metrics_csv(const std::vector<EpochMetrics>& metrics, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << "epoch,total,global,local,intra,inter,guide,train_accuracy,validation_accuracy,"
        "generated_videos,pool_size\n";
  os << std::setprecision(10);
  for (const EpochMetrics& m : metrics) {
    os << m.epoch << ',' << m.loss.total << ',' << m.loss.global << ',' << m.loss.local << ','
       << m.loss.intra << ',' << m.loss.inter << ',' << m.loss.guide << ',' << m.train_accuracy
       << ',';
    if (!std::isnan(m.validation_accuracy)) os << m.validation_accuracy;
    os << ',' << m.generated_videos << ',' << m.pool_size << '\n';
  }
}

double video_accuracy(const Dataset& dataset, const Model& model) {
  if (dataset.videos.empty()) return 0.0;
  std::vector<int> hit(dataset.videos.size(), 0);
  const auto n = static_cast<std::ptrdiff_t>(dataset.videos.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const Video& v = dataset.videos[static_cast<std::size_t>(i)];
    const Tensor p = video_probabilities(v.features.frames, model);
    const std::size_t c = p.size() - 1;
    const auto best = std::max_element(p.values().begin(), p.values().begin() + static_cast<std::ptrdiff_t>(c));
    const int cls = static_cast<int>(best - p.values().begin()) + 1;
    hit[static_cast<std::size_t>(i)] =
        std::find(v.label.classes.begin(), v.label.classes.end(), cls) != v.label.classes.end();
  }
  return static_cast<double>(std::accumulate(hit.begin(), hit.end(), 0)) /
         static_cast<double>(dataset.videos.size());
}

namespace {

std::string rng_to_string(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

std::mt19937_64 rng_from_string(const std::string& s) {
  std::mt19937_64 rng;
  std::istringstream is(s);
  is >> rng;
  if (!is) throw FormatError("checkpoint: bad RNG state");
  return rng;
}

ModelDims dims_for(const Dataset& train, const Hyperparams& hp) {
  if (train.videos.empty()) throw Error("training set is empty");
  ModelDims d;
  d.feature_dim = static_cast<int>(train.videos.front().features.dim());
  d.num_classes = train.num_classes;
  d.attention_hidden = hp.attention_hidden;
  d.relation_hidden = hp.relation_hidden;
  d.num_clips = hp.num_clips;
  return d;
}

}  // namespace

Checkpoint initial_checkpoint(const Dataset& train, const Hyperparams& hp) {
  validate(hp);
  Checkpoint c;
  c.config_hash = config_hash(hp);
  c.epoch = 0;
  c.model = Model::init(dims_for(train, hp), hp.seed);
  AdamConfig ac;
  ac.learning_rate = hp.learning_rate;
  c.adam = make_adam_state(c.model.params(), ac);
  c.rng_state = rng_to_string(std::mt19937_64(hp.seed ^ 0x9e3779b97f4a7c15ull));
  return c;
}

TrainResult train(const Dataset& train_set, const Hyperparams& hp, const TrainOptions& options) {
  TrainResult result;
  Checkpoint state = initial_checkpoint(train_set, hp);
  if (options.resume != nullptr) {
    if (options.resume->config_hash != state.config_hash) {
      throw Error("checkpoint was written with a different configuration");
    }
    if (!(options.resume->model.dims == state.model.dims)) {
      throw Error("checkpoint model dimensions do not match the data");
    }
    state = *options.resume;
  }
  for (const Video& v : train_set.videos) {
    if (v.features.dim() != static_cast<std::size_t>(state.model.dims.feature_dim)) {
      throw ShapeError("video " + v.features.video_id + " has a different feature dimension");
    }
  }
  std::mt19937_64 rng = rng_from_string(state.rng_state);
  Model& model = state.model;
  const std::vector<ParamRef> params = model.params();

  for (int epoch = state.epoch; epoch < hp.epochs; ++epoch) {
    const Checkpoint last_good = state;
    const bool warm = epoch >= hp.warmup_epochs;
    EpochMetrics metrics;
    metrics.epoch = epoch + 1;

    std::vector<GeneratedVideo> generated;
    if (warm && hp.toggles.inter && hp.augment_factor > 0) {
      const ActionPool pool =
          build_pool(train_set, model.attention, {hp.delta_inflate, hp.tau_att, hp.min_len});
      metrics.pool_size = pool.size();
      if (!pool.empty()) {
        generated = augment_training_set(
            train_set, pool, {hp.augment_factor, hp.min_segments, hp.max_segments}, rng);
      }
    }
    metrics.generated_videos = generated.size();

    std::vector<BatchItem> items;
    for (const Video& v : train_set.videos) items.push_back({&v, nullptr});
    for (const GeneratedVideo& g : generated) items.push_back({nullptr, &g});
    std::shuffle(items.begin(), items.end(), rng);

    std::size_t steps = 0;
    for (std::size_t first = 0; first < items.size(); first += static_cast<std::size_t>(hp.batch_size)) {
      const std::size_t last = std::min(items.size(), first + static_cast<std::size_t>(hp.batch_size));
      const std::span<const BatchItem> batch(items.data() + first, last - first);
      StepContext ctx{warm, rng()};
      Tape tape;
      const ModelVars vars = bind(tape, model, true);
      LossResult loss;
      try {
        loss = total_loss(tape, vars, batch, train_set.num_classes, hp, ctx);
      } catch (const DegenerateWindowError& e) {
        throw TrainingDivergedError(std::string("degenerate pooling window: ") + e.what(), last_good);
      } catch (const ShapeError&) {
        throw;
      } catch (const Error& e) {
        // non-finite FGSM gradients and similar numeric failures
        throw TrainingDivergedError(e.what(), last_good);
      }
      if (!std::isfinite(loss.terms.total)) {
        throw TrainingDivergedError("loss became non-finite in epoch " + std::to_string(epoch + 1),
                                    last_good);
      }
      tape.backward(loss.total);
      std::vector<Tensor> grads;
      grads.reserve(vars.all.size());
      for (const Var& p : vars.all) grads.push_back(tape.grad(p));
      try {
        adam_step(params, grads, state.adam);
      } catch (const Error& e) {
        throw TrainingDivergedError(e.what(), last_good);
      }
      metrics.loss.global += loss.terms.global;
      metrics.loss.local += loss.terms.local;
      metrics.loss.intra += loss.terms.intra;
      metrics.loss.inter += loss.terms.inter;
      metrics.loss.guide += loss.terms.guide;
      metrics.loss.total += loss.terms.total;
      ++steps;
    }
    if (steps > 0) {
      const double inv = 1.0 / static_cast<double>(steps);
      for (double* t : {&metrics.loss.global, &metrics.loss.local, &metrics.loss.intra,
                        &metrics.loss.inter, &metrics.loss.guide, &metrics.loss.total}) {
        *t *= inv;
      }
    }
    metrics.train_accuracy = video_accuracy(train_set, model);
    if (options.validation != nullptr) {
      metrics.validation_accuracy = video_accuracy(*options.validation, model);
    }
    state.epoch = epoch + 1;
    state.rng_state = rng_to_string(rng);
    result.metrics.push_back(metrics);
    if (options.on_epoch) options.on_epoch(metrics, state);
  }
  result.checkpoint = std::move(state);
  return result;
}

// ---- Ablation ----

std::vector<AblationConfig> ablation_grid() {
  return {
      {"baseline", {false, false, false, true}},
      {"adv", {true, false, false, true}},
      {"adv+inter", {true, false, true, true}},
      {"adv+intra", {true, true, false, true}},
      {"full", {true, true, true, true}},
  };
}

std::vector<AblationRow> ablate(const Dataset& train_set, const Dataset& test, const Hyperparams& hp,
                                const std::vector<AblationConfig>& grid,
                                const std::vector<double>& thresholds) {
  std::vector<AblationRow> rows;
  for (const AblationConfig& cfg : grid) {
    Hyperparams h = hp;
    h.toggles = cfg.toggles;
    const TrainResult run = train(train_set, h);
    const DetectionSet dets = localize(test, run.checkpoint.model, localize_config(h));
    rows.push_back({cfg, evaluate(dets, test, thresholds), video_accuracy(test, run.checkpoint.model)});
  }
  return rows;
}

std::string format_ablation(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << std::left << std::setw(12) << "config" << " adv intra inter";
  if (!rows.empty()) {
    for (double t : rows.front().report.thresholds) os << "  mAP@" << std::setprecision(2) << t;
    os << std::setprecision(4);
  }
  os << "     avg  accuracy\n";
  for (const AblationRow& r : rows) {
    os << std::left << std::setw(12) << r.config.name << "  " << (r.config.toggles.adv ? 'x' : '.')
       << "    " << (r.config.toggles.intra ? 'x' : '.') << "     " << (r.config.toggles.inter ? 'x' : '.');
    for (double m : r.report.map) os << "  " << std::setw(8) << m;
    os << "  " << r.report.average_map << "  " << r.accuracy << '\n';
  }
  return os.str();
}

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << "config,adv,intra,inter,guide";
  if (!rows.empty()) {
    for (double t : rows.front().report.thresholds) os << ",map_" << t;
  }
  os << ",average_map,accuracy\n";
  for (const AblationRow& r : rows) {
    const LossToggles& t = r.config.toggles;
    os << r.config.name << ',' << t.adv << ',' << t.intra << ',' << t.inter << ',' << t.guide;
    for (double m : r.report.map) os << ',' << m;
    os << ',' << r.report.average_map << ',' << r.accuracy << '\n';
  }
}

}  // namespace actshuf
