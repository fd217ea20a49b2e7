#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "actshuf/evaluate.hpp"
#include "actshuf/inter_shuffle.hpp"
#include "actshuf/model.hpp"

namespace actshuf {

struct LossToggles {
  bool adv = true;
  bool intra = true;
  bool inter = true;
  bool guide = true;

  friend bool operator==(const LossToggles&, const LossToggles&) = default;
};

struct Hyperparams {
  double alpha = 1.0;
  double beta = 0.01;
  double epsilon = 0.001;
  double eta = 1.0;
  double theta = 0.1;
  double gamma = 0.1;
  double learning_rate = 1e-4;
  int epochs = 100;
  int batch_size = 8;
  int num_clips = 5;
  int clip_len = 0;  // 0: max(2, segment_frames / (2N - 1)) per segment
  int delta_inflate = 2;
  int augment_factor = 3;
  int min_segments = 2;
  int max_segments = 5;
  double tau_att = 0.5;
  double tau_loc = 0.5;
  bool tau_loc_relative = true;
  double sigma_s = 1.0;
  int min_len = 3;
  std::uint64_t seed = 0;
  int warmup_epochs = 5;
  int attention_hidden = 256;
  int relation_hidden = 256;
  double local_pair_floor = -10.0;
  double pool_stabilizer = 1e-10;
  LossToggles toggles;

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

/// Throws Error on negative weights or out-of-range sizes.
void validate(const Hyperparams& hp);
std::string to_json(const Hyperparams& hp);
/// Missing keys keep their defaults; unknown keys are rejected.
Hyperparams hyperparams_from_json(const std::string& text);
Hyperparams load_hyperparams(const std::filesystem::path& path);
void save_hyperparams(const Hyperparams& hp, const std::filesystem::path& path);
/// Hash of every field except `epochs`, so a run can be resumed with a larger
/// epoch budget.
std::uint64_t config_hash(const Hyperparams& hp);

LocalizeConfig localize_config(const Hyperparams& hp);

/// Per-term values, each already averaged over the batch.
struct LossBreakdown {
  double global = 0.0;
  double local = 0.0;
  double intra = 0.0;
  double inter = 0.0;
  double guide = 0.0;
  double total = 0.0;
};

/// An original video (full objective) or a generated one (inter term only).
struct BatchItem {
  const Video* original = nullptr;
  const GeneratedVideo* generated = nullptr;
};

struct StepContext {
  bool adversarial_active = true;
  std::uint64_t shuffle_seed = 0;  // seeds the clip permutations of this step
};

struct LossResult {
  Var total;
  LossBreakdown terms;
};

/// total = global + beta local + eta intra + theta inter + gamma guide, with
/// global/local/guide/inter averaged over the batch and intra averaged over the
/// clip sets of the batch. Without adversarial training the global term is the
/// plain classification loss and local is 0. Toggled-off terms are 0 and not
/// computed.
LossResult total_loss(Tape& tape, const ModelVars& vars, std::span<const BatchItem> batch,
                      int num_classes, const Hyperparams& hp, const StepContext& ctx);

struct Checkpoint {
  std::uint64_t config_hash = 0;
  int epoch = 0;
  std::string rng_state;
  Model model;
  AdamState adam;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct EpochMetrics {
  int epoch = 0;
  LossBreakdown loss;  // mean over the epoch's steps
  double train_accuracy = 0.0;
  double validation_accuracy = std::numeric_limits<double>::quiet_NaN();
  std::size_t generated_videos = 0;
  std::size_t pool_size = 0;
};

void write_metrics_csv(const std::vector<EpochMetrics>& metrics, const std::filesystem::path& path);

class TrainingDivergedError : public Error {
 public:
  TrainingDivergedError(const std::string& what, Checkpoint last_good)
      : Error(what), last_good(std::move(last_good)) {}
  Checkpoint last_good;
};

struct TrainOptions {
  const Dataset* validation = nullptr;
  const Checkpoint* resume = nullptr;
  std::function<void(const EpochMetrics&, const Checkpoint&)> on_epoch;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochMetrics> metrics;
};

Checkpoint initial_checkpoint(const Dataset& train, const Hyperparams& hp);
TrainResult train(const Dataset& train, const Hyperparams& hp, const TrainOptions& options = {});

/// Fraction of videos whose highest-probability action class is labeled.
double video_accuracy(const Dataset& dataset, const Model& model);

struct AblationConfig {
  std::string name;
  LossToggles toggles;
};

/// The five rows: baseline, +adv, +adv+inter, +adv+intra, full.
std::vector<AblationConfig> ablation_grid();

struct AblationRow {
  AblationConfig config;
  EvalReport report;
  double accuracy = 0.0;
};

std::vector<AblationRow> ablate(const Dataset& train, const Dataset& test, const Hyperparams& hp,
                                const std::vector<AblationConfig>& grid,
                                const std::vector<double>& thresholds);
std::string format_ablation(const std::vector<AblationRow>& rows);
void write_ablation_csv(const std::vector<AblationRow>& rows, const std::filesystem::path& path);

}  // namespace actshuf
