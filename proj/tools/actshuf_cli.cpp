// Command-line front end: gen-data, train, localize, eval, ablate.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "actshuf/trainer.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace actshuf;

namespace {

SynthConfig load_synth_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
  SynthConfig c;
  auto take = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  take("num_classes", c.num_classes);
  take("dim", c.dim);
  take("num_videos", c.num_videos);
  take("min_frames", c.min_frames);
  take("max_frames", c.max_frames);
  take("min_actions", c.min_actions);
  take("max_actions", c.max_actions);
  take("action_density", c.action_density);
  take("min_action_frames", c.min_action_frames);
  take("min_gap_frames", c.min_gap_frames);
  take("margin", c.margin);
  take("noise", c.noise);
  return c;
}

Hyperparams hyperparams_for(const std::string& config, std::optional<std::uint64_t> seed,
                            std::optional<int> epochs) {
  Hyperparams hp = config.empty() ? Hyperparams{} : load_hyperparams(config);
  if (seed) hp.seed = *seed;
  if (epochs) hp.epochs = *epochs;
  validate(hp);
  return hp;
}

void print_epoch(const EpochMetrics& m) {
  std::cerr << "epoch " << m.epoch << "  loss " << m.loss.total << "  acc " << m.train_accuracy;
  if (!std::isnan(m.validation_accuracy)) std::cerr << "  val " << m.validation_accuracy;
  if (m.generated_videos > 0) std::cerr << "  generated " << m.generated_videos;
  std::cerr << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weakly supervised temporal action localization on feature sequences"};
  app.require_subcommand(1);

  std::uint64_t seed_value = 0;
  std::string config;
  std::string out;

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "write a synthetic train/test dataset");
  int num_train = 60;
  int num_test = 20;
  gen->add_option("--seed", seed_value, "generator seed");
  gen->add_option("--config", config, "synthetic data config (JSON)")->check(CLI::ExistingFile);
  gen->add_option("--out", out, "output directory")->required();
  gen->add_option("--num-train", num_train, "training videos");
  gen->add_option("--num-test", num_test, "test videos");

  // train
  auto* tr = app.add_subcommand("train", "train a model");
  std::string train_manifest;
  std::string validation_manifest;
  std::string resume;
  std::optional<int> epochs;
  tr->add_option("--train", train_manifest, "training manifest")->required()->check(CLI::ExistingFile);
  tr->add_option("--validation", validation_manifest, "validation manifest")->check(CLI::ExistingFile);
  tr->add_option("--config", config, "hyperparameter config (JSON)")->check(CLI::ExistingFile);
  tr->add_option("--seed", seed_value, "training seed");
  tr->add_option("--epochs", epochs, "override the epoch count");
  tr->add_option("--resume", resume, "checkpoint to resume from")->check(CLI::ExistingFile);
  tr->add_option("--out", out, "output directory")->required();

  // localize
  auto* loc = app.add_subcommand("localize", "decode detections from a checkpoint");
  std::string checkpoint;
  std::string manifest;
  std::string activations;
  loc->add_option("--checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  loc->add_option("--manifest", manifest, "dataset manifest")->required()->check(CLI::ExistingFile);
  loc->add_option("--config", config, "hyperparameter config (JSON)")->check(CLI::ExistingFile);
  loc->add_option("--activations", activations, "directory for per-frame activation CSVs");
  loc->add_option("--out", out, "detections JSON")->required();

  // eval
  auto* ev = app.add_subcommand("eval", "score detections against ground truth");
  std::string detections;
  std::string protocol = "thumos";
  ev->add_option("--detections", detections, "detections JSON")->required()->check(CLI::ExistingFile);
  ev->add_option("--manifest", manifest, "ground-truth manifest")->required()->check(CLI::ExistingFile);
  ev->add_option("--thresholds", protocol, "thumos (0.1:0.1:0.9) or activitynet (0.5:0.05:0.95)")
      ->check(CLI::IsMember({"thumos", "activitynet"}));
  ev->add_option("--out", out, "report path prefix (writes .json and .csv)");

  // ablate
  auto* ab = app.add_subcommand("ablate", "train and evaluate the five ablation configurations");
  std::string test_manifest;
  ab->add_option("--train", train_manifest, "training manifest")->required()->check(CLI::ExistingFile);
  ab->add_option("--test", test_manifest, "test manifest")->required()->check(CLI::ExistingFile);
  ab->add_option("--config", config, "hyperparameter config (JSON)")->check(CLI::ExistingFile);
  ab->add_option("--seed", seed_value, "training seed");
  ab->add_option("--epochs", epochs, "override the epoch count");
  ab->add_option("--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  auto seed_opt = [&](CLI::App* sub) -> std::optional<std::uint64_t> {
    if (sub->count("--seed") > 0) return seed_value;
    return std::nullopt;
  };

  try {
    if (gen->parsed()) {
      SynthConfig sc = config.empty() ? SynthConfig{} : load_synth_config(config);
      fs::create_directories(out);
      sc.num_videos = num_train;
      sc.id_prefix = "train";
      const Dataset train_set = generate_synthetic(sc, seed_value);
      sc.num_videos = num_test;
      sc.id_prefix = "test";
      const Dataset test_set = generate_synthetic(sc, seed_value + 1);
      write_dataset(train_set, out, "train", "train");
      write_dataset(test_set, out, "test", "test");
      std::cout << "wrote " << (fs::path(out) / "train.json").string() << " and "
                << (fs::path(out) / "test.json").string() << '\n';
    } else if (tr->parsed()) {
      const Hyperparams hp = hyperparams_for(config, seed_opt(tr), epochs);
      const Dataset train_set = load_dataset(fs::path(train_manifest));
      std::optional<Dataset> validation;
      if (!validation_manifest.empty()) validation = load_dataset(fs::path(validation_manifest));
      std::optional<Checkpoint> start;
      if (!resume.empty()) start = load_checkpoint(resume);
      fs::create_directories(out);
      save_hyperparams(hp, fs::path(out) / "config.json");
      TrainOptions opts;
      opts.validation = validation ? &*validation : nullptr;
      opts.resume = start ? &*start : nullptr;
      opts.on_epoch = [](const EpochMetrics& m, const Checkpoint&) { print_epoch(m); };
      try {
        const TrainResult result = train(train_set, hp, opts);
        save_checkpoint(result.checkpoint, fs::path(out) / "checkpoint.bin");
        write_metrics_csv(result.metrics, fs::path(out) / "metrics.csv");
        std::cout << "wrote " << (fs::path(out) / "checkpoint.bin").string() << '\n';
      } catch (const TrainingDivergedError& e) {
        save_checkpoint(e.last_good, fs::path(out) / "last_good.bin");
        std::cerr << "error: training diverged: " << e.what() << "; last good checkpoint saved to "
                  << (fs::path(out) / "last_good.bin").string() << '\n';
        return 1;
      }
    } else if (loc->parsed()) {
      const Hyperparams hp = hyperparams_for(config, std::nullopt, std::nullopt);
      const Checkpoint ckpt = load_checkpoint(checkpoint);
      const Dataset ds = load_dataset(fs::path(manifest));
      const DetectionSet dets = localize(ds, ckpt.model, localize_config(hp));
      write_detections(dets, out);
      if (!activations.empty()) {
        fs::create_directories(activations);
        for (const Video& v : ds.videos) {
          write_activation_csv(v.features, ckpt.model, hp.sigma_s,
                               fs::path(activations) / (v.features.video_id + ".csv"));
        }
      }
      std::size_t n = 0;
      for (const VideoDetections& v : dets) n += v.detections.size();
      std::cout << "wrote " << n << " detections to " << out << '\n';
    } else if (ev->parsed()) {
      const DetectionSet dets = read_detections(detections);
      const DatasetManifest gt = load_manifest(manifest);
      const auto thresholds = protocol == "thumos" ? thumos_thresholds() : activitynet_thresholds();
      const EvalReport report = evaluate(dets, gt, thresholds);
      std::cout << format_report(report);
      if (!out.empty()) {
        write_report_json(report, out + ".json");
        write_report_csv(report, out + ".csv");
      }
    } else if (ab->parsed()) {
      const Hyperparams hp = hyperparams_for(config, seed_opt(ab), epochs);
      const Dataset train_set = load_dataset(fs::path(train_manifest));
      const Dataset test_set = load_dataset(fs::path(test_manifest));
      fs::create_directories(out);
      const auto rows = ablate(train_set, test_set, hp, ablation_grid(), thumos_thresholds());
      std::cout << format_ablation(rows);
      write_ablation_csv(rows, fs::path(out) / "ablation.csv");
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
